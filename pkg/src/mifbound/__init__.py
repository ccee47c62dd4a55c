"""Meromorphic inner functions with prescribed spectrum: Clark-measure
construction, boundary phase and derivative, gap-regime classification,
zeros in the upper half-plane and the cluster-then-gap experiment."""

from . import clark, mif, sequences, transform, zeros
from .clark import ClarkMeasure, build_measure, discrepancy, discrepancy_report
from .errors import (
    AtomPoleError,
    CertificationError,
    InsufficientDataError,
    MIFError,
    NumericBranchError,
    ParameterError,
    RangeError,
    RegionError,
)
from .mif import InnerFunctionModel, krein_build, phase_increment, sup_derivative, theta, theta_prime_abs
from .sequences import SeparatedSequence, classify, gaps, generate, regularity_functional
from .transform import EvaluationConfig, cauchy_transform
from .zeros import ZeroSet, blaschke_phase_derivative, counterexample_experiment, counting_check, find_zeros

__version__ = "0.1.0"
