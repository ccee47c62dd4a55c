"""Cauchy transform Kμ(z) = (1/πi) Σ [w_n/(a_n - z) - w_n a_n/(1 + a_n^2)] of a
Clark measure, its derivative, and its boundary values Kμ(x) = i s(x).

All sums are exactly rounded (``math.fsum``), so values do not depend on the
summation order or on how a batch of points is partitioned.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from ._numerics import cauchy_terms, csum, row_csum, row_fsum
from .clark import family_tail
from .errors import AtomPoleError, ParameterError

_CHUNK = 1 << 21


@dataclass(frozen=True)
class EvaluationConfig:
    rel_tolerance: float = 1e-9
    atom_exclusion_radius: float = None
    max_terms: int = None

    def __post_init__(self):
        if not (0 < self.rel_tolerance <= 1e-2):
            raise ParameterError("rel_tolerance must lie in (0, 1e-2]")
        if self.atom_exclusion_radius is not None and self.atom_exclusion_radius <= 0:
            raise ParameterError("atom_exclusion_radius must be > 0")

    def radius(self, measure):
        if self.atom_exclusion_radius is not None:
            return self.atom_exclusion_radius
        return max(1e-8, 1e-6 * measure.separation)

    def to_dict(self):
        return {
            "rel_tolerance": self.rel_tolerance,
            "atom_exclusion_radius": self.atom_exclusion_radius,
            "max_terms": self.max_terms,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: data[k] for k in ("rel_tolerance", "atom_exclusion_radius", "max_terms") if k in data})

    @classmethod
    def from_env(cls, var="MIFBOUND_REL_TOLERANCE"):
        val = os.environ.get(var)
        return cls(rel_tolerance=float(val)) if val else cls()


DEFAULT = EvaluationConfig()


def _cfg(cfg):
    return DEFAULT if cfg is None else cfg


def _over_pi_i(v):
    # v/(πi) = (Im v - i Re v)/π, written out so scalars and arrays round alike
    return np.divide(np.imag(v), math.pi) - 1j * np.divide(np.real(v), math.pi)


def _guard(measure, z, cfg):
    if cfg.max_terms is not None and len(measure) > cfg.max_terms:
        raise ParameterError(f"measure has {len(measure)} atoms, max_terms={cfg.max_terms}")
    z = complex(z)
    if z.imag == 0.0:
        a = measure.positions
        p = int(np.argmin(np.abs(a - z.real)))
        if abs(a[p] - z.real) < cfg.radius(measure):
            raise AtomPoleError(float(a[p]), int(measure.indices[p]))
    return z


def cauchy_transform(measure, z, cfg=None):
    cfg = _cfg(cfg)
    z = _guard(measure, z, cfg)
    return complex(_over_pi_i(csum(cauchy_terms(measure.positions, measure.weights, z))))


def cauchy_derivative(measure, z, cfg=None):
    cfg = _cfg(cfg)
    z = _guard(measure, z, cfg)
    return complex(_over_pi_i(csum(measure.weights / (measure.positions - z) ** 2)))


def boundary_s(measure, x, cfg=None):
    """s(x) with Kμ(x) = i s(x); strictly decreasing between atoms."""
    cfg = _cfg(cfg)
    x = _guard(measure, float(x), cfg).real
    return -math.fsum(cauchy_terms(measure.positions, measure.weights, x).tolist()) / math.pi


@dataclass(frozen=True)
class TransformValue:
    value: complex
    tail_bound: float
    status: str  # "ok" | "window-only" | "tolerance-not-met"


def tail_bound(measure, z, derivative=False):
    """Bound on the Cauchy-transform contribution of family atoms outside the window."""
    fam = family_tail(measure.source, measure.strategy)
    if fam is None:
        return None
    total, first = fam
    r = abs(complex(z))
    if first < max(2 * r, 1.0):
        return None
    return (4.0 if derivative else 2.0 * (r + 1)) * total / math.pi


def evaluate(measure, z, cfg=None, derivative=False):
    """Transform (or derivative) with the tail check attached."""
    cfg = _cfg(cfg)
    val = cauchy_derivative(measure, z, cfg) if derivative else cauchy_transform(measure, z, cfg)
    tb = tail_bound(measure, z, derivative)
    if tb is None:
        return TransformValue(val, None, "window-only")
    status = "ok" if tb <= cfg.rel_tolerance * abs(val) else "tolerance-not-met"
    return TransformValue(val, tb, status)


def _chunks(n_points, n_atoms):
    step = max(1, _CHUNK // max(n_atoms, 1))
    for start in range(0, n_points, step):
        yield slice(start, min(start + step, n_points))


def batch_cauchy(measure, zs, derivative=False):
    """Columnar evaluation over an array of points (no pole guard)."""
    zs = np.asarray(zs, dtype=complex).ravel()
    a, w = measure.positions, measure.weights
    out = np.empty(zs.size, dtype=complex)
    for sl in _chunks(zs.size, a.size):
        z = zs[sl, None]
        terms = w / (a - z) ** 2 if derivative else cauchy_terms(a, w, z)
        out[sl] = row_csum(terms)
    return _over_pi_i(out)


@dataclass(frozen=True)
class BoundaryParts:
    """Boundary data regularized at the nearest atom a_k, with ε = x - a_k.

    ``eps_s`` = ε·s(x) and ``regular_sq`` = w_k + ε^2 Σ_{n≠k} w_n/(x - a_n)^2 stay
    finite as x → a_k; ``limit`` marks points snapped to the atom.
    """

    nearest: np.ndarray
    eps: np.ndarray
    eps_s: np.ndarray
    regular_sq: np.ndarray
    limit: np.ndarray


def boundary_parts(measure, xs, cfg=None):
    cfg = _cfg(cfg)
    xs = np.asarray(xs, dtype=float).ravel()
    a, w = measure.positions, measure.weights
    comp = measure.compensators
    pos = np.clip(np.searchsorted(a, xs), 1, max(a.size - 1, 1))
    if a.size == 1:
        near = np.zeros(xs.size, dtype=np.int64)
    else:
        left = pos - 1
        near = np.where(np.abs(xs - a[left]) <= np.abs(a[pos] - xs), left, pos)
    eps = xs - a[near]
    limit = np.abs(eps) < cfg.radius(measure)
    eps = np.where(limit, 0.0, eps)
    eps_s = np.empty(xs.size)
    reg = np.empty(xs.size)
    for sl in _chunks(xs.size, a.size):
        x = xs[sl, None]
        k = near[sl]
        e = eps[sl, None]
        # ratio ε/(x - a_n) is at most ~1 off the nearest atom, so nothing overflows
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = e / (x - a)
            lin = w * ratio + e * comp
            sq = w * ratio * ratio
        rows = np.arange(k.size)
        lin[rows, k] = 0.0
        sq[rows, k] = 0.0
        e1 = eps[sl]
        eps_s[sl] = (w[k] + e1 * comp[k] + row_fsum(lin)) / math.pi
        reg[sl] = w[k] + row_fsum(sq)
    return BoundaryParts(near, eps, eps_s, reg, limit)
