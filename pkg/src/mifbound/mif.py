"""Meromorphic inner functions Θ = (Kμ - 1)/(Kμ + 1) · e^{i·exp_factor·z}.

Two constructions are supported:

* ``clark``: Θ from a Clark measure through its Cauchy transform.
* ``krein``: Θ from a Krein-type representation (1+Θ)/(1-Θ) = H with
  H = e^{-πc} exp(∫ u(t) [1/(t-z) - t/(1+t^2)] dt), where u = ±1/2 alternates on
  the cells (b_{n-1}, a_n), (a_n, b_n) around each spectral point.  The
  residues of H at the a_n give Clark weights, which are then evaluated
  through the Clark path.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, optimize

from . import sequences
from ._numerics import fsum
from ._quad import adaptive_gk
from .clark import ClarkMeasure
from .errors import InsufficientDataError, NumericBranchError, ParameterError
from .transform import EvaluationConfig, batch_cauchy, boundary_parts, cauchy_transform

KINDS = ("clark", "krein")


# ---------------------------------------------------------------- Krein data


def _dlog1psq(lo, hi):
    """ln((1+hi^2)/(1+lo^2)) in log1p form, overflow-free for huge arguments."""
    if abs(lo) >= 1.0:
        r = ((hi - lo) / lo) * ((hi + lo) / lo) / (1.0 + 1.0 / (lo * lo))
    else:
        r = (hi - lo) * (hi + lo) / (1.0 + lo * lo)
    return math.log1p(r)


@dataclass(frozen=True, eq=False)
class KreinModel:
    """Cell data of the Krein representation over a finite window.

    ``cells`` holds b_0 < a_1 < b_1 < ... < a_M < b_M; interior b_n are the
    midpoints, the two edge cells mirror the neighbouring half gap.
    """

    atoms: np.ndarray
    indices: np.ndarray
    cells: np.ndarray
    c: float
    log_scale: float  # -πc - ∫ u t/(1+t^2) dt
    alpha: np.ndarray
    beta: np.ndarray
    notes: tuple = ()

    def __len__(self):
        return self.atoms.size

    def to_dict(self):
        return {
            "atoms": self.atoms.tolist(),
            "indices": [int(i) for i in self.indices],
            "cells": self.cells.tolist(),
            "c": self.c,
            "log_scale": self.log_scale,
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["atoms"], dtype=float),
            np.array(d["indices"], dtype=np.int64),
            np.array(d["cells"], dtype=float),
            float(d["c"]),
            float(d["log_scale"]),
            np.array(d["alpha"], dtype=float),
            np.array(d["beta"], dtype=float),
            tuple(d.get("notes", ())),
        )


def _cells(a):
    b = np.empty(a.size + 1)
    b[1:-1] = 0.5 * (a[:-1] + a[1:])
    b[0] = a[0] - 0.5 * (a[1] - a[0])
    b[-1] = a[-1] + 0.5 * (a[-1] - a[-2])
    return b


def _log_scale(a, b, c):
    """-πc - ∫ u(t) t/(1+t^2) dt over the window, piece by piece in closed form."""
    parts = []
    for j in range(a.size):
        parts.append(-0.25 * _dlog1psq(b[j], a[j]))
        parts.append(0.25 * _dlog1psq(a[j], b[j + 1]))
    return -math.pi * c - math.fsum(parts)


def _alpha_logs(a, b):
    """J_n = Σ_{j≠n} ∫_{b_{j-1}}^{b_j} u(t)/(t - a_n) dt in log1p form."""
    M = a.size
    out = np.empty(M)
    for n in range(M):
        d = a - a[n]
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.log1p((b[:-1] - a) / d)
            t2 = np.log1p((b[1:] - a) / d)
        terms = 0.5 * (t1 + t2)
        terms[n] = 0.0
        out[n] = fsum(terms)
    return out


def _beta_logs(a, b):
    """J'_n = integral of u(t)/(t - b_n) over the window minus (a_n, a_{n+1})."""
    M = a.size
    out = np.empty(M - 1)
    for n in range(1, M):
        bn = b[n]
        parts = []
        for j in range(1, M):
            if j == n:
                continue
            d = b[j] - bn
            parts.append(-0.5 * math.log1p((a[j - 1] - b[j]) / d) - 0.5 * math.log1p((a[j] - b[j]) / d))
        # edge half cells: u = -1/2 on (b_0, a_1), +1/2 on (a_M, b_M)
        parts.append(-0.5 * (math.log(abs(a[0] - bn)) - math.log(abs(b[0] - bn))))
        parts.append(0.5 * (math.log(abs(b[-1] - bn)) - math.log(abs(a[-1] - bn))))
        out[n - 1] = math.fsum(parts)
    return out


def krein_H(km, z):
    """H(z) from the product form; principal branch per factor, Im z >= 0."""
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    # b - z with a signed zero imaginary part, so real z sits on the upper edge
    zi = np.where(z.imag == 0, -0.0, -z.imag)
    a, b = km.atoms, km.cells
    acc = np.zeros(z.size, dtype=complex)
    with np.errstate(invalid="ignore", over="ignore"):
        for j in range(a.size):
            lb0 = _clog(b[j] - z.real, zi)
            lb1 = _clog(b[j + 1] - z.real, zi)
            la = _clog(a[j] - z.real, zi)
            acc += 0.5 * (lb0 + lb1) - la
        return (np.exp(km.log_scale + acc)).reshape(shape)


def _clog(re, im):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(re + 1j * im)) + 1j * np.arctan2(im, re)


def cauchy_of_steps(pieces, z):
    """Ku(z) = (1/πi) ∫ u(t) [1/(t - z) - t/(1+t^2)] dt for piecewise constant u.

    ``pieces`` is a list of (lo, hi, value).  Real z is read as the limit from
    the upper half-plane, where Re Ku(x) = u(x).
    """
    z = np.asarray(z, dtype=complex)
    zi = np.where(z.imag == 0, -0.0, -z.imag)
    acc = np.zeros(z.shape, dtype=complex)
    with np.errstate(invalid="ignore"):
        for lo, hi, val in pieces:
            log_ratio = _clog(hi - z.real, zi) - _clog(lo - z.real, zi)
            acc += val * (log_ratio - 0.5 * _dlog1psq(lo, hi))
        return acc / (math.pi * 1j)


def krein_theta(km, z):
    h = krein_H(km, z)
    return (h - 1) / (h + 1)


def krein_quadrature_check(km, n=None):
    """Compare the closed-form log integrals with adaptive quadrature."""
    a, b = km.atoms, km.cells
    n = a.size // 2 if n is None else n

    def u_int(f, lo, hi, sign):
        return sign * 0.5 * integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]

    parts_j = []
    parts_i = []
    for j in range(a.size):
        for lo, hi, s in ((b[j], a[j], -1.0), (a[j], b[j + 1], 1.0)):
            parts_i.append(u_int(lambda t: t / (1 + t * t), lo, hi, s))
            if j != n:
                parts_j.append(u_int(lambda t: 1.0 / (t - a[n]), lo, hi, s))
    j_quad = math.fsum(parts_j)
    scale_quad = -math.pi * km.c - math.fsum(parts_i)
    j_closed = _alpha_logs(a, b)[n]
    return {"J_abs_err": abs(j_quad - j_closed), "log_scale_abs_err": abs(scale_quad - km.log_scale)}


def krein_residue(km, n, eta=None):
    """Numerical -iπ Res_{a_n} H from (z - a_n) H(z) at z = a_n + iη."""
    a = km.atoms
    gap = np.diff(a).min() if a.size > 1 else 1.0
    eta = 1e-7 * gap if eta is None else eta
    z = a[n] + 1j * eta
    return complex(-1j * math.pi * (z - a[n]) * krein_H(km, z))


def _krein_data(atoms, indices, c):
    a = np.asarray(atoms, dtype=float)
    if a.size < 3:
        raise InsufficientDataError("Krein construction needs at least three atoms")
    b = _cells(a)
    ls = _log_scale(a, b, c)
    J = _alpha_logs(a, b)
    half_lo = a - b[:-1]
    half_hi = b[1:] - a
    alpha = math.pi * np.sqrt(half_lo * half_hi) * np.exp(J + ls)
    Jp = _beta_logs(a, b)
    beta = 0.5 * math.pi * np.diff(a) * np.exp(-Jp - ls)
    if not (np.all(np.isfinite(alpha)) and np.all(alpha > 0)):
        raise NumericBranchError("Krein residues are not finite and positive")
    notes = (
        "window truncation: u is restricted to [b_0, b_M]; edge cells mirror the adjacent half gap",
        "beta at midpoints is obtained by the same residue computation for the reciprocal of H",
    )
    return KreinModel(a, np.asarray(indices, dtype=np.int64), b, float(c), ls, alpha, beta, notes)


def _branch_check(km, tol=1e-8):
    a, b = km.atoms, km.cells
    probes = np.concatenate([0.5 * (b[:-1] + a), 0.5 * (a + b[1:])])
    dev = np.abs(np.abs(krein_theta(km, probes)) - 1.0)
    worst = float(dev.max())
    if not worst <= tol:
        raise NumericBranchError(f"|Θ| deviates from 1 by {worst:.3e} on the real line")
    return worst


# ---------------------------------------------------------------- the model


@dataclass(frozen=True, eq=False)
class InnerFunctionModel:
    kind: str
    measure: ClarkMeasure
    exp_factor: float = 0.0
    krein_data: KreinModel = None
    cfg: EvaluationConfig = field(default_factory=EvaluationConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown model kind {self.kind!r}")
        if not (self.exp_factor >= 0 and math.isfinite(self.exp_factor)):
            raise ParameterError("exp_factor must be finite and >= 0")
        if self.kind == "krein" and self.krein_data is None:
            raise ParameterError("krein models need krein_data")

    def to_dict(self):
        return {
            "kind": self.kind,
            "exp_factor": self.exp_factor,
            "measure": self.measure.to_dict(),
            "krein_data": None if self.krein_data is None else self.krein_data.to_dict(),
            "cfg": self.cfg.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        kd = d.get("krein_data")
        return cls(
            d["kind"],
            ClarkMeasure.from_dict(d["measure"]),
            float(d.get("exp_factor", 0.0)),
            None if kd is None else KreinModel.from_dict(kd),
            EvaluationConfig.from_dict(d.get("cfg", {})),
        )


def save_json(model, path):
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def load_json(path):
    return InnerFunctionModel.from_dict(json.loads(Path(path).read_text()))


def clark_model(measure, exp_factor=0.0, cfg=None):
    return InnerFunctionModel("clark", measure, float(exp_factor), None, cfg or EvaluationConfig())


def krein_build(seq, window=None, c=0.0, exp_factor=0.0, cfg=None, check=True):
    """Krein model over the spectral points of ``seq`` with indices in ``window``."""
    idx = seq.indices
    if window is None:
        sel = np.ones(idx.size, dtype=bool)
    else:
        lo, hi = window
        sel = (idx >= lo) & (idx <= hi)
    km = _krein_data(seq.points[sel], idx[sel], c)
    if check:
        _branch_check(km)
    src = dict(seq.provenance)
    src["krein_c"] = float(c)
    measure = ClarkMeasure(km.atoms, km.alpha, "krein_residue", km.indices, src)
    return InnerFunctionModel("krein", measure, float(exp_factor), km, cfg or EvaluationConfig())


# ---------------------------------------------------------------- evaluation


def theta(model, z):
    """Θ(z).  Real points use the regularized boundary form (Θ(a_n) = 1); the
    lower half-plane evaluates the meromorphic formula directly."""
    z = complex(z)
    rot = np.exp(1j * model.exp_factor * z)
    if z.imag == 0.0:
        bp = boundary_parts(model.measure, [z.real], model.cfg)
        T, e = bp.eps_s[0], bp.eps[0]
        if bp.limit[0]:
            return complex(rot)
        return complex((1j * T - e) / (1j * T + e) * rot)
    K = complex(batch_cauchy(model.measure, [z])[0]) if z.imag < 0 else cauchy_transform(model.measure, z, model.cfg)
    if K == -1:
        return complex("inf")
    return complex((K - 1) / (K + 1) * rot)


@dataclass(frozen=True)
class BoundaryValues:
    x: np.ndarray
    theta: np.ndarray
    dphase: np.ndarray  # |Θ'(x)| = φ'(x)
    phase: np.ndarray
    branch: np.ndarray  # "regular" | "atom-limit"


def boundary_values(model, xs):
    """Θ, |Θ'| and the continuous phase on a real grid, fully vectorized."""
    xs = np.asarray(xs, dtype=float).ravel()
    m = model.measure
    bp = boundary_parts(m, xs, model.cfg)
    T, e, R = bp.eps_s, bp.eps, bp.regular_sq
    rot = np.exp(1j * model.exp_factor * xs)
    with np.errstate(invalid="ignore", divide="ignore"):
        th = np.where(bp.limit, 1.0 + 0j, (1j * T - e) / (1j * T + e)) * rot
        # scaled so that ε^2 + T^2 cannot overflow far from the atoms
        sc = np.maximum(np.abs(e), np.abs(T))
        dph = model.exp_factor + (2 / math.pi) * (R / sc) / (sc * ((e / sc) ** 2 + (T / sc) ** 2))
    a = m.positions
    below = np.searchsorted(a, xs, side="left")
    arct = np.arctan2(T * np.sign(e), np.abs(e))
    ph = np.where(
        bp.limit,
        2 * math.pi * (bp.nearest + 1),
        math.pi - 2 * arct + 2 * math.pi * below,
    ) + model.exp_factor * xs
    branch = np.where(bp.limit, "atom-limit", "regular")
    return BoundaryValues(xs, th, dph, ph, branch)


def theta_prime_abs(model, x):
    return float(boundary_values(model, [x]).dphase[0])


def phase(model, x):
    """Continuous argument φ with Θ(x) = e^{iφ(x)}; φ(x) - φ(y) is exact, not integrated."""
    return float(boundary_values(model, [x]).phase[0])


@dataclass(frozen=True)
class PhaseIncrement:
    value: float
    error: float
    converged: bool


def phase_increment(model, u, v, epsabs=1e-11, epsrel=1e-12):
    """∫_u^v |Θ'(x)| dx by adaptive quadrature, atoms used as breakpoints."""
    if not v > u:
        raise ParameterError("phase_increment needs u < v")
    a = model.measure.positions
    inner = a[(a > u) & (a < v)]
    bps = np.concatenate([[u], inner, [v]])
    val, err, ok = adaptive_gk(lambda x: boundary_values(model, x).dphase, bps, epsabs, epsrel)
    return PhaseIncrement(val, err, ok)


@dataclass(frozen=True)
class SupResult:
    value: float
    argmax: float
    at_atom: bool
    samples: int
    grid_x: np.ndarray
    grid_f: np.ndarray


def _local_sample(lo, hi, n_uniform=33, n_geo=10):
    L = hi - lo
    u = np.linspace(lo, hi, n_uniform)
    g = L * np.logspace(-1, -n_geo, n_geo)
    return np.concatenate([u, lo + g, hi - g])


def sup_derivative(model, window, max_rounds=14, max_points=400000, polish=12):
    """sup of |Θ'| over a real window.

    Atoms are sampled exactly (their limit is 2π/w_n + exp_factor), each
    inter-atom piece gets a uniform grid plus points clustered at its ends,
    steep regions are bisected until the grid resolves them, and the best
    local maxima are polished with a bounded scalar search.
    """
    lo, hi = map(float, window)
    if not hi > lo:
        raise ParameterError("window must satisfy lo < hi")
    a = model.measure.positions
    inner = a[(a > lo) & (a < hi)]
    bps = np.concatenate([[lo], inner, [hi]])
    xs = np.unique(np.concatenate([_local_sample(p, q) for p, q in zip(bps[:-1], bps[1:])]))
    xs = xs[(xs >= lo) & (xs <= hi)]
    f = boundary_values(model, xs).dphase
    for _ in range(max_rounds):
        span = f.max() - f.min()
        if span <= 0:
            break
        jump = np.abs(np.diff(f)) > 0.02 * span
        gapx = np.diff(xs) > 1e-12 * max(1.0, abs(lo), abs(hi))
        need = np.nonzero(jump & gapx)[0]
        if need.size == 0 or xs.size + need.size > max_points:
            break
        new = 0.5 * (xs[need] + xs[need + 1])
        fn = boundary_values(model, new).dphase
        xs = np.concatenate([xs, new])
        f = np.concatenate([f, fn])
        order = np.argsort(xs, kind="stable")
        xs, f = xs[order], f[order]
    best_i = int(np.argmax(f))
    best, arg = float(f[best_i]), float(xs[best_i])
    interior = np.nonzero((f[1:-1] >= f[:-2]) & (f[1:-1] >= f[2:]))[0] + 1
    cand = interior[np.argsort(f[interior])[::-1][:polish]]
    for i in cand:
        res = optimize.minimize_scalar(
            lambda t: -boundary_values(model, [t]).dphase[0],
            bounds=(xs[i - 1], xs[i + 1]),
            method="bounded",
            options={"xatol": 1e-13 * max(1.0, abs(xs[i]))},
        )
        if -res.fun > best:
            best, arg = float(-res.fun), float(res.x)
    at_atom = bool(np.min(np.abs(a - arg)) < model.cfg.radius(model.measure)) if a.size else False
    return SupResult(best, arg, at_atom, int(xs.size), xs, f)


def eval_rows(model, xs):
    """Rows (x, Re Θ, Im Θ, |Θ'|, φ, branch) for CSV output."""
    bv = boundary_values(model, xs)
    return [
        (float(x), float(t.real), float(t.imag), float(d), float(p), str(b))
        for x, t, d, p, b in zip(bv.x, bv.theta, bv.dphase, bv.phase, bv.branch)
    ]


def model_from_sequence(seq, strategy="unit", exp_factor=0.0, window=None, c=0.0, cfg=None):
    """Convenience constructor used by the CLI and scripts."""
    from .clark import build_measure

    if strategy == "krein":
        return krein_build(seq, window, c, exp_factor, cfg)
    if window is not None:
        keep = (seq.indices >= window[0]) & (seq.indices <= window[1])
        seq = sequences.SeparatedSequence(seq.points[keep], int(seq.indices[keep][0]), seq.separation, dict(seq.provenance))
    return clark_model(build_measure(seq, strategy), exp_factor, cfg)
