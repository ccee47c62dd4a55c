"""Zeros of Θ in the upper half-plane, the Blaschke-route phase derivative,
and the cluster-then-gap box experiment.

Zeros of Θ = (Kμ - 1)/(Kμ + 1)·e^{iaz} are the roots of Kμ(z) = 1, i.e. of the
degree-N polynomial P(z) = ∏(a_n - z)·(Kμ(z) - 1).  P is never expanded: the
simultaneous (Aberth) iteration only needs P'/P = K'/(K - 1) + Σ 1/(z - a_n).
"""

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import sequences
from ._numerics import row_fsum
from .clark import ClarkMeasure, build_measure
from .errors import CertificationError, ParameterError, RegionError
from .mif import clark_model, sup_derivative
from .transform import batch_cauchy

RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class ZeroSet:
    zeros: np.ndarray
    residuals: np.ndarray
    method: str
    certified_count: int
    certified: bool
    region: tuple = None
    notes: tuple = ()

    def __len__(self):
        return self.zeros.size

    def to_dict(self):
        return {
            "zeros": [[float(z.real), float(z.imag)] for z in self.zeros],
            "residuals": [float(r) for r in self.residuals],
            "method": self.method,
            "certified_count": self.certified_count,
            "certified": self.certified,
            "region": None if self.region is None else list(self.region),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d):
        zs = np.array([complex(x, y) for x, y in d["zeros"]], dtype=complex)
        return cls(
            zs,
            np.array(d["residuals"], dtype=float),
            d["method"],
            int(d["certified_count"]),
            bool(d["certified"]),
            None if d.get("region") is None else tuple(d["region"]),
            tuple(d.get("notes", ())),
        )


def _sorted(zs):
    order = np.lexsort((zs.imag, zs.real))
    return zs[order]


def _measure(model_or_measure):
    m = getattr(model_or_measure, "measure", model_or_measure)
    if not isinstance(m, ClarkMeasure):
        raise ParameterError("expected a Clark measure or an inner-function model")
    return m


def _f(measure, zs):
    return batch_cauchy(measure, zs) - 1.0


def enclosing_region(measure):
    """Rectangle (x0, x1, y0, y1) that contains every zero of Kμ - 1 except
    possibly those below y0.

    Re Kμ(x+iy) = (1/π) Σ w_n y/((x-a_n)^2 + y^2) must equal 1, which forces
    y ≤ Σw/π and dist(x, [a_min, a_max]) ≤ Σw/(2π).
    """
    a, w = measure.positions, measure.weights
    tot = math.fsum(w.tolist())
    pad = tot / (2 * math.pi) * 1.01 + 1e-3
    return (float(a[0] - pad), float(a[-1] + pad), None, tot / math.pi * 1.01 + 1e-3)


# ---------------------------------------------------------------- winding


def _winding(measure, rect, n0=32, max_rounds=80):
    """Winding number of Kμ - 1 around the rectangle by adaptive phase tracking.

    A boundary step is bisected until it is short compared with the distance
    to the nearest atom (pole), the argument moves by less than π/8 and |f|
    changes by less than half its size; then the wrapped differences are summed.
    """
    x0, x1, y0, y1 = rect
    a = measure.positions
    corners = np.array([complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)])
    s = np.concatenate([np.linspace(corners[i], corners[i + 1], n0, endpoint=False) for i in range(4)] + [corners[-1:]])
    fs = _f(measure, s)

    def pole_dist(p):
        j = np.clip(np.searchsorted(a, p.real), 1, max(a.size - 1, 1))
        near = np.minimum(np.abs(p - a[j - 1]), np.abs(p - a[np.minimum(j, a.size - 1)]))
        return near

    dist = pole_dist(s)
    for _ in range(max_rounds):
        d = np.angle(fs[1:] / fs[:-1])
        af = np.abs(fs)
        bad = (
            (np.abs(d) > math.pi / 8)
            | (np.abs(np.diff(s)) > 0.25 * np.minimum(dist[1:], dist[:-1]))
            | (np.abs(np.diff(fs)) > 0.5 * np.minimum(af[1:], af[:-1]))
        )
        bad = np.nonzero(bad)[0]
        if bad.size == 0:
            break
        mid = 0.5 * (s[bad] + s[bad + 1])
        fm = _f(measure, mid)
        s = np.insert(s, bad + 1, mid)
        fs = np.insert(fs, bad + 1, fm)
        dist = np.insert(dist, bad + 1, pole_dist(mid))
    else:
        raise CertificationError("winding number did not resolve along the contour")
    if np.min(np.abs(fs)) < 1e-13 * np.median(np.abs(fs)):
        raise CertificationError("a zero lies on the contour")
    total = math.fsum(np.angle(fs[1:] / fs[:-1]).tolist()) / (2 * math.pi)
    k = round(total)
    if abs(total - k) > 1e-6:
        raise CertificationError(f"non-integer winding {total:.6f}")
    return int(k)


def _check_region(measure, rect, radius):
    x0, x1, y0, y1 = rect
    if not (x1 > x0 and y1 > y0):
        raise RegionError("region must have positive width and height")
    if y0 <= radius:
        raise RegionError("region touches the real axis within the atom exclusion radius")


def count_zeros_in_box(model, rect):
    m = _measure(model)
    cfg = getattr(model, "cfg", None)
    radius = cfg.radius(m) if cfg is not None else max(1e-8, 1e-6 * m.separation)
    _check_region(m, rect, radius)
    return _winding(m, rect)


# ---------------------------------------------------------------- refinement


def _newton(measure, z, iters=40):
    """Damped Newton on Kμ - 1 with exactly rounded transform evaluations."""
    fz = complex(_f(measure, [z])[0])
    for _ in range(iters):
        d = complex(batch_cauchy(measure, [z], derivative=True)[0])
        if d == 0:
            break
        step = fz / d
        lam = 1.0
        while lam > 1e-4:
            zn = z - lam * step
            fn = complex(_f(measure, [zn])[0])
            if abs(fn) < abs(fz) or abs(fn) == 0:
                break
            lam *= 0.5
        else:
            break
        done = abs(z - zn) <= 4e-16 * max(abs(zn), 1.0)
        z, fz = zn, fn
        if done or fz == 0:
            break
    return z, abs(fz)


def _refine(measure, zs, workers=1):
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            out = list(ex.map(lambda z: _newton(measure, z), zs))
    else:
        out = [_newton(measure, z) for z in zs]
    return np.array([o[0] for o in out]), np.array([o[1] for o in out])


def _aberth(measure, max_iter=500):
    a, w = measure.positions, measure.weights
    z = a + 1j * w / math.pi  # single-atom approximation near each atom
    N = z.size
    scale = max(1.0, float(np.max(np.abs(a))))
    active = np.ones(N, dtype=bool)
    for _ in range(max_iter):
        zz = z[active]
        K = batch_cauchy(measure, zz)
        dK = batch_cauchy(measure, zz, derivative=True)
        hit = K == 1.0  # already an exact root
        with np.errstate(divide="ignore", invalid="ignore"):
            logd = dK / (K - 1.0) + np.sum(1.0 / (zz[:, None] - a[None, :]), axis=1)
            newton = np.where(hit, 0.0, 1.0 / logd)
        diff = zz[:, None] - z[None, :]
        idx = np.nonzero(active)[0]
        diff[np.arange(idx.size), idx] = np.inf
        rep = np.sum(1.0 / diff, axis=1)
        corr = newton / (1.0 - newton * rep)
        z[active] = zz - corr
        small = np.abs(corr) <= 1e-15 * np.maximum(np.abs(z[active]), scale * 1e-3)
        active[idx[small]] = False
        if not active.any():
            return z, True
    return z, False


def find_zeros(model, method="polynomial", region=None, workers=1):
    """All zeros of Θ (polynomial method) or those inside ``region`` (contour).

    ``region`` is (x0, x1, y0, y1) with y0 > 0.  Every zero carries the
    residual |Kμ(z) - 1| after Newton refinement on Kμ - 1 itself.
    """
    m = _measure(model)
    cfg = getattr(model, "cfg", None)
    radius = cfg.radius(m) if cfg is not None else max(1e-8, 1e-6 * m.separation)
    if method == "polynomial":
        z, conv = _aberth(m)
        z, res = _refine(m, z, workers)
        z = _sorted(z)
        res = np.abs(_f(m, z))
        notes = []
        if not conv:
            notes.append("simultaneous iteration hit its iteration cap")
        x0, x1, _, y1 = enclosing_region(m)
        y0 = 0.5 * float(np.min(z.imag)) if np.all(z.imag > 0) else None
        count = -1
        if y0 is not None and y0 > radius:
            try:
                count = _winding(m, (x0, x1, y0, y1))
            except CertificationError as exc:
                notes.append(str(exc))
        distinct = np.unique(np.round(z, 10)).size == z.size
        ok = (
            conv
            and count == z.size
            and distinct
            and bool(np.all(z.imag > 0))
            and bool(np.all(res <= RESIDUAL_TOL))
        )
        return ZeroSet(z, res, "polynomial", int(count), ok, (x0, x1, y0, y1), tuple(notes))
    if method == "contour":
        if region is None:
            x0, x1, _, y1 = enclosing_region(m)
            region = (x0, x1, max(radius * 10, 1e-6 * m.separation), y1)
        region = tuple(float(v) for v in region)
        _check_region(m, region, radius)
        zs, total = _contour(m, region)
        z, res = _refine(m, zs, workers)
        inside = (z.real >= region[0]) & (z.real <= region[1]) & (z.imag >= region[2]) & (z.imag <= region[3])
        z, res = z[inside], res[inside]
        z = _sorted(z)
        res = np.abs(_f(m, z)) if z.size else res
        ok = z.size == total and bool(np.all(res <= RESIDUAL_TOL))
        return ZeroSet(z, res, "contour", int(total), ok, region, ())
    raise ParameterError(f"unknown zero-finding method {method!r}")


def _contour(measure, region, max_depth=60):
    """Quadtree subdivision by winding count down to single-zero boxes."""
    total = _winding(measure, region)
    found = []
    stack = [(region, total, 0)]
    while stack:
        rect, k, depth = stack.pop()
        if k == 0:
            continue
        x0, x1, y0, y1 = rect
        if k == 1:
            z, r = _newton(measure, complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)))
            if x0 <= z.real <= x1 and y0 <= z.imag <= y1 and r <= RESIDUAL_TOL:
                found.append(z)
                continue
        if depth >= max_depth:
            raise CertificationError("box subdivision did not isolate the zeros")
        # off-centre split makes it unlikely that a zero sits on a new edge
        xm = x0 + 0.5137 * (x1 - x0)
        ym = y0 + 0.4871 * (y1 - y0)
        subs = [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]
        counts = [_winding(measure, s) for s in subs]
        if sum(counts) != k:
            raise CertificationError("sub-box winding counts do not add up")
        stack.extend((s, c, depth + 1) for s, c in zip(subs, counts))
    return np.array(found, dtype=complex), total


# ---------------------------------------------------------------- Blaschke route


def blaschke_phase_derivative(zeroset, exp_factor, x):
    """φ'(x) = exp_factor + Σ 2y_n/((x - x_n)^2 + y_n^2); vectorized over x."""
    zs = zeroset.zeros if isinstance(zeroset, ZeroSet) else np.asarray(zeroset, dtype=complex)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if zs.size == 0:
        out = np.full(xs.shape, float(exp_factor))
    else:
        y = zs.imag
        terms = 2 * y / ((xs[:, None] - zs.real) ** 2 + y * y)
        out = float(exp_factor) + row_fsum(terms)
    return float(out[0]) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------- experiment


@dataclass(frozen=True)
class BoxReport:
    N: int
    D: float
    t1: float
    strategy: str
    box_S: tuple
    box_T: tuple
    Z: int
    min_height: float
    lowest_zero: complex
    sup_phase_derivative: float
    sup_argmax: float
    certified: bool
    zeros: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "N": self.N,
            "D": self.D,
            "t1": self.t1,
            "strategy": self.strategy,
            "box_S": list(self.box_S),
            "box_T": list(self.box_T),
            "Z": self.Z,
            "min_height": self.min_height,
            "lowest_zero": [self.lowest_zero.real, self.lowest_zero.imag],
            "sup_phase_derivative": self.sup_phase_derivative,
            "sup_argmax": self.sup_argmax,
            "certified": self.certified,
        }


def counterexample_experiment(N, D=1.0, t1=0.0, strategy="unit", with_sup=True):
    """Cluster-then-gap spectrum t_1, t_2 = t_1 + N·D, t_{n+1} = t_n + D.

    The Clark measure is built on the points shifted by -t_1.  The compensator
    w a/(1+a^2) is not translation invariant, so anchoring it at t_1 is what
    makes the experiment covariant: zeros move with t_1 and heights do not.
    """
    if N < 4:
        raise ParameterError("the experiment needs N >= 4")
    if not D > 0:
        raise ParameterError("D must be > 0")
    seq = sequences.generate({"family": "cluster_gap", "t1": 0.0, "N": int(N), "D": float(D)}, None)
    measure = build_measure(seq, strategy)
    model = clark_model(measure)
    zs = find_zeros(model)
    t = seq.points
    h = math.sqrt(N * D)
    box_S = (float(t[1]), float(t[-1]), 0.0, h)
    box_T = (float(t[0]), float(t[1]), 0.0, h)
    z = zs.zeros
    inS = (z.real > t[1]) & (z.real < t[-1]) & (z.imag < h)
    low = int(np.argmin(z.imag))
    sup, arg = math.nan, math.nan
    if with_sup:
        a_mid = 0.5 * (t[1] + t[-1])
        c_tilde = t[1] - (a_mid - t[1])
        sr = sup_derivative(model, (c_tilde, t[-1]))
        sup, arg = sr.value, sr.argmax + t1
    return BoxReport(
        int(N),
        float(D),
        float(t1),
        strategy,
        tuple(v + t1 if i < 2 else v for i, v in enumerate(box_S)),
        tuple(v + t1 if i < 2 else v for i, v in enumerate(box_T)),
        int(inS.sum()),
        float(z.imag[low]),
        complex(z[low] + t1),
        float(sup),
        float(arg),
        zs.certified,
        z + t1,
    )


SWEEP_FIELDS = ("N", "D", "strategy", "min_height", "Z", "sup_phase_derivative")


def counterexample_sweep(Ns, D=1.0, t1=0.0, strategy="unit", with_sup=True):
    return [counterexample_experiment(n, D, t1, strategy, with_sup) for n in Ns]


def write_sweep_csv(reports, path_or_file):
    def emit(fh):
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(SWEEP_FIELDS)
        for r in reports:
            wr.writerow([r.N, f"{r.D:.16e}", r.strategy, f"{r.min_height:.16e}", r.Z, f"{r.sup_phase_derivative:.16e}"])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)


def save_json(obj, path):
    Path(path).write_text(json.dumps(obj.to_dict(), indent=2) + "\n")


# ---------------------------------------------------------------- counting


@dataclass(frozen=True)
class CountingResult:
    t: float
    M: int
    integral: float
    ratio: float  # integral / ln|t|; None at |t| = 1


def counting_check(t, M=10_000, height=1.0):
    """∫_t^0 Σ_{n=1}^M 2h/((x - n)^2 + h^2) dx and its ratio to ln|t|, in closed form.

    Zeros at n + i·h for n = 1..M; each kernel integrates to
    2[arctan((0 - n)/h) - arctan((t - n)/h)].
    """
    t = float(t)
    if not t < 0:
        raise ParameterError("t must be negative")
    if M < 1:
        raise ParameterError("M must be >= 1")
    n = np.arange(1, M + 1, dtype=float)
    parts = 2.0 * (np.arctan((n - t) / height) - np.arctan(n / height))
    total = math.fsum(parts.tolist())
    ratio = total / math.log(abs(t)) if abs(t) != 1.0 else None
    return CountingResult(t, int(M), total, ratio)
