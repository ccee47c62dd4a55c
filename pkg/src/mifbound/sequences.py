"""Separated real sequences: generators, gaps, regime classification,
cluster decomposition, the counterexample scan, and the a-regularity integral.

Indexing convention: a sequence with ``index_offset < 0`` is two-sided and its
indices run ``index_offset, ..., -1, 1, 2, ...`` (zero skipped); otherwise the
indices are ``index_offset + position``.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._numerics import fsum
from .errors import InsufficientDataError, ParameterError, RangeError

FAMILIES = (
    "arithmetic",
    "power",
    "geometric",
    "double_exponential",
    "log_gap",
    "cluster_gap",
    "regular_punctured",
)

REGIMES = (
    "bounded_gaps",
    "slow_comeasurable",
    "wide_comeasurable",
    "sparse_clusters",
    "counterexample_pattern",
    "unknown",
)

_MAX_ABS = 1e300


def _frozen(values):
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def index_range(index_offset, count):
    """Indices for ``count`` points starting at ``index_offset`` (zero skipped when two-sided)."""
    if index_offset < 0:
        out = []
        n = index_offset
        while len(out) < count:
            if n != 0:
                out.append(n)
            n += 1
        return np.array(out, dtype=np.int64)
    return np.arange(index_offset, index_offset + count, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class SeparatedSequence:
    points: np.ndarray
    index_offset: int = 1
    separation: float = 0.0
    provenance: dict = field(default_factory=lambda: {"family": "external"})

    def __post_init__(self):
        pts = _frozen(self.points)
        object.__setattr__(self, "points", pts)
        if pts.size == 0:
            raise InsufficientDataError("empty sequence")
        if not np.all(np.isfinite(pts)) or np.max(np.abs(pts)) > _MAX_ABS:
            raise RangeError("points outside the representable range")
        if pts.size > 1:
            d = np.diff(pts)
            if np.any(d <= 0):
                raise ParameterError("points must be strictly increasing")
            min_gap = float(d.min())
            if self.separation <= 0:
                object.__setattr__(self, "separation", min_gap)
            elif min_gap < self.separation * (1 - 1e-12):
                raise ParameterError(f"separation {self.separation} exceeds minimum gap {min_gap}")
        elif self.separation <= 0:
            object.__setattr__(self, "separation", 1.0)

    def __len__(self):
        return self.points.size

    @property
    def indices(self):
        return index_range(self.index_offset, self.points.size)

    @property
    def two_sided(self):
        return self.index_offset < 0

    def to_dict(self):
        return {
            "points": [float(p) for p in self.points],
            "index_offset": int(self.index_offset),
            "separation": float(self.separation),
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            points=data["points"],
            index_offset=int(data.get("index_offset", 1)),
            separation=float(data.get("separation", 0.0)),
            provenance=dict(data.get("provenance", {"family": "external"})),
        )

    @classmethod
    def from_points(cls, points, index_offset=1, provenance=None):
        pts = np.sort(np.asarray(points, dtype=float))
        return cls(pts, index_offset, 0.0, provenance or {"family": "external"})


def save_json(seq, path):
    Path(path).write_text(json.dumps(seq.to_dict(), indent=2) + "\n")


def load_json(path):
    return SeparatedSequence.from_dict(json.loads(Path(path).read_text()))


def load_csv(path, index_offset=1):
    """One real per line (first column); unsorted input is sorted on load."""
    values = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                continue
            values.append(float(row[0]))
    return SeparatedSequence.from_points(values, index_offset=index_offset)


# ---------------------------------------------------------------- generators


def _family_value(name, params, n):
    s = 1.0 if n > 0 else -1.0
    m = abs(n)
    if name == "power":
        return s * float(m) ** params["k"]
    if name == "geometric":
        return s * params["r"] ** m
    if name == "double_exponential":
        inner = math.exp(m)
        if inner > 709.0:
            raise RangeError(f"e^(e^{m}) overflows")
        return s * math.exp(inner)
    raise AssertionError(name)


def _punctured_removed(bound, growth=3):
    """Elements of A = {2^(growth^k) + m : 1 <= m <= k} that are <= bound."""
    out = []
    k = 1
    while True:
        base = 2 ** (growth**k)
        if base + 1 > bound:
            break
        out.extend(base + m for m in range(1, k + 1) if base + m <= bound)
        k += 1
    return out


def _check_params(name, p):
    def need(key, cond, msg):
        if key not in p:
            raise ParameterError(f"{name}: missing parameter {key!r}")
        if not cond(p[key]):
            raise ParameterError(f"{name}: {msg} (got {p[key]!r})")

    if name == "power":
        need("k", lambda v: v > 0, "k must be > 0")
    elif name == "geometric":
        need("r", lambda v: v > 1, "r must be > 1")
    elif name == "log_gap":
        need("c", lambda v: v > 0, "c must be > 0")
        need("a1", lambda v: v > 1, "a1 must be > 1")
    elif name == "cluster_gap":
        need("N", lambda v: int(v) == v and v >= 2, "N must be an integer >= 2")
        need("D", lambda v: v > 0, "D must be > 0")
        need("t1", lambda v: math.isfinite(v), "t1 must be finite")
    elif name == "regular_punctured":
        need("growth", lambda v: int(v) == v and v >= 2, "growth must be an integer >= 2")


def _defaults(name):
    return {
        "log_gap": {"c": 1.0, "a1": 10.0},
        "cluster_gap": {"t1": 0.0},
        "regular_punctured": {"growth": 3},
    }.get(name, {})


def generate(family, window=None):
    """Generate a window of a named sequence family.

    ``family`` is a descriptor dict such as ``{"family": "power", "k": 2}``;
    ``window`` is an inclusive index range ``(lo, hi)``.  For ``cluster_gap``
    the window defaults to ``(1, N)``.
    """
    if isinstance(family, str):
        family = {"family": family}
    name = family.get("family")
    if name not in FAMILIES:
        raise ParameterError(f"unknown family {name!r}")
    params = {**_defaults(name), **{k: v for k, v in family.items() if k != "family"}}
    _check_params(name, params)
    if window is None:
        if name != "cluster_gap":
            raise ParameterError("window required")
        window = (1, int(params["N"]))
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ParameterError("empty window")

    one_sided = name in ("arithmetic", "log_gap", "cluster_gap", "regular_punctured")
    if one_sided and lo < 1:
        raise ParameterError(f"{name} is indexed by n >= 1")
    indices = [n for n in range(lo, hi + 1) if n != 0]
    if not indices:
        raise ParameterError("window contains only the skipped index 0")

    if name == "arithmetic":
        pts = [float(n) for n in indices]
    elif name in ("power", "geometric", "double_exponential"):
        try:
            pts = [_family_value(name, params, n) for n in indices]
        except OverflowError as exc:
            raise RangeError(str(exc)) from None
    elif name == "log_gap":
        c, a = float(params["c"]), float(params["a1"])
        vals = [a]
        for _ in range(hi - 1):
            a = a + c * math.log(a)
            vals.append(a)
        pts = vals[lo - 1 : hi]
    elif name == "cluster_gap":
        N, D, t1 = int(params["N"]), float(params["D"]), float(params["t1"])
        if hi > N:
            raise ParameterError(f"cluster_gap has only {N} points")
        allpts = [t1] + [t1 + N * D + j * D for j in range(N - 1)]
        pts = allpts[lo - 1 : hi]
    else:  # regular_punctured: the lo..hi-th elements of N \ A
        growth = int(params["growth"])
        bound = hi
        while True:
            removed = _punctured_removed(bound, growth)
            nb = hi + len(removed)
            if nb == bound:
                break
            bound = nb
        gone = set(removed)
        vals = [v for v in range(1, bound + 1) if v not in gone]
        pts = [float(v) for v in vals[lo - 1 : hi]]

    arr = np.asarray(pts, dtype=float)
    if not np.all(np.isfinite(arr)) or np.max(np.abs(arr)) > _MAX_ABS:
        raise RangeError("window so large that points overflow")
    offset = indices[0]
    provenance = {"family": name, **params, "window": [lo, hi]}
    return SeparatedSequence(arr, offset, 0.0, provenance)


# ---------------------------------------------------------------- gaps


@dataclass(frozen=True, eq=False)
class GapProfile:
    indices: np.ndarray
    gaps: np.ndarray
    positions: np.ndarray
    ratio_stats: dict
    sidedness: str

    def as_dict(self):
        return {int(n): float(g) for n, g in zip(self.indices, self.gaps)}


def gaps(seq):
    """Gaps by the two-branch rule: forward gap for n > 0, backward gap for n <= 0.

    Indices whose defining neighbour lies outside the window are omitted.
    """
    if len(seq) < 2:
        raise InsufficientDataError("need at least two points")
    pts = seq.points
    idx = seq.indices
    out_i, out_g, out_a = [], [], []
    for p, n in enumerate(idx):
        if n > 0:
            if p + 1 < len(pts):
                out_i.append(n)
                out_g.append(pts[p + 1] - pts[p])
                out_a.append(pts[p])
        elif p >= 1:
            out_i.append(n)
            out_g.append(pts[p] - pts[p - 1])
            out_a.append(pts[p])
    g = np.asarray(out_g, dtype=float)
    if g.size >= 2:
        r = g[1:] / g[:-1]
        stats = {"min": float(r.min()), "max": float(r.max()), "median": float(np.median(r))}
    else:
        stats = {"min": math.nan, "max": math.nan, "median": math.nan}
    return GapProfile(
        np.asarray(out_i, dtype=np.int64),
        _frozen(g),
        _frozen(out_a),
        stats,
        "two-sided" if seq.two_sided else "one-sided",
    )


def gap_weights(seq):
    """Per-point gap Δ_n; the first/last point uses its only neighbour gap."""
    pts = seq.points
    if pts.size < 2:
        raise InsufficientDataError("gap weights need at least two points")
    fwd = np.empty_like(pts)
    bwd = np.empty_like(pts)
    d = np.diff(pts)
    fwd[:-1] = d
    fwd[-1] = d[-1]
    bwd[1:] = d
    bwd[0] = d[0]
    return np.where(seq.indices > 0, fwd, bwd)


# ---------------------------------------------------------------- clusters


@dataclass(frozen=True)
class ClusterDecomposition:
    clusters: list
    max_cluster_size: int
    inter_cluster_ratio_gap: float
    intra_cluster_ratio_excess: float
    min_inter_cluster_ratio: float
    ok: bool
    failure: str = ""


def decompose_clusters(seq, d, max_size):
    """Greedy partition into clusters separated in ratio by more than ``d``.

    Positive points are scanned outward from the origin, negative points
    mirrored; a point at 0 is a cluster on its own.  A cluster larger than
    ``max_size`` is reported as a failure, not raised.
    """
    if d <= 0 or max_size < 1:
        raise ParameterError("need d > 0 and max_size >= 1")
    pts = seq.points
    clusters = []
    min_inter = math.inf
    intra = 0.0

    def scan(order):
        nonlocal min_inter, intra
        side = []
        cur = [order[0]]
        for p in order[1:]:
            ratio = abs(pts[p]) / abs(pts[cur[-1]]) - 1.0
            if ratio > d:
                min_inter = min(min_inter, ratio)
                side.append(cur)
                cur = [p]
            else:
                intra = max(intra, abs(ratio))
                cur.append(p)
        side.append(cur)
        return side

    neg = [p for p in range(pts.size) if pts[p] < 0][::-1]
    pos = [p for p in range(pts.size) if pts[p] > 0]
    zero = [p for p in range(pts.size) if pts[p] == 0]
    if neg:
        clusters.extend(sorted(c) for c in scan(neg))
    clusters.extend([p] for p in zero)
    if pos:
        clusters.extend(scan(pos))
    clusters.sort(key=lambda c: c[0])
    ranges = [(c[0], c[-1]) for c in clusters]
    biggest = max(len(c) for c in clusters)
    ok = biggest <= max_size
    failure = "" if ok else f"cluster of {biggest} points exceeds max_size={max_size}"
    return ClusterDecomposition(ranges, biggest, float(d), intra, min_inter, ok, failure)


# ---------------------------------------------------------------- counterexample scan


@dataclass(frozen=True)
class PatternMatch:
    N: int
    D: float
    t1: float
    direction: str


def counterexample_scan(seq, D, rtol=1e-9):
    """Largest N such that a gap >= N*D is followed by N-2 consecutive gaps <= D.

    Both orientations are scanned (a cluster followed by the big gap is the
    mirror image).  Returns a ``PatternMatch`` with N = 0 when nothing fits.
    """
    if D <= 0:
        raise ParameterError("D must be > 0")
    best = PatternMatch(0, float(D), math.nan, "none")
    for direction, pts in (("forward", seq.points), ("reverse", -seq.points[::-1])):
        g = np.diff(pts)
        if g.size == 0:
            continue
        small = g <= D * (1 + rtol)
        run = np.zeros(g.size + 1, dtype=np.int64)
        for i in range(g.size - 1, -1, -1):
            run[i] = run[i + 1] + 1 if small[i] else 0
        cap = np.floor(g / D * (1 + rtol)).astype(np.int64)
        n_here = np.minimum(cap, run[1:] + 2)
        i = int(np.argmax(n_here))
        if n_here[i] >= 2 and n_here[i] > best.N:
            t1 = float(pts[i]) if direction == "forward" else float(-pts[i])
            best = PatternMatch(int(n_here[i]), float(D), t1, direction)
    return best


# ---------------------------------------------------------------- classification


@dataclass(frozen=True)
class ClassifyConfig:
    min_points: int = 16
    ratio_bound: float = 8.0
    fit_tolerance: float = 0.25
    cluster_d: float = 0.5
    cluster_max_size: int = 4
    pattern_D: float = None
    pattern_N: int = 3


@dataclass(frozen=True)
class RegimeVerdict:
    regime: str
    fitted_constants: dict
    confidence_window: tuple
    notes: list
    heuristic: bool = True

    def to_dict(self):
        return {
            "regime": self.regime,
            "fitted_constants": self.fitted_constants,
            "confidence_window": list(self.confidence_window),
            "notes": list(self.notes),
            "heuristic": self.heuristic,
        }


def _fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def classify(seq, config=None):
    """Assign one gap regime to a finite window (heuristic: finite-window fits).

    Precedence: counterexample pattern, bounded gaps, slow co-measurable,
    wide co-measurable, sparse clusters, unknown.
    """
    cfg = config or ClassifyConfig()
    if len(seq) < cfg.min_points:
        raise InsufficientDataError(f"need at least {cfg.min_points} points, got {len(seq)}")
    prof = gaps(seq)
    idx = seq.indices
    window = (int(idx[0]), int(idx[-1]))
    notes = ["finite-window verdict; asymptotic relations tested by log-log fits (heuristic)"]
    consts = {}

    g = prof.gaps
    ratios = g[1:] / g[:-1]
    comeas = float(max(ratios.max(), (1 / ratios).max())) if ratios.size else math.inf
    consts["comeasurability_ratio"] = comeas
    is_comeas = comeas <= cfg.ratio_bound

    absa = np.abs(prof.positions)
    tail = absa > math.e
    fits_ok = int(tail.sum()) >= 4
    tol = cfg.fit_tolerance
    if fits_ok:
        x = np.log(np.log(absa[tail]))
        gt = g[tail]
        lnlna = np.log(absa[tail])
        consts["gap_vs_loglog_slope"], _, r0 = _fit(x, np.log(gt))
        consts["gap_over_log_slope"], _, r1 = _fit(x, np.log(gt / lnlna))
        consts["gap_over_log2_slope"], _, r2 = _fit(x, np.log(gt / lnlna**2))
        consts["fit_residuals"] = [r0, r1, r2]
        big = gt > math.e
        excluded = int((~big).sum())
        if excluded:
            notes.append(f"{excluded} indices with gap <= e excluded from the ln ln(gap) lower-bound fit")
        if int(big.sum()) >= 4:
            lower = np.log(gt[big] * np.log(np.log(gt[big])) / lnlna[big])
            consts["slow_lower_slope"], _, _ = _fit(x[big], lower)
        else:
            consts["slow_lower_slope"] = None
    else:
        notes.append("fewer than 4 points with |a_n| > e; growth fits skipped")

    if cfg.pattern_D is not None:
        match = counterexample_scan(seq, cfg.pattern_D)
        consts["pattern_largest_N"] = match.N
        consts["pattern_D"] = match.D
        if match.N >= cfg.pattern_N:
            notes.append(
                f"cluster-then-gap pattern with N={match.N}, D={match.D} at t1={match.t1} ({match.direction})"
            )
            return RegimeVerdict("counterexample_pattern", consts, window, notes)
    else:
        notes.append("counterexample scan skipped: no pattern D supplied")

    one_sided = bool(np.all(idx > 0))
    gap_spread = float(g.max() / g.min())
    consts["gap_spread"] = gap_spread
    bounded = gap_spread <= cfg.ratio_bound and (not fits_ok or consts["gap_vs_loglog_slope"] <= tol)
    if bounded:
        if one_sided:
            notes.append(
                "one-sided bounded gaps: a two-sided completion with bounded |Θ'| needs "
                "|λ_n| ≲ e^{c|n|} on the other side"
            )
        return RegimeVerdict("bounded_gaps", consts, window, notes)

    if fits_ok and is_comeas:
        lower = consts.get("slow_lower_slope")
        if consts["gap_over_log_slope"] <= tol and lower is not None and lower >= -tol:
            return RegimeVerdict("slow_comeasurable", consts, window, notes)
        if consts["gap_over_log2_slope"] >= -tol:
            return RegimeVerdict("wide_comeasurable", consts, window, notes)

    dec = decompose_clusters(seq, cfg.cluster_d, cfg.cluster_max_size)
    consts["cluster_max_size"] = dec.max_cluster_size
    consts["intra_cluster_ratio_excess"] = dec.intra_cluster_ratio_excess
    if dec.ok:
        return RegimeVerdict("sparse_clusters", consts, window, notes)
    notes.append(dec.failure)
    return RegimeVerdict("unknown", consts, window, notes)


# ---------------------------------------------------------------- regularity


def _datan(lo, hi):
    """arctan(hi) - arctan(lo) for hi >= lo, without cancellation."""
    return np.arctan2(np.subtract(hi, lo), 1.0 + np.multiply(lo, hi))


def _dlog1psq(lo, hi):
    """ln(1 + hi^2) - ln(1 + lo^2)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    both_big = (np.abs(lo) >= 1) & (np.abs(hi) >= 1)
    slo = np.where(both_big, lo, 2.0)
    shi = np.where(both_big, hi, 2.0)
    big = 2 * np.log(np.abs(shi) / np.abs(slo)) + np.log1p(1 / shi**2) - np.log1p(1 / slo**2)
    with np.errstate(over="ignore", invalid="ignore"):
        small = np.log1p((hi - lo) * (hi + lo) / (1 + lo * lo))
    return np.where(both_big, big, small)


def _segment_integrals(m, a, lo, hi):
    """∫_lo^hi |m - a x| / (1 + x^2) dx for constant m on each segment."""
    m = np.asarray(m, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    root = m / a
    split = (root > lo) & (root < hi)
    cut = np.where(split, root, hi)

    def piece(x0, x1):
        mid = 0.5 * (x0 + x1)
        sign = np.sign(m - a * mid)
        return sign * (m * _datan(x0, x1) - 0.5 * a * _dlog1psq(x0, x1))

    first = piece(lo, cut)
    second = np.where(split, piece(cut, hi), 0.0)
    return first + second


def counting_function(points, x):
    """n_Λ(x): 0 at 0, jumps by one at each point (right-continuous)."""
    pts = np.asarray(points, dtype=float)
    x = np.asarray(x, dtype=float)
    at0 = np.searchsorted(pts, 0.0, side="right")
    cnt = np.searchsorted(pts, x, side="right")
    return np.where(x >= 0, cnt - at0, -(at0 - cnt))


def _regularity_value(points, a, u, v):
    inner = points[(points > u) & (points < v)]
    brk = np.unique(np.concatenate([[u, v], inner, [0.0] if u < 0 < v else []]))
    lo, hi = brk[:-1], brk[1:]
    m = counting_function(points, 0.5 * (lo + hi))
    return fsum(_segment_integrals(m, a, lo, hi))


@dataclass(frozen=True)
class RegularityReport:
    value: float
    window: tuple
    a: float
    trend: list
    monotone: bool
    settling: bool
    notes: list

    def to_dict(self):
        return {
            "value": self.value,
            "window": list(self.window),
            "a": self.a,
            "trend": [list(t) for t in self.trend],
            "monotone": self.monotone,
            "settling": self.settling,
            "notes": list(self.notes),
        }


def regularity_functional(seq, a, window, levels=5):
    """∫_window |n_Λ(x) - a x| / (1 + x^2) dx, integrated exactly per segment.

    The trend lists values over nested windows ``[u, u + (v-u)/2^j]``; ``settling``
    is true when the successive increments are non-increasing.
    """
    if a <= 0:
        raise ParameterError("a must be > 0")
    u, v = float(window[0]), float(window[1])
    if not (math.isfinite(u) and math.isfinite(v)) or v <= u:
        raise ParameterError("window must be a finite interval with u < v")
    pts = seq.points
    notes = []
    if v > pts[-1] or (u < 0 and u < pts[0]):
        notes.append("window extends past the data; Λ treated as having no further points")
    ends = [u + (v - u) / 2**j for j in range(levels - 1, -1, -1)]
    vals = [_regularity_value(pts, a, u, e) for e in ends]
    inc = np.diff(vals)
    return RegularityReport(
        value=vals[-1],
        window=(u, v),
        a=float(a),
        trend=list(zip(ends, vals)),
        monotone=bool(np.all(inc >= -1e-15)),
        settling=bool(np.all(np.diff(inc) <= 1e-15)) if inc.size > 1 else True,
        notes=notes,
    )


def _frac_integral(X, exact_cutoff=4096):
    """∫_0^X frac(x)/(1+x^2) dx; exact per unit segment, Euler-Maclaurin beyond the cutoff."""
    J = math.floor(X)
    C = min(J, exact_cutoff)
    j = np.arange(C, dtype=float)
    seg = 0.5 * np.log1p((2 * j + 1) / (1 + j * j)) - j * np.arctan2(1.0, 1 + j * (j + 1))
    total = [fsum(seg)]
    if J > C:
        A, B = float(C), float(J)

        def g(x):
            return 1.0 / (1.0 + x * x)

        def g2(x):
            return (6 * x * x - 2) / (1 + x * x) ** 3

        total.append(0.5 * float(_datan(A, B)))
        total.append((g(B) - g(A)) / 12.0)
        total.append(-(g2(B) - g2(A)) / 720.0)
    Jf = float(J)
    if X > Jf:
        total.append(0.5 * float(_dlog1psq(Jf, X)) - Jf * float(_datan(Jf, X)))
    return math.fsum(total)


def punctured_naturals_regularity(X, growth=3):
    """1-regularity integral of Λ = ℕ \\ A over [0, X], A = {2^(growth^k) + m, 1 <= m <= k}.

    On x >= 0, n_Λ(x) - x = -(frac(x) + #{α in A : α <= x}), so the integrand
    never changes sign and the integral splits into a sawtooth part plus one
    arctan tail per removed point.  Works for X far beyond enumerable windows.
    """
    if X <= 0:
        raise ParameterError("X must be > 0")
    removed = _punctured_removed(math.floor(X), growth)
    tails = [float(_datan(float(al), float(X))) for al in removed]
    return math.fsum([_frac_integral(X)] + tails)
