"""Clark measures sum w_n δ_{a_n} over a spectrum, Poisson finiteness,
and the discrepancy sums that control boundedness of |Θ'|."""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import sequences
from ._numerics import compensator, fsum, poisson_terms
from .errors import InsufficientDataError, ParameterError

STRATEGIES = ("unit", "gap", "krein_residue", "custom")


@dataclass(frozen=True)
class PoissonWitness:
    partial_sum: float
    tail_bound: float = None
    status: str = "window-only"

    def to_dict(self):
        return {"partial_sum": self.partial_sum, "tail_bound": self.tail_bound, "status": self.status}


@dataclass(frozen=True, eq=False)
class ClarkMeasure:
    positions: np.ndarray
    weights: np.ndarray
    strategy: str = "custom"
    indices: np.ndarray = None
    source: dict = field(default_factory=lambda: {"family": "external"})
    witness: PoissonWitness = None

    def __post_init__(self):
        a = np.array(self.positions, dtype=float).ravel()
        w = np.array(self.weights, dtype=float).ravel()
        if a.size == 0:
            raise InsufficientDataError("measure needs at least one atom")
        if a.shape != w.shape:
            raise ParameterError("positions and weights differ in length")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ParameterError("weights must be finite and strictly positive")
        if a.size > 1 and np.any(np.diff(a) <= 0):
            raise ParameterError("atom positions must be strictly increasing")
        if self.strategy not in STRATEGIES:
            raise ParameterError(f"unknown strategy {self.strategy!r}")
        idx = np.arange(a.size) if self.indices is None else np.array(self.indices, dtype=np.int64)
        if idx.shape != a.shape:
            raise ParameterError("indices differ in length from positions")
        comp = compensator(a, w)
        for arr in (a, w, idx, comp):
            arr.setflags(write=False)
        object.__setattr__(self, "positions", a)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "compensators", comp)
        if self.witness is None:
            object.__setattr__(self, "witness", poisson_finiteness(self))

    def __len__(self):
        return self.positions.size

    @property
    def separation(self):
        if self.positions.size < 2:
            return 1.0
        return float(np.diff(self.positions).min())

    def position_of(self, k):
        hit = np.nonzero(self.indices == k)[0]
        if hit.size == 0:
            raise IndexError(f"index {k} not in measure window")
        return int(hit[0])

    def index_at(self, a):
        hit = np.nonzero(self.positions == a)[0]
        if hit.size == 0:
            raise IndexError(f"no atom at {a}")
        return int(self.indices[hit[0]])

    def to_dict(self):
        return {
            "atoms": [{"a": float(a), "w": float(w)} for a, w in zip(self.positions, self.weights)],
            "indices": [int(i) for i in self.indices],
            "strategy": self.strategy,
            "source": dict(self.source),
        }

    @classmethod
    def from_dict(cls, data):
        atoms = data["atoms"]
        return cls(
            positions=[at["a"] for at in atoms],
            weights=[at["w"] for at in atoms],
            strategy=data.get("strategy", "custom"),
            indices=data.get("indices"),
            source=dict(data.get("source", {"family": "external"})),
        )


def save_json(measure, path):
    Path(path).write_text(json.dumps(measure.to_dict(), indent=2) + "\n")


def load_json(path):
    return ClarkMeasure.from_dict(json.loads(Path(path).read_text()))


def build_measure(seq, strategy="unit", custom_weights=None):
    if strategy == "unit":
        w = np.ones(len(seq))
    elif strategy == "gap":
        w = sequences.gap_weights(seq)
    elif strategy in ("custom", "krein_residue"):
        if custom_weights is None:
            raise ParameterError(f"{strategy} strategy needs explicit weights")
        w = np.asarray(custom_weights, dtype=float)
        if w.shape != seq.points.shape:
            raise ParameterError("custom weights must match the sequence length")
        if np.any(~(w > 0)):
            raise ParameterError("custom weights must be strictly positive")
    else:
        raise ParameterError(f"unknown strategy {strategy!r}")
    return ClarkMeasure(seq.points, w, strategy, seq.indices, dict(seq.provenance))


# ---------------------------------------------------------------- family tails


def _side_tail(name, params, strategy, M):
    """(bound on Σ_{n>M} w_n/a_n^2, |a_{M+1}|) for one side of a known family."""
    if name == "arithmetic":
        return 1.0 / M, M + 1.0
    if name == "power":
        k = float(params["k"])
        first = (M + 1.0) ** k
        if strategy == "unit":
            if k <= 0.5:
                return None
            return M ** (1 - 2 * k) / (2 * k - 1), first
        return 2.0 ** max(k - 1, 0.0) * M ** (-k), first
    if name == "geometric":
        r = float(params["r"])
        first = r ** (M + 1)
        if strategy == "unit":
            return r ** (-2 * (M + 1)) / (1 - r**-2), first
        return r ** (-M), first
    if name == "double_exponential":
        if strategy != "unit":
            return None  # gap weights are not Poisson finite for this family
        e1 = math.exp(M + 1)
        first = math.exp(e1) if e1 < 709 else math.inf
        return 2.0 * math.exp(-2 * e1), first
    if name == "log_gap":
        seq = sequences.generate({"family": "log_gap", **params}, (M, M + 1))
        aM, a1 = seq.points
        c = float(params["c"])
        if strategy == "unit":
            return 1.0 / (c * math.log(aM) * aM), a1
        rho = 1 + c * math.log(aM) / aM
        return rho**2 / a1, a1
    return None


def family_tail(source, strategy):
    """Bound on Σ w_n/a_n^2 over the atoms of the family outside the window.

    Returns ``(bound, min |a| over the missing atoms)`` or ``None`` when the
    provenance admits no integral-comparison bound.
    """
    name = source.get("family")
    if strategy not in ("unit", "gap") or "window" not in source:
        return None
    lo, hi = source["window"]
    total, first = 0.0, math.inf
    right = _side_tail(name, source, strategy, hi)
    if right is None:
        return None
    total += right[0]
    first = min(first, right[1])
    if lo < 0:
        left = _side_tail(name, source, strategy, -lo)
        if left is None:
            return None
        total += left[0]
        first = min(first, left[1])
    return total, first


def poisson_finiteness(measure):
    partial = fsum(poisson_terms(measure.positions, measure.weights))
    tail = family_tail(measure.source, measure.strategy)
    if tail is None:
        return PoissonWitness(partial, None, "window-only")
    return PoissonWitness(partial, float(tail[0]), "bounded")


# ---------------------------------------------------------------- discrepancy


def _discrepancy_at(a, w, p):
    ak = a[p]
    mask = np.ones(a.size, dtype=bool)
    mask[p] = False
    an, wn = a[mask], w[mask]
    big = np.abs(an) >= 1
    safe = np.where(big, an, 1.0)
    inv = 1.0 / safe
    with np.errstate(over="ignore", invalid="ignore"):
        t_big = wn * ((ak + inv) / (an - ak)) / (safe + inv)
        t_small = wn * (1 + an * ak) / ((an - ak) * (1 + an * an))
    terms = np.where(big, t_big, t_small)
    order = np.argsort(np.abs(an - ak), kind="stable")
    return fsum(terms[order])


def discrepancy(measure, k):
    """D_k = Σ_{n≠k} (w_n/(a_n - a_k) - w_n a_n/(1 + a_n^2)) over the window.

    ``k`` is the sequence index of the atom (see ``ClarkMeasure.indices``).
    Summation is exactly rounded, so the result is independent of term order.
    """
    p = measure.position_of(k)
    return _discrepancy_at(measure.positions, measure.weights, p)


@dataclass(frozen=True)
class DiscrepancyReport:
    per_index: dict
    sup_abs: float
    normalized_sup: float
    argmax_normalized: int
    tail_note: str

    def to_dict(self):
        return {
            "per_index": {str(k): v for k, v in self.per_index.items()},
            "sup_abs": self.sup_abs,
            "normalized_sup": self.normalized_sup,
            "argmax_normalized": self.argmax_normalized,
            "tail_note": self.tail_note,
        }


def discrepancy_report(measure, workers=1):
    if len(measure) < 2:
        raise InsufficientDataError("discrepancy report needs at least two atoms")
    a, w = measure.positions, measure.weights

    def one(p):
        return int(measure.indices[p]), _discrepancy_at(a, w, p)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            pairs = list(ex.map(one, range(a.size)))
    else:
        pairs = [one(p) for p in range(a.size)]
    per = dict(sorted(pairs))
    vals = np.array([per[int(i)] for i in measure.indices])
    big = np.abs(a) > math.e
    if big.any():
        ratios = np.abs(vals[big]) / np.log(np.abs(a[big]))
        j = int(np.argmax(ratios))
        norm, arg = float(ratios[j]), int(measure.indices[big][j])
    else:
        norm, arg = 0.0, int(measure.indices[0])
    fam = family_tail(measure.source, measure.strategy)
    note = (
        "window sums; omitted atoms contribute at most O(ln|a_k|) by integral comparison"
        if fam is not None
        else "window-only: no tail bound for this provenance"
    )
    return DiscrepancyReport(per, float(np.max(np.abs(vals))), norm, arg, note)
