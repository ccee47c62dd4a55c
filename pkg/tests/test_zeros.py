import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from mifbound._numerics import compensator
from mifbound.clark import ClarkMeasure
from mifbound.errors import ParameterError, RegionError
from mifbound.mif import boundary_values, clark_model
from mifbound.zeros import (
    SWEEP_FIELDS,
    ZeroSet,
    blaschke_phase_derivative,
    count_zeros_in_box,
    counterexample_experiment,
    counterexample_sweep,
    counting_check,
    find_zeros,
    write_sweep_csv,
)

SINGLE = clark_model(ClarkMeasure([0.0], [math.pi]))
PAIR = clark_model(ClarkMeasure([-1.0, 1.0], [1.0, 1.0]))


def eig_zeros(measure):
    """Kμ(z) = 1  <=>  Σ w/(a - z) = πi + Σ c_n, a rank-one secular equation."""
    a, w = measure.positions, measure.weights
    gamma = math.pi * 1j + math.fsum(compensator(a, w).tolist())
    v = np.sqrt(w)
    ev = np.linalg.eigvals(np.diag(a).astype(complex) - np.outer(v, v) / gamma)
    return ev[np.lexsort((ev.imag, ev.real))]


@st.composite
def measures(draw, n_max=25):
    n = draw(st.integers(1, n_max))
    gaps = draw(st.lists(st.floats(0.5, 4.0), min_size=n, max_size=n))
    w = draw(st.lists(st.floats(0.1, 10.0), min_size=n, max_size=n))
    a = np.cumsum(gaps) + draw(st.floats(-50, 50))
    return ClarkMeasure(a, w)


def test_single_atom_zero():
    zs = find_zeros(SINGLE)
    assert zs.certified and len(zs) == 1
    assert abs(zs.zeros[0] - 1j) < 1e-14 and zs.residuals[0] <= 1e-12


def test_pair_zeros():
    zs = find_zeros(PAIR)
    x = math.sqrt(math.pi**2 - 1) / math.pi
    np.testing.assert_allclose(zs.zeros, [complex(-x, 1 / math.pi), complex(x, 1 / math.pi)], atol=1e-12)
    assert zs.certified and zs.certified_count == 2
    con = find_zeros(PAIR, method="contour")
    assert con.certified
    np.testing.assert_allclose(con.zeros, zs.zeros, atol=1e-12)


def test_blaschke_examples():
    assert blaschke_phase_derivative(np.array([1j]), 0.0, 0.0) == pytest.approx(2.0)
    assert blaschke_phase_derivative(np.array([], dtype=complex), 1.5, 3.0) == 1.5
    assert blaschke_phase_derivative(find_zeros(PAIR), 0.0, 0.0) == pytest.approx(4 / math.pi, rel=1e-13)


def test_region_errors():
    with pytest.raises(RegionError):
        count_zeros_in_box(PAIR, (-2, 2, 0.0, 1.0))
    with pytest.raises(RegionError):
        count_zeros_in_box(PAIR, (2, -2, 0.1, 1.0))
    with pytest.raises(ParameterError):
        find_zeros(PAIR, method="newton")


def test_box_counts():
    assert count_zeros_in_box(PAIR, (-2, 2, 0.1, 1.0)) == 2
    assert count_zeros_in_box(PAIR, (0.0, 2, 0.1, 1.0)) == 1
    assert count_zeros_in_box(PAIR, (-2, 2, 0.5, 1.0)) == 0


def test_zeroset_round_trip():
    zs = find_zeros(PAIR)
    back = ZeroSet.from_dict(zs.to_dict())
    np.testing.assert_array_equal(back.zeros, zs.zeros)
    assert back.certified == zs.certified and back.region == zs.region


def test_experiment_small():
    r = counterexample_experiment(4)
    assert r.certified and r.Z == 3
    assert r.box_S == (4.0, 6.0, 0.0, 2.0)
    assert r.box_T == (0.0, 4.0, 0.0, 2.0)
    assert 0 < r.min_height < 1
    assert r.sup_phase_derivative > 2 * math.pi


def test_experiment_translation_invariant():
    a = counterexample_experiment(8, t1=0.0)
    b = counterexample_experiment(8, t1=1234.5)
    assert a.min_height == b.min_height
    assert a.sup_phase_derivative == b.sup_phase_derivative
    np.testing.assert_allclose(b.zeros - 1234.5, a.zeros, atol=1e-9)
    assert b.box_S[0] == a.box_S[0] + 1234.5


def test_experiment_validation():
    with pytest.raises(ParameterError):
        counterexample_experiment(3)
    with pytest.raises(ParameterError):
        counterexample_experiment(8, D=0)


def test_sweep_csv():
    reps = counterexample_sweep([4, 8], with_sup=False)
    buf = io.StringIO()
    write_sweep_csv(reps, buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert tuple(rows[0]) == SWEEP_FIELDS
    assert [int(r[0]) for r in rows[1:]] == [4, 8]
    assert float(rows[1][3]) == reps[0].min_height


def test_counting_closed_form_matches_quadrature():
    t, M = -7.0, 40
    f = lambda x: sum(2.0 / ((x - n) ** 2 + 1.0) for n in range(1, M + 1))
    ref = integrate.quad(f, t, 0.0, epsabs=1e-13, epsrel=1e-13)[0]
    assert counting_check(t, M).integral == pytest.approx(ref, rel=1e-12)


def test_counting_limits():
    assert counting_check(-1e-9, 100).integral < 1e-8
    assert counting_check(-1.0, 10).ratio is None
    with pytest.raises(ParameterError):
        counting_check(1.0)


@settings(max_examples=20)
@given(measures())
def test_zeros_match_eigenvalues(m):
    zs = find_zeros(clark_model(m))
    assert zs.certified
    assert np.all(zs.zeros.imag > 0)
    ref = eig_zeros(m)
    scale = max(1.0, float(np.max(np.abs(m.positions))))
    assert np.max(np.abs(zs.zeros - ref)) < 1e-8 * scale


@settings(max_examples=15)
@given(measures(n_max=15), st.sampled_from([0.0, 0.7]))
def test_blaschke_route_matches_clark_route(m, ex):
    model = clark_model(m, ex)
    zs = find_zeros(model)
    a = m.positions
    xs = np.linspace(a[0] - 5, a[-1] + 5, 997)
    xs = xs[np.min(np.abs(xs[:, None] - a), axis=1) > 1e-3]
    lhs = boundary_values(model, xs).dphase
    rhs = blaschke_phase_derivative(zs, ex, xs)
    np.testing.assert_allclose(rhs, lhs, rtol=1e-8)
