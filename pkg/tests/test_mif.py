import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mifbound import sequences as S
from mifbound.clark import ClarkMeasure
from mifbound.errors import InsufficientDataError, ParameterError
from mifbound.mif import (
    InnerFunctionModel,
    boundary_values,
    cauchy_of_steps,
    clark_model,
    krein_build,
    krein_H,
    krein_quadrature_check,
    krein_residue,
    krein_theta,
    load_json,
    model_from_sequence,
    phase,
    phase_increment,
    save_json,
    sup_derivative,
    theta,
    theta_prime_abs,
)

PAIR_SUP = 6.45555538739487883564130075296
PAIR_ARGMAX = 0.946558732879440448284569327396

SINGLE = clark_model(ClarkMeasure([0.0], [math.pi]))
PAIR = clark_model(ClarkMeasure([-1.0, 1.0], [1.0, 1.0]))


@st.composite
def models(draw, n_max=25):
    n = draw(st.integers(1, n_max))
    gaps = draw(st.lists(st.floats(0.5, 4.0), min_size=n, max_size=n))
    w = draw(st.lists(st.floats(0.1, 10.0), min_size=n, max_size=n))
    a = np.cumsum(gaps) + draw(st.floats(-50, 50))
    ex = draw(st.sampled_from([0.0, 0.0, 0.5, 2.0]))
    return clark_model(ClarkMeasure(a, w), ex)


def test_single_atom_theta():
    # Θ(z) = (i - z)/(i + z)
    assert theta(SINGLE, 0.0) == 1
    assert abs(theta(SINGLE, 1j)) < 1e-16
    z = 0.3 + 0.7j
    assert theta(SINGLE, z) == pytest.approx((1j - z) / (1j + z), abs=1e-15)
    for x in (-3.0, 0.5, 10.0):
        assert theta_prime_abs(SINGLE, x) == pytest.approx(2 / (1 + x * x), rel=1e-14)


def test_pair_theta():
    assert theta(PAIR, 1j) == pytest.approx((1 - math.pi) / (1 + math.pi), abs=1e-15)
    assert theta_prime_abs(PAIR, 0.0) == pytest.approx(4 / math.pi, rel=1e-15)
    assert theta_prime_abs(PAIR, 1.0) == pytest.approx(2 * math.pi, rel=1e-15)


def test_exp_factor_rotates():
    m = clark_model(SINGLE.measure, 2.0)
    z = 0.4 + 0.2j
    assert theta(m, z) == pytest.approx(theta(SINGLE, z) * np.exp(2j * z), abs=1e-15)
    assert theta_prime_abs(m, 0.5) == pytest.approx(2 + 2 / 1.25, rel=1e-14)


def test_atom_limit_by_extrapolation():
    m = clark_model(ClarkMeasure([-2.0, 0.0, 3.0], [0.5, 2.0, 1.0]))
    for k, a in enumerate(m.measure.positions):
        target = 2 * math.pi / m.measure.weights[k]
        vals = [theta_prime_abs(m, a + s * 10.0 ** -p) for p in (3, 4, 5) for s in (-1, 1)]
        assert abs(vals[-1] - target) < abs(vals[0] - target) + 1e-12
        assert vals[-1] == pytest.approx(target, rel=1e-4)
        assert theta_prime_abs(m, a) == pytest.approx(target, rel=1e-15)
        bv = boundary_values(m, [a])
        assert bv.branch[0] == "atom-limit" and bv.theta[0] == 1


def test_phase_increment_examples():
    assert phase_increment(SINGLE, -1e6, 1e6).value == pytest.approx(2 * math.pi, abs=1e-5)
    # closed form 2(arctan v - arctan u)
    assert phase_increment(SINGLE, -1.0, 2.0).value == pytest.approx(2 * (math.atan(2) + math.atan(1)), rel=1e-12)
    cluster = clark_model(ClarkMeasure([0.0, 2.0, 4.0, 6.0], [1.0, 3.0, 0.2, 1.0]))
    assert phase_increment(cluster, 0.0, 6.0).value == pytest.approx(6 * math.pi, rel=1e-12)
    with pytest.raises(ParameterError):
        phase_increment(SINGLE, 1.0, 1.0)


def test_phase_values():
    assert phase(SINGLE, 0.0) == pytest.approx(2 * math.pi)
    assert phase(PAIR, 1.0) - phase(PAIR, -1.0) == pytest.approx(2 * math.pi, rel=1e-15)


def test_sup_examples():
    s = sup_derivative(SINGLE, (-5.0, 5.0))
    assert s.value == pytest.approx(2.0, rel=1e-12) and abs(s.argmax) < 1e-6 and s.at_atom
    p = sup_derivative(PAIR, (-3.0, 3.0))
    dense = boundary_values(PAIR, np.linspace(-3, 3, 600001)).dphase.max()
    assert p.value >= dense - 1e-12
    # mpmath root of d|Θ'|/dx: the peak sits just inside the atoms, above 2π
    assert p.value == pytest.approx(PAIR_SUP, rel=1e-12)
    assert abs(abs(p.argmax) - PAIR_ARGMAX) < 1e-6
    assert p.value > 2 * math.pi and not p.at_atom


def test_sup_not_at_atom():
    # a light atom next to a heavy one: the peak is still the atom limit 2π/w
    m = clark_model(ClarkMeasure([0.0, 1.0], [0.05, 50.0]))
    s = sup_derivative(m, (-2, 3))
    dense = boundary_values(m, np.linspace(-2, 3, 500001)).dphase.max()
    assert s.value >= dense - 1e-9 * dense


def test_krein_cells_and_residues():
    seq = S.SeparatedSequence.from_points([0.0, 2.0, 4.0])
    m = krein_build(seq)
    km = m.krein_data
    np.testing.assert_allclose(km.cells, [-1.0, 1.0, 3.0, 5.0])
    for n in range(3):
        r = krein_residue(km, n)
        assert r.real == pytest.approx(km.alpha[n], rel=1e-6)
    assert km.alpha[0] == pytest.approx(km.alpha[2], rel=1e-14)
    errs = krein_quadrature_check(km)
    assert errs["J_abs_err"] < 1e-8 and errs["log_scale_abs_err"] < 1e-8
    np.testing.assert_array_equal(m.measure.weights, km.alpha)
    assert m.measure.strategy == "krein_residue"


def test_krein_theta_spectrum():
    seq = S.generate({"family": "power", "k": 2}, (-6, 6))
    km = krein_build(seq).krein_data
    a, b = km.atoms, km.cells
    near = krein_theta(km, a + 1e-9 * np.diff(b)[: a.size])
    np.testing.assert_allclose(near, 1.0, atol=1e-6)
    np.testing.assert_allclose(krein_theta(km, b[1:-1]), -1.0, atol=1e-12)
    inner = 0.5 * (a[:-1] + b[1:-1])
    np.testing.assert_allclose(np.abs(krein_theta(km, inner)), 1.0, atol=1e-12)
    up = np.abs(krein_theta(km, inner + 0.3j))
    assert np.all(up < 1)


def test_krein_c_rescales_h():
    seq = S.SeparatedSequence.from_points([0.0, 1.5, 4.0, 5.0])
    k0 = krein_build(seq).krein_data
    k1 = krein_build(seq, c=0.3).krein_data
    z = 2.2 + 0.4j
    assert krein_H(k1, z) == pytest.approx(math.exp(-0.3 * math.pi) * krein_H(k0, z), rel=1e-13)


def test_cauchy_of_steps_boundary():
    pieces = [(0.0, 1.0, 0.5), (1.0, 3.0, -0.5)]
    assert cauchy_of_steps(pieces, 0.5).real == pytest.approx(0.5, abs=1e-15)
    assert cauchy_of_steps(pieces, 2.0).real == pytest.approx(-0.5, abs=1e-15)
    assert cauchy_of_steps(pieces, 5.0).real == pytest.approx(0.0, abs=1e-15)
    # H = exp(πi Ku) for c = 0 over the same cells
    km = krein_build(S.SeparatedSequence.from_points([0.0, 2.0, 4.0])).krein_data
    a, b = km.atoms, km.cells
    steps = [(b[j], a[j], -0.5) for j in range(3)] + [(a[j], b[j + 1], 0.5) for j in range(3)]
    z = 1.7 + 0.9j
    assert krein_H(km, z) == pytest.approx(np.exp(math.pi * 1j * cauchy_of_steps(steps, z)), rel=1e-12)


def test_krein_needs_three_atoms():
    with pytest.raises(InsufficientDataError):
        krein_build(S.SeparatedSequence.from_points([0.0, 1.0]))


def test_model_json_round_trip(tmp_path):
    for m in (PAIR, krein_build(S.generate({"family": "geometric", "r": 2}, (-4, 4)), exp_factor=0.5)):
        save_json(m, tmp_path / "m.json")
        back = load_json(tmp_path / "m.json")
        assert back.kind == m.kind and back.exp_factor == m.exp_factor
        xs = np.linspace(-3, 3, 7) + 0.1
        np.testing.assert_array_equal(boundary_values(back, xs).dphase, boundary_values(m, xs).dphase)


def test_model_validation():
    with pytest.raises(ParameterError):
        InnerFunctionModel("other", PAIR.measure)
    with pytest.raises(ParameterError):
        clark_model(PAIR.measure, -1.0)
    with pytest.raises(ParameterError):
        InnerFunctionModel("krein", PAIR.measure)


def test_model_from_sequence_window():
    seq = S.generate({"family": "arithmetic"}, (1, 50))
    m = model_from_sequence(seq, "unit", window=(10, 20))
    assert len(m.measure) == 11 and m.measure.positions[0] == 10


@given(models(), st.integers(0, 2**32 - 1))
def test_unimodular_on_the_line(m, seed):
    rng = np.random.default_rng(seed)
    a = m.measure.positions
    xs = rng.uniform(a[0] - 20, a[-1] + 20, 10_000)
    bv = boundary_values(m, xs)
    assert np.max(np.abs(np.abs(bv.theta) - 1)) < 1e-12
    assert np.all(bv.dphase > 0)


@given(models(), st.floats(-30, 30), st.floats(1e-3, 20))
def test_inside_disc_and_reflection(m, dx, y):
    z = complex(m.measure.positions.mean() + dx, y)
    t = theta(m, z)
    assert abs(t) < 1
    tb = theta(m, z.conjugate())
    assert abs(tb * np.conj(t) - 1) < 1e-9 * max(1.0, abs(tb))


@settings(max_examples=15)
@given(models(n_max=10), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_increment_matches_phase_difference(m, f1, f2):
    a = m.measure.positions
    u = a[0] - 3 + f1 * (a[-1] - a[0] + 3)
    v = u + 0.1 + f2 * 10
    inc = phase_increment(m, u, v)
    assert inc.converged
    assert inc.value == pytest.approx(phase(m, v) - phase(m, u), rel=1e-10, abs=1e-10)


@settings(max_examples=15)
@given(models(n_max=8))
def test_atom_to_atom_increment(m):
    a = m.measure.positions
    if a.size < 2:
        return
    inc = phase_increment(m, a[0], a[-1]).value - m.exp_factor * (a[-1] - a[0])
    assert inc == pytest.approx(2 * math.pi * (a.size - 1), rel=1e-10)
