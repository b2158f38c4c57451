import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractel.frac_ops import FracOrder
from fractel.grid import IDENTITY, Grid, GridFunction
from fractel.varexp import (
    ConjugateExponentField,
    ExponentField,
    conjugate,
    holder_bound_check,
    luxemburg_norm,
    modular,
    modular_norm_relation_check,
    poincare_constant_estimate,
    random_smooth_probes,
    sine_probes,
)

G = Grid.uniform(1.0, 51)


def const(grid, c):
    return GridFunction(grid, np.full(grid.size, float(c)))


# {{{ examples


def test_exponent_field_bounds_recomputed():
    p = ExponentField.from_function(G, lambda x: 2 + x)
    assert p.p_minus == 2.0 and p.p_plus == 3.0
    with pytest.raises(ValueError):
        ExponentField.constant(G, 1.5)
    with pytest.raises(ValueError):
        ExponentField(G, np.full(50, 2.0))
    with pytest.raises(ValueError):
        ExponentField(G, np.full(51, np.inf))


def test_modular_examples():
    p = ExponentField.from_function(G, lambda x: 2 + np.sin(3 * x) ** 2)
    assert modular(const(G, 1), p) == pytest.approx(1.0, abs=1e-14)
    assert modular(const(G, 2), ExponentField.constant(G, 2)) == pytest.approx(4.0, abs=1e-13)
    g = Grid.uniform(1.0, 1001)
    u = GridFunction.from_function(g, lambda x: x)
    assert abs(modular(u, ExponentField.constant(g, 2)) - 1 / 3) <= 1e-6
    with pytest.raises(ValueError):
        modular(u, p)


def test_luxemburg_examples():
    p2 = ExponentField.constant(G, 2)
    assert luxemburg_norm(GridFunction.zeros(G), p2) == 0.0
    assert luxemburg_norm(const(G, 2), p2) == pytest.approx(2.0, abs=1e-12)
    g2 = Grid.uniform(2.0, 51)
    assert abs(luxemburg_norm(const(g2, 1), ExponentField.constant(g2, 2)) - 1.4142135623730951) <= 1e-9


def test_conjugate_examples():
    assert np.all(conjugate(ExponentField.constant(G, 2)).values == 2.0)
    assert np.allclose(conjugate(ExponentField.constant(G, 3)).values, 1.5, atol=1e-15)
    q = conjugate(ExponentField.from_function(G, lambda x: 2 + x))
    assert isinstance(q, ConjugateExponentField)
    assert q.values[0] == pytest.approx(2.0) and q.values[-1] == pytest.approx(1.5)
    with pytest.raises(ValueError):
        ConjugateExponentField(G, np.ones(51))


def test_holder_examples():
    p2 = ExponentField.constant(G, 2)
    lhs, rhs = holder_bound_check(GridFunction.zeros(G), const(G, 1), p2)
    assert lhs == 0.0 and rhs >= 0.0
    lhs, rhs = holder_bound_check(const(G, 1), const(G, 1), p2)
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(2.0)


def test_modular_norm_examples():
    r = modular_norm_relation_check(const(G, 2), ExponentField.constant(G, 2))
    assert r.passed and r.norm == pytest.approx(2.0) and r.modular == pytest.approx(4.0)
    p = ExponentField.from_function(G, lambda x: 2 + 3 * x)
    u = GridFunction.from_function(G, lambda x: np.exp(x) * np.sin(5 * x))
    unit = u / luxemburg_norm(u, p)
    r = modular_norm_relation_check(unit, p)
    assert r.passed and abs(r.modular - 1.0) <= 1e-8


# }}}


# {{{ properties


@settings(max_examples=200, deadline=None)
@given(st.floats(2.0, 8.0), st.floats(0.0, 4.0), st.integers(0, 2**32 - 1))
def test_conjugate_identity_and_involution(p0, slope, seed):
    p = ExponentField.from_function(G, lambda x: p0 + slope * x)
    q = conjugate(p)
    np.testing.assert_allclose(1 / p.values + 1 / q.values, 1.0, atol=1e-14)
    np.testing.assert_allclose(conjugate(q).values, p.values, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(2.0, 7.0), st.integers(0, 2**32 - 1))
def test_constant_exponent_is_lp_norm(p0, seed):
    u = np.random.default_rng(seed).standard_normal(51)
    lp = G.integrate(np.abs(u) ** p0) ** (1 / p0)
    assert luxemburg_norm(GridFunction(G, u), ExponentField.constant(G, p0)) == pytest.approx(lp, rel=1e-9)


def _random_exponent(rng, grid):
    """Piecewise-constant exponent with random breakpoints and levels in [2, 6]."""
    k = rng.integers(1, 5)
    breaks = np.sort(rng.uniform(0, grid.L, k - 1))
    levels = rng.uniform(2.0, 6.0, k)
    return ExponentField(grid, levels[np.searchsorted(breaks, grid.points)])


def test_variable_exponent_suite_1000_draws():
    """Homogeneity, unit modular, Hoelder and modular-norm chains, 1000 draws each."""
    rng = np.random.default_rng(20240601)
    p_holder = ExponentField.from_function(G, lambda x: 2 + np.sin(np.pi * x) ** 2)
    probes = random_smooth_probes(G, count=2000, seed=7)
    worst = {"homog": 0.0, "unit": 0.0, "holder": 0.0}
    for i in range(1000):
        scale = 10.0 ** rng.uniform(-3, 3)
        u = GridFunction(G, scale * probes[2 * i])
        v = GridFunction(G, rng.standard_normal() * probes[2 * i + 1])
        p = _random_exponent(rng, G)

        c = rng.uniform(-50, 50)
        nu = luxemburg_norm(u, p)
        worst["homog"] = max(worst["homog"], abs(luxemburg_norm(u * c, p) - abs(c) * nu) / (abs(c) * nu))

        worst["unit"] = max(worst["unit"], abs(modular(u / nu, p) - 1.0))

        lhs, rhs = holder_bound_check(u, v, p_holder)
        worst["holder"] = max(worst["holder"], lhs / rhs)

        assert modular_norm_relation_check(u, p).passed, i
    assert worst["homog"] <= 1e-10
    assert worst["unit"] <= 1e-8
    assert worst["holder"] <= 1 + 1e-8


# }}}


# {{{ Poincare estimate


def test_poincare_classical():
    g = Grid.uniform(1.0, 201)
    order = FracOrder(1.0 - 1e-6, 1.0)
    C = poincare_constant_estimate(order, IDENTITY, ExponentField.constant(g, 2), g)
    # largest ratio is the first sine mode, 1/pi, times the 1.25 safety factor
    assert C == pytest.approx(1.25 / math.pi, rel=1e-3)


def test_poincare_scale_invariance_and_length():
    g = Grid.uniform(1.0, 101)
    order = FracOrder(1.0 - 1e-6, 1.0)
    p = ExponentField.constant(g, 2)
    probes = np.vstack([sine_probes(g), random_smooth_probes(g, count=50)])
    a = poincare_constant_estimate(order, IDENTITY, p, g, probes=probes)
    b = poincare_constant_estimate(order, IDENTITY, p, g, probes=10 * probes)
    assert a == pytest.approx(b, rel=1e-10)

    g2 = Grid.uniform(2.0, 101)
    c = poincare_constant_estimate(order, IDENTITY, ExponentField.constant(g2, 2), g2)
    assert abs(c / poincare_constant_estimate(order, IDENTITY, p, g) - 2.0) <= 0.3


def test_poincare_seeded():
    g = Grid.uniform(1.0, 61)
    p = ExponentField.from_function(g, lambda x: 2 + x)
    order = FracOrder(0.75, 0.5)
    assert poincare_constant_estimate(order, IDENTITY, p, g, seed=3) == poincare_constant_estimate(
        order, IDENTITY, p, g, seed=3
    )
    with pytest.raises(ValueError):
        poincare_constant_estimate(order, IDENTITY, ExponentField.constant(G, 2), g)


# }}}
