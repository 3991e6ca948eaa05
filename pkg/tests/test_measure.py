from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from predlab.errors import DomainError, SpaceMismatch
from predlab.measure import (
    DiscreteMeasure, StateSpace, bl_distance, bl_distance_detailed, check_invariants,
    clamp_linear, empirical_measure, evaluate, find_function, identity, indicator, integrate,
    lipschitz_piecewise, standard_test_suite, table, trig,
)

REAL = StateSpace.real_line()
UNIT = StateSpace.unit_interval()
BINARY = StateSpace.finite([0.0, 1.0])


def weights_strategy(k):
    return st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k).map(
        lambda w: np.asarray(w) / math.fsum(w))


class TestEvaluate:
    @pytest.mark.parametrize("f, x, expected", [
        (indicator(BINARY, labels=[1]), 1.0, 1.0),
        (indicator(BINARY, labels=[1]), 0.0, 0.0),
        (trig(UNIT, 1, "cos"), 0.0, 1.0),
        (trig(UNIT, 1, "sin"), 0.25, 1.0),
        (clamp_linear(REAL, -1, 1), 3.0, 1.0),
        (clamp_linear(REAL, -1, 1), -0.5, -0.5),
        (indicator(REAL, interval=(-math.inf, 0.0, False, True)), 0.0, 1.0),
        (indicator(REAL, interval=(0.0, 1.0, False, True)), 0.0, 0.0),
        (table(BINARY, {0: 2.0, 1: -1.0}), 0.0, 2.0),
        (lipschitz_piecewise(REAL, [0, 1, 2], [0, 1, 0]), 1.5, 0.5),
    ])
    def test_examples(self, f, x, expected):
        assert evaluate(f, x) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("f, x", [
        (indicator(BINARY, labels=[1]), 0.5),
        (trig(UNIT, 1), 1.5),
        (clamp_linear(REAL, -1, 1), math.inf),
    ])
    def test_outside_space(self, f, x):
        with pytest.raises(DomainError):
            evaluate(f, x)

    def test_product_coordinate(self):
        space = StateSpace.product(BINARY, BINARY)
        f = indicator(space, labels=[1], coordinate=1)
        assert evaluate(f, (0.0, 1.0)) == 1.0
        assert evaluate(f, (1.0, 0.0)) == 0.0
        with pytest.raises(ValueError):
            indicator(space, labels=[1])

    @pytest.mark.parametrize("build", [
        lambda: clamp_linear(REAL, 1, 1),
        lambda: trig(UNIT, 1, "tan"),
        lambda: table(BINARY, {0: 1.0}),
        lambda: indicator(BINARY),
        lambda: identity(REAL),
        lambda: lipschitz_piecewise(REAL, [1, 0], [0, 0]),
    ])
    def test_bad_construction(self, build):
        with pytest.raises(ValueError):
            build()


class TestInvariants:
    @pytest.mark.parametrize("space", [BINARY, UNIT, REAL, StateSpace.finite([-1, 0, 1])])
    def test_suite_respects_bounds(self, space):
        for f in standard_test_suite(space):
            assert check_invariants(f), f.name

    @given(st.floats(-5, 5), st.floats(0.1, 5))
    def test_clamp_bounds(self, lo, width):
        assert check_invariants(clamp_linear(REAL, lo, lo + width))


class TestIntegrate:
    @pytest.mark.parametrize("m, f, expected", [
        (DiscreteMeasure.uniform(BINARY, [0, 1]), identity(BINARY), 0.5),
        (DiscreteMeasure(BINARY, [0, 1], [2 / 3, 1 / 3]), indicator(BINARY, labels=[1]), 1 / 3),
        (DiscreteMeasure.point_mass(REAL, 0.3), clamp_linear(REAL, -1, 1), 0.3),
        (DiscreteMeasure.point_mass(UNIT, 0.0), trig(UNIT, 2), 1.0),
    ])
    def test_examples(self, m, f, expected):
        assert integrate(m, f) == pytest.approx(expected, abs=1e-15)

    def test_space_mismatch(self):
        with pytest.raises(SpaceMismatch):
            integrate(DiscreteMeasure.point_mass(REAL, 0.0), identity(BINARY))

    @given(weights_strategy(3), st.floats(-3, 3), st.floats(-3, 3))
    def test_linear_in_f(self, w, a, b):
        space = StateSpace.finite([-1, 0, 1])
        m = DiscreteMeasure(space, [-1, 0, 1], w)
        f = table(space, {-1: 1.0, 0: 0.5, 1: -2.0})
        g = table(space, {-1: 0.0, 0: 3.0, 1: 1.0})
        h = table(space, {k: a * f.on_axis(k) + b * g.on_axis(k) for k in (-1.0, 0.0, 1.0)})
        assert integrate(m, h) == pytest.approx(a * integrate(m, f) + b * integrate(m, g),
                                                abs=1e-12)

    @given(weights_strategy(2), weights_strategy(2), st.floats(0, 1))
    def test_linear_in_measure(self, w1, w2, t):
        p, q = DiscreteMeasure(BINARY, [0, 1], w1), DiscreteMeasure(BINARY, [0, 1], w2)
        f = identity(BINARY)
        assert integrate(p.mix(q, t), f) == pytest.approx(
            t * integrate(p, f) + (1 - t) * integrate(q, f), abs=1e-12)

    @pytest.mark.parametrize("weights", [[0.5, 0.4], [1.2, -0.2], [math.nan, 1.0]])
    def test_invalid_weights(self, weights):
        with pytest.raises(ValueError):
            DiscreteMeasure(BINARY, [0, 1], weights)


class TestEmpirical:
    @pytest.mark.parametrize("points, atoms, weights", [
        ([0, 0, 1], [0, 1], [2 / 3, 1 / 3]),
        ([2.5], [2.5], [1.0]),
        ([1, 2, 3, 4], [1, 2, 3, 4], [0.25] * 4),
    ])
    def test_examples(self, points, atoms, weights):
        m = empirical_measure(points)
        np.testing.assert_allclose(m.atoms, atoms)
        np.testing.assert_allclose(m.weights, weights)

    def test_empty(self):
        with pytest.raises(ValueError):
            empirical_measure([])

    def test_product_points(self):
        m = empirical_measure([[0, 1], [0, 1], [1, 1]])
        assert m.space.dim == 2
        assert m.mass((0, 1)) == pytest.approx(2 / 3)


class TestBoundedLipschitz:
    @pytest.mark.parametrize("x, y, expected", [(0, 1, 1.0), (0, 3, 2.0), (0, 0.25, 0.25)])
    def test_point_masses(self, x, y, expected):
        d = bl_distance(DiscreteMeasure.point_mass(REAL, x), DiscreteMeasure.point_mass(REAL, y))
        assert d == pytest.approx(expected, abs=1e-9)

    def test_identity(self):
        m = DiscreteMeasure(BINARY, [0, 1], [0.3, 0.7])
        assert bl_distance(m, m) == pytest.approx(0.0, abs=1e-12)

    def test_finite_space_is_exact(self):
        p = DiscreteMeasure(BINARY, [0, 1], [0.3, 0.7])
        q = DiscreteMeasure(BINARY, [0, 1], [0.6, 0.4])
        res = bl_distance_detailed(p, q)
        # objective 0.3 * (f(1) - f(0)) with |f(1) - f(0)| <= 1
        assert res.exact and res.value == pytest.approx(0.3, abs=1e-9)

    def test_space_mismatch(self):
        with pytest.raises(SpaceMismatch):
            bl_distance(DiscreteMeasure.point_mass(REAL, 0), DiscreteMeasure.point_mass(BINARY, 0))

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=6),
           st.lists(st.floats(-3, 3), min_size=1, max_size=6))
    def test_symmetric_and_bounded(self, a, b):
        p, q = empirical_measure(a), empirical_measure(b)
        d = bl_distance(p, q)
        assert 0.0 <= d <= 2.0
        assert d == pytest.approx(bl_distance(q, p), abs=1e-9)

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=5),
           st.lists(st.floats(-3, 3), min_size=1, max_size=5),
           st.lists(st.floats(-3, 3), min_size=1, max_size=5))
    def test_triangle_inequality(self, a, b, c):
        p, q, r = (empirical_measure(v) for v in (a, b, c))
        assert bl_distance(p, r) <= bl_distance(p, q) + bl_distance(q, r) + 1e-8

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=6),
           st.lists(st.floats(-3, 3), min_size=1, max_size=6))
    def test_dominates_clamp_integral(self, a, b):
        p, q = empirical_measure(a), empirical_measure(b)
        f = clamp_linear(REAL, -1, 1)
        assert abs(integrate(p, f) - integrate(q, f)) <= bl_distance(p, q) + 1e-8

    def test_empirical_median_decreases(self):
        rng = np.random.default_rng(0)
        target = DiscreteMeasure(StateSpace.finite([0, 1, 2]), [0, 1, 2], [0.2, 0.3, 0.5])
        medians = []
        for n in (100, 1000, 10_000):
            ds = [bl_distance(empirical_measure(rng.choice(3, n, p=[0.2, 0.3, 0.5]),
                                                target.space), target) for _ in range(21)]
            medians.append(np.median(ds))
        assert medians[0] > medians[1] > medians[2]


class TestStandardSuite:
    def test_binary(self):
        assert [f.name for f in standard_test_suite(BINARY)] == ["1{0}", "1{1}", "id"]

    def test_unit_interval_has_cosine(self):
        f = find_function(UNIT, "cos1")
        assert evaluate(f, 0.5) == pytest.approx(-1.0)

    def test_real_line_has_clamp(self):
        f = find_function(REAL, "clamp[-1;1]")
        assert f.lipschitz_constant == 1.0 and f.sup_norm == 1.0

    def test_product_union(self):
        space = StateSpace.product(BINARY, BINARY)
        names = [f.name for f in standard_test_suite(space)]
        assert names == ["x0:1{0}", "x0:1{1}", "x0:id", "x1:1{0}", "x1:1{1}", "x1:id"]

    def test_deterministic(self):
        assert ([f.name for f in standard_test_suite(REAL)]
                == [f.name for f in standard_test_suite(REAL)])

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            find_function(BINARY, "nope")
