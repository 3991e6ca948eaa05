from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from predlab import rng
from predlab.diagnostics import block_space, sample_bl
from predlab.measure import DiscreteMeasure, StateSpace, clamp_linear, indicator, standard_test_suite
from predlab.processes import (
    Decision, Flags, KernelSpec, LagSpec, Reinforcement, SequenceSpec, clt_model, iid_model,
    kernel_mixture_model, lagged_filtration_model, m_dependent_model, polya_urn_model,
    recursive_predictive_model, sample_path, series_converges, sine_pair_model, triple_model,
)
from predlab.scenarios import SCENARIOS, get_scenario

C, D, I = Decision.CONVERGES, Decision.DIVERGES, Decision.INCONCLUSIVE
BINARY = StateSpace.finite([0.0, 1.0])
ALL_IDS = sorted(SCENARIOS)


def seeds(n, tag="t"):
    return rng.path_seeds(0, 0, n, tag)


class TestSampling:
    @pytest.mark.parametrize("sid", ALL_IDS)
    def test_deterministic_and_prefix_consistent(self, sid):
        model = get_scenario(sid).build()
        a = sample_path(model, 64, 99)
        b = sample_path(model, 64, 99)
        c = sample_path(model, 128, 99)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.values, c.values[:64])

    @pytest.mark.parametrize("sid", ALL_IDS)
    def test_values_in_space(self, sid):
        model = get_scenario(sid).build()
        batch = model.sample_batch(seeds(50), 30)
        assert np.all(model.space.contains(batch.values.reshape(-1, model.space.dim)
                                           if model.space.dim > 1 else batch.values.ravel()))

    @pytest.mark.parametrize("sid", ALL_IDS)
    def test_batch_rows_are_paths(self, sid):
        model = get_scenario(sid).build()
        s = seeds(6)
        batch = model.sample_batch(s, 20)
        np.testing.assert_array_equal(batch.values[3], sample_path(model, 20, int(s[3])).values)

    @pytest.mark.parametrize("sid", ALL_IDS)
    def test_first_marginal(self, sid):
        model = get_scenario(sid).build()
        n_paths = 100_000
        x1 = model.sample_batch(seeds(n_paths, "marg"), 1).values[:, 0]
        for f in standard_test_suite(model.space)[:6]:
            target = model.marginal_expectation(1, f)
            if target is None:
                continue
            v = f(x1)
            se = max(v.std() / math.sqrt(n_paths), 1e-12)
            assert abs(v.mean() - target) <= 4 * se + 1e-12, (sid, f.name)

    def test_bad_length(self):
        with pytest.raises(ValueError):
            sample_path(iid_model(DiscreteMeasure.uniform(BINARY, [0, 1])), 0, 1)


class TestUrn:
    def test_first_draw(self):
        x = polya_urn_model().sample_batch(seeds(40_000), 1).values[:, 0]
        assert np.all(x[:, :2] == 1.0)
        assert abs(x[:, 2].mean() - 0.5) < 4 * 0.5 / math.sqrt(40_000)

    @pytest.mark.parametrize("b, r", [(0, 1), (1, -1)])
    def test_bad_counts(self, b, r):
        with pytest.raises(ValueError):
            polya_urn_model(b, r)

    def test_unbalanced_reinforcement(self):
        with pytest.raises(ValueError):
            polya_urn_model(reinforcement=Reinforcement([(1.0, 2.0)], [1.0]))

    def test_flags(self):
        assert polya_urn_model().flags.is_exchangeable
        rf = Reinforcement([(1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (2.0, 2.0)], [0.25] * 4)
        flags = polya_urn_model(reinforcement=rf).flags
        assert not flags.is_cid and flags.expected_as is C


class TestTriple:
    def test_pairwise_independent(self):
        model = triple_model(SequenceSpec("constant", value=0.25))
        x = model.sample_batch(seeds(200_000), 3).values
        se = 4 * math.sqrt(0.25 * 0.75 / len(x))
        for i in range(3):
            assert abs(x[:, i].mean() - 0.25) < se
            for j in range(i + 1, 3):
                assert abs((x[:, i] * x[:, j]).mean() - 0.0625) < se
        # not mutually independent: all three equal one exactly on A and B
        assert abs(x.prod(axis=1).mean() - 0.0625) < se

    def test_default_flags(self):
        flags = triple_model().flags
        assert (flags.expected_star, flags.expected_as) == (C, D)
        assert flags.pairwise_independent

    def test_summable_squares_converge(self):
        flags = triple_model(SequenceSpec("reciprocal", shift=4.0)).flags
        assert (flags.expected_star, flags.expected_as) == (C, C)

    @pytest.mark.parametrize("d", [SequenceSpec("constant", value=0.5),
                                   SequenceSpec("constant", value=0.0),
                                   SequenceSpec("factorial")])
    def test_out_of_range(self, d):
        with pytest.raises(ValueError):
            triple_model(d)


class TestSinePair:
    def test_density_example(self):
        assert sine_pair_model().density(0.25, 0.0, 1) == pytest.approx(2.0)

    def test_uniform_marginals(self):
        batch = sine_pair_model().sample_batch(seeds(100_000), 8)
        for arr in (batch.auxiliary["Y"], batch.auxiliary["Z"]):
            for k in range(arr.shape[1]):
                assert abs(arr[:, k].mean() - 0.5) < 4 * math.sqrt(1 / 12 / len(arr))

    def test_pair_correlation(self):
        # E{sin(2 pi k Y) cos(2 pi Z)} = 1/4 under the perturbed density
        batch = sine_pair_model().sample_batch(seeds(100_000), 6)
        y, z = batch.auxiliary["Y"], batch.auxiliary["Z"]
        for k in range(3):
            v = np.sin(2 * math.pi * (k + 1) * y[:, k]) * np.cos(2 * math.pi * z[:, k])
            assert abs(v.mean() - 0.25) < 4 * v.std() / math.sqrt(len(v))


class TestMDependent:
    def test_values_and_marginal(self):
        x = m_dependent_model().sample_batch(seeds(100_000), 6).values
        assert set(np.unique(x)) <= {-1.0, 0.0, 1.0}
        for col in (0, 5):
            for v, p in ((-1, 0.25), (0, 0.5), (1, 0.25)):
                assert abs((x[:, col] == v).mean() - p) < 4 * math.sqrt(p * (1 - p) / len(x))

    def test_one_dependent(self):
        x = m_dependent_model().sample_batch(seeds(100_000), 6).values
        # Cov(Y_n - Y_{n+1}, Y_{n+1} - Y_{n+2}) = -Var(Y) = -1/4, correlation -1/2
        assert abs(np.corrcoef(x[:, 2], x[:, 3])[0, 1] + 0.5) < 4 / math.sqrt(len(x))
        for lag in (2, 3):
            assert abs(np.corrcoef(x[:, 1], x[:, 1 + lag])[0, 1]) < 4 / math.sqrt(len(x))

    def test_stationary_blocks(self):
        model = m_dependent_model()
        space = block_space(model.space, 2)
        x = model.sample_batch(seeds(40_000), 8).values
        first, later = x[:, 0:2], x[:, 5:7]
        # two-sample BL of shifted blocks against the same-block noise floor, per batch
        diffs = []
        for part in np.array_split(np.arange(len(x)), 20):
            a, b = part[: len(part) // 2], part[len(part) // 2:]
            diffs.append(sample_bl(space, first[a], later[b]) - sample_bl(space, first[a], first[b]))
        diffs = np.asarray(diffs)
        assert abs(diffs.mean()) <= 4 * diffs.std(ddof=1) / math.sqrt(len(diffs))

    @pytest.mark.parametrize("m", [0, 1.5, -2])
    def test_bad_m(self, m):
        with pytest.raises(ValueError):
            m_dependent_model(m)

    def test_degenerate_base(self):
        with pytest.raises(ValueError):
            m_dependent_model(1, DiscreteMeasure(BINARY, [0, 1], [1.0, 0.0]))

    def test_flags(self):
        flags = m_dependent_model(2).flags
        assert flags.m_cid_order == 2 and flags.is_stationary and not flags.is_cid


class TestCLT:
    def test_first_is_innovation(self):
        batch = clt_model().sample_batch(seeds(10), 1)
        np.testing.assert_array_equal(batch.values[:, 0], batch.auxiliary["Z"][:, 0])

    @pytest.mark.parametrize("kind", ["gaussian", "uniform", "rademacher"])
    def test_normalized_sum_identity(self, kind):
        batch = clt_model(kind).sample_batch(seeds(20), 50)
        n = np.arange(1, 51)
        np.testing.assert_allclose(batch.values * np.sqrt(n), np.cumsum(batch.auxiliary["Z"], axis=1),
                                   rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("kind", ["gaussian", "uniform", "rademacher"])
    def test_standardized(self, kind):
        z = clt_model(kind).sample_batch(seeds(100_000), 1).auxiliary["Z"].ravel()
        assert abs(z.mean()) < 0.015 and abs(z.var() - 1) < 0.02

    def test_discrete_needs_standardization(self):
        with pytest.raises(ValueError):
            clt_model(DiscreteMeasure(StateSpace.real_line(), [0.0, 1.0], [0.5, 0.5]))


class TestRecursive:
    def test_q_one_rejected(self):
        with pytest.raises(ValueError):
            recursive_predictive_model(SequenceSpec("constant", value=1.0),
                                       [KernelSpec.identity([0, 1])],
                                       DiscreteMeasure.uniform(BINARY, [0, 1]))

    def test_summable_complement_converges(self):
        model = recursive_predictive_model(
            SequenceSpec("geometric", ratio=0.5, scale=0.5, complement=True),
            [KernelSpec.identity([0, 1])], DiscreteMeasure.uniform(BINARY, [0, 1]))
        assert model.flags.expected_as is C

    def test_mixture_needs_positive_weights(self):
        with pytest.raises(ValueError):
            kernel_mixture_model(SequenceSpec("constant", value=0.0),
                                 [KernelSpec.identity([0, 1])],
                                 DiscreteMeasure.uniform(BINARY, [0, 1]))

    def test_equal_weights_give_empirical(self):
        model = kernel_mixture_model(SequenceSpec("constant", value=1.0),
                                     [KernelSpec.identity([0, 1])],
                                     DiscreteMeasure.uniform(BINARY, [0, 1]))
        batch = model.sample_batch(seeds(5), 40)
        f = indicator(BINARY, labels=[1])
        alpha = model.predictive(batch, [40], f)[:, 0]
        np.testing.assert_allclose(alpha, batch.values.mean(axis=1), atol=1e-12)


class TestSeries:
    @pytest.mark.parametrize("terms, expected", [
        (1.0 / np.arange(1, 10**6 + 1) ** 2, True),
        (1.0 / np.arange(1, 10**6 + 1), False),
        (0.5 ** np.arange(10**6), True),
        (np.ones(10**6), False),
    ])
    def test_decisions(self, terms, expected):
        assert series_converges(terms) is expected

    @given(st.sampled_from(["constant", "reciprocal", "reciprocal_sqrt", "geometric"]))
    def test_round_trip(self, kind):
        spec = SequenceSpec(kind, shift=2.0) if kind.startswith("recip") else SequenceSpec(kind)
        assert SequenceSpec.from_dict(spec.as_dict()) == spec


class TestLag:
    @pytest.mark.parametrize("lag", [LagSpec("constant", 1), LagSpec("constant", 3),
                                     LagSpec("sqrt"), LagSpec("log")])
    def test_growth_condition(self, lag):
        assert lag.validate()

    @given(st.integers(0, 10**6))
    def test_observed_bounds(self, n):
        for lag in (LagSpec("constant", 2), LagSpec("sqrt"), LagSpec("log")):
            assert 0 <= int(lag.observed(n)) <= n

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            LagSpec("linear")

    def test_lag_zero_matches_inner(self):
        inner = m_dependent_model()
        model = lagged_filtration_model(inner, LagSpec("constant", 0))
        batch = model.sample_batch(seeds(8), 10)
        f = standard_test_suite(model.space)[-1]
        np.testing.assert_allclose(model.sub_predictive(batch, [5, 9], f),
                                   inner.predictive(batch, [5, 9], f), atol=1e-14)


class TestFlags:
    @pytest.mark.parametrize("kwargs", [
        dict(is_exchangeable=True, is_cid=False, m_cid_order=None),
        dict(is_exchangeable=False, is_cid=True, m_cid_order=1),
        dict(is_exchangeable=False, is_cid=True, m_cid_order=0, expected_as=D),
        dict(is_exchangeable=False, is_cid=False, m_cid_order=None, expected_as=C,
             expected_star=D),
    ])
    def test_inconsistent(self, kwargs):
        base = dict(is_stationary=False, expected_star=C, expected_as=C, expected_asymp_exch=C)
        with pytest.raises(ValueError):
            Flags(**{**base, **kwargs})

    @pytest.mark.parametrize("sid", ALL_IDS)
    def test_registry_flags_valid(self, sid):
        flags = get_scenario(sid).build().flags
        if flags.is_cid:
            assert flags.expected_as is C and flags.expected_star is C
