"""Acceptance criteria 1-10, each run at its stated tolerance and runtime bound.

Every test prints one ``criterion N: PASS|FAIL`` line (also collected in the
terminal summary). Seeds are fixed so each Monte Carlo criterion is a
deterministic computation.
"""
from __future__ import annotations

import itertools
import math
import time

import numpy as np
import pytest

from predlab.diagnostics import (
    CylinderEvent, LimitLaw, Thresholds, as_convergence_check, asymptotic_exchangeability_stat,
    cauchy_in_probability, decide_curve, lagged_wlln_check, necessary_increment_check,
    stable_convergence_check, wlln_residual,
)
from predlab.errors import ConditioningError
from predlab.harness import ExperimentConfig, run_scenario
from predlab.measure import (
    DiscreteMeasure, StateSpace, clamp_linear, identity, indicator, standard_test_suite, trig,
)
from predlab.predictive import (
    closed_form_predictive, enumerate_predictive, exact_moments, martingale_defect,
    predictive_second_moment, sub_filtration_predictive,
)
from predlab.processes import (
    Decision, LagSpec, PathSample, clt_model, iid_model, lagged_filtration_model,
    m_dependent_model, polya_urn_model, sine_pair_model, triple_model,
)
from predlab.scenarios import SCENARIOS, get_scenario

pytestmark = pytest.mark.acceptance

C, D = Decision.CONVERGES, Decision.DIVERGES
TH = Thresholds()
K = TH.se_multiple
BINARY = StateSpace.finite([0.0, 1.0])


def within(seconds: float, start: float) -> bool:
    return time.perf_counter() - start < seconds


def binary_prefixes(model, max_len):
    """All binary observation sequences of length <= max_len, as model points."""
    urn = model.space.dim == 3
    for n in range(max_len + 1):
        for ys in itertools.product([0.0, 1.0], repeat=n):
            yield [(1.0, 1.0, y) for y in ys] if urn else list(ys)


def test_criterion_01_oracle_agreement(acceptance_log):
    start = time.perf_counter()
    worst, count = 0.0, 0
    for model in (triple_model(), polya_urn_model(), get_scenario("recursive_predictive").build()):
        suite = standard_test_suite(model.space)
        for prefix in binary_prefixes(model, 10):
            values = np.asarray(prefix, dtype=float).reshape((len(prefix),) + (
                (model.space.dim,) if model.space.dim > 1 else ()))
            path = PathSample(model.id, 0, values)
            for f in suite:
                try:
                    exact = enumerate_predictive(model, prefix, f).value
                except ConditioningError:
                    continue  # null prefix: no conditional law to compare
                fast = closed_form_predictive(model, path, len(prefix), f).value
                worst = max(worst, abs(fast - exact))
                count += 1
    elapsed = time.perf_counter() - start
    acceptance_log(1, {"agreement <= 1e-10": worst <= 1e-10, "runtime < 30 s": elapsed < 30},
                   f"{count} comparisons, max |closed form - enumeration| = {worst:.3g}, "
                   f"{elapsed:.1f} s")


def test_criterion_02_martingale_exactness(acceptance_log):
    start = time.perf_counter()
    model = polya_urn_model()
    defect = max(martingale_defect(model, n, f)
                 for n in range(13) for f in standard_test_suite(model.space))
    f = indicator(model.space, labels=[1], coordinate=2)
    moment_err = max(abs(predictive_second_moment(model, n, f).value
                         - (2 * n + 3) / (6 * (n + 2))) for n in range(13))
    at12 = predictive_second_moment(model, 12, f).value
    elapsed = time.perf_counter() - start
    acceptance_log(2, {"defect <= 1e-10": defect <= 1e-10,
                       "moments <= 1e-10": moment_err <= 1e-10,
                       "n=12 value 27/84": abs(at12 - 27 / 84) <= 1e-10,
                       "runtime < 60 s": elapsed < 60},
                   f"max martingale defect {defect:.3g}, max moment error {moment_err:.3g}, "
                   f"E alpha_12^2 = {at12:.15f}, {elapsed:.1f} s")


def test_criterion_03_polya_moment_condition(acceptance_log):
    start = time.perf_counter()
    model = polya_urn_model()
    f = indicator(model.space, labels=[1], coordinate=2)
    mom = predictive_second_moment(model, 2**12, f, "monte_carlo", paths=10**5, seed=3)
    event = CylinderEvent("Y1=1", 1, "eq", 1.0, component=2)
    stable = stable_convergence_check(model, f, [event], (2**12,), {"Y1=1": 1.0 / 3.0},
                                      paths=10**5, seed=4)
    dev = stable.evidence[0]
    elapsed = time.perf_counter() - start
    acceptance_log(3, {"moment within 3 SE": abs(mom.value - 1 / 3) <= K * mom.stderr,
                       "stable within 3 SE": abs(dev.statistic[-1]) <= K * dev.stderr[-1],
                       "runtime < 120 s": elapsed < 120},
                   f"E alpha^2 = {mom.value:.5f} +- {mom.stderr:.5f}; "
                   f"E 1_H f(X_n) - 1/3 = {dev.statistic[-1]:+.5f} +- {dev.stderr[-1]:.5f}, "
                   f"{elapsed:.1f} s")


def test_criterion_04_triple_separation(acceptance_log):
    start = time.perf_counter()
    model = triple_model()
    f = indicator(BINARY, labels=[1])
    star = cauchy_in_probability(model, f, (2**10, 2**12), epsilon=0.1, paths=10**4, seed=5)
    a_s = as_convergence_check(model, f, (2**8, 2**10), delta=0.4, paths=10**4, seed=6)
    p = star.evidence[0].statistic[-1]
    frac = a_s.evidence[0].statistic[-1]
    elapsed = time.perf_counter() - start
    acceptance_log(4, {"p_4096 <= 0.05": p <= 0.05, "excursion >= 0.40": frac >= 0.40,
                       "runtime < 180 s": elapsed < 180},
                   f"p_4096 = {p:.4f}, excursion fraction at 1024 = {frac:.4f} "
                   f"(verdicts {star.decision}/{a_s.decision}), {elapsed:.1f} s")


def test_criterion_05_sine_pair_separation(acceptance_log):
    start = time.perf_counter()
    model = sine_pair_model()
    f = trig(model.space, 1)
    star = cauchy_in_probability(model, f, (50, 100), epsilon=0.1, paths=10**4, seed=7)
    p, se = star.evidence[0].statistic[-1], star.evidence[0].stderr[-1]
    curves = asymptotic_exchangeability_stat(model, (100,), k=2, limit=LimitLaw.iid_uniform(),
                                             paths=10**4, seed=8)
    bl = next(c for c in curves if c.kind == "limit_bl").statistic[0]
    elapsed = time.perf_counter() - start
    acceptance_log(5, {"verdict diverges": star.decision is D, "p_100 >= 0.25": p - K * se >= 0.25,
                       "grid BL <= 0.05": bl <= 0.05, "runtime < 120 s": elapsed < 120},
                   f"p_100 = {p:.4f} +- {se:.4f}, BL to product uniform = {bl:.4f}, "
                   f"{elapsed:.1f} s")


def test_criterion_06_m_dependent(acceptance_log):
    start = time.perf_counter()
    model = m_dependent_model()
    fid = identity(model.space)
    enum_ok = (enumerate_predictive(model, [1.0], fid).value == -0.5
               and enumerate_predictive(model, [0.0], fid).value == 0.0)

    grid = (10, 50, 100)
    pairs = asymptotic_exchangeability_stat(model, grid, k=2, paths=10**4, seed=9)
    excess, se = np.asarray(pairs[0].statistic), np.asarray(pairs[0].stderr)
    z_pairs = excess / np.maximum(se, 1e-300)
    triples = asymptotic_exchangeability_stat(model, grid, k=3, paths=10**4, seed=9)
    z_triples = np.asarray(triples[0].statistic) / np.asarray(triples[0].stderr)

    lagged = lagged_filtration_model(model, LagSpec("constant", 1))
    beta_worst = 0.0
    for n in range(1, 8):
        for prefix in itertools.product([-1.0, 0.0, 1.0], repeat=n):
            path = PathSample(lagged.id, 0, np.asarray(prefix))
            try:
                beta_worst = max(beta_worst, abs(sub_filtration_predictive(lagged, path, n, fid)))
            except ConditioningError:
                continue

    gaps = [(lambda m: m["predictive_sq"] - m["sub_predictive_sq"])(exact_moments(lagged, n, fid, lagged.lag))
            for n in range(2, 13)]
    elapsed = time.perf_counter() - start
    acceptance_log(6, {"enumeration values": enum_ok,
                       "k=2 excess >= 5 SE": bool(np.all(z_pairs >= 5)),
                       "beta = 0": beta_worst == 0.0,
                       "moment gap >= margin": min(gaps) >= TH.margin,
                       "runtime < 120 s": elapsed < 120},
                   f"k=2 excess/SE = {np.round(z_pairs, 2).tolist()} "
                   f"(k=3: {np.round(z_triples, 1).tolist()}), max |beta_n| = {beta_worst:.3g}, "
                   f"min gap = {min(gaps):.4f}, {elapsed:.1f} s")


def test_criterion_07_clt(acceptance_log):
    start = time.perf_counter()
    model = clt_model()
    g = clamp_linear(model.space, -1, 1)
    inc = necessary_increment_check(model, g, (100, 1000), bound=True, paths=10**4, seed=10)
    slack = inc.evidence[1]
    bound = 2 * math.sqrt(2 / math.pi) / np.sqrt(np.asarray(slack.n) + 1.0)
    mean_dev = np.asarray(slack.statistic) + bound
    star = cauchy_in_probability(model, g, (100, 400, 1600), paths=10**4, seed=11)
    elapsed = time.perf_counter() - start
    acceptance_log(7, {"below bound": bool(np.all(np.asarray(slack.statistic) <= 0)),
                       "increment converges": inc.decision is C,
                       "cauchy diverges": star.decision is D,
                       "runtime < 120 s": elapsed < 120},
                   f"E|alpha_n(g) - g(X_n)| = {np.round(mean_dev, 4).tolist()} vs bound "
                   f"{np.round(bound, 4).tolist()}, {elapsed:.1f} s")


def test_criterion_08_wlln(acceptance_log):
    iid = iid_model(DiscreteMeasure.uniform(BINARY, [0, 1]))
    urn = polya_urn_model()
    r_iid, _ = wlln_residual(iid, indicator(BINARY, labels=[1]), (10**4,), paths=10**3, seed=12)
    r_urn, _ = wlln_residual(urn, indicator(urn.space, labels=[1], coordinate=2), (10**4,),
                             paths=10**3, seed=13)
    lagged = lagged_filtration_model(m_dependent_model(), LagSpec("constant", 1))
    v = lagged_wlln_check(lagged, identity(lagged.space), (1000, 4000), limit=0.0, paths=10**4,
                          seed=14)
    lim = next(c for c in v.evidence if c.label == "limit")
    acceptance_log(8, {"iid residual <= 0.02": r_iid.statistic[0] <= 0.02,
                       "urn residual <= 0.02": r_urn.statistic[0] <= 0.02,
                       "lagged converges": v.decision is C,
                       "mean within 3 SE": abs(lim.statistic[-1]) <= K * lim.stderr[-1]},
                   f"median residuals {r_iid.statistic[0]:.4f} / {r_urn.statistic[0]:.4f}; "
                   f"lagged mean {lim.statistic[-1]:+.3g} +- {lim.stderr[-1]:.3g}")


@pytest.fixture(scope="module")
def registry_runs(tmp_path_factory):
    out = tmp_path_factory.mktemp("registry")
    records = {sid: run_scenario(ExperimentConfig(sid, seed=0, out=str(out / "w1")))
               for sid in SCENARIOS}
    return out, records


def test_criterion_09_hierarchy(acceptance_log, registry_runs):
    _, records = registry_runs
    bad_exit = [sid for sid, r in records.items() if r.exit_status != 0]
    violations = {sid: r.hierarchy_violations for sid, r in records.items()
                  if r.hierarchy_violations}
    got = {sid: {v.condition: v.decision for v in r.verdicts} for sid, r in records.items()}
    triple_gap = got["triple"].get("star") is C and got["triple"].get("as") is D
    sine_gap = got["sine_pair"].get("asymp_exch") is C and got["sine_pair"].get("star") is D
    acceptance_log(9, {"exit 0 everywhere": not bad_exit, "no forward violations": not violations,
                       "triple reverse exception": triple_gap,
                       "sine pair reverse exception": sine_gap},
                   f"{len(records)} scenarios, nonzero exits {bad_exit}, violations {violations}")


def test_criterion_10_determinism(acceptance_log, registry_runs, tmp_path):
    out, _ = registry_runs
    differing = []
    for sid in SCENARIOS:
        run_scenario(ExperimentConfig(sid, seed=0, workers=2, out=str(tmp_path / "w2")))
        for name in ("curves.csv", "verdicts.csv"):
            if (out / "w1" / sid / name).read_bytes() != (tmp_path / "w2" / sid / name).read_bytes():
                differing.append(f"{sid}/{name} (workers)")
    for sid in ("triple", "sine_pair", "m_dependent"):
        run_scenario(ExperimentConfig(sid, seed=0, out=str(tmp_path / "again")))
        for name in ("curves.csv", "verdicts.csv"):
            if (out / "w1" / sid / name).read_bytes() != (tmp_path / "again" / sid / name).read_bytes():
                differing.append(f"{sid}/{name} (repeat)")
    acceptance_log(10, {"byte identical": not differing},
                   f"all scenarios rerun with doubled workers, three repeated; "
                   f"differing files {differing}")
