"""Predictive distributions: closed forms, exact enumeration, increments, second moments.

The enumeration engine runs a forward filter on each model's finite latent
layer. A *belief* is the conditional law of the latent state given an
observed prefix. Prefixes with the same belief are merged, so moments over
all ``|S|**n`` prefixes cost one pass over distinct beliefs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from predlab.errors import BudgetExceeded, ConditioningError, UnsupportedPredictive
from predlab.measure import TestFunction
from predlab.montecarlo import batch_mean_se, simulate
from predlab.processes.base import Batch, LagSpec, PathSample, ProcessModel, normalize_obs
from predlab.processes.lagged import LaggedModel

#: Maximum number of latent steps an enumeration may touch.
ENUMERATION_BUDGET = 14
_MERGE_DIGITS = 14

Belief = dict


@dataclass(frozen=True)
class PredictiveValue:
    n: int
    f: TestFunction
    value: float
    method: str


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    method: str


# ---------------------------------------------------------------------------
# Enumeration engine
# ---------------------------------------------------------------------------


def _require(model: ProcessModel) -> None:
    if not model.supports_enumeration:
        raise UnsupportedPredictive(f"{model.id}: latent layer is not finite")


def check_budget(model: ProcessModel, steps: int, budget: int = ENUMERATION_BUDGET) -> None:
    """``steps`` observed coordinates plus the model's latent lookahead must fit the budget."""
    need = steps + model.enum_lookahead
    if need > budget:
        raise BudgetExceeded(f"{model.id}: {need} latent steps exceed the budget of {budget}")


def _fvalue(f: TestFunction, obs, cache: dict) -> float:
    if obs not in cache:
        cache[obs] = float(f(np.asarray(obs, dtype=float)))
    return cache[obs]


def initial_belief(model: ProcessModel) -> Belief:
    _require(model)
    out: Belief = {}
    for s, p in model.enum_initial():
        if p > 0:
            out[s] = out.get(s, 0.0) + p
    return out


def step_law(model: ProcessModel, belief: Belief, t: int) -> dict[Any, tuple[float, Belief]]:
    """Law of ``X_t`` and the posterior belief after each outcome."""
    joint: dict[Any, Belief] = {}
    for s, w in belief.items():
        for obs, s2, p in model.enum_step(s, t):
            if p <= 0:
                continue
            nb = joint.setdefault(obs, {})
            nb[s2] = nb.get(s2, 0.0) + w * p
    out = {}
    for obs, nb in joint.items():
        mass = sum(nb.values())
        out[obs] = (mass, {s: v / mass for s, v in nb.items()})
    return out


def free_step(model: ProcessModel, belief: Belief, t: int) -> Belief:
    """Belief after generating ``X_t`` without observing it."""
    out: Belief = {}
    for s, w in belief.items():
        for _, s2, p in model.enum_step(s, t):
            if p > 0:
                out[s2] = out.get(s2, 0.0) + w * p
    return out


def expect_next(model: ProcessModel, belief: Belief, t: int, f: TestFunction,
                cache: dict | None = None) -> float:
    """``E{f(X_t) | belief}`` where the belief is the latent law after ``t - 1`` steps."""
    cache = {} if cache is None else cache
    total = 0.0
    for s, w in belief.items():
        for obs, _, p in model.enum_step(s, t):
            if p > 0:
                total += w * p * _fvalue(f, obs, cache)
    return total


def condition(model: ProcessModel, prefix: Sequence) -> tuple[Belief, float]:
    """Latent belief after observing ``prefix`` and the prefix probability."""
    belief = initial_belief(model)
    prob = 1.0
    for t, x in enumerate(prefix, start=1):
        obs = normalize_obs(x)
        law = step_law(model, belief, t)
        if obs not in law:
            raise ConditioningError(f"prefix has probability zero at coordinate {t} ({obs!r})")
        mass, belief = law[obs]
        prob *= mass
    return belief, prob


def _key(belief: Belief):
    return frozenset((s, round(p, _MERGE_DIGITS)) for s, p in belief.items())


def prefix_classes(model: ProcessModel, n: int, start: tuple[Belief, int] | None = None
                   ) -> list[tuple[float, Belief]]:
    """All observation prefixes of length ``n`` as ``(probability, belief)``, merged by belief.

    ``start = (belief, t0)`` continues from a belief after ``t0`` observations.
    """
    belief, t0 = start if start is not None else (initial_belief(model), 0)
    classes: dict = {_key(belief): (1.0, belief)}
    for t in range(t0 + 1, t0 + n + 1):
        nxt: dict = {}
        for prob, b in classes.values():
            for mass, nb in step_law(model, b, t).values():
                k = _key(nb)
                old = nxt.get(k)
                nxt[k] = (prob * mass + (old[0] if old else 0.0), nb)
        classes = nxt
    return list(classes.values())


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def _prefix_of(path, n: int):
    values = path.values if isinstance(path, PathSample) else np.asarray(path)
    if n > len(values):
        raise ValueError(f"path of length {len(values)} has no index {n}")
    return values[:n]


def enumerate_predictive(model: ProcessModel, prefix: Sequence, f: TestFunction,
                         budget: int = ENUMERATION_BUDGET) -> PredictiveValue:
    """``E{f(X_{n+1}) | X_1..X_n = prefix}`` by exact conditioning on the latent layer."""
    _require(model)
    n = len(prefix)
    check_budget(model, n + 1, budget)
    belief, _ = condition(model, prefix)
    return PredictiveValue(n, f, expect_next(model, belief, n + 1, f), "enumeration")


def closed_form_predictive(model: ProcessModel, path: PathSample, n: int,
                           f: TestFunction) -> PredictiveValue:
    """Registered per-model formula for ``alpha_n(f)`` along ``path``."""
    base = model.inner if isinstance(model, LaggedModel) else model
    if base.predictive_method != "closed_form":
        raise UnsupportedPredictive(f"{model.id}: no closed form registered")
    batch = path.as_batch() if isinstance(path, PathSample) else path
    if n > batch.horizon:
        raise ValueError(f"path of length {batch.horizon} has no index {n}")
    value = float(model.predictive(batch, [n], f)[0, 0])
    return PredictiveValue(n, f, value, model.method_for(f))


def predictive_increment(model: ProcessModel, path, n: int, f: TestFunction,
                         method: str = "auto") -> float:
    """``E{f(X_{n+2}) - f(X_{n+1}) | F_n}`` along ``path``.

    ``method`` is ``closed_form``, ``enumeration`` or ``auto`` (closed form when
    registered, enumeration otherwise).
    """
    if method == "auto":
        method = "closed_form" if model.predictive_method == "closed_form" else "enumeration"
    if method == "closed_form":
        batch = path.as_batch() if isinstance(path, PathSample) else path
        return float(model.increment(batch, [n], f)[0, 0])
    prefix = _prefix_of(path, n)
    check_budget(model, n + 2)
    belief, _ = condition(model, prefix)
    cache: dict = {}
    ahead = expect_next(model, free_step(model, belief, n + 1), n + 2, f, cache)
    return ahead - expect_next(model, belief, n + 1, f, cache)


def sub_filtration_predictive(model: LaggedModel, path, n: int, f: TestFunction,
                              method: str = "enumeration") -> float:
    """``beta_n(f) = E{f(X_{n+1}) | F_{n - g(n)}}`` along ``path``."""
    if not isinstance(model, LaggedModel):
        raise UnsupportedPredictive(f"{model.id}: no lag metadata")
    if method != "enumeration":
        batch = path.as_batch() if isinstance(path, PathSample) else path
        return float(model.sub_predictive(batch, [n], f)[0, 0])
    seen = int(model.lag.observed(n))
    prefix = _prefix_of(path, n)[:seen]
    check_budget(model, n + 1)
    belief, _ = condition(model, prefix)
    for t in range(seen + 1, n + 1):
        belief = free_step(model, belief, t)
    return expect_next(model, belief, n + 1, f)


def _beta_from(model, belief, seen, n, f, cache):
    for t in range(seen + 1, n + 1):
        belief = free_step(model, belief, t)
    return expect_next(model, belief, n + 1, f, cache)


def tower_gap(model: LaggedModel, n: int, f: TestFunction) -> float:
    """``max |beta_n(f) - E{alpha_n(f) | G_n}|`` over all sub-filtration prefixes."""
    check_budget(model, n + 1)
    seen = int(model.lag.observed(n))
    cache: dict = {}
    worst = 0.0
    for _, belief in prefix_classes(model, seen):
        beta = _beta_from(model, belief, seen, n, f, cache)
        avg = sum(p * expect_next(model, b, n + 1, f, cache)
                  for p, b in prefix_classes(model, n - seen, (belief, seen)))
        worst = max(worst, abs(beta - avg))
    return worst


def subfiltration_cid_defect(model: LaggedModel, n: int, f: TestFunction,
                             horizon: int = 2) -> float:
    """``max |E{f(X_k) | G_n} - beta_n(f)|`` over sub-filtration prefixes and ``n < k <= n + horizon``."""
    if not isinstance(model, LaggedModel):
        raise UnsupportedPredictive(f"{model.id}: no lag metadata")
    if horizon < 1:
        raise ValueError("horizon must be positive")
    check_budget(model, n + horizon)
    seen = int(model.lag.observed(n))
    cache: dict = {}
    worst = 0.0
    for _, belief in prefix_classes(model, seen):
        for t in range(seen + 1, n + 1):
            belief = free_step(model, belief, t)
        beta = expect_next(model, belief, n + 1, f, cache)
        ahead = belief
        for k in range(n + 2, n + horizon + 1):
            ahead = free_step(model, ahead, k - 1)
            worst = max(worst, abs(expect_next(model, ahead, k, f, cache) - beta))
    return worst


def martingale_defect(model: ProcessModel, n: int, f: TestFunction) -> float:
    """``max |E{alpha_{n+1}(f) | F_n} - alpha_n(f)|`` over all prefixes of length ``n``."""
    check_budget(model, n + 2)
    cache: dict = {}
    worst = 0.0
    for _, belief in prefix_classes(model, n):
        now = expect_next(model, belief, n + 1, f, cache)
        ahead = sum(mass * expect_next(model, nb, n + 2, f, cache)
                    for mass, nb in step_law(model, belief, n + 1).values())
        worst = max(worst, abs(ahead - now))
    return worst


def exact_moments(model: ProcessModel, n: int, f: TestFunction,
                  lag: LagSpec | None = None) -> dict[str, float]:
    """Exact ``E alpha_n(f)^2``, ``E f(X_{n+1})`` and, with a lag, ``E beta_n(f)^2``."""
    check_budget(model, n + 1)
    cache: dict = {}
    a2 = mean = 0.0
    for p, b in prefix_classes(model, n):
        alpha = expect_next(model, b, n + 1, f, cache)
        a2 += p * alpha * alpha
        mean += p * alpha
    out = {"predictive_sq": a2, "marginal_mean": mean}
    if lag is not None:
        seen = int(lag.observed(n))
        out["sub_predictive_sq"] = sum(p * _beta_from(model, b, seen, n, f, cache) ** 2
                             for p, b in prefix_classes(model, seen))
    return out


def exact_abs_increment(model: ProcessModel, n: int, f: TestFunction) -> float:
    """Exact ``E |E{f(X_{n+2}) - f(X_{n+1}) | F_n}|``."""
    check_budget(model, n + 2)
    cache: dict = {}
    total = 0.0
    for p, b in prefix_classes(model, n):
        ahead = expect_next(model, free_step(model, b, n + 1), n + 2, f, cache)
        total += p * abs(ahead - expect_next(model, b, n + 1, f, cache))
    return total


def predictive_second_moment(model: ProcessModel, n: int, f: TestFunction,
                             mode: str = "exact", *, which: str = "alpha", paths: int = 10_000,
                             seed: int = 0, workers: int = 1) -> MomentEstimate:
    """``E{alpha_n(f)^2}`` (or ``E{beta_n(f)^2}`` with ``which='beta'``)."""
    if which not in ("alpha", "beta"):
        raise ValueError("which must be 'alpha' or 'beta'")
    lag = model.lag if isinstance(model, LaggedModel) else None
    if which == "beta" and lag is None:
        raise UnsupportedPredictive(f"{model.id}: no lag metadata")
    if mode == "exact":
        _require(model)
        check_budget(model, n + 1)
        cache: dict = {}
        if which == "alpha":
            value = sum(p * expect_next(model, b, n + 1, f, cache) ** 2
                        for p, b in prefix_classes(model, n))
        else:
            seen = int(lag.observed(n))
            value = sum(p * _beta_from(model, b, seen, n, f, cache) ** 2
                        for p, b in prefix_classes(model, seen))
        return MomentEstimate(value, 0.0, "enumeration")
    if mode != "monte_carlo":
        raise ValueError("mode must be 'exact' or 'monte_carlo'")

    def stat(batch: Batch) -> np.ndarray:
        if which == "alpha":
            v = model.predictive(batch, [n], f)[:, 0]
        else:
            v = model.sub_predictive(batch, [n], f)[:, 0]
        return v * v

    sq = simulate(model, paths, max(n, 1), seed, stat, workers=workers)
    mean, se = batch_mean_se(sq)
    return MomentEstimate(float(mean), float(se), "monte_carlo")
