"""Scenario registry: one entry per catalog construction with its diagnostic battery.

A scenario couples a model builder (parameter record with defaults) with a
list of :class:`Check` objects. Each check names a diagnostic operation, the
condition it decides, the test function (a standard-suite name), default
options and the ground-truth decision that the run is scored against.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from predlab.diagnostics import CylinderEvent, LimitLaw, clt_stable_target
from predlab.errors import ConfigError
from predlab.measure import DiscreteMeasure, StateSpace
from predlab.processes import (
    Decision, KernelSpec, LagSpec, ProcessModel, Reinforcement, SequenceSpec, clt_model,
    iid_model, kernel_mixture_model, lagged_filtration_model, m_dependent_model,
    polya_urn_model, recursive_predictive_model, sine_pair_model, triple_model,
)

C, D = Decision.CONVERGES, Decision.DIVERGES

#: Diagnostic operations a check may name.
OPERATIONS = (
    "cauchy", "as", "qmc", "wlln", "lagged_wlln", "asymp_exch", "stable", "second_moment",
    "marginal", "increment", "subfiltration_cid",
)


@dataclass(frozen=True)
class Check:
    condition: str
    op: str
    f: str | None
    expect: Decision
    grid: tuple[int, ...]
    options: Mapping[str, Any] = field(default_factory=dict)
    paths_scale: float = 1.0

    def __post_init__(self):
        if self.op not in OPERATIONS:
            raise ValueError(f"unknown diagnostic operation {self.op!r}")
        if self.expect is Decision.INCONCLUSIVE:
            raise ValueError("registered expectations must be definite")

    def describe(self) -> dict:
        return {"condition": self.condition, "op": self.op, "f": self.f,
                "expect": str(self.expect), "grid": list(self.grid),
                "options": {k: _describe(v) for k, v in self.options.items()},
                "paths_scale": self.paths_scale}


def _describe(v):
    if isinstance(v, CylinderEvent):
        return {"name": v.name, "index": v.index, "op": v.op, "value": v.value,
                "component": v.component}
    if isinstance(v, LimitLaw):
        return v.name
    if isinstance(v, Mapping):
        return {k: _describe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_describe(x) for x in v]
    if callable(v):
        return getattr(v, "__name__", repr(v))
    return v


@dataclass(frozen=True)
class Scenario:
    id: str
    description: str
    citation: str
    builder: Callable[..., ProcessModel]
    defaults: Mapping[str, Any]
    checks: tuple[Check, ...]

    def build(self, overrides: Mapping[str, Any] | None = None) -> ProcessModel:
        params = dict(self.defaults)
        unknown = set(overrides or {}) - set(params)
        if unknown:
            raise ConfigError(f"{self.id}: unknown model parameters {sorted(unknown)}")
        params.update(overrides or {})
        try:
            return self.builder(**params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.id}: invalid model parameters: {exc}") from exc

    @property
    def expectations(self) -> dict[str, Decision]:
        return {c.condition: c.expect for c in self.checks}

    def check(self, condition: str) -> Check:
        for c in self.checks:
            if c.condition == condition:
                return c
        raise KeyError(condition)


# ---------------------------------------------------------------------------
# Builders from plain parameter records
# ---------------------------------------------------------------------------


def _finite_measure(atoms, weights) -> DiscreteMeasure:
    return DiscreteMeasure(StateSpace.finite(atoms), atoms, weights)


def _build_iid(atoms, weights):
    return iid_model(_finite_measure(atoms, weights))


def _build_urn(b, r, support, weights):
    return polya_urn_model(b, r, Reinforcement(tuple(map(tuple, support)), tuple(weights)))


def _kernels(alphabet, kernels):
    return [KernelSpec(tuple(alphabet), np.asarray(k, dtype=float)) for k in kernels]


def _build_recursive(q, alphabet, initial, kernels):
    return recursive_predictive_model(SequenceSpec.from_dict(q), _kernels(alphabet, kernels),
                                      _finite_measure(alphabet, initial))


def _build_mixture(d, alphabet, initial, kernels):
    return kernel_mixture_model(SequenceSpec.from_dict(d), _kernels(alphabet, kernels),
                                _finite_measure(alphabet, initial))


def _build_triple(d):
    return triple_model(SequenceSpec.from_dict(d))


def _build_m_dependent(m, atoms, weights):
    return m_dependent_model(m, _finite_measure(atoms, weights))


def _build_m_dependent_lagged(m, atoms, weights, lag):
    return lagged_filtration_model(_build_m_dependent(m, atoms, weights),
                                   LagSpec(lag["kind"], lag["m"]))


def _build_clt(innovation):
    return clt_model(innovation)


def _stable_clt_target(f) -> float:
    return clt_stable_target(f)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

_BIN = {"atoms": [0.0, 1.0], "weights": [0.5, 0.5]}
_KERNEL = [[0.8, 0.2], [0.3, 0.7]]
_EYE = [[1.0, 0.0], [0.0, 1.0]]
_Y1 = CylinderEvent("Y1=1", index=1, op="eq", value=1.0, component=2)


def _urn_checks(f: str, star_grid, exact_qmc: bool) -> tuple[Check, ...]:
    qmc = (Check("qmc", "qmc", f, C, (4, 8, 10, 12), {"mode": "exact"}) if exact_qmc
           else Check("qmc", "qmc", f, C, (64, 256, 1024), {"mode": "monte_carlo"}, 0.1))
    return (
        Check("star", "cauchy", f, C, star_grid),
        Check("as", "as", f, C, (64, 256, 1024)),
        qmc,
        Check("asymp_exch", "asymp_exch", None, C, (64, 256), {"k": 2}),
        Check("marginal", "marginal", None, C, (256, 1024, 4096), {"family": ("x2:1{1}",)}),
    )


SCENARIOS: dict[str, Scenario] = {}


def _register(s: Scenario) -> None:
    SCENARIOS[s.id] = s


_register(Scenario(
    "iid", "i.i.d. uniform{0,1}: constant predictive, exchangeable",
    "baseline: i.i.d. sequences are exchangeable, hence c.i.d.",
    _build_iid, dict(_BIN),
    (
        Check("star", "cauchy", "1{1}", C, (32, 128, 512, 2048)),
        Check("as", "as", "1{1}", C, (32, 128, 512)),
        Check("qmc", "qmc", "1{1}", C, (4, 8, 10, 12), {"mode": "exact"}),
        Check("wlln", "wlln", "1{1}", C, (1000, 4000, 10000), {"with_gap": True}, 0.1),
        Check("asymp_exch", "asymp_exch", None, C, (16, 64), {"k": 2}),
        Check("stable", "stable", "1{1}", C, (256, 1024),
              {"events": (CylinderEvent("X1=1", 1, "eq", 1.0), CylinderEvent("all")),
               "targets": {"X1=1": 0.25, "all": 0.5}}),
        Check("second_moment", "second_moment", "1{1}", C, (4, 8, 12),
              {"mode": "exact", "targets": {"predictive_sq": 0.25, "marginal_sq": 0.25}}),
        Check("marginal", "marginal", None, C, (16, 64, 256), {"family": ("1{0}", "1{1}")}),
    ),
))

_register(Scenario(
    "polya_urn", "classical Polya urn, one black and one red ball, unit reinforcement",
    "c.i.d. sequences have a.s. convergent predictives; the classical urn is exchangeable",
    _build_urn, {"b": 1.0, "r": 1.0, "support": [[1.0, 1.0]], "weights": [1.0]},
    _urn_checks("x2:1{1}", (256, 1024, 4096), exact_qmc=True) + (
        Check("wlln", "wlln", "x2:1{1}", C, (1000, 4000, 10000), {"with_gap": True}, 0.1),
        Check("stable", "stable", "x2:1{1}", C, (1024, 4096),
              {"events": (_Y1,), "targets": {"Y1=1": 1.0 / 3.0}}),
        Check("second_moment", "second_moment", "x2:1{1}", C, (1024, 4096),
              {"mode": "monte_carlo", "targets": {"predictive_sq": 1.0 / 3.0}}),
    ),
))

_register(Scenario(
    "polya_urn_random", "generalized urn with random reinforcement, E(B) = E(R)",
    "generalized urns with E(B) = E(R) satisfy the quasi-martingale condition",
    _build_urn,
    {"b": 1.0, "r": 1.0, "support": [[1.0, 1.0], [1.0, 2.0], [2.0, 1.0], [2.0, 2.0]],
     "weights": [0.25, 0.25, 0.25, 0.25]},
    _urn_checks("x2:1{1}", (256, 1024, 4096), exact_qmc=False),
))

_register(Scenario(
    "recursive_predictive",
    "recursive predictive with q_n = 1 - 2^-(n+1) and a non-identity kernel",
    "recursive predictives: quasi-martingale condition holds when sum sup(1 - q_n) < inf",
    _build_recursive,
    {"q": {"kind": "geometric", "ratio": 0.5, "scale": 0.5, "complement": True},
     "alphabet": [0.0, 1.0], "initial": [0.5, 0.5], "kernels": [_KERNEL]},
    (
        Check("star", "cauchy", "1{1}", C, (32, 128, 512)),
        Check("as", "as", "1{1}", C, (32, 128, 512)),
        Check("qmc", "qmc", "1{1}", C, (4, 8, 10, 12), {"mode": "exact"}),
        Check("asymp_exch", "asymp_exch", None, C, (64, 256), {"k": 2}),
        Check("marginal", "marginal", None, C, (64, 256, 1024), {"family": ("1{1}",)}),
    ),
))

_register(Scenario(
    "recursive_polya", "recursive predictive with q_n = (n+1)/(n+2) and identity kernels",
    "recursive predictives with identity kernels are c.i.d. (here exchangeable)",
    _build_recursive,
    {"q": {"kind": "reciprocal", "shift": 2.0, "complement": True},
     "alphabet": [0.0, 1.0], "initial": [0.5, 0.5], "kernels": [_EYE]},
    (
        Check("star", "cauchy", "1{1}", C, (256, 1024, 4096)),
        Check("as", "as", "1{1}", C, (64, 256, 1024)),
        Check("qmc", "qmc", "1{1}", C, (4, 8, 10, 12), {"mode": "exact"}),
        Check("asymp_exch", "asymp_exch", None, C, (64, 256), {"k": 2}),
        Check("marginal", "marginal", None, C, (64, 256, 1024), {"family": ("1{1}",)}),
    ),
))

_register(Scenario(
    "kernel_mixture", "convex kernel combination with weights d_n = 2^-n and a non-identity kernel",
    "convex kernel combinations with summable weights satisfy the quasi-martingale condition",
    _build_mixture,
    {"d": {"kind": "geometric", "ratio": 0.5, "scale": 1.0},
     "alphabet": [0.0, 1.0], "initial": [0.5, 0.5], "kernels": [_KERNEL]},
    (
        Check("star", "cauchy", "1{1}", C, (32, 128, 512)),
        Check("as", "as", "1{1}", C, (32, 128, 512)),
        Check("qmc", "qmc", "1{1}", C, (4, 8, 10, 12), {"mode": "exact"}),
        Check("asymp_exch", "asymp_exch", None, C, (64, 256), {"k": 2}),
        Check("marginal", "marginal", None, C, (64, 256, 1024), {"family": ("1{1}",)}),
    ),
))

_register(Scenario(
    "triple", "triples (A_n, B_n, C_n) with d_n = 1/sqrt(n+4)",
    "triples counterexample: convergence in probability without a.s. convergence",
    _build_triple, {"d": {"kind": "reciprocal_sqrt", "shift": 4.0}},
    (
        Check("star", "cauchy", "1{1}", C, (96, 384, 1024, 4096), {"epsilon": 0.1}),
        Check("as", "as", "1{1}", D, (64, 256, 1024), {"delta": 0.4}),
        Check("asymp_exch", "asymp_exch", None, C, (96, 384), {"k": 2}),
    ),
))

_register(Scenario(
    "sine_pair", "pairs (Y_n, Z_n) with density 1 + sin(2 pi n y) cos(2 pi z) / 2",
    "sine-pair counterexample: asymptotically exchangeable, predictives do not converge",
    sine_pair_model, {},
    (
        Check("star", "cauchy", "cos1", D, (50, 100, 200), {"epsilon": 0.1}),
        Check("as", "as", "cos1", D, (50, 100, 200), {"delta": 0.4}, 0.2),
        Check("asymp_exch", "asymp_exch", None, C, (100, 200),
              {"k": 2, "limit": LimitLaw.iid_uniform()}),
        Check("marginal", "marginal", None, C, (100, 200, 400), {"family": ("1[0;0.5)",)}),
        Check("necessary_increment", "increment", "cos1", D, (50, 100, 200), {"epsilon": 0.1}),
    ),
))

_register(Scenario(
    "m_dependent", "1-dependent X_n = Y_n - Y_{n+1} with Y_n i.i.d. uniform{0,1}",
    "m-dependent counterexample: not asymptotically exchangeable",
    _build_m_dependent, {"m": 1, **_BIN},
    (
        Check("star", "cauchy", "id", D, (64, 256, 1024)),
        Check("as", "as", "id", D, (64, 256, 1024)),
        Check("qmc", "qmc", "id", D, (3, 5, 7, 9, 11), {"mode": "exact"}),
        Check("asymp_exch", "asymp_exch", None, D, (10, 50, 100), {"k": 3}),
        Check("marginal", "marginal", None, C, (16, 64, 256), {"family": ("1{-1}", "1{0}", "1{1}")}),
    ),
))

_register(Scenario(
    "m_dependent_lagged", "the 1-dependent sequence observed through G_n = F_(n-1)",
    "lagged m-dependent counterexample: sub-filtration c.i.d. holds, predictives diverge",
    _build_m_dependent_lagged, {"m": 1, **_BIN, "lag": {"kind": "constant", "m": 1}},
    (
        Check("lagged_wlln", "lagged_wlln", "id", C, (64, 256, 1024),
              {"epsilon": 0.05, "limit": 0.0}),
        Check("subfiltration_cid", "subfiltration_cid", "id", C, (2, 4, 6, 8, 10)),
        Check("subfiltration_moment_gap", "second_moment", "id", D, (4, 6, 8, 10, 12),
              {"mode": "exact", "gaps": (("predictive_sq", "sub_predictive_sq"),)}),
    ),
))

_register(Scenario(
    "clt", "normalized sums X_n = (Z_1 + ... + Z_n)/sqrt(n) with Gaussian innovations",
    "normalized-sum counterexample: increments vanish, predictives do not converge",
    _build_clt, {"innovation": "gaussian"},
    (
        Check("star", "cauchy", "clamp[-1;1]", D, (100, 400, 1600), {"epsilon": 0.1}),
        Check("necessary_increment", "increment", "clamp[-1;1]", C, (100, 1000),
              {"epsilon": 0.05, "bound": True}),
        Check("asymp_exch", "asymp_exch", None, C, (1600, 6400),
              {"k": 2, "limit": LimitLaw.diagonal_gaussian()}, 4.0),
        Check("marginal", "marginal", None, C, (100, 400, 1600), {"family": ("1(-inf;0]",)}),
        Check("stable", "stable", "clamp[-1;1]", C, (1024, 4096),
              {"events": (CylinderEvent("Z1>0", 1, "gt", 0.0),),
               "targets": {"Z1>0": _stable_clt_target}}),
    ),
))


def get_scenario(scenario_id: str) -> Scenario:
    try:
        return SCENARIOS[scenario_id]
    except KeyError:
        raise ConfigError(f"unknown scenario {scenario_id!r}; known: {sorted(SCENARIOS)}") from None


def list_scenarios() -> list[dict]:
    """Registry table: id, description, citation, model flags and expected verdicts."""
    rows = []
    for s in SCENARIOS.values():
        model = s.build()
        rows.append({
            "id": s.id, "description": s.description, "citation": s.citation,
            "model": model.id, "flags": model.flags.as_dict(),
            "expect": {k: str(v) for k, v in s.expectations.items()},
        })
    return rows


def format_table(rows: list[dict]) -> str:
    lines = [f"{'scenario':<22}{'model':<22}expected verdicts"]
    for r in rows:
        exp = ", ".join(f"{k}: {v}" for k, v in r["expect"].items())
        lines.append(f"{r['id']:<22}{r['model']:<22}{exp}")
        lines.append(f"{'':<22}cite: {r['citation']}")
    return "\n".join(lines)
