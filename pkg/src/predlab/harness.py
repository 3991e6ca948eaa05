"""Experiment configuration, scenario execution, persistence and emission.

Files written by :func:`run_scenario` under ``<out>/<scenario>/``:

``curves.csv``
    ``scenario, condition, f_id, n, statistic, stderr, method``; the condition
    column is ``<condition>/<curve kind>[:<label>]`` so stored curves carry
    their decision rule.
``verdicts.csv``
    ``scenario, condition, f_id, decision, threshold_profile, seed``.
``record.json``
    the full :class:`ResultRecord` (config snapshot, verdicts with evidence,
    expectations, wall clock, tool version).
``plot/<condition>__<kind>__<f_id>.dat`` and ``.err``
    two-column ``n statistic`` and ``n stderr`` series.

Numbers are rendered with 17 significant digits so they round-trip exactly.
"""
from __future__ import annotations

import csv
import io
import json
import re
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from predlab import __version__, rng
from predlab import diagnostics as dg
from predlab.diagnostics import ConvergenceCurve, DiagnosticVerdict, Thresholds
from predlab.errors import BudgetExceeded, ConfigError, UnsupportedPredictive
from predlab.measure import TestFunction, find_function
from predlab.predictive import ENUMERATION_BUDGET
from predlab.processes import Decision, LaggedModel, ProcessModel
from predlab.scenarios import Check, Scenario, get_scenario

#: Paths per run when the config does not say otherwise.
DEFAULT_PATHS = 10_000
#: Minimum path count (batch-means errors need at least this many batches).
MIN_PATHS = 30
CURVE_COLUMNS = ("scenario", "condition", "f_id", "n", "statistic", "stderr", "method")
VERDICT_COLUMNS = ("scenario", "condition", "f_id", "decision", "threshold_profile", "seed")
_CONFIG_KEYS = ("scenario", "seed", "paths", "workers", "out", "model", "grids", "thresholds")


def fmt(x: float) -> str:
    """17-significant-digit rendering (round-trips through ``float``)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ExperimentConfig:
    """Run configuration; see :meth:`from_dict` for the schema."""

    scenario: str
    seed: int = 0
    paths: int = DEFAULT_PATHS
    workers: int = 1
    out: str | None = None
    model: Mapping[str, Any] = field(default_factory=dict)
    grids: Mapping[str, tuple[int, ...]] = field(default_factory=dict)
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not isinstance(self.paths, int) or self.paths < MIN_PATHS:
            raise ConfigError(f"paths must be an integer >= {MIN_PATHS} (batching requirement)")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        grids = {}
        for cond, g in dict(self.grids).items():
            g = tuple(int(v) for v in g)
            if not g or any(v < 0 for v in g) or any(b <= a for a, b in zip(g, g[1:])):
                raise ConfigError(f"grid for {cond!r} must be non-empty and strictly increasing")
            grids[cond] = g
        object.__setattr__(self, "grids", grids)
        object.__setattr__(self, "model", dict(self.model))

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExperimentConfig":
        """Schema (unknown keys are errors)::

            scenario: <id>            # required
            seed: <u64>               # default 0
            paths: <int >= 30>        # default 10000
            workers: <int >= 1>       # default 1
            out: <directory>          # default: no files written
            model: {<param>: <value>} # overrides of the scenario's model record
            grids: {<condition>: [n1, n2, ...]}
            thresholds: {<name>: <value>}
        """
        if not isinstance(d, Mapping):
            raise ConfigError("config must be a mapping")
        unknown = set(d) - set(_CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "scenario" not in d:
            raise ConfigError("config needs a scenario id")
        kw = {k: d[k] for k in _CONFIG_KEYS if k in d and d[k] is not None}
        kw["thresholds"] = Thresholds.from_dict(d.get("thresholds"))
        for key in ("model", "grids"):
            if key in kw and not isinstance(kw[key], Mapping):
                raise ConfigError(f"{key} must be a mapping")
        return cls(**kw)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"unreadable config: {exc}") from exc
        return cls.from_dict(data or {})

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_yaml(Path(path).read_text())

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "paths": self.paths,
                "workers": self.workers, "out": self.out, "model": dict(self.model),
                "grids": {k: list(v) for k, v in self.grids.items()},
                "thresholds": self.thresholds.as_dict()}

    def validate(self) -> tuple[Scenario, ProcessModel]:
        """Resolve the scenario and model and check grids against budgets."""
        scenario = get_scenario(self.scenario)
        unknown = set(self.grids) - set(scenario.expectations)
        if unknown:
            raise ConfigError(f"grids for unknown conditions: {sorted(unknown)}")
        model = scenario.build(self.model)
        for check in scenario.checks:
            steps = exact_steps(check, self.grid_for(check))
            if steps and steps + model.enum_lookahead > ENUMERATION_BUDGET:
                raise ConfigError(f"{check.condition}: grid exceeds the enumeration budget "
                                  f"({steps} steps + lookahead {model.enum_lookahead} > "
                                  f"{ENUMERATION_BUDGET})")
        return scenario, model

    def grid_for(self, check: Check) -> tuple[int, ...]:
        return self.grids.get(check.condition, check.grid)


def exact_steps(check: Check, grid) -> int:
    """Enumeration steps an exact-mode check needs at its largest grid index (0 if none)."""
    top = max(grid)
    if check.op == "qmc" and check.options.get("mode") == "exact":
        return top + 2
    if check.op == "second_moment" and check.options.get("mode") == "exact":
        return top + 1
    if check.op == "subfiltration_cid":
        return top + check.options.get("horizon", 2)
    return 0


@dataclass
class ResultRecord:
    config: dict
    scenario: dict
    verdicts: list[DiagnosticVerdict]
    expectations: dict[str, str]
    hierarchy_violations: list[str]
    wall_clock: float
    version: str = __version__

    @property
    def curves(self) -> list[tuple[str, ConvergenceCurve]]:
        return [(v.condition, c) for v in self.verdicts for c in v.evidence]

    @property
    def matches(self) -> dict[str, bool]:
        got = {v.condition: str(v.decision) for v in self.verdicts}
        return {c: got.get(c) == e for c, e in self.expectations.items()}

    @property
    def exit_status(self) -> int:
        return 0 if all(self.matches.values()) else 1

    def as_dict(self) -> dict:
        return {"config": self.config, "scenario": self.scenario,
                "verdicts": [v.as_dict() for v in self.verdicts],
                "expectations": self.expectations,
                "hierarchy_violations": self.hierarchy_violations,
                "wall_clock": self.wall_clock, "version": self.version}

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRecord":
        return cls(d["config"], d["scenario"],
                   [DiagnosticVerdict.from_dict(v) for v in d["verdicts"]],
                   dict(d["expectations"]), list(d["hierarchy_violations"]),
                   float(d["wall_clock"]), d["version"])

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def _function(model: ProcessModel, name: str | None) -> TestFunction | None:
    return None if name is None else find_function(model.space, name)


def run_check(check: Check, model: ProcessModel, config: ExperimentConfig) -> DiagnosticVerdict:
    """Execute one battery entry; budget and support failures become inconclusive verdicts."""
    th = config.thresholds
    grid = config.grid_for(check)
    opts = dict(check.options)
    paths = max(MIN_PATHS, int(round(config.paths * check.paths_scale)))
    seed = rng.derive_seed(config.seed, 0, f"check:{check.condition}")
    mc = {"paths": paths, "seed": seed, "thresholds": th, "workers": config.workers}
    f = _function(model, check.f)
    cond = check.condition
    try:
        if check.op == "cauchy":
            return dg.cauchy_in_probability(model, f, grid, condition=cond, **opts, **mc)
        if check.op == "as":
            return dg.as_convergence_check(model, f, grid, condition=cond, **opts, **mc)
        if check.op == "qmc":
            curve = dg.quasi_martingale_sum(model, f, grid, **opts, **mc)
            return dg.verdict_from_curves(cond, f.name, [curve], th)
        if check.op == "wlln":
            with_gap = opts.pop("with_gap", False)
            resid, gap = dg.wlln_residual(model, f, grid, **opts, **mc)
            if not with_gap:
                gap = replace(gap, kind="info")
            return dg.verdict_from_curves(cond, f.name, [resid, gap], th)
        if check.op == "lagged_wlln":
            return dg.lagged_wlln_check(model, f, grid, condition=cond, **opts, **mc)
        if check.op == "asymp_exch":
            curves = dg.asymptotic_exchangeability_stat(model, grid, **opts, **mc)
            return dg.verdict_from_curves(cond, "block", curves, th, curves[0].note)
        if check.op == "stable":
            targets = {k: (v(f) if callable(v) else float(v))
                       for k, v in opts.pop("targets").items()}
            return dg.stable_convergence_check(model, f, opts.pop("events"), grid, targets,
                                               condition=cond, **opts, **mc)
        if check.op == "second_moment":
            curves = dg.second_moment_track(model, f, grid, **opts, **mc)
            return dg.verdict_from_curves(cond, f.name, curves, th)
        if check.op == "marginal":
            family = [find_function(model.space, n) for n in opts.pop("family")]
            return dg.marginal_limit_check(model, family, grid, condition=cond, **opts, **mc)
        if check.op == "increment":
            return dg.necessary_increment_check(model, f, grid, condition=cond, **opts, **mc)
        if check.op == "subfiltration_cid":
            if not isinstance(model, LaggedModel):
                raise UnsupportedPredictive(f"{model.id}: no lag metadata")
            return dg.subfiltration_cid_check(model, f, grid, condition=cond, thresholds=th,
                                              **opts)
    except (BudgetExceeded, UnsupportedPredictive) as exc:
        return DiagnosticVerdict(cond, check.f or "-", Decision.INCONCLUSIVE, (), th,
                                 f"{type(exc).__name__}: {exc}")
    raise ConfigError(f"unknown operation {check.op!r}")


def run_scenario(config: ExperimentConfig) -> ResultRecord:
    """Run the scenario's battery and, when ``config.out`` is set, write all files."""
    scenario, model = config.validate()
    start = time.perf_counter()
    verdicts = [run_check(c, model, config) for c in scenario.checks]
    decisions = {v.condition: v.decision for v in verdicts}
    record = ResultRecord(
        config=config.as_dict(),
        scenario={"id": scenario.id, "description": scenario.description,
                  "citation": scenario.citation, "model": model.id,
                  "model_params": model.params, "flags": model.flags.as_dict(),
                  "battery": [c.describe() for c in scenario.checks]},
        verdicts=verdicts,
        expectations={c.condition: str(c.expect) for c in scenario.checks},
        hierarchy_violations=dg.hierarchy_violations(decisions, model.flags),
        wall_clock=time.perf_counter() - start,
    )
    if config.out is not None:
        write_outputs(record, Path(config.out) / scenario.id)
    return record


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def curves_csv(record: ResultRecord) -> str:
    sid = record.scenario["id"]
    rows = []
    for cond, c in record.curves:
        for n, s, e in zip(c.n, c.statistic, c.stderr):
            rows.append((sid, f"{cond}/{c.tag}", c.f_id, n, fmt(s), fmt(e), c.method))
    return _csv_text(CURVE_COLUMNS, rows)


def verdicts_csv(record: ResultRecord) -> str:
    sid = record.scenario["id"]
    seed = record.config["seed"]
    rows = [(sid, v.condition, v.f_id, str(v.decision), v.thresholds.profile, seed)
            for v in record.verdicts]
    return _csv_text(VERDICT_COLUMNS, rows)


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", name)


def plot_series(record: ResultRecord) -> dict[str, str]:
    """File name -> content for the per-curve ``.dat`` and ``.err`` series."""
    out = {}
    for cond, c in record.curves:
        stem = _safe(f"{cond}__{c.tag}__{c.f_id}")
        out[f"{stem}.dat"] = "".join(f"{n} {fmt(s)}\n" for n, s in zip(c.n, c.statistic))
        out[f"{stem}.err"] = "".join(f"{n} {fmt(e)}\n" for n, e in zip(c.n, c.stderr))
    return out


def write_outputs(record: ResultRecord, directory: Path) -> None:
    try:
        (directory / "plot").mkdir(parents=True, exist_ok=True)
        (directory / "curves.csv").write_text(curves_csv(record))
        (directory / "verdicts.csv").write_text(verdicts_csv(record))
        (directory / "record.json").write_text(record.to_json() + "\n")
        for name, text in plot_series(record).items():
            (directory / "plot" / name).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write outputs to {directory}: {exc}") from exc


# ---------------------------------------------------------------------------
# Re-derivation from stored files
# ---------------------------------------------------------------------------


def read_curves(path: str | Path) -> dict[tuple[str, str], list[ConvergenceCurve]]:
    """Parse ``curves.csv`` into curves grouped by ``(condition, f_id)`` in file order."""
    grouped: dict[tuple[str, str, str], dict] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CURVE_COLUMNS:
            raise ConfigError(f"{path}: unexpected curve columns {reader.fieldnames}")
        for row in reader:
            key = (row["condition"], row["f_id"], row["method"])
            g = grouped.setdefault(key, {"n": [], "s": [], "e": []})
            g["n"].append(int(row["n"]))
            g["s"].append(float(row["statistic"]))
            g["e"].append(float(row["stderr"]))
    out: dict[tuple[str, str], list[ConvergenceCurve]] = {}
    for (cond_tag, f_id, method), g in grouped.items():
        cond, tag = cond_tag.split("/", 1)
        kind, _, label = tag.partition(":")
        curve = ConvergenceCurve(f_id, kind, g["n"], g["s"], g["e"], method, label)
        out.setdefault((cond, f_id), []).append(curve)
    return out


def report(directory: str | Path) -> tuple[list[dict], int]:
    """Re-derive verdicts from stored curves and thresholds; compare with expectations.

    Returns one row per stored verdict (stored decision, re-derived decision,
    expectation) and an exit status: 0 iff every re-derived decision equals
    both the stored one and the expectation.
    """
    directory = Path(directory)
    try:
        record = json.loads((directory / "record.json").read_text())
        curves = read_curves(directory / "curves.csv")
        with open(directory / "verdicts.csv", newline="") as fh:
            stored = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read results in {directory}: {exc}") from exc
    th = Thresholds.from_dict(record["config"]["thresholds"])
    rows, status = [], 0
    for v in stored:
        evidence = curves.get((v["condition"], v["f_id"]), [])
        derived = dg.combine(dg.decide_curve(c, th) for c in evidence)
        expect = record["expectations"].get(v["condition"], "")
        ok = str(derived) == v["decision"] == expect
        status |= 0 if ok else 1
        rows.append({"condition": v["condition"], "f_id": v["f_id"], "stored": v["decision"],
                     "derived": str(derived), "expected": expect, "ok": ok})
    return rows, status


def record_summary(record: ResultRecord) -> str:
    lines = [f"scenario {record.scenario['id']} ({record.scenario['citation']})"]
    for v in record.verdicts:
        exp = record.expectations.get(v.condition, "")
        mark = "ok" if str(v.decision) == exp else "MISMATCH"
        extra = f"  [{v.note}]" if v.note else ""
        lines.append(f"  {v.condition:<26}{v.f_id:<14}{str(v.decision):<14}"
                     f"expected {exp:<12}{mark}{extra}")
    for msg in record.hierarchy_violations:
        lines.append(f"  hierarchy violation: {msg}")
    lines.append(f"  wall clock {record.wall_clock:.1f} s")
    return "\n".join(lines)


def config_schema() -> dict:
    """Published config schema with defaults."""
    return {"scenario": "<scenario id>", "seed": 0, "paths": DEFAULT_PATHS, "workers": 1,
            "out": None, "model": {}, "grids": {}, "thresholds": asdict(Thresholds())}
