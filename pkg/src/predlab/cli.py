"""Command line: ``predlab list | run | oracle | report``."""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from predlab.errors import ConfigError, ConditioningError
from predlab.harness import ExperimentConfig, record_summary, report, run_scenario
from predlab.measure import find_function, standard_test_suite
from predlab.predictive import enumerate_predictive
from predlab.scenarios import format_table, get_scenario, list_scenarios


def parse_prefix(text: str, dim: int) -> list:
    """``"1,0,1"`` for scalar spaces; ``"1:1:0,1:2:1"`` for product spaces."""
    items = [t.strip() for t in text.split(",") if t.strip()]
    if dim == 1:
        return [float(t) for t in items]
    out = []
    for t in items:
        parts = [float(p) for p in t.split(":")]
        if len(parts) != dim:
            raise ConfigError(f"prefix item {t!r} needs {dim} ':'-separated components")
        out.append(tuple(parts))
    return out


def _cmd_list(args) -> int:
    rows = list_scenarios()
    print(json.dumps(rows, indent=1) if args.json else format_table(rows))
    return 0


def _cmd_run(args) -> int:
    data = {}
    if args.config:
        data = ExperimentConfig.load(args.config).as_dict()
        if args.scenario is not None and data.get("scenario") not in (None, args.scenario):
            raise ConfigError(f"config is for scenario {data['scenario']!r}, not {args.scenario!r}")
    if args.scenario is not None:
        data["scenario"] = args.scenario
    if "scenario" not in data:
        raise ConfigError("give a scenario id or a config that names one")
    for key in ("seed", "paths", "out", "workers"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    data.setdefault("out", "out")
    record = run_scenario(ExperimentConfig.from_dict(data))
    print(record_summary(record))
    return record.exit_status


def _cmd_oracle(args) -> int:
    model = get_scenario(args.scenario).build()
    prefix = parse_prefix(args.prefix, model.space.dim)
    fs = [find_function(model.space, args.f)] if args.f else standard_test_suite(model.space)
    for f in fs:
        value = enumerate_predictive(model, prefix, f)
        print(f"{f.name}\t{value.value:.17g}\t{value.method}")
    return 0


def _cmd_report(args) -> int:
    rows, status = report(args.directory)
    for r in rows:
        mark = "ok" if r["ok"] else "MISMATCH"
        print(f"{r['condition']:<26}{r['f_id']:<14}stored {r['stored']:<13}"
              f"derived {r['derived']:<13}expected {r['expected']:<12}{mark}")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="predlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("list", help="print the scenario registry")
    s.add_argument("--json", action="store_true", help="machine-readable output")
    s.set_defaults(func=_cmd_list)

    s = sub.add_parser("run", help="run a scenario's diagnostic battery")
    s.add_argument("scenario", nargs="?", help="scenario id (optional with --config)")
    s.add_argument("--config", help="YAML config file")
    s.add_argument("--seed", type=int)
    s.add_argument("--paths", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--out", help="output directory (default: out)")
    s.set_defaults(func=_cmd_run)

    s = sub.add_parser("oracle", help="exact predictive by enumeration after a prefix")
    s.add_argument("scenario")
    s.add_argument("--prefix", required=True, help="comma-separated observations")
    s.add_argument("--f", help="test function name (default: the standard suite)")
    s.set_defaults(func=_cmd_oracle)

    s = sub.add_parser("report", help="re-derive verdicts from stored curves")
    s.add_argument("directory")
    s.set_defaults(func=_cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConditioningError, KeyError, ValueError, NotImplementedError,
            RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
