"""Command-line entry point: ``flatband {run,sweep,list-scenarios,validate-config}``."""
from __future__ import annotations

import argparse
import json
import sys

from .experiments import SCENARIOS, ConfigError, ExperimentConfig, run_experiment, sweep


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _load(args) -> ExperimentConfig:
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    if args.scenario:
        doc["scenario"] = args.scenario
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"{item}: --set expects key=value")
        doc[key.strip()] = _parse_value(value)
    for key in ("t_max", "dt", "seed", "shots", "output_dir", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            doc[key] = value
    if "scenario" not in doc:
        raise ConfigError("scenario: give --scenario or a config file with a scenario field")
    return ExperimentConfig.from_dict(doc)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--scenario", choices=sorted(SCENARIOS))
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config field (JSON value)")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--output", dest="output_dir")
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flatband", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment and write CSVs plus manifest.json")
    _common(run)
    sw = sub.add_parser("sweep", help="repeat an experiment over values of one config field")
    _common(sw)
    sw.add_argument("--axis", required=True, help="numeric config field, e.g. V or plaquette_amp")
    sw.add_argument("--values", required=True, help="comma-separated values")
    sub.add_parser("list-scenarios", help="print the scenario ids")
    val = sub.add_parser("validate-config", help="check a config and print it with defaults filled in")
    _common(val)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name, doc in SCENARIOS.items():
            print(f"{name:16s} {doc['description']}")
        return 0
    try:
        cfg = _load(args)
        if args.command == "validate-config":
            print(json.dumps(cfg.to_dict(), indent=2))
            return 0
        if args.command == "run":
            res = run_experiment(cfg)
            print(json.dumps(res.summary, indent=2, default=float))
            print(f"wrote {cfg.output_dir}", file=sys.stderr)
            return 0
        values = [float(v) for v in args.values.split(",") if v.strip()]
        _, text = sweep(cfg, args.axis, values, out_dir=cfg.output_dir)
        sys.stdout.write(text)
        return 0
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
