"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 config or domain error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .fuzzy import ConfigurationError, DomainError, FuzzyEngine, load_engine
from .simulation import (
    ScenarioConfig,
    exp_chord,
    exp_detection,
    exp_rms_sweep,
    exp_surface,
    exp_table2,
    exp_table3,
    run_replicas,
    run_scenario,
    save_report,
    write_csv,
    write_manifest,
)

EXPERIMENTS = ("table2", "table3", "rms", "detect", "chord", "surface")

HEADERS = {
    "table2": ["p1", "p2", "p3", "computed", "label", "published", "published_text"],
    "table3": ["x", "fr_trust", "baseline"],
    "rms": ["alpha", "malicious_fraction", "rms_mean", "rms_std", "seeds"],
    "detect": ["replica", "precision", "recall", "baseline_precision", "baseline_recall",
               "weighted_baseline_precision", "weighted_baseline_recall"],
    "chord": ["n", "mean_hops", "dht_messages", "coordinator_messages", "log2_n", "exhaustive"],
    "surface": ["p1", "p2", "p3", "crisp"],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="frtrust", description="Fuzzy reputation trust: evaluate the engine, run scenarios and experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fis = sub.add_parser("fis-eval", help="evaluate the fuzzy engine on three scores")
    fis.add_argument("scores", nargs=3, type=float, metavar="P")
    fis.add_argument("--engine", "--config", dest="engine", type=Path, help="engine JSON (partition and rules)")

    run = sub.add_parser("run", help="run one scenario and write CSV plus manifest")
    run.add_argument("scenario", nargs="?", type=Path)
    run.add_argument("--config", type=Path)
    run.add_argument("--out", type=Path, default=Path("out"))
    run.add_argument("--seed", type=int)
    run.add_argument("--replicas", type=int, default=1)
    run.add_argument("--workers", type=int, default=1)

    exp = sub.add_parser("experiment", help="run a named evaluation experiment")
    exp.add_argument("name", help="one of: " + ", ".join(EXPERIMENTS))
    exp.add_argument("--config", type=Path, help="base scenario JSON for rms/detect")
    exp.add_argument("--out", type=Path, help="output directory (CSV goes to stdout when omitted)")
    exp.add_argument("--seed", type=int)
    exp.add_argument("--replicas", type=int, default=10)
    exp.add_argument("--workers", type=int, default=1)
    exp.add_argument("--engine", type=Path)
    exp.add_argument("--alphas", type=_floats, default=[0.25, 0.5, 0.75])
    exp.add_argument("--fractions", type=_floats, default=[0.0, 0.1, 0.2, 0.3, 0.4])
    exp.add_argument("--n", type=_ints, default=[16, 64, 256])
    exp.add_argument("--fixed", default="p3=0.5", help="held input for surface, e.g. p3=0.5")
    exp.add_argument("--step", type=float, default=0.05)
    exp.add_argument("--y", type=float, default=0.2, help="fixed Y term for table3")
    return p


def _load_config(path: Path | None, seed: int | None) -> ScenarioConfig:
    config = ScenarioConfig.load(path) if path else ScenarioConfig()
    return replace(config, seed=seed) if seed is not None else config


def _cmd_fis_eval(args) -> int:
    engine = load_engine(args.engine) if args.engine else FuzzyEngine()
    print(engine.evaluate(args.scores))
    return 0


def _cmd_run(args) -> int:
    path = args.config or args.scenario
    if path is None:
        raise UsageError("run needs a scenario config path")
    config = _load_config(path, args.seed)
    if args.replicas < 1:
        raise UsageError("--replicas must be at least 1")
    artifacts = []
    if args.replicas == 1:
        artifacts += save_report(run_scenario(config), args.out)
    else:
        for i, report in enumerate(run_replicas(config, args.replicas, args.workers)):
            artifacts += save_report(report, args.out / f"replica_{i:03d}")
    write_manifest(args.out / "manifest.json", config.to_dict(), config.seed, artifacts)
    for a in artifacts:
        print(a)
    return 0


def _cmd_experiment(args) -> int:
    name = args.name
    if name not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {name!r}; valid: {', '.join(EXPERIMENTS)}")
    engine = load_engine(args.engine) if args.engine else None
    config = _load_config(args.config, args.seed)
    manifest_cfg: dict = {"experiment": name}
    if name == "table2":
        rows = exp_table2(engine=engine)
    elif name == "table3":
        rows = exp_table3(y_fixed=args.y, engine=engine)
        manifest_cfg["y"] = args.y
    elif name == "rms":
        rows = exp_rms_sweep(args.alphas, args.fractions, config, args.replicas, args.workers)
        manifest_cfg.update(base=config.to_dict(), alphas=args.alphas, fractions=args.fractions,
                            replicas=args.replicas)
    elif name == "detect":
        rows = exp_detection(config, args.replicas, args.workers)
        manifest_cfg.update(base=config.to_dict(), replicas=args.replicas)
    elif name == "chord":
        seed = args.seed if args.seed is not None else 0
        rows = exp_chord(args.n, seed=seed)
        manifest_cfg.update(n=args.n)
    else:
        key, _, value = args.fixed.partition("=")
        if key not in ("p1", "p2", "p3") or not value:
            raise UsageError("--fixed must look like p3=0.5")
        rows = exp_surface(int(key[1]) - 1, float(value), args.step, engine)
        manifest_cfg.update(fixed=args.fixed, step=args.step)

    if args.out is None:
        import csv
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(HEADERS[name])
        for row in rows:
            w.writerow(["" if row.get(h) is None else (repr(row[h]) if isinstance(row[h], float) else row[h])
                        for h in HEADERS[name]])
        return 0
    path = write_csv(args.out / f"{name}.csv", rows, HEADERS[name])
    write_manifest(args.out / f"{name}.manifest.json", manifest_cfg, args.seed, [path])
    print(path)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        handler = {"fis-eval": _cmd_fis_eval, "run": _cmd_run, "experiment": _cmd_experiment}[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"frtrust: error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, ConfigurationError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"frtrust: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
