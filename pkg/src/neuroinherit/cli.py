"""Command-line entry point: ``neuroinherit --problem f2 --mode lamarckian ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import NeuroInheritError
from .evolution import MODES
from .harness import HIDDEN_INIT_DEFAULTS, PROBLEMS, REFERENCE_ROWS, ExperimentConfig, default_jobs, format_table, run_experiment, summary_rows

# config-file keys that map onto command-line options
TOP_LEVEL_KEYS = {
    "problem": str,
    "mode": str,
    "data": str,
    "runs": int,
    "seed": int,
    "out": str,
    "jobs": int,
    "f2_points": int,
}
# config-file keys forwarded to the evolution engine
EVOLUTION_KEYS = {
    "generations": int,
    "population": int,
    "epochs": int,
    "elite_fraction": float,
    "hidden_cap": int,
    "hidden_init_lo": int,
    "hidden_init_hi": int,
    "equality_tolerance": float,
    "max_growth_factor": float,
    "weight_decay": float,
    "mutation_rate": float,
    "mutation_sigma": float,
    "lr_mutation_rate": float,
    "lr_mutation_sigma": float,
}


class UsageError(Exception):
    pass


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, _, value = (part.strip() for part in line.partition("="))
        key = key.replace("-", "_")
        kind = TOP_LEVEL_KEYS.get(key) or EVOLUTION_KEYS.get(key)
        if kind is None:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = kind(value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: invalid value {value!r} for {key}") from None
    return values


def build_parser():
    p = argparse.ArgumentParser(
        prog="neuroinherit",
        description="Evolve one-hidden-layer MLPs under darwinian, lamarckian or baldwinian inheritance.",
    )
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--data", help="Proben1 .dt file (required for glass1a)")
    p.add_argument("--runs", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--population", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--config", help="key=value settings file; command-line flags take precedence")
    p.add_argument("--jobs", type=int, help="parallel worker processes; 0 means one per CPU")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve(args) -> ExperimentConfig:
    settings = read_config_file(args.config) if args.config else {}
    for key in ("problem", "mode", "data", "runs", "seed", "out", "jobs", "generations", "population", "epochs"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = value

    problem = settings.get("problem")
    if problem is None:
        raise UsageError("--problem is required")
    if problem not in PROBLEMS:
        raise UsageError(f"invalid problem {problem!r} (choose from {', '.join(PROBLEMS)})")
    mode = settings.get("mode")
    if mode is None:
        raise UsageError("--mode is required")
    if mode not in MODES:
        raise UsageError(f"invalid mode {mode!r} (choose from {', '.join(MODES)})")
    data = settings.get("data")
    if problem == "glass1a":
        if data is None:
            raise UsageError("--data is required for --problem glass1a")
        if not Path(data).is_file():
            raise UsageError(f"--data: file not found: {data}")

    evolution = {}
    renames = {"population": "population_size"}
    for key in EVOLUTION_KEYS:
        if key in settings and not key.startswith("hidden_init_"):
            evolution[renames.get(key, key)] = settings[key]
    if "hidden_init_lo" in settings or "hidden_init_hi" in settings:
        lo, hi = HIDDEN_INIT_DEFAULTS[problem]
        evolution["hidden_init_range"] = (settings.get("hidden_init_lo", lo), settings.get("hidden_init_hi", hi))

    jobs = settings.get("jobs", 1)
    if jobs == 0:
        jobs = default_jobs()
    try:
        return ExperimentConfig(
            problem=problem,
            mode=mode,
            runs=settings.get("runs", 10),
            master_seed=settings.get("seed", 0),
            evolution=evolution,
            out_dir=Path(settings.get("out", "out")),
            data_path=Path(data) if data else None,
            f2_points=settings.get("f2_points", 200),
            jobs=jobs,
        )
    except (NeuroInheritError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = resolve(args)
    except UsageError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    try:
        summaries, report = run_experiment(config)
    except OSError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(format_table(summary_rows(report, REFERENCE_ROWS[config.problem])))
    print(f"runs completed: {report.n_runs}, failed: {report.n_failed}")
    if report.n_runs == 0:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
