"""Multi-run experiments, aggregation and report files.

Output layout under ``out_dir``::

    <problem>_<mode>/run_<r>/trace.csv   per-generation best/mean statistics
    <problem>_<mode>/runs.csv            one row per run
    <problem>_<mode>/mean_trace.csv      trace averaged over completed runs
    <problem>_<mode>/summary.csv         machine-readable table
    <problem>_<mode>/summary.txt         the same table, aligned for reading
    <problem>_<mode>/timing.csv          wall-clock seconds per run

Everything except ``timing.csv`` is a pure function of the configuration.
"""
from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import Dataset, load_proben1, sample_f2
from .errors import ConfigurationError
from .evolution import EvolutionConfig, GenerationStats, StrategyMode, run_evolution, trained_network
from .mlp import validation_metric, weight_count

log = logging.getLogger(__name__)

PROBLEMS = ("glass1a", "f2")

HIDDEN_INIT_DEFAULTS = {"glass1a": (2, 10), "f2": (2, 15)}

# Published results of other methods, shown next to ours for comparison.
REFERENCE_ROWS = {
    "glass1a": (
        {"approach": "prechelt", "error_mean": 33, "error_std": 5, "size_mean": 350},
        {"approach": "gronroos", "error_mean": 32, "error_std": 5, "size_mean": 350},
    ),
    "f2": ({"approach": "pomares", "error_mean": 0.125, "size_mean": 6},),
}

TRACE_FIELDS = (
    "generation",
    "best_error_after",
    "best_error_before",
    "best_weights",
    "mean_error_after",
    "mean_weights",
)
SUMMARY_FIELDS = (
    "approach",
    "error_mean",
    "error_std",
    "size_mean",
    "size_std",
    "generations_mean",
    "generations_std",
)
RUN_FIELDS = ("run", "seed", "status", "test_error", "validation_error", "weight_count", "generation_of_best")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    mode: StrategyMode
    runs: int = 10
    master_seed: int = 0
    evolution: dict = field(default_factory=dict)
    out_dir: Optional[Path] = None
    data_path: Optional[Path] = None
    f2_points: int = 200
    jobs: int = 1

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigurationError(f"unknown problem {self.problem!r}; choose from {PROBLEMS}")
        object.__setattr__(self, "mode", StrategyMode(self.mode))
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be >= 1")
        if self.problem == "glass1a":
            if self.data_path is None:
                raise ConfigurationError("glass1a needs a data file")
            if not Path(self.data_path).is_file():
                raise ConfigurationError(f"data file not found: {self.data_path}")
        known = {f.name for f in fields(EvolutionConfig)} - {"mode", "master_seed"}
        unknown = set(self.evolution) - known
        if unknown:
            raise ConfigurationError(f"unknown evolution settings {sorted(unknown)}")
        # fail early on bad values rather than inside a worker
        self.evolution_config(0)

    @property
    def label(self):
        return f"{self.problem}_{self.mode.value}"

    def evolution_config(self, seed) -> EvolutionConfig:
        settings = {"hidden_init_range": HIDDEN_INIT_DEFAULTS[self.problem]}
        settings.update(self.evolution)
        return EvolutionConfig(mode=self.mode, master_seed=seed, **settings)

    def load_data(self) -> Dataset:
        if self.problem == "glass1a":
            return load_proben1(self.data_path)
        return sample_f2(self.f2_points)


@dataclass(frozen=True)
class RunSummary:
    run: int
    seed: int
    test_error: float
    validation_error: float
    weight_count: int
    generation_of_best: int
    wall_time: float = field(default=0.0, compare=False)
    failure: Optional[str] = None
    trace: tuple = field(default=(), repr=False, compare=False)

    @property
    def ok(self):
        return self.failure is None


@dataclass(frozen=True)
class AggregateReport:
    approach: str
    n_runs: int
    n_failed: int
    error_mean: float
    error_std: float
    size_mean: float
    size_std: float
    generations_mean: float
    generations_std: float
    mean_trace: tuple = field(default=(), repr=False)

    def row(self):
        return {name: getattr(self, name) for name in SUMMARY_FIELDS}


def run_seed(master_seed: int, run: int) -> int:
    """Seed of run ``run``, derived from the master seed."""
    return int(np.random.SeedSequence([master_seed, run]).generate_state(1, np.uint32)[0])


def mean_std(values):
    """Mean and sample (n - 1) standard deviation; a single value has std 0."""
    values = [float(v) for v in values]
    if not values:
        return math.nan, math.nan
    mean = math.fsum(values) / len(values)
    if len(values) == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


def aggregate(approach: str, summaries: Sequence[RunSummary]) -> AggregateReport:
    good = [s for s in summaries if s.ok]
    err = mean_std([s.test_error for s in good])
    size = mean_std([s.weight_count for s in good])
    gens = mean_std([s.generation_of_best for s in good])
    return AggregateReport(
        approach,
        len(good),
        len(summaries) - len(good),
        *err,
        *size,
        *gens,
        mean_trace=mean_trace([s.trace for s in good]),
    )


def mean_trace(traces: Sequence[Sequence[GenerationStats]]) -> tuple:
    if not traces:
        return ()
    length = min(len(t) for t in traces)
    out = []
    for g in range(length):
        rows = [t[g] for t in traces]
        before = [r.best_error_before for r in rows]
        out.append(
            GenerationStats(
                generation=rows[0].generation,
                best_error_after=float(np.mean([r.best_error_after for r in rows])),
                best_error_before=None if any(b is None for b in before) else float(np.mean(before)),
                best_weights=float(np.mean([r.best_weights for r in rows])),
                mean_error_after=float(np.mean([r.mean_error_after for r in rows])),
                mean_weights=float(np.mean([r.mean_weights for r in rows])),
            )
        )
    return tuple(out)


def _run_one(config: ExperimentConfig, run: int, data: Dataset) -> RunSummary:
    seed = run_seed(config.master_seed, run)
    started = time.perf_counter()
    try:
        evo = config.evolution_config(seed)
        result = run_evolution(evo, data)
        # Re-derive the trained network behind the winning fitness; training is deterministic.
        network = trained_network(result.best.genome, data, evo)
        test_error = validation_metric(network, data.split("test"))
        validation_error = validation_metric(network, data.split("validation"))
        if not (math.isfinite(test_error) and math.isfinite(validation_error)):
            raise FloatingPointError("non-finite error on the final network")
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        log.warning("run %d failed: %s", run, exc)
        return RunSummary(run, seed, math.nan, math.nan, 0, 0, time.perf_counter() - started, str(exc) or type(exc).__name__)
    return RunSummary(
        run,
        seed,
        test_error,
        validation_error,
        weight_count(result.best.genome),
        result.generation_of_best,
        time.perf_counter() - started,
        trace=tuple(result.trace),
    )


def _run_one_loading(args):
    config, run = args
    return _run_one(config, run, config.load_data())


def execute_runs(config: ExperimentConfig) -> list:
    """Run every seed of ``config``; results are in run-index order."""
    if config.jobs == 1 or config.runs == 1:
        data = config.load_data()
        results = (_run_one(config, r, data) for r in range(config.runs))
        return [_logged(config, s) for s in results]
    with ProcessPoolExecutor(max_workers=min(config.jobs, config.runs)) as pool:
        results = pool.map(_run_one_loading, [(config, r) for r in range(config.runs)])
        return [_logged(config, s) for s in results]


def _logged(config, summary: RunSummary) -> RunSummary:
    if summary.ok:
        log.info("%s run %d: test error %.6g, %d weights, best at generation %d (%.1fs)", config.label,
                 summary.run, summary.test_error, summary.weight_count, summary.generation_of_best, summary.wall_time)
    return summary


def run_experiment(config: ExperimentConfig):
    """Execute all runs, aggregate them, and write the report files when ``out_dir`` is set."""
    summaries = execute_runs(config)
    report = aggregate(config.mode.value, summaries)
    if config.out_dir is not None:
        write_outputs(config, summaries, report)
    return summaries, report


# ---------------------------------------------------------------------------
# file emission


def fmt(value) -> str:
    """Six significant digits, integers without a decimal point, missing values empty."""
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return ""
    return format(value, ".6g")


def emit_generation_csv(trace: Sequence[GenerationStats], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_FIELDS)
        for s in trace:
            writer.writerow(
                [
                    s.generation,
                    fmt(s.best_error_after),
                    fmt(s.best_error_before),
                    fmt(s.best_weights),
                    fmt(s.mean_error_after),
                    fmt(s.mean_weights),
                ]
            )
    return path


def read_generation_csv(path) -> list:
    with Path(path).open(newline="", encoding="ascii") as fh:
        rows = list(csv.DictReader(fh))
    return [
        GenerationStats(
            generation=int(r["generation"]),
            best_error_after=float(r["best_error_after"]),
            best_error_before=float(r["best_error_before"]) if r["best_error_before"] else None,
            best_weights=float(r["best_weights"]),
            mean_error_after=float(r["mean_error_after"]),
            mean_weights=float(r["mean_weights"]),
        )
        for r in rows
    ]


def summary_rows(report: AggregateReport, reference_rows=()) -> list:
    return [report.row()] + [dict(r) for r in reference_rows]


def format_table(rows) -> str:
    """Aligned plain-text table with ``mean +- std`` cells."""

    def cell(row, stem):
        mean, std = row.get(f"{stem}_mean"), row.get(f"{stem}_std")
        if fmt(mean) == "":
            return "-"
        return fmt(mean) if fmt(std) == "" else f"{fmt(mean)} +- {fmt(std)}"

    header = ("Approach", "Error", "Size", "Generations")
    body = [(str(r["approach"]), cell(r, "error"), cell(r, "size"), cell(r, "generations")) for r in rows]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(4)]
    sep = "-+-".join("-" * w for w in widths)
    lines = [" | ".join(h.ljust(w) for h, w in zip(header, widths)), sep]
    lines += [" | ".join(c.ljust(w) for c, w in zip(line, widths)) for line in body]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def emit_summary_table(report: AggregateReport, reference_rows, path) -> tuple:
    """Write ``summary.csv`` and ``summary.txt`` into directory ``path``; return both paths."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    rows = summary_rows(report, reference_rows)
    csv_path = path / "summary.csv"
    with csv_path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_FIELDS)
        for r in rows:
            writer.writerow([r["approach"]] + [fmt(r.get(k)) for k in SUMMARY_FIELDS[1:]])
    txt_path = path / "summary.txt"
    text = format_table(rows)
    text += f"\nruns completed: {report.n_runs}, failed: {report.n_failed}\n"
    txt_path.write_text(text, encoding="ascii")
    return csv_path, txt_path


def emit_runs_csv(summaries: Sequence[RunSummary], path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RUN_FIELDS)
        for s in summaries:
            status = "ok" if s.ok else "failed: " + s.failure.replace("\n", " ")
            writer.writerow(
                [s.run, s.seed, status, fmt(s.test_error), fmt(s.validation_error), s.weight_count, s.generation_of_best]
            )
    return path


def write_outputs(config: ExperimentConfig, summaries, report) -> Path:
    root = Path(config.out_dir) / config.label
    root.mkdir(parents=True, exist_ok=True)
    for s in summaries:
        if s.ok:
            emit_generation_csv(s.trace, root / f"run_{s.run}" / "trace.csv")
    emit_runs_csv(summaries, root / "runs.csv")
    emit_generation_csv(report.mean_trace, root / "mean_trace.csv")
    emit_summary_table(report, REFERENCE_ROWS[config.problem], root)
    with (root / "timing.csv").open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("run", "wall_time_s"))
        for s in summaries:
            writer.writerow((s.run, f"{s.wall_time:.3f}"))
    return root


def default_jobs():
    return os.cpu_count() or 1
