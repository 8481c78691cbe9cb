"""
Experiment runner: fans independent runs out over a worker pool, merges them by
run id, and writes per-algorithm traces, the summary table, the failure log and
the regret plot.
"""
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from config.experiment_config import ExperimentConfig
from config.settings import CSV_FLOAT_FORMAT
from src.bench import RegretTrace
from src.errors import EvaluationError
from src.loop import run
from src.plotting import plot_regret

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["run_id", "algorithm", "benchmark", "iteration", "best_true_value",
                 "immediate_regret", "log10_regret", "wall_time_ms", "seed"]
SUMMARY_COLUMNS = ["algorithm", "iteration", "mean_log10_regret", "stderr_log10_regret",
                   "mean_regret", "runs"]
FAILURE_COLUMNS = ["run_id", "algorithm", "seed", "error"]


@dataclass
class RunOutcome:
    """Result of one (algorithm, run) pair; exactly one of trace / error is set."""
    run_id: int
    algorithm: str
    seed: int
    trace: Optional[RegretTrace] = None
    error: Optional[str] = None


@dataclass
class ExperimentResult:
    """Paths written by ``run_experiment`` and the per-run outcomes."""
    trace_files: Dict[str, Path]
    summary_file: Path
    failures_file: Path
    plot_file: Optional[Path]
    outcomes: List[RunOutcome]

    @property
    def failures(self) -> List[RunOutcome]:
        return [o for o in self.outcomes if o.error is not None]


def run_seed(config: ExperimentConfig, run_id: int) -> int:
    """Seed of run ``run_id``; shared by every algorithm so all start from the same design."""
    return config.master_seed + run_id


def _execute(config: ExperimentConfig, algorithm: str, run_id: int) -> RunOutcome:
    seed = run_seed(config, run_id)
    try:
        trace = run(config.benchmark, config, algorithm=algorithm, seed=seed)
        return RunOutcome(run_id=run_id, algorithm=algorithm, seed=seed, trace=trace)
    except EvaluationError as e:
        done = len(e.trace) if e.trace is not None else 0
        return RunOutcome(run_id=run_id, algorithm=algorithm, seed=seed,
                          error=f"{e} (after {done} iterations)")
    except Exception as e:  # recorded in failures.csv
        return RunOutcome(run_id=run_id, algorithm=algorithm, seed=seed,
                          error=f"{type(e).__name__}: {e}")


def resolve_jobs(jobs: int) -> int:
    """Worker count; 0 means every available core."""
    return jobs if jobs > 0 else (os.cpu_count() or 1)


def run_all(config: ExperimentConfig) -> List[RunOutcome]:
    """
    Execute every (algorithm, run) pair of the config.

    Returns:
        Outcomes sorted by (algorithm, run_id), independent of scheduling order.
    """
    tasks = [(algorithm, run_id) for algorithm in config.algorithms for run_id in range(config.runs)]
    n_jobs = min(resolve_jobs(config.jobs), len(tasks))
    logger.debug("Running %d tasks on %d workers", len(tasks), n_jobs)
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(_execute)(config, algorithm, run_id) for algorithm, run_id in tasks
    )
    for outcome in outcomes:
        if outcome.error is not None:
            logger.warning("Run %d of %s failed: %s", outcome.run_id, outcome.algorithm, outcome.error)
    return sorted(outcomes, key=lambda o: (o.algorithm, o.run_id))


def trace_frame(outcomes: List[RunOutcome], benchmark: str) -> pd.DataFrame:
    """One row per (run, iteration) of the successful outcomes, iteration 0 included."""
    rows = []
    for outcome in outcomes:
        if outcome.trace is None:
            continue
        for entry in outcome.trace.entries:
            rows.append({
                "run_id": outcome.run_id,
                "algorithm": outcome.algorithm,
                "benchmark": benchmark,
                "iteration": entry.iteration,
                "best_true_value": entry.best_true_value,
                "immediate_regret": entry.immediate_regret,
                "log10_regret": entry.log10_regret,
                "wall_time_ms": entry.wall_time_ms,
                "seed": outcome.seed,
            })
    frame = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    return frame.sort_values(["algorithm", "run_id", "iteration"], kind="mergesort").reset_index(drop=True)


def summarize(traces: pd.DataFrame) -> pd.DataFrame:
    """
    Per-algorithm, per-iteration mean and standard error of log10 regret.

    The standard error uses the sample standard deviation (ddof=1) and is 0
    for a single run.
    """
    if traces.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    grouped = traces.groupby(["algorithm", "iteration"], sort=True)
    summary = grouped.agg(
        mean_log10_regret=("log10_regret", "mean"),
        std_log10_regret=("log10_regret", "std"),
        mean_regret=("immediate_regret", "mean"),
        runs=("run_id", "count"),
    ).reset_index()
    summary["stderr_log10_regret"] = (summary["std_log10_regret"].fillna(0.0)
                                      / np.sqrt(summary["runs"]))
    return summary[SUMMARY_COLUMNS]


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return path


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """
    Run the whole comparison and write its files into ``config.output_dir``.

    Writes ``<benchmark>_<algorithm>.csv`` per algorithm, ``summary.csv``,
    ``failures.csv`` (header only when every run succeeded) and ``regret.svg``.
    Runs that fail are logged and listed in ``failures.csv``; the others still
    complete. Identical configs produce byte-identical CSVs.

    Args:
        config: Validated experiment settings.

    Returns:
        ExperimentResult with the written paths and per-run outcomes.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outcomes = run_all(config)
    traces = trace_frame(outcomes, config.benchmark)

    trace_files = {}
    for algorithm in config.algorithms:
        rows = traces[traces["algorithm"] == algorithm].reset_index(drop=True)
        trace_files[algorithm] = _write_csv(rows, out_dir / f"{config.benchmark}_{algorithm}.csv")

    summary_file = _write_csv(summarize(traces), out_dir / "summary.csv")
    failures = pd.DataFrame([{"run_id": o.run_id, "algorithm": o.algorithm, "seed": o.seed, "error": o.error}
                             for o in outcomes if o.error is not None], columns=FAILURE_COLUMNS)
    failures_file = _write_csv(failures, out_dir / "failures.csv")

    plot_file = None
    if not traces.empty:
        plot_file = plot_regret([str(summary_file)], str(out_dir / "regret.svg"))
    else:
        logger.warning("Every run failed; no regret plot written")

    return ExperimentResult(trace_files=trace_files, summary_file=summary_file,
                            failures_file=failures_file, plot_file=plot_file, outcomes=outcomes)
