"""
First-order Bayesian optimization toolkit
Main entry point: run benchmark comparisons and plot regret curves
"""
import sys
import logging
import argparse

from config.experiment_config import build_config, load_config_file
from src.console import ConsoleReporter
from src.errors import FoboError
from src.experiment import run_experiment, resolve_jobs
from src.plotting import plot_regret


def parse_arguments(argv=None):
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(description="First-order Bayesian optimization benchmarks")
    parser.add_argument("--verbose", action="store_true", help="Log per-iteration details")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Run a benchmark comparison")
    run_parser.add_argument("--config", type=str, help="KEY=value experiment config file")
    run_parser.add_argument("--jobs", type=int, help="Worker processes (0 = all cores)")
    run_parser.add_argument("--benchmark", type=str, help="Benchmark tag")
    run_parser.add_argument("--algorithms", type=str, help="Comma-separated algorithm tags")
    run_parser.add_argument("--seed", type=int, help="Master seed")
    run_parser.add_argument("--out", type=str, help="Output directory")
    run_parser.add_argument("--budget", type=int, help="Queries after the initial design")
    run_parser.add_argument("--runs", type=int, help="Independent runs per algorithm")
    run_parser.add_argument("--k", type=int, help="Acquisition restarts")
    run_parser.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    plot_parser = commands.add_parser("plot", help="Plot summary CSVs into an SVG")
    plot_parser.add_argument("--out", type=str, default="regret.svg", help="Target SVG file")
    plot_parser.add_argument("summaries", nargs="*", help="summary.csv files")
    plot_parser.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    return parser.parse_args(argv)


def _overrides(args) -> dict:
    return {
        "jobs": args.jobs,
        "benchmark": args.benchmark,
        "algorithms": args.algorithms,
        "master_seed": args.seed,
        "output_dir": args.out,
        "budget": args.budget,
        "runs": args.runs,
        "restarts_k": args.k,
    }


def main(argv=None) -> int:
    """Run the selected command and return the exit status."""
    args = parse_arguments(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    reporter = ConsoleReporter()

    try:
        if args.command == "plot":
            out = plot_regret(args.summaries, args.out)
            reporter.success(f"Regret plot written to {out}")
            return 0

        file_values = load_config_file(args.config) if args.config else {}
        config = build_config(file_values, _overrides(args))
        reporter.banner(config)
        reporter.progress(f"Running on {resolve_jobs(config.jobs)} workers...")
        result = run_experiment(config)

        written = [str(p) for p in result.trace_files.values()]
        written += [str(result.summary_file), str(result.failures_file)]
        if result.plot_file is not None:
            written.append(str(result.plot_file))
        reporter.files(written)
        if result.failures:
            reporter.error(f"{len(result.failures)} runs failed, see {result.failures_file}")
        else:
            reporter.success("All runs completed.")
        return 0
    except FoboError as e:
        reporter.error(str(e))
        return 1


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nInterrupted.")
        sys.exit(130)
