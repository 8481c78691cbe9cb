"""
Unit tests for the experiment runner, the regret plot and the command line.
"""

import io
import tempfile
import unittest
from unittest.mock import patch
import sys
from pathlib import Path

import numpy as np
import pandas as pd

# Add the project root to Python path
project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

import main as cli
from config.experiment_config import ExperimentConfig
from src import experiment
from src.errors import EvaluationError, PlotError
from src.experiment import run_experiment, summarize, TRACE_COLUMNS
from src.plotting import plot_regret, regret_figure


def small_config(out_dir: str, **changes) -> ExperimentConfig:
    values = dict(benchmark="branin", algorithms=("gEI-MS",), budget=3, initial_points=4,
                  runs=2, restarts_k=2, gp_restarts=2, jobs=1, output_dir=out_dir)
    values.update(changes)
    return ExperimentConfig(**values)


class TestRunExperiment(unittest.TestCase):
    """Test cases for run_experiment."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_row_count_and_files(self):
        result = run_experiment(small_config(str(self.out)))
        traces = pd.read_csv(self.out / "branin_gEI-MS.csv")
        self.assertEqual(len(traces), 8)
        self.assertEqual(list(traces.columns), TRACE_COLUMNS)
        self.assertEqual(sorted(traces["seed"].unique().tolist()), [0, 1])
        self.assertTrue((self.out / "summary.csv").is_file())
        self.assertTrue((self.out / "regret.svg").is_file())
        self.assertEqual(len(pd.read_csv(self.out / "failures.csv")), 0)
        self.assertEqual(result.failures, [])

    def test_rows_sorted(self):
        run_experiment(small_config(str(self.out), algorithms=("ZOBO-EI", "gEI-MS"), budget=1))
        for name in ("branin_ZOBO-EI.csv", "branin_gEI-MS.csv"):
            traces = pd.read_csv(self.out / name)
            ordered = traces.sort_values(["algorithm", "run_id", "iteration"]).reset_index(drop=True)
            pd.testing.assert_frame_equal(traces, ordered)

    def test_identical_config_gives_identical_bytes(self):
        first, second = self.out / "a", self.out / "b"
        run_experiment(small_config(str(first)))
        run_experiment(small_config(str(second)))
        for name in ("summary.csv", "branin_gEI-MS.csv"):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes())

    def test_summary_matches_recomputation(self):
        run_experiment(small_config(str(self.out)))
        traces = pd.read_csv(self.out / "branin_gEI-MS.csv")
        summary = pd.read_csv(self.out / "summary.csv")
        for _, row in summary.iterrows():
            values = traces.loc[traces["iteration"] == row["iteration"], "log10_regret"].to_numpy()
            self.assertAlmostEqual(row["mean_log10_regret"], values.mean(), delta=1e-12)
            self.assertAlmostEqual(row["stderr_log10_regret"],
                                   values.std(ddof=1) / np.sqrt(values.size), delta=1e-12)
            self.assertEqual(row["runs"], 2)

    def test_failed_run_is_recorded(self):
        real_run = experiment.run

        def flaky(benchmark, config, algorithm=None, seed=None):
            if seed == 1:
                raise EvaluationError("simulator crashed", trace=None)
            return real_run(benchmark, config, algorithm=algorithm, seed=seed)

        with patch("src.experiment.run", side_effect=flaky):
            result = run_experiment(small_config(str(self.out)))
        failures = pd.read_csv(self.out / "failures.csv")
        self.assertEqual(failures["run_id"].tolist(), [1])
        self.assertIn("simulator crashed", failures["error"][0])
        self.assertEqual(len(pd.read_csv(self.out / "branin_gEI-MS.csv")), 4)
        self.assertEqual(len(result.failures), 1)

    def test_unexpected_exception_is_recorded(self):
        real_run = experiment.run

        def broken(benchmark, config, algorithm=None, seed=None):
            if seed == 0:
                raise RuntimeError("solver diverged")
            return real_run(benchmark, config, algorithm=algorithm, seed=seed)

        with patch("src.experiment.run", side_effect=broken):
            result = run_experiment(small_config(str(self.out)))
        failures = pd.read_csv(self.out / "failures.csv")
        self.assertEqual(failures["run_id"].tolist(), [0])
        self.assertEqual(failures["error"][0], "RuntimeError: solver diverged")
        self.assertEqual(sorted(pd.read_csv(self.out / "branin_gEI-MS.csv")["run_id"].unique()), [1])
        self.assertEqual(len(result.failures), 1)

    def test_summary_of_single_run_has_zero_stderr(self):
        traces = pd.DataFrame({"algorithm": ["a", "a"], "iteration": [0, 1], "run_id": [0, 0],
                               "log10_regret": [0.5, -0.5], "immediate_regret": [3.0, 0.3]})
        summary = summarize(traces)
        self.assertEqual(summary["stderr_log10_regret"].tolist(), [0.0, 0.0])


class TestPlotRegret(unittest.TestCase):
    """Test cases for the regret plot."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write_summary(self, name, algorithm, iterations, regret=1.0):
        frame = pd.DataFrame({
            "algorithm": algorithm,
            "iteration": list(iterations),
            "mean_log10_regret": np.log10(regret),
            "stderr_log10_regret": 0.0,
            "mean_regret": regret,
            "runs": 1,
        })
        path = self.out / name
        frame.to_csv(path, index=False)
        return str(path)

    def test_constant_regret_is_flat_at_zero(self):
        path = self.write_summary("s.csv", "gEI-MS", range(5))
        fig = regret_figure([pd.read_csv(path)])
        lines = fig.axes[0].get_lines()
        self.assertEqual(len(lines), 1)
        np.testing.assert_array_equal(lines[0].get_ydata(), np.zeros(5))
        out = plot_regret([path], str(self.out / "regret.svg"))
        self.assertIn("<svg", out.read_text())

    def test_two_summaries_two_lines(self):
        paths = [self.write_summary("a.csv", "gEI-MS", range(4)),
                 self.write_summary("b.csv", "gPI-MS", range(4), regret=0.1)]
        fig = regret_figure([pd.read_csv(p) for p in paths])
        self.assertEqual(len(fig.axes[0].get_lines()), 2)
        labels = [t.get_text() for t in fig.axes[0].get_legend().get_texts()]
        self.assertEqual(labels, ["gEI-MS", "gPI-MS"])

    def test_shared_algorithm_labels_name_their_source(self):
        (self.out / "base").mkdir()
        (self.out / "tuned").mkdir()
        paths = [self.write_summary("base/summary.csv", "gEI-MS", range(4)),
                 self.write_summary("tuned/summary.csv", "gEI-MS", range(4), regret=0.1)]
        sources = [str(Path(p).with_suffix("").as_posix()) for p in paths]
        fig = regret_figure([pd.read_csv(p) for p in paths], sources)
        labels = [t.get_text() for t in fig.axes[0].get_legend().get_texts()]
        self.assertEqual(len(set(labels)), 2)
        self.assertTrue(labels[0].endswith("base/summary)"))
        self.assertTrue(labels[1].endswith("tuned/summary)"))
        one = regret_figure([pd.read_csv(paths[0])], sources[:1])
        self.assertEqual([t.get_text() for t in one.axes[0].get_legend().get_texts()], ["gEI-MS"])

    def test_empty_list_writes_nothing(self):
        target = self.out / "regret.svg"
        with self.assertRaises(PlotError):
            plot_regret([], str(target))
        self.assertFalse(target.exists())

    def test_mismatched_grids(self):
        a = self.write_summary("a.csv", "gEI-MS", range(4))
        b = self.write_summary("b.csv", "gPI-MS", range(6))
        target = self.out / "regret.svg"
        with self.assertRaises(PlotError) as ctx:
            plot_regret([a, b], str(target))
        self.assertIn(b, ctx.exception.files)
        self.assertIn(b, str(ctx.exception))
        self.assertFalse(target.exists())


class TestCommandLine(unittest.TestCase):
    """Test cases for main.py."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_unknown_algorithm_exits_nonzero(self):
        with patch("sys.stdout", new_callable=io.StringIO) as stdout:
            status = cli.main(["run", "--algorithms", "gXY", "--out", str(self.out)])
        self.assertEqual(status, 1)
        self.assertIn("gXY", stdout.getvalue())

    def test_config_file_and_overrides(self):
        config_file = self.out / "exp.cfg"
        config_file.write_text("# small run\nBENCHMARK=branin\nALGORITHMS=gEI-MS\nBUDGET=5\n"
                               "INITIAL_POINTS=4\nRUNS=1\nRESTARTS_K=2\nGP_RESTARTS=2\n")
        with patch("main.run_experiment") as run_mock, patch("sys.stdout", new_callable=io.StringIO):
            run_mock.return_value.trace_files = {}
            run_mock.return_value.plot_file = None
            run_mock.return_value.failures = []
            status = cli.main(["run", "--config", str(config_file), "--budget", "2",
                               "--jobs", "1", "--out", str(self.out)])
        self.assertEqual(status, 0)
        config = run_mock.call_args[0][0]
        self.assertEqual(config.budget, 2)
        self.assertEqual(config.restarts_k, 2)
        self.assertEqual(config.output_dir, str(self.out))

    def test_plot_command(self):
        frame = pd.DataFrame({"algorithm": "gEI-MS", "iteration": [0, 1], "mean_log10_regret": [0.0, -1.0]})
        summary = self.out / "summary.csv"
        frame.to_csv(summary, index=False)
        with patch("sys.stdout", new_callable=io.StringIO):
            status = cli.main(["plot", "--out", str(self.out / "r.svg"), str(summary)])
        self.assertEqual(status, 0)
        self.assertTrue((self.out / "r.svg").is_file())

    def test_plot_without_files_fails(self):
        with patch("sys.stdout", new_callable=io.StringIO):
            self.assertEqual(cli.main(["plot", "--out", str(self.out / "r.svg")]), 1)


if __name__ == "__main__":
    unittest.main()
