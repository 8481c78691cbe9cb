"""
Experiment configuration: the algorithm and benchmark registries, the
ExperimentConfig record, and parsing of flat KEY=value config files.
"""
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from dotenv import dotenv_values

from config import settings
from src.errors import ConfigError

# Available algorithms
ALGORITHMS = {
    "gEI-MS": "Gradient expected improvement, maximum-significance selection",
    "gEI-MSC": "Gradient expected improvement, maximum significance with convex point",
    "gPI-MS": "Gradient probability of improvement, maximum-significance selection",
    "gPI-MSC": "Gradient probability of improvement, maximum significance with convex point",
    "ZOBO-EI": "Zeroth-order expected improvement on the objective GP only",
    "FOBO-CC": "Per-dimension first-order baseline, softmax convex combination",
    "FOBO-MM": "Per-dimension first-order baseline, highest posterior mean"
}

# Available benchmarks
BENCHMARKS = {
    "branin": "Branin (d=2)",
    "levy4": "Levy (d=4)",
    "ackley5": "Ackley (d=5)",
    "dixonprice5": "Dixon-Price (d=5)",
    "hartmann6": "Hartmann (d=6)",
    "cosine8": "Cosine mixture (d=8)",
    "reg6d": "Bilevel ridge-regularization validation loss (d=6)"
}

ALPHA_SCHEDULES = {
    "constant": "alpha stays at its base value",
    "decay": "alpha_n = alpha / sqrt(n + 1)"
}

SEED_SAMPLINGS = {
    "uniform": "Independent uniform draws",
    "sobol": "Scrambled Sobol sequence"
}


def _default_algorithms() -> Tuple[str, ...]:
    return tuple(a.strip() for a in settings.DEFAULT_ALGORITHMS.split(",") if a.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one comparison experiment.

    Defaults follow the synthetic-function protocol: 5 initial points, k = 10
    restarts, noise variance 0.25 on values and gradients, 200 queries.
    """
    benchmark: str = settings.DEFAULT_BENCHMARK
    algorithms: Tuple[str, ...] = field(default_factory=_default_algorithms)
    budget: int = settings.DEFAULT_BUDGET
    initial_points: int = settings.DEFAULT_INITIAL_POINTS
    runs: int = settings.DEFAULT_RUNS
    restarts_k: int = settings.DEFAULT_RESTARTS_K
    noise_variance: float = settings.DEFAULT_NOISE_VARIANCE
    alpha: float = settings.DEFAULT_ALPHA
    alpha_schedule: str = settings.DEFAULT_ALPHA_SCHEDULE
    eps_grad: float = settings.DEFAULT_EPS_GRAD
    eps_pi: float = settings.DEFAULT_EPS_PI
    gp_restarts: int = settings.DEFAULT_GP_RESTARTS
    seed_sampling: str = settings.DEFAULT_SEED_SAMPLING
    master_seed: int = settings.DEFAULT_SEED
    output_dir: str = settings.DEFAULT_OUTPUT_DIR
    jobs: int = settings.DEFAULT_JOBS
    record_wall_time: bool = False

    def validate(self) -> "ExperimentConfig":
        """
        Check ranges and registry tags.

        Returns:
            The config itself, for chaining.

        Raises:
            ConfigError: Naming the first offending token.
        """
        if self.benchmark not in BENCHMARKS:
            raise ConfigError(f"Unknown benchmark: {self.benchmark}", token=self.benchmark)
        if not self.algorithms:
            raise ConfigError("At least one algorithm is required", token="algorithms")
        for tag in self.algorithms:
            if tag not in ALGORITHMS:
                raise ConfigError(f"Unknown algorithm: {tag}", token=tag)
        if self.alpha_schedule not in ALPHA_SCHEDULES:
            raise ConfigError(f"Unknown alpha schedule: {self.alpha_schedule}", token=self.alpha_schedule)
        if self.seed_sampling not in SEED_SAMPLINGS:
            raise ConfigError(f"Unknown seed sampling: {self.seed_sampling}", token=self.seed_sampling)

        checks = [
            ("budget", self.budget >= 0),
            ("initial_points", self.initial_points >= 2),
            ("runs", self.runs >= 1),
            ("restarts_k", self.restarts_k >= 1),
            ("noise_variance", self.noise_variance >= 0),
            ("eps_grad", self.eps_grad > 0),
            ("gp_restarts", self.gp_restarts >= 1),
            ("jobs", self.jobs >= 0),
        ]
        for name, ok in checks:
            if not ok:
                raise ConfigError(f"Invalid value for {name}: {getattr(self, name)}", token=name)
        return self


def _to_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _coerce(name: str, raw: Any) -> Any:
    """Convert a raw config value to the type of the ExperimentConfig field."""
    if not isinstance(raw, str):
        return tuple(raw) if name == "algorithms" else raw
    text = raw.strip()
    if name == "algorithms":
        return tuple(tag.strip() for tag in text.split(",") if tag.strip())
    kind = {f.name: f.type for f in fields(ExperimentConfig)}[name]
    try:
        if kind in (int, "int"):
            return int(text)
        if kind in (float, "float"):
            return float(text)
        if kind in (bool, "bool"):
            return _to_bool(text)
    except ValueError:
        raise ConfigError(f"Invalid value for {name}: {text}", token=text)
    return text


def load_config_file(path: str) -> Dict[str, Optional[str]]:
    """
    Read a flat KEY=value config file.

    Args:
        path: Path to the file. Comments start with '#'.

    Returns:
        Dictionary of lower-cased keys to raw string values.
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file not found: {path}", token=str(path))
    return {key.lower(): value for key, value in dotenv_values(config_path).items()}


def build_config(file_values: Optional[Dict[str, Any]] = None,
                 overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Merge defaults, config-file values and command-line overrides, in that order.

    Args:
        file_values: Values read from a config file.
        overrides: Values from command-line flags; None entries are ignored.

    Returns:
        A validated ExperimentConfig.

    Raises:
        ConfigError: On unknown keys or invalid values.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    merged: Dict[str, Any] = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            name = key.lower()
            if name not in known:
                raise ConfigError(f"Unknown config key: {key}", token=key)
            merged[name] = _coerce(name, value)
    return replace(ExperimentConfig(), **merged).validate()


def get_algorithm_description(tag: str) -> str:
    """Human-readable description of an algorithm tag."""
    return ALGORITHMS.get(tag, "")


def get_benchmark_description(tag: str) -> str:
    """Human-readable description of a benchmark tag."""
    return BENCHMARKS.get(tag, "")
