"""
Analytic benchmark objectives with exact gradients, observation noise, the
six-dimensional regularization objective, and regret accounting.

All benchmarks are maximization problems: the standard test functions are
negated, so each ``optimum_value`` is the negated global minimum.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from config.settings import REGRET_FLOOR
from src.gp import Domain

ValueAndGrad = Tuple[float, np.ndarray]


@dataclass
class Evaluation:
    """One query record.

    Attributes:
        point: Queried point.
        value_noisy: Observed objective value.
        gradient_noisy: Observed gradient.
        value_true: Noiseless value, kept for regret only.
    """
    point: np.ndarray
    value_noisy: float
    gradient_noisy: np.ndarray
    value_true: float


@dataclass(eq=False)
class BenchmarkSpec:
    """A benchmark objective.

    Attributes:
        id: Registry tag.
        domain: Search box.
        optimum_value: Global maximum of the (negated) objective.
        optimum_point: A point attaining ``optimum_value``.
        function: Maps a point to (value, gradient).
        sense: Always "maximize".
    """
    id: str
    domain: Domain
    optimum_value: float
    optimum_point: np.ndarray
    function: Callable[[np.ndarray], ValueAndGrad]
    sense: str = "maximize"

    @property
    def dim(self) -> int:
        return self.domain.dim


@dataclass
class TraceEntry:
    iteration: int
    best_true_value: float
    immediate_regret: float
    log10_regret: float
    wall_time_ms: float


@dataclass
class RegretTrace:
    """Per-iteration record of the best true value found and its regret.

    Attributes:
        benchmark: Benchmark tag.
        entries: One entry per iteration, starting with the initial design.
        recommended_point: Point with the best noisy observation so far.
        recommended_value: Its noisy observed value.
    """
    benchmark: str
    entries: List[TraceEntry] = field(default_factory=list)
    recommended_point: Optional[np.ndarray] = None
    recommended_value: float = float("nan")

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, iteration: int, best_true_value: float, spec: BenchmarkSpec,
               wall_time_ms: float = 0.0) -> TraceEntry:
        """Append an entry computed from the best true value found so far."""
        regret = immediate_regret(best_true_value, spec)
        entry = TraceEntry(
            iteration=iteration,
            best_true_value=float(best_true_value),
            immediate_regret=regret,
            log10_regret=float(np.log10(max(regret, REGRET_FLOOR))),
            wall_time_ms=float(wall_time_ms),
        )
        self.entries.append(entry)
        return entry


# ---------------------------------------------------------------------------
# Standard test functions (minimization form) with gradients
# ---------------------------------------------------------------------------

def branin(x: np.ndarray) -> ValueAndGrad:
    a, b, c = 1.0, 5.1 / (4 * np.pi ** 2), 5.0 / np.pi
    r, s, t = 6.0, 10.0, 1.0 / (8 * np.pi)
    h = x[1] - b * x[0] ** 2 + c * x[0] - r
    value = a * h ** 2 + s * (1 - t) * np.cos(x[0]) + s
    grad = np.array([
        2 * a * h * (-2 * b * x[0] + c) - s * (1 - t) * np.sin(x[0]),
        2 * a * h,
    ])
    return float(value), grad


def levy(x: np.ndarray) -> ValueAndGrad:
    w = 1.0 + (x - 1.0) / 4.0
    value = np.sin(np.pi * w[0]) ** 2
    dw = np.zeros_like(w)
    dw[0] += np.pi * np.sin(2 * np.pi * w[0])

    head = w[:-1]
    inner = 1.0 + 10.0 * np.sin(np.pi * head + 1.0) ** 2
    value += np.sum((head - 1.0) ** 2 * inner)
    dw[:-1] += 2.0 * (head - 1.0) * inner \
        + (head - 1.0) ** 2 * 10.0 * np.pi * np.sin(2.0 * (np.pi * head + 1.0))

    last = w[-1]
    value += (last - 1.0) ** 2 * (1.0 + np.sin(2 * np.pi * last) ** 2)
    dw[-1] += 2.0 * (last - 1.0) * (1.0 + np.sin(2 * np.pi * last) ** 2) \
        + (last - 1.0) ** 2 * 2.0 * np.pi * np.sin(4 * np.pi * last)
    return float(value), dw / 4.0


def ackley(x: np.ndarray) -> ValueAndGrad:
    a, b, c = 20.0, 0.2, 2 * np.pi
    d = x.size
    r = np.sqrt(np.sum(x ** 2) / d)
    cos_mean = np.sum(np.cos(c * x)) / d
    value = -a * np.exp(-b * r) - np.exp(cos_mean) + a + np.e
    grad = np.exp(cos_mean) * c * np.sin(c * x) / d
    if r > 0:
        grad = grad + a * b * np.exp(-b * r) * x / (d * r)
    return float(value), grad


def dixon_price(x: np.ndarray) -> ValueAndGrad:
    value = (x[0] - 1.0) ** 2
    grad = np.zeros_like(x)
    grad[0] = 2.0 * (x[0] - 1.0)
    for i in range(1, x.size):
        weight = i + 1.0
        inner = 2.0 * x[i] ** 2 - x[i - 1]
        value += weight * inner ** 2
        grad[i] += weight * 2.0 * inner * 4.0 * x[i]
        grad[i - 1] -= weight * 2.0 * inner
    return float(value), grad


HARTMANN6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
HARTMANN6_A = np.array([
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
])
HARTMANN6_P = 1e-4 * np.array([
    [1312, 1696, 5569, 124, 8283, 5886],
    [2329, 4135, 8307, 3736, 1004, 9991],
    [2348, 1451, 3522, 2883, 3047, 6650],
    [4047, 8828, 8732, 5743, 1091, 381],
])


def hartmann6(x: np.ndarray) -> ValueAndGrad:
    diff = x[None, :] - HARTMANN6_P
    bumps = HARTMANN6_ALPHA * np.exp(-np.sum(HARTMANN6_A * diff ** 2, axis=1))
    value = -np.sum(bumps)
    grad = np.sum(bumps[:, None] * 2.0 * HARTMANN6_A * diff, axis=0)
    return float(value), grad


def cosine_mixture(x: np.ndarray) -> ValueAndGrad:
    value = np.sum(x ** 2) - 0.1 * np.sum(np.cos(5 * np.pi * x))
    grad = 2.0 * x + 0.5 * np.pi * np.sin(5 * np.pi * x)
    return float(value), grad


def reg6d_inner_solution(lam: np.ndarray) -> np.ndarray:
    """Minimizer of sum_i (x_i - 10 i)^2 + lambda_i x_i^2, i.e. x_i = 10 i / (1 + lambda_i)."""
    idx = np.arange(1, 7, dtype=float)
    return 10.0 * idx / (1.0 + np.asarray(lam, dtype=float))


def reg6d_optimum() -> np.ndarray:
    """Regularization weights with zero validation loss: 10 i / (i - 0.5) - 1."""
    idx = np.arange(1, 7, dtype=float)
    return 10.0 * idx / (idx - 0.5) - 1.0


def reg6d_loss(lam: np.ndarray) -> ValueAndGrad:
    """
    Negated validation loss of the bilevel regularization problem.

    The inner training problem with separable ridge penalty sum_i lambda_i x_i^2
    is solved in closed form; the outer validation loss is
    sum_i (x*_i - i + 0.5)^2.

    Args:
        lam: Regularization weights in [0, 100]^6.

    Returns:
        Tuple of (-validation loss, gradient w.r.t. lambda).
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (6,):
        raise ValueError(f"Expected 6 regularization weights, got shape {lam.shape}")
    idx = np.arange(1, 7, dtype=float)
    x_star = reg6d_inner_solution(lam)
    resid = x_star - idx + 0.5
    dx_dlam = -10.0 * idx / (1.0 + lam) ** 2
    return -float(np.sum(resid ** 2)), -2.0 * resid * dx_dlam


def _negated(function: Callable[[np.ndarray], ValueAndGrad]) -> Callable[[np.ndarray], ValueAndGrad]:
    def negated(x):
        value, grad = function(x)
        return -value, -grad
    negated.__name__ = f"negated_{function.__name__}"
    return negated


def _box(low: float, high: float, d: int) -> Domain:
    return Domain(np.full(d, low), np.full(d, high))


BENCHMARKS: Dict[str, BenchmarkSpec] = {
    "branin": BenchmarkSpec(
        "branin", Domain(np.array([-5.0, 0.0]), np.array([10.0, 15.0])),
        -0.39788735772973816, np.array([np.pi, 2.275]), _negated(branin)),
    "levy4": BenchmarkSpec(
        "levy4", _box(-10.0, 10.0, 4), 0.0, np.ones(4), _negated(levy)),
    "ackley5": BenchmarkSpec(
        "ackley5", _box(-32.768, 32.768, 5), 0.0, np.zeros(5), _negated(ackley)),
    "dixonprice5": BenchmarkSpec(
        "dixonprice5", _box(-10.0, 10.0, 5), 0.0,
        np.array([2.0 ** (-(2.0 ** i - 2.0) / 2.0 ** i) for i in range(1, 6)]),
        _negated(dixon_price)),
    "hartmann6": BenchmarkSpec(
        "hartmann6", _box(0.0, 1.0, 6), 3.3223680114155147,
        np.array([0.20168952, 0.15001069, 0.47687398, 0.27533243, 0.31165162, 0.65730054]),
        _negated(hartmann6)),
    "cosine8": BenchmarkSpec(
        "cosine8", _box(-1.0, 1.0, 8), 0.8, np.zeros(8), _negated(cosine_mixture)),
    "reg6d": BenchmarkSpec(
        "reg6d", _box(0.0, 100.0, 6), 0.0, reg6d_optimum(), reg6d_loss),
}


def get_benchmark(tag: str) -> BenchmarkSpec:
    """
    Look up a benchmark by tag.

    Raises:
        KeyError: If the tag is unknown.
    """
    if tag not in BENCHMARKS:
        raise KeyError(f"Unknown benchmark: {tag}")
    return BENCHMARKS[tag]


def evaluate(spec: BenchmarkSpec, x: np.ndarray) -> ValueAndGrad:
    """
    Noiseless value and exact gradient of a benchmark at ``x``.

    Raises:
        ValueError: If ``x`` lies outside the benchmark domain.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.dim,) or not spec.domain.contains(x, tol=1e-12):
        raise ValueError(f"Point {x} lies outside the {spec.id} domain")
    value, grad = spec.function(x)
    return float(value), np.asarray(grad, dtype=float)


def observe(spec: BenchmarkSpec, x: np.ndarray, noise_variance: float,
            rng: np.random.Generator) -> Evaluation:
    """
    Query a benchmark with additive Gaussian noise on the value and,
    independently, on each gradient component.

    Args:
        spec: Benchmark.
        x: Point in the domain.
        noise_variance: Variance of every noise draw.
        rng: Random generator owned by the run.

    Returns:
        Evaluation carrying noisy and true values.
    """
    value, grad = evaluate(spec, x)
    scale = np.sqrt(noise_variance)
    value_noise = rng.normal(0.0, scale)
    grad_noise = rng.normal(0.0, scale, size=grad.size)
    return Evaluation(
        point=np.asarray(x, dtype=float).copy(),
        value_noisy=float(value + value_noise),
        gradient_noisy=grad + grad_noise,
        value_true=value,
    )


def immediate_regret(best_true_value: float, spec: BenchmarkSpec) -> float:
    """Absolute gap between the global maximum and the best true value found."""
    return float(abs(spec.optimum_value - best_true_value))
