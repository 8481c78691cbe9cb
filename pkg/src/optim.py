"""
Box-bounded continuous optimization with multi-restart support.

Every search runs on the unit box the domain maps onto, with scipy's L-BFGS-B
doing the projected quasi-Newton steps. Objectives may supply their own
gradient (``jac=True``, the objective returns ``(value, gradient)``); otherwise
central finite differences on the unit box are used.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, TYPE_CHECKING

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from config.settings import (
    OPTIMIZER_GTOL, OPTIMIZER_MAX_ITER, FINITE_DIFF_STEP, DUPLICATE_TOLERANCE
)
from src.errors import FoboError, OptimizationError

if TYPE_CHECKING:
    from src.gp import Domain

logger = logging.getLogger(__name__)

SENSES = ("minimize", "maximize")


@dataclass
class OptResult:
    """Outcome of one local search.

    Attributes:
        point: Best point found, inside the domain box.
        value: Objective value at ``point``.
        seed_index: Index of the seed the search started from.
        converged: Whether the optimizer reported convergence.
    """
    point: np.ndarray
    value: float
    seed_index: int
    converged: bool


def _sign(sense: str) -> float:
    if sense not in SENSES:
        raise ValueError(f"Unknown optimization sense: {sense}")
    return 1.0 if sense == "minimize" else -1.0


def _value_of(objective: Callable, x: np.ndarray, jac: bool) -> float:
    out = objective(x)
    return float(out[0]) if jac else float(out)


def local_optimize(objective: Callable,
                   start: Sequence[float],
                   domain: "Domain",
                   sense: str = "minimize",
                   jac: bool = False,
                   seed_index: int = 0) -> OptResult:
    """
    Run one bounded quasi-Newton search from ``start``.

    Args:
        objective: Function of a d-point. Returns a float, or ``(float, gradient)``
            when ``jac`` is True.
        start: Starting point inside the domain.
        domain: Search box.
        sense: "minimize" or "maximize".
        jac: Whether the objective supplies its gradient.
        seed_index: Index recorded on the result.

    Returns:
        OptResult whose value is never worse than the value at ``start``.

    Raises:
        OptimizationError: If the objective is not finite at ``start``.
        ValueError: If ``start`` lies outside the domain.
    """
    sign = _sign(sense)
    start = np.asarray(start, dtype=float)
    if not domain.contains(start, tol=1e-9):
        raise ValueError(f"Start point {start} lies outside the domain")
    start = domain.clip(start)
    span = domain.span

    def unit_objective(u):
        x = domain.from_unit(u)
        if jac:
            value, grad = objective(x)
            return sign * float(value), sign * np.asarray(grad, dtype=float) * span
        return sign * float(objective(x))

    start_value = _value_of(objective, start, jac)
    if not np.isfinite(start_value):
        raise OptimizationError(f"Objective is not finite at start point {start}: {start_value}")

    with warnings.catch_warnings():
        # Line searches probing the box edges can overflow harmlessly
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(
            unit_objective,
            domain.to_unit(start),
            jac=True if jac else "3-point",
            method="L-BFGS-B",
            bounds=[(0.0, 1.0)] * domain.dim,
            options={
                "gtol": OPTIMIZER_GTOL,
                "maxiter": OPTIMIZER_MAX_ITER,
                "finite_diff_rel_step": FINITE_DIFF_STEP,
            },
        )

    point = domain.clip(domain.from_unit(np.clip(res.x, 0.0, 1.0)))
    value = _value_of(objective, point, jac)
    if not np.isfinite(value) or sign * value > sign * start_value:
        return OptResult(point=start, value=start_value, seed_index=seed_index, converged=False)
    return OptResult(point=point, value=value, seed_index=seed_index, converged=bool(res.success))


def seed_points(domain: "Domain", k: int, rng: np.random.Generator,
                sampling: str = "uniform") -> np.ndarray:
    """
    Draw ``k`` starting points in the domain.

    Args:
        domain: Search box.
        k: Number of points.
        rng: Random generator owned by the caller.
        sampling: "uniform" or "sobol" (scrambled, low-discrepancy).

    Returns:
        Array of shape (k, d).
    """
    if k < 1:
        raise ValueError(f"Need at least one seed point, got k={k}")
    if sampling == "uniform":
        unit = rng.random((k, domain.dim))
    elif sampling == "sobol":
        sampler = qmc.Sobol(d=domain.dim, scramble=True, seed=int(rng.integers(2**32)))
        with warnings.catch_warnings():
            # Non-power-of-two sample sizes only lose the balance guarantee
            warnings.simplefilter("ignore", UserWarning)
            unit = sampler.random(k)
    else:
        raise ValueError(f"Unknown seed sampling: {sampling}")
    return domain.from_unit(unit)


def _is_duplicate(point: np.ndarray, avoid: Optional[np.ndarray], domain: "Domain") -> bool:
    if avoid is None or len(avoid) == 0:
        return False
    gaps = np.linalg.norm(domain.to_unit(avoid) - domain.to_unit(point), axis=1)
    return bool(np.min(gaps) < DUPLICATE_TOLERANCE)


def _guarded_search(objective, start, domain, sense, jac, seed_index) -> OptResult:
    try:
        return local_optimize(objective, start, domain, sense=sense, jac=jac, seed_index=seed_index)
    except (FoboError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
        logger.warning("Seed %d failed: %s", seed_index, e)
        try:
            value = _value_of(objective, start, jac)
        except (FoboError, ArithmeticError, ValueError, np.linalg.LinAlgError):
            value = float("nan")
        return OptResult(point=np.asarray(start, dtype=float), value=value,
                         seed_index=seed_index, converged=False)


def multistart_optimize(objective: Callable,
                        domain: "Domain",
                        k: int,
                        rng: np.random.Generator,
                        sense: str = "minimize",
                        jac: bool = False,
                        sampling: str = "uniform",
                        avoid: Optional[np.ndarray] = None) -> List[OptResult]:
    """
    Restart a local search from ``k`` random seeds.

    A seed whose search fails yields its start point marked unconverged, so the
    result always holds exactly ``k`` entries in seed order. A result landing on
    an already-queried point (``avoid``) is retried once from a fresh seed and
    accepted as-is if it lands on a queried point again.

    Args:
        objective: Function of a d-point (see ``local_optimize``).
        domain: Search box.
        k: Number of restarts.
        rng: Random generator owned by the caller.
        sense: "minimize" or "maximize".
        jac: Whether the objective supplies its gradient.
        sampling: Seed sampling scheme, "uniform" or "sobol".
        avoid: Already-queried points, shape (n, d).

    Returns:
        List of ``k`` OptResult.
    """
    _sign(sense)
    seeds = seed_points(domain, k, rng, sampling)
    if avoid is not None:
        avoid = np.atleast_2d(np.asarray(avoid, dtype=float))

    results = []
    for index, seed in enumerate(seeds):
        result = _guarded_search(objective, seed, domain, sense, jac, index)
        if _is_duplicate(result.point, avoid, domain):
            fresh = seed_points(domain, 1, rng, "uniform")[0]
            retry = _guarded_search(objective, fresh, domain, sense, jac, index)
            logger.debug("Seed %d landed on a queried point; retried from %s", index, fresh)
            result = retry
        results.append(result)
    return results


def best_result(results: List[OptResult], sense: str = "minimize") -> OptResult:
    """Return the best finite result, preferring the lowest seed index on ties."""
    sign = _sign(sense)
    finite = [r for r in results if np.isfinite(r.value)]
    if not finite:
        return results[0]
    return min(finite, key=lambda r: (sign * r.value, r.seed_index))
