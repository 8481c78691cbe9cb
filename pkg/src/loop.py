"""
The sequential optimization loop: the multi-level gEI / gPI algorithms with
maximum-significance (MS) and maximum-significance-with-convex-point (MSC)
selection, zeroth-order EI, and the per-dimension first-order baseline with
its two aggregation rules.
"""
import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from config.experiment_config import ExperimentConfig
from config.settings import DEFAULT_RESTARTS_K, DEFAULT_GP_RESTARTS
from src import gp as gp_module
from src.acquisition import (
    SurrogateEnsemble, Incumbent, alpha_at, significance, ei_with_grad,
    gei_with_grad, log_gpi_with_grad, fobo_partial_with_grad
)
from src.bench import BenchmarkSpec, Evaluation, RegretTrace, get_benchmark, observe
from src.errors import EvaluationError
from src.gp import Domain, FittedGP
from src.optim import multistart_optimize, best_result

logger = logging.getLogger(__name__)


class AlgorithmId(str, Enum):
    """Closed set of optimization algorithms."""
    GEI_MS = "gEI-MS"
    GEI_MSC = "gEI-MSC"
    GPI_MS = "gPI-MS"
    GPI_MSC = "gPI-MSC"
    ZOBO_EI = "ZOBO-EI"
    FOBO_CC = "FOBO-CC"
    FOBO_MM = "FOBO-MM"

    @classmethod
    def parse(cls, tag: str) -> "AlgorithmId":
        for member in cls:
            if member.value == tag:
                return member
        raise ValueError(f"Unknown algorithm: {tag}")

    @property
    def family(self) -> str:
        return self.value.split("-")[0]

    @property
    def rule(self) -> str:
        return self.value.split("-")[1]

    @property
    def uses_gradients(self) -> bool:
        return self is not AlgorithmId.ZOBO_EI


@dataclass
class Candidate:
    """A proposed query point.

    Attributes:
        point: Location in the domain.
        source: "restart-<i>" (1-based), "fgp-ei" or "convex".
        significance: Score under the current objective GP and alpha.
    """
    point: np.ndarray
    source: str
    significance: float


@dataclass
class RunState:
    """Everything one run carries between iterations.

    Attributes:
        dataset: Evaluations so far, in query order.
        domain: Search box.
        rng: Random generator for GP fitting and acquisition restarts.
        ensemble: GPs fitted on exactly ``dataset``.
        incumbent: Best noisy observation in ``dataset``.
        iteration: Number of completed loop iterations.
        sampling: Restart seed sampling scheme.
        partial_gp_lookups: Accumulated partial-derivative GP consultations.
    """
    dataset: List[Evaluation]
    domain: Domain
    rng: np.random.Generator
    ensemble: Optional[SurrogateEnsemble] = None
    incumbent: Optional[Incumbent] = None
    iteration: int = 0
    sampling: str = "uniform"
    partial_gp_lookups: int = 0

    @property
    def points(self) -> np.ndarray:
        if not self.dataset:
            return np.empty((0, self.domain.dim))
        return np.array([e.point for e in self.dataset])

    def refresh_incumbent(self) -> Incumbent:
        best = max(self.dataset, key=lambda e: e.value_noisy)
        self.incumbent = Incumbent(point=best.point.copy(), value=best.value_noisy)
        return self.incumbent


def fit_ensemble(dataset: Sequence[Evaluation], domain: Domain,
                 restarts: int = DEFAULT_GP_RESTARTS,
                 rng: Optional[np.random.Generator] = None,
                 function_only: bool = False) -> SurrogateEnsemble:
    """
    Fit the objective GP and, unless ``function_only``, one GP per partial derivative.

    Args:
        dataset: Evaluations to train on.
        domain: Search box.
        restarts: MLE restarts per GP.
        rng: Random generator for the restarts.
        function_only: Skip the partial-derivative GPs.

    Returns:
        SurrogateEnsemble trained on the dataset points in order.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    X = np.array([e.point for e in dataset])
    values = np.array([e.value_noisy for e in dataset])
    fgp = gp_module.fit(X, values, domain, restarts=restarts, rng=rng)
    pgp: Tuple[FittedGP, ...] = ()
    if not function_only:
        grads = np.array([e.gradient_noisy for e in dataset])
        pgp = tuple(gp_module.fit(X, grads[:, i], domain, restarts=restarts, rng=rng)
                    for i in range(domain.dim))
    return SurrogateEnsemble(fgp=fgp, pgp=pgp, domain=domain)


def select_ms(candidates: Sequence[Candidate]) -> np.ndarray:
    """
    Maximum significance: the candidate with the highest score.

    Ties go to the earliest candidate in source order.

    Raises:
        ValueError: If there are no candidates.
    """
    if not candidates:
        raise ValueError("Cannot select from an empty candidate set")
    best = candidates[0]
    for candidate in candidates[1:]:
        if candidate.significance > best.significance:
            best = candidate
    return best.point


def convex_candidate(candidates: Sequence[Candidate], fgp: FittedGP, alpha: float) -> Candidate:
    """
    Softmax-weighted convex combination of the candidate points.

    Weights are softmax(s) over the candidates' raw significances.
    """
    if not candidates:
        raise ValueError("Cannot combine an empty candidate set")
    points = np.array([c.point for c in candidates])
    scores = np.array([c.significance for c in candidates])
    point = softmax(scores) @ points
    return Candidate(point=point, source="convex", significance=significance(fgp, point, alpha))


def select_msc(candidates: Sequence[Candidate], fgp: FittedGP, alpha: float) -> np.ndarray:
    """
    Maximum significance over the candidates plus their convex point.

    Raises:
        ValueError: If there are no candidates.
    """
    if not candidates:
        raise ValueError("Cannot select from an empty candidate set")
    return select_ms(list(candidates) + [convex_candidate(candidates, fgp, alpha)])


def _select(candidates: List[Candidate], fgp: FittedGP, alpha: float, rule: str) -> np.ndarray:
    if rule == "MS":
        return select_ms(candidates)
    if rule == "MSC":
        return select_msc(candidates, fgp, alpha)
    raise ValueError(f"Unknown selection rule: {rule}")


def _ei_point(state: RunState, k: int) -> np.ndarray:
    ens = state.ensemble
    results = multistart_optimize(
        lambda x: ei_with_grad(ens.fgp, x, state.incumbent),
        state.domain, k, state.rng, sense="maximize", jac=True,
        sampling=state.sampling, avoid=state.points,
    )
    return best_result(results, sense="maximize").point


def _candidates(state: RunState, results, alpha: float, k: int) -> List[Candidate]:
    fgp = state.ensemble.fgp
    candidates = [
        Candidate(point=r.point, source=f"restart-{r.seed_index + 1}",
                  significance=significance(fgp, r.point, alpha))
        for r in results
    ]
    ei_point = _ei_point(state, k)
    candidates.append(Candidate(point=ei_point, source="fgp-ei",
                                significance=significance(fgp, ei_point, alpha)))
    return candidates


def propose_gei(state: RunState, k: int, alpha: float,
                rule: str = "MS") -> Tuple[np.ndarray, List[Candidate]]:
    """
    Propose the next query with the multi-level gEI acquisition.

    Finds ``k`` minimizers of gEI (one per restart), adds the EI maximizer of the
    objective GP, and picks among them with MS or MSC.

    Args:
        state: Run state with a fitted ensemble and incumbent.
        k: Number of restarts.
        alpha: Significance exploration weight.
        rule: "MS" or "MSC".

    Returns:
        Tuple of (chosen point, the k + 1 candidates).
    """
    ens = state.ensemble
    results = multistart_optimize(
        lambda x: gei_with_grad(ens, x), state.domain, k, state.rng,
        sense="minimize", jac=True, sampling=state.sampling, avoid=state.points,
    )
    candidates = _candidates(state, results, alpha, k)
    return _select(candidates, ens.fgp, alpha, rule), candidates


def propose_gpi(state: RunState, k: int, alpha: float, eps_grad: float, eps_pi: float,
                rule: str = "MS") -> Tuple[np.ndarray, List[Candidate]]:
    """
    Propose the next query with the multi-level gPI acquisition.

    As ``propose_gei``, with the gPI product maximized (in log form) instead of
    gEI minimized.
    """
    ens = state.ensemble
    results = multistart_optimize(
        lambda x: log_gpi_with_grad(ens, x, state.incumbent, eps_grad, eps_pi),
        state.domain, k, state.rng, sense="maximize", jac=True,
        sampling=state.sampling, avoid=state.points,
    )
    candidates = _candidates(state, results, alpha, k)
    return _select(candidates, ens.fgp, alpha, rule), candidates


def propose_zobo_ei(state: RunState, k: int = DEFAULT_RESTARTS_K) -> np.ndarray:
    """Multistart maximizer of EI on the objective GP alone."""
    return _ei_point(state, k)


def propose_fobo_baseline(state: RunState, variant: str,
                          k: int = DEFAULT_RESTARTS_K) -> np.ndarray:
    """
    Per-dimension first-order baseline.

    Minimizes E|df/dx(i)| separately for every dimension over the whole domain,
    adds the EI point of the objective GP, then aggregates the d + 1 points.

    Args:
        state: Run state with a fitted ensemble.
        variant: "CC" (softmax-of-mean convex combination) or "MM" (highest mean).
        k: Restarts per acquisition.

    Returns:
        The next query point.
    """
    if variant not in ("CC", "MM"):
        raise ValueError(f"Unknown baseline variant: {variant}")
    ens = state.ensemble
    points = [_ei_point(state, k)]
    for i in range(state.domain.dim):
        results = multistart_optimize(
            lambda x, i=i: fobo_partial_with_grad(ens, i, x), state.domain, k, state.rng,
            sense="minimize", jac=True, sampling=state.sampling, avoid=state.points,
        )
        points.append(best_result(results, sense="minimize").point)
    points = np.array(points)
    means, _ = ens.fgp.predict(points)
    if variant == "MM":
        return points[int(np.argmax(means))]
    return softmax(means) @ points


class BayesOptRunner:
    """
    Runs one algorithm on one benchmark for one seed.

    The initial design and its noise come from a stream that depends on the
    seed only, so every algorithm of a comparison starts from the same data.
    """

    def __init__(self, spec: BenchmarkSpec, config: ExperimentConfig,
                 algorithm: AlgorithmId, seed: int):
        self.spec = spec
        self.config = config
        self.algorithm = algorithm
        self.seed = seed
        design_seq, noise_seq, search_seq = np.random.SeedSequence(seed).spawn(3)
        self.design_rng = np.random.default_rng(design_seq)
        self.noise_rng = np.random.default_rng(noise_seq)
        self.state = RunState(dataset=[], domain=spec.domain,
                              rng=np.random.default_rng(search_seq),
                              sampling=config.seed_sampling)
        self.trace = RegretTrace(benchmark=spec.id)

    def _observe(self, x: np.ndarray, rng: np.random.Generator) -> Evaluation:
        try:
            return observe(self.spec, x, self.config.noise_variance, rng)
        except Exception as e:
            raise EvaluationError(f"Objective {self.spec.id} failed at {x}: {e}", trace=self.trace) from e

    def _record(self, iteration: int, started: float) -> None:
        best_true = max(e.value_true for e in self.state.dataset)
        elapsed = (time.perf_counter() - started) * 1000.0 if self.config.record_wall_time else 0.0
        self.trace.record(iteration, best_true, self.spec, wall_time_ms=elapsed)
        incumbent = self.state.refresh_incumbent()
        self.trace.recommended_point = incumbent.point
        self.trace.recommended_value = incumbent.value

    def propose(self) -> np.ndarray:
        """Fit the surrogates on the current data and propose the next query."""
        cfg, state = self.config, self.state
        state.ensemble = fit_ensemble(state.dataset, state.domain, restarts=cfg.gp_restarts,
                                      rng=state.rng, function_only=not self.algorithm.uses_gradients)
        alpha = alpha_at(cfg.alpha, cfg.alpha_schedule, state.iteration)
        family, rule = self.algorithm.family, self.algorithm.rule

        if family == "gEI":
            point, _ = propose_gei(state, cfg.restarts_k, alpha, rule=rule)
        elif family == "gPI":
            point, _ = propose_gpi(state, cfg.restarts_k, alpha, cfg.eps_grad, cfg.eps_pi, rule=rule)
        elif family == "ZOBO":
            point = propose_zobo_ei(state, cfg.restarts_k)
        else:
            point = propose_fobo_baseline(state, rule, cfg.restarts_k)

        state.partial_gp_lookups += state.ensemble.partial_lookups
        return state.domain.clip(point)

    def run(self) -> RegretTrace:
        """
        Draw the initial design, then query ``budget`` points.

        Returns:
            RegretTrace with ``budget + 1`` entries.

        Raises:
            EvaluationError: If the objective fails; carries the partial trace.
        """
        cfg, state = self.config, self.state
        started = time.perf_counter()
        design = state.domain.from_unit(self.design_rng.random((cfg.initial_points, state.domain.dim)))
        for x in design:
            state.dataset.append(self._observe(x, self.design_rng))
        self._record(0, started)

        for n in range(cfg.budget):
            x = self.propose()
            state.dataset.append(self._observe(x, self.noise_rng))
            state.iteration = n + 1
            self._record(n + 1, started)
            logger.debug("%s %s seed %d iter %d: x=%s regret=%.4g", self.spec.id,
                         self.algorithm.value, self.seed, n + 1, x,
                         self.trace.entries[-1].immediate_regret)
        return self.trace


def run(objective_id: str, config: ExperimentConfig, algorithm: Optional[str] = None,
        seed: Optional[int] = None) -> RegretTrace:
    """
    Run one algorithm on one benchmark.

    Args:
        objective_id: Benchmark tag.
        config: Experiment settings.
        algorithm: Algorithm tag; defaults to the first one in the config.
        seed: Run seed; defaults to the config's master seed.

    Returns:
        RegretTrace of length budget + 1.
    """
    if config.initial_points < 2:
        raise ValueError("The initial design needs at least two points")
    if config.budget < 0:
        raise ValueError("Budget must be non-negative")
    algorithm_id = AlgorithmId.parse(algorithm or config.algorithms[0])
    runner = BayesOptRunner(get_benchmark(objective_id), config, algorithm_id,
                            config.master_seed if seed is None else seed)
    return runner.run()
