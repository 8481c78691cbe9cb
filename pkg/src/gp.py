"""
Scalar-output Gaussian-process regression with a squared-exponential kernel.

The same machinery serves the objective GP and every partial-derivative GP.
Inputs are rescaled to the unit box of a Domain and targets are standardized
before fitting; posterior outputs are reported on the original scales.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cholesky, cho_solve, solve_triangular
from scipy.spatial.distance import cdist

from config.settings import (
    LOG_SIGNAL_VARIANCE_BOUNDS, LOG_LENGTHSCALE_BOUNDS, LOG_NOISE_VARIANCE_BOUNDS,
    JITTER_START, JITTER_MAX, JITTER_FACTOR, DEFAULT_GP_RESTARTS
)
from src.errors import FitError, NumericalError, OptimizationError
from src.optim import local_optimize

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class GPHyperparams:
    """Kernel and likelihood hyperparameters.

    Attributes:
        signal_variance: Kernel amplitude sigma^2 (> 0).
        lengthscale: Isotropic lengthscale l (> 0).
        noise_variance: Observation noise lambda^2 (>= 0).
        constant_mean: Prior mean mu0.
    """
    signal_variance: float
    lengthscale: float
    noise_variance: float
    constant_mean: float = 0.0

    def __post_init__(self):
        values = (self.signal_variance, self.lengthscale, self.noise_variance, self.constant_mean)
        if not all(np.isfinite(v) for v in values):
            raise ValueError(f"Hyperparameters must be finite: {values}")
        if self.signal_variance <= 0 or self.lengthscale <= 0:
            raise ValueError("signal_variance and lengthscale must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")

    @classmethod
    def from_log(cls, log_theta: Sequence[float], constant_mean: float = 0.0) -> "GPHyperparams":
        """Build from natural-log (signal variance, lengthscale, noise variance)."""
        s, l, n = np.exp(np.asarray(log_theta, dtype=float))
        return cls(float(s), float(l), float(n), float(constant_mean))


@dataclass(frozen=True, eq=False)
class Domain:
    """Axis-aligned search box.

    Attributes:
        lower: Lower corner, length d.
        upper: Upper corner, length d.
    """
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            raise ValueError("Domain bounds must be equal-length vectors with d >= 1")
        if not np.all(lower < upper):
            raise ValueError(f"Domain needs lower < upper componentwise: {lower}, {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.span

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * self.span

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        slack = tol * self.span
        return bool(np.all(x >= self.lower - slack) and np.all(x <= self.upper + slack))


def kernel(x: Sequence[float], y: Sequence[float], h: GPHyperparams) -> float:
    """
    Squared-exponential covariance between two points.

    Args:
        x: First point.
        y: Second point.
        h: Hyperparameters (signal variance and lengthscale are used).

    Returns:
        sigma^2 * exp(-|x - y|^2 / (2 l^2)).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError(f"Dimension mismatch: {x.shape} vs {y.shape}")
    sq = float(np.sum((x - y) ** 2))
    return h.signal_variance * float(np.exp(-0.5 * sq / h.lengthscale ** 2))


def kernel_matrix(a: np.ndarray, b: np.ndarray, h: GPHyperparams) -> np.ndarray:
    """Covariance matrix between the rows of ``a`` and ``b``."""
    sq = cdist(np.atleast_2d(a), np.atleast_2d(b), "sqeuclidean")
    return h.signal_variance * np.exp(-0.5 * sq / h.lengthscale ** 2)


def _cholesky_with_jitter(K: np.ndarray, signal_variance: float) -> Tuple[np.ndarray, float]:
    """Factorize K, adding diagonal jitter on failure up to the largest allowed."""
    try:
        return cholesky(K, lower=True), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER_START * signal_variance
    eye = np.eye(K.shape[0])
    while jitter <= JITTER_MAX * signal_variance * (1.0 + 1e-9):
        try:
            L = cholesky(K + jitter * eye, lower=True)
            logger.debug("Cholesky needed jitter %.3g", jitter)
            return L, jitter
        except np.linalg.LinAlgError:
            jitter *= JITTER_FACTOR
    raise NumericalError(
        f"Kernel matrix is not positive definite even with jitter {jitter / JITTER_FACTOR:.3g}",
        jitter=jitter / JITTER_FACTOR,
    )


def log_marginal_likelihood(inputs: np.ndarray, targets: Sequence[float], h: GPHyperparams) -> float:
    """
    Gaussian log-density of the targets under N(mu0 * 1, K + lambda^2 I).

    Args:
        inputs: Training inputs, shape (n, d).
        targets: Training targets, length n.
        h: Hyperparameters, including the constant mean.

    Returns:
        The log marginal likelihood.

    Raises:
        NumericalError: If the covariance cannot be factorized.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] != y.size or y.size < 1:
        raise ValueError("Need n >= 1 inputs matching the number of targets")
    K = kernel_matrix(X, X, h) + h.noise_variance * np.eye(y.size)
    L, _ = _cholesky_with_jitter(K, h.signal_variance)
    r = y - h.constant_mean
    w = cho_solve((L, True), r)
    return float(-0.5 * r @ w - np.sum(np.log(np.diag(L))) - 0.5 * y.size * LOG_2PI)


def _profile_likelihood(sq_dists: np.ndarray, z: np.ndarray,
                        log_theta: np.ndarray) -> Tuple[float, np.ndarray, float]:
    """Log likelihood with mu0 profiled out, its gradient in log space, and mu0."""
    signal, length, noise = np.exp(log_theta)
    n = z.size
    Kf = signal * np.exp(-0.5 * sq_dists / length ** 2)
    L, _ = _cholesky_with_jitter(Kf + noise * np.eye(n), signal)
    ones = np.ones(n)
    a = cho_solve((L, True), ones)
    mu0 = float(a @ z / a.sum())
    r = z - mu0
    w = cho_solve((L, True), r)
    lml = -0.5 * r @ w - np.sum(np.log(np.diag(L))) - 0.5 * n * LOG_2PI

    # 0.5 * tr((w w^T - K^-1) dK/dtheta) per log hyperparameter
    inner = np.outer(w, w) - cho_solve((L, True), np.eye(n))
    grads = np.array([
        0.5 * np.sum(inner * Kf),
        0.5 * np.sum(inner * Kf * sq_dists / length ** 2),
        0.5 * noise * np.trace(inner),
    ])
    return float(lml), grads, mu0


@dataclass(frozen=True, eq=False)
class FittedGP:
    """A GP conditioned on its training data. Immutable after construction.

    Hyperparameters live on the internal scales: the unit box of ``domain`` and
    standardized targets ``(y - target_offset) / target_scale``.
    """
    hyperparams: GPHyperparams
    train_inputs: np.ndarray
    train_targets: np.ndarray
    domain: Optional[Domain]
    target_offset: float
    target_scale: float
    unit_inputs: np.ndarray
    chol_factor: np.ndarray
    weight_vector: np.ndarray
    log_marginal: float
    jitter: float = 0.0

    @property
    def dim(self) -> int:
        return self.train_inputs.shape[1]

    @property
    def noise_variance(self) -> float:
        """Observation noise variance on the output scale."""
        return self.target_scale ** 2 * self.hyperparams.noise_variance

    @property
    def constant_mean(self) -> float:
        """Prior mean mu0 on the output scale."""
        return self.target_offset + self.target_scale * self.hyperparams.constant_mean

    def _unit(self, points: np.ndarray) -> np.ndarray:
        return self.domain.to_unit(points) if self.domain is not None else points

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape[-1] != self.dim:
            raise ValueError(f"Expected points of dimension {self.dim}, got {x.shape[-1]}")
        return x

    def predict(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Posterior mean and variance at several points.

        Args:
            points: Query points, shape (m, d).

        Returns:
            Tuple of (means, variances), each of length m.
        """
        X = np.atleast_2d(self._check(points))
        h = self.hyperparams
        k = kernel_matrix(self._unit(X), self.unit_inputs, h)
        mean = h.constant_mean + k @ self.weight_vector
        v = solve_triangular(self.chol_factor, k.T, lower=True)
        var = np.clip(h.signal_variance - np.sum(v * v, axis=0), 0.0, h.signal_variance)
        return (self.target_offset + self.target_scale * mean,
                self.target_scale ** 2 * var)

    def posterior(self, x: Sequence[float]) -> Tuple[float, float]:
        """Posterior mean and (noiseless) variance at a single point."""
        mean, var = self.predict(self._check(x)[None, :])
        return float(mean[0]), float(var[0])

    def posterior_with_grad(self, x: Sequence[float]) -> Tuple[float, float, np.ndarray, np.ndarray]:
        """
        Posterior mean and variance at one point, with their gradients w.r.t. x.

        Args:
            x: Query point.

        Returns:
            Tuple of (mean, variance, d mean / dx, d variance / dx).
        """
        x = self._check(x)
        h = self.hyperparams
        u = self._unit(x[None, :])[0]
        diff = u[None, :] - self.unit_inputs
        k = h.signal_variance * np.exp(-0.5 * np.sum(diff ** 2, axis=1) / h.lengthscale ** 2)
        dk = -(k[:, None] * diff) / h.lengthscale ** 2

        mean = h.constant_mean + k @ self.weight_vector
        kinv_k = cho_solve((self.chol_factor, True), k)
        var = h.signal_variance - k @ kinv_k
        dmean = dk.T @ self.weight_vector
        dvar = -2.0 * dk.T @ kinv_k
        if var <= 0.0:
            var, dvar = 0.0, np.zeros_like(dvar)
        elif var >= h.signal_variance:
            var, dvar = h.signal_variance, np.zeros_like(dvar)

        unit_scale = self.domain.span if self.domain is not None else 1.0
        return (float(self.target_offset + self.target_scale * mean),
                float(self.target_scale ** 2 * var),
                self.target_scale * dmean / unit_scale,
                self.target_scale ** 2 * dvar / unit_scale)


def posterior(gp: FittedGP, x: Sequence[float]) -> Tuple[float, float]:
    """Posterior mean and variance of ``gp`` at ``x``; see FittedGP.posterior."""
    return gp.posterior(x)


def _standardization(y: np.ndarray) -> Tuple[float, float]:
    offset = float(np.mean(y))
    scale = float(np.std(y))
    return offset, (scale if scale > 1e-12 else 1.0)


def condition(inputs: np.ndarray,
              targets: Sequence[float],
              hyperparams: GPHyperparams,
              domain: Optional[Domain] = None,
              standardize: bool = False) -> FittedGP:
    """
    Condition a GP with fixed hyperparameters on training data.

    Args:
        inputs: Training inputs, shape (n, d).
        targets: Training targets, length n.
        hyperparams: Hyperparameters on the internal scales.
        domain: Box whose unit cube the inputs are mapped into; None keeps raw inputs.
        standardize: Whether targets are standardized before conditioning.

    Returns:
        FittedGP.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] != y.size or y.size < 1:
        raise ValueError("Need n >= 1 inputs matching the number of targets")
    offset, scale = _standardization(y) if standardize else (0.0, 1.0)
    z = (y - offset) / scale
    U = domain.to_unit(X) if domain is not None else X

    K = kernel_matrix(U, U, hyperparams) + hyperparams.noise_variance * np.eye(y.size)
    L, jitter = _cholesky_with_jitter(K, hyperparams.signal_variance)
    r = z - hyperparams.constant_mean
    w = cho_solve((L, True), r)
    lml = float(-0.5 * r @ w - np.sum(np.log(np.diag(L))) - 0.5 * y.size * LOG_2PI)
    return FittedGP(
        hyperparams=hyperparams,
        train_inputs=X.copy(),
        train_targets=y.copy(),
        domain=domain,
        target_offset=offset,
        target_scale=scale,
        unit_inputs=U.copy(),
        chol_factor=L,
        weight_vector=w,
        log_marginal=lml,
        jitter=jitter,
    )


def _log_bounds_domain() -> Domain:
    bounds = np.array([LOG_SIGNAL_VARIANCE_BOUNDS, LOG_LENGTHSCALE_BOUNDS, LOG_NOISE_VARIANCE_BOUNDS])
    return Domain(bounds[:, 0], bounds[:, 1])


def fit(inputs: np.ndarray,
        targets: Sequence[float],
        domain: Domain,
        restarts: int = DEFAULT_GP_RESTARTS,
        rng: Optional[np.random.Generator] = None) -> FittedGP:
    """
    Fit hyperparameters by maximizing the log marginal likelihood ("GP fitting").

    Searches natural-log (signal variance, lengthscale, noise variance) from
    ``restarts`` uniform initial guesses in the log bounds; mu0 is profiled out
    in closed form at every evaluation.

    Args:
        inputs: Training inputs, shape (n, d), n >= 2 distinct.
        targets: Training targets, length n.
        domain: Box used to rescale inputs to the unit cube.
        restarts: Number of MLE restarts.
        rng: Random generator for the initial guesses.

    Returns:
        FittedGP with the best hyperparameters found.

    Raises:
        FitError: If no restart produced a finite likelihood.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ValueError("Number of inputs and targets differ")
    if np.unique(X, axis=0).shape[0] < 2:
        raise ValueError("Fitting needs at least two distinct inputs")
    if X.shape[1] != domain.dim:
        raise ValueError(f"Inputs have dimension {X.shape[1]}, domain has {domain.dim}")
    rng = rng if rng is not None else np.random.default_rng(0)

    offset, scale = _standardization(y)
    z = (y - offset) / scale
    U = domain.to_unit(X)
    sq_dists = cdist(U, U, "sqeuclidean")
    log_domain = _log_bounds_domain()

    def objective(log_theta):
        try:
            lml, grad, _ = _profile_likelihood(sq_dists, z, log_theta)
        except NumericalError:
            return -np.inf, np.zeros(3)
        return lml, grad

    starts = log_domain.from_unit(rng.random((max(restarts, 1), 3)))
    best = None
    for index, start in enumerate(starts):
        try:
            result = local_optimize(objective, start, log_domain, sense="maximize",
                                    jac=True, seed_index=index)
        except OptimizationError as e:
            logger.warning("GP fit restart %d failed: %s", index, e)
            continue
        if best is None or result.value > best.value:
            best = result

    if best is None:
        raise FitError(f"All {len(starts)} hyperparameter restarts failed")

    _, _, mu0 = _profile_likelihood(sq_dists, z, best.point)
    hyperparams = GPHyperparams.from_log(best.point, constant_mean=mu0)
    logger.debug("Fitted GP: %s (log marginal %.4f)", hyperparams, best.value)
    return condition(X, y, hyperparams, domain=domain, standardize=True)
