"""
Acquisition values over an ensemble of independent GPs: one for the objective,
one per partial derivative.

Every surface comes in two forms: ``*_value`` returning a float and
``*_with_grad`` returning ``(value, gradient)`` for the quasi-Newton optimizer.
Gaussian CDF arguments always use the total predictive standard deviation
sqrt(posterior variance + noise variance).
"""
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy.special import erf
from scipy.stats import norm

from config.settings import MIN_STD
from src.gp import Domain, FittedGP


@dataclass
class SurrogateEnsemble:
    """The objective GP plus one GP per partial derivative.

    All GPs are trained on the same points in the same order. A function-only
    ensemble (no partial GPs) serves zeroth-order methods.

    Attributes:
        fgp: GP of the objective.
        pgp: GPs of the partial derivatives; index i models df/dx(i).
        domain: Search box.
        partial_lookups: Number of times a partial-derivative GP was consulted.
    """
    fgp: FittedGP
    pgp: Tuple[FittedGP, ...]
    domain: Domain
    partial_lookups: int = field(default=0)

    def __post_init__(self):
        self.pgp = tuple(self.pgp)
        if self.pgp and len(self.pgp) != self.domain.dim:
            raise ValueError(f"Expected {self.domain.dim} partial GPs, got {len(self.pgp)}")

    @property
    def function_only(self) -> bool:
        return not self.pgp

    def partial(self, i: int) -> FittedGP:
        """Return the GP of the i-th partial derivative (0-based)."""
        if self.function_only:
            raise ValueError("Function-only ensemble has no partial-derivative GPs")
        self.partial_lookups += 1
        return self.pgp[i]


@dataclass
class Incumbent:
    """Best point seen so far and its noisy observed value."""
    point: np.ndarray
    value: float


def alpha_at(alpha0: float, schedule: str, n: int) -> float:
    """
    Exploration weight of the significance score at iteration ``n``.

    Args:
        alpha0: Base weight.
        schedule: "constant" or "decay" (alpha0 / sqrt(n + 1)).
        n: Iteration index, starting at 0.
    """
    if schedule == "constant":
        return float(alpha0)
    if schedule == "decay":
        return float(alpha0) / np.sqrt(n + 1.0)
    raise ValueError(f"Unknown alpha schedule: {schedule}")


def _total_std(var: float, noise: float) -> float:
    return float(np.sqrt(max(var + noise, MIN_STD ** 2)))


def _folded_with_grad(mu: float, sigma: float):
    """Folded-normal mean and std with partials w.r.t. (mu, sigma)."""
    t = mu / sigma
    pdf = norm.pdf(t)
    sign_mass = erf(t / np.sqrt(2.0))  # Phi(t) - Phi(-t)
    mean_abs = 2.0 * sigma * pdf + mu * sign_mass
    std_abs = np.sqrt(max(mu * mu + sigma * sigma - mean_abs * mean_abs, 0.0))
    dm_dmu, dm_dsigma = sign_mass, 2.0 * pdf
    if std_abs > 0.0:
        ds_dmu = (mu - mean_abs * dm_dmu) / std_abs
        ds_dsigma = (sigma - mean_abs * dm_dsigma) / std_abs
    else:
        ds_dmu = ds_dsigma = 0.0
    return mean_abs, std_abs, dm_dmu, dm_dsigma, ds_dmu, ds_dsigma


def folded_normal_stats(mu: float, sigma: float) -> Tuple[float, float]:
    """
    Mean and standard deviation of |Z| for Z ~ N(mu, sigma^2).

    E|Z| = 2 sigma phi(-mu/sigma) + mu (Phi(mu/sigma) - Phi(-mu/sigma)) and
    sd|Z| = sqrt(mu^2 + sigma^2 - E|Z|^2).

    Args:
        mu: Mean of Z.
        sigma: Standard deviation of Z, positive.

    Returns:
        Tuple of (mean_abs, std_abs).
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    mean_abs, std_abs = _folded_with_grad(float(mu), float(sigma))[:2]
    return float(mean_abs), float(std_abs)


def gei_with_grad(ens: SurrogateEnsemble, x: Sequence[float]) -> Tuple[float, np.ndarray]:
    """Sum over dimensions of E|df/dx(i)| + sd|df/dx(i)|, with its gradient."""
    x = np.asarray(x, dtype=float)
    value, grad = 0.0, np.zeros(x.size)
    for i in range(ens.domain.dim):
        gp = ens.partial(i)
        mu, var, dmu, dvar = gp.posterior_with_grad(x)
        sigma = _total_std(var, gp.noise_variance)
        dsigma = dvar / (2.0 * sigma)
        m, s, dm_dmu, dm_ds, ds_dmu, ds_ds = _folded_with_grad(mu, sigma)
        value += m + s
        grad += (dm_dmu + ds_dmu) * dmu + (dm_ds + ds_ds) * dsigma
    return float(value), grad


def gei_value(ens: SurrogateEnsemble, x: Sequence[float]) -> float:
    """
    Gradient-based expected-improvement utility at ``x``.

    Small values mark points where every partial derivative is confidently
    near zero; the lower-level search minimizes it.
    """
    return gei_with_grad(ens, x)[0]


def fobo_partial_with_grad(ens: SurrogateEnsemble, i: int,
                           x: Sequence[float]) -> Tuple[float, np.ndarray]:
    """E|df/dx(i)| alone (no std term), used by the prior first-order baseline."""
    gp = ens.partial(i)
    mu, var, dmu, dvar = gp.posterior_with_grad(np.asarray(x, dtype=float))
    sigma = _total_std(var, gp.noise_variance)
    m, _, dm_dmu, dm_ds, _, _ = _folded_with_grad(mu, sigma)
    return float(m), dm_dmu * dmu + dm_ds * dvar / (2.0 * sigma)


def ei_with_grad(fgp: FittedGP, x: Sequence[float], inc: Incumbent) -> Tuple[float, np.ndarray]:
    """Expected improvement over the incumbent, with its gradient."""
    mu, var, dmu, dvar = fgp.posterior_with_grad(np.asarray(x, dtype=float))
    gap = mu - inc.value
    s = float(np.sqrt(max(var + fgp.noise_variance, 0.0)))
    if s < MIN_STD:
        return max(gap, 0.0), (dmu if gap > 0 else np.zeros_like(dmu))
    z = gap / s
    cdf, pdf = norm.cdf(z), norm.pdf(z)
    value = max(gap * cdf + s * pdf, 0.0)
    return float(value), cdf * dmu + pdf * dvar / (2.0 * s)


def ei_value(fgp: FittedGP, x: Sequence[float], inc: Incumbent) -> float:
    """
    Expected improvement of the objective GP over the incumbent value.

    Returns (mu - best) Phi(z) + s phi(z) with z = (mu - best) / s, which
    reduces to max(mu - best, 0) as s goes to 0.
    """
    return ei_with_grad(fgp, x, inc)[0]


def _log_window_probability(mu: float, s: float, eps: float):
    """log P(-eps < N(mu, s^2) < eps) and its partials w.r.t. (mu, s)."""
    a, b = (-eps - mu) / s, (eps - mu) / s
    if a > 0:
        log_p = norm.logsf(a) + np.log(-np.expm1(norm.logsf(b) - norm.logsf(a)))
    elif b < 0:
        log_p = norm.logcdf(b) + np.log(-np.expm1(norm.logcdf(a) - norm.logcdf(b)))
    else:
        log_p = np.log(max(norm.cdf(b) - norm.cdf(a), 1e-300))
    if not np.isfinite(log_p):
        return -690.0, 0.0, 0.0
    ra = np.exp(norm.logpdf(a) - log_p)  # phi(a) / P
    rb = np.exp(norm.logpdf(b) - log_p)
    return float(log_p), (ra - rb) / s, (a * ra - b * rb) / s


def log_gpi_with_grad(ens: SurrogateEnsemble, x: Sequence[float], inc: Incumbent,
                      eps_grad: float, eps_pi: float) -> Tuple[float, np.ndarray]:
    """
    Logarithm of the gradient-based probability of improvement, with gradient.

    Same maximizer as ``gpi_value`` and usable where the product underflows.
    """
    if not eps_grad > 0:
        raise ValueError(f"eps_grad must be positive, got {eps_grad}")
    x = np.asarray(x, dtype=float)
    fgp = ens.fgp
    mu, var, dmu, dvar = fgp.posterior_with_grad(x)
    s = _total_std(var, fgp.noise_variance)
    z = (mu - inc.value - eps_pi * fgp.target_scale) / s
    log_value = float(norm.logcdf(z))
    hazard = np.exp(norm.logpdf(z) - log_value)
    grad = hazard * (dmu / s - z * dvar / (2.0 * s * s))

    for i in range(ens.domain.dim):
        gp = ens.partial(i)
        mu_i, var_i, dmu_i, dvar_i = gp.posterior_with_grad(x)
        s_i = _total_std(var_i, gp.noise_variance)
        log_p, dlog_dmu, dlog_ds = _log_window_probability(mu_i, s_i, eps_grad * gp.target_scale)
        log_value += log_p
        grad = grad + dlog_dmu * dmu_i + dlog_ds * dvar_i / (2.0 * s_i)
    return log_value, grad


def gpi_value(ens: SurrogateEnsemble, x: Sequence[float], inc: Incumbent,
              eps_grad: float, eps_pi: float) -> float:
    """
    Gradient-based probability of improvement at ``x``.

    Product of P0 = Phi((mu - best - eps_pi) / s), the probability of improving
    on the incumbent, and, per dimension, the probability that the partial
    derivative lies in [-eps_grad, eps_grad]. Both windows are given on the
    standardized scale of their GP and converted with its target scale.

    Args:
        ens: Fitted ensemble.
        x: Query point.
        inc: Incumbent.
        eps_grad: Half-width of the zero-gradient window, positive.
        eps_pi: Improvement margin.

    Returns:
        Value in [0, 1].
    """
    log_value, _ = log_gpi_with_grad(ens, x, inc, eps_grad, eps_pi)
    return float(min(np.exp(log_value), 1.0))


def significance_with_grad(fgp: FittedGP, x: Sequence[float], alpha: float) -> Tuple[float, np.ndarray]:
    """Significance score with its gradient."""
    mu, var, dmu, dvar = fgp.posterior_with_grad(np.asarray(x, dtype=float))
    std = np.sqrt(var)
    dstd = dvar / (2.0 * std) if std > 0 else np.zeros_like(dvar)
    return float(mu + alpha * std), dmu + alpha * dstd


def significance(fgp: FittedGP, x: Sequence[float], alpha: float) -> float:
    """
    Upper-level ranking score mu(x) + alpha * sd(x), using the noiseless
    posterior standard deviation.
    """
    mu, var = fgp.posterior(x)
    return float(mu + alpha * np.sqrt(var))
