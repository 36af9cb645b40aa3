"""Homotopy schedules and Monte Carlo soft-min gradient estimation.

The smoothed energy at homotopy time t is

    F_t(x) = -lambda(t) * log E_z[ exp(-f(alpha(t) x + beta(t) z) / lambda(t)) ]

with z standard normal. Its K-sample estimator is a log-mean-exp of the
perturbed objective values, and its gradient is the softmax-weighted
average of the perturbed gradients: low-value perturbations dominate the
descent direction exponentially. All log-sum-exp arithmetic subtracts the
minimum sampled value first, so the estimator stays finite for
temperatures down to 1e-8 and value gaps up to 1e6, and adding a constant
to f shifts the value by that constant without touching the weights.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .objectives import Objective, EvalCounter


class SampleEvaluationError(ValueError):
    """The objective returned a non-finite value at a perturbed sample."""

    def __init__(self, sample_index: int, point: np.ndarray, value: float):
        self.sample_index = sample_index
        super().__init__(
            f"non-finite objective value {value!r} at sample {sample_index}"
        )


@dataclass(frozen=True)
class Schedule:
    """Smoothing schedule (alpha(t), beta(t), lambda(t)) on t in [0, 1].

    Boundary contract: beta(1) = 0 (no smoothing at the end of the path),
    beta(0) > 0, lambda(t) > 0 everywhere. The canonical kind couples
    beta(t)^2 = lambda(t), which is the scaling under which the smoothed
    energy is a soft Moreau envelope up to an x-independent constant.
    """

    alpha: Callable[[float], float]
    beta: Callable[[float], float]
    lam: Callable[[float], float]
    kind: str = "custom"

    def __post_init__(self):
        if abs(self.beta(1.0)) != 0.0:
            raise ValueError("schedule must satisfy beta(1) = 0")
        if self.beta(0.0) <= 0.0:
            raise ValueError("schedule must satisfy beta(0) > 0")
        for t in (0.0, 0.25, 0.5, 0.75, 1.0):
            if self.lam(t) <= 0.0:
                raise ValueError("lambda(t) must stay positive")


def canonical_schedule(eps: float = 0.1, lambda_min: float = 1e-8) -> Schedule:
    """alpha = 1, beta(t) = eps*sqrt(1-t), lambda = max(beta^2, lambda_min)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    beta = lambda t: eps * np.sqrt(1.0 - t)
    return Schedule(
        alpha=lambda t: 1.0,
        beta=beta,
        lam=lambda t: max(beta(t) ** 2, lambda_min),
        kind="canonical",
    )


def linear_beta_schedule(eps: float = 0.1, lambda_min: float = 1e-8) -> Schedule:
    """alpha = 1, beta(t) = eps*(1-t), lambda = max(beta^2, lambda_min)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    beta = lambda t: eps * (1.0 - t)
    return Schedule(
        alpha=lambda t: 1.0,
        beta=beta,
        lam=lambda t: max(beta(t) ** 2, lambda_min),
        kind="linear_beta",
    )


def make_schedule(kind: str, eps: float = 0.1, lambda_min: float = 1e-8) -> Schedule:
    if kind == "canonical":
        return canonical_schedule(eps, lambda_min)
    if kind == "linear_beta":
        return linear_beta_schedule(eps, lambda_min)
    raise ValueError(f"unknown schedule kind {kind!r}")


def schedule_eval(s: Schedule, t: float) -> tuple[float, float, float]:
    """Evaluate (alpha, beta, lambda) at homotopy time t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"homotopy time t must lie in [0, 1], got {t}")
    return float(s.alpha(t)), float(s.beta(t)), float(s.lam(t))


@dataclass(frozen=True)
class NoiseBatch:
    """K standard-normal perturbation vectors, optionally in (z, -z) pairs."""

    vectors: np.ndarray  # (K, dim)
    antithetic: bool

    @property
    def k(self) -> int:
        return self.vectors.shape[0]


def sample_noise(rng: np.random.Generator, k: int, dim: int,
                 antithetic: bool = True) -> NoiseBatch:
    """Draw K perturbations; antithetic pairs are adjacent rows (z, -z).

    Odd K with antithetic pairing draws (K-1)/2 pairs plus one fresh vector.
    """
    if k < 1:
        raise ValueError("need at least one sample")
    if not antithetic:
        return NoiseBatch(rng.standard_normal((k, dim)), False)
    half = k // 2
    base = rng.standard_normal((half, dim))
    vectors = np.empty((k, dim))
    vectors[0:2 * half:2] = base
    vectors[1:2 * half:2] = -base
    if k % 2 == 1:
        vectors[-1] = rng.standard_normal(dim)
    return NoiseBatch(vectors, True)


@dataclass(frozen=True)
class GradientEstimate:
    """Soft-min value, Boltzmann weights and the weighted-gradient direction."""

    value: float
    grad: np.ndarray
    weights: np.ndarray
    samples_used: int


def _sample_values(obj, x, alpha, beta, noise, with_grad):
    """Evaluate f (and optionally grad f) at alpha*x + beta*z_k for all k."""
    if noise.vectors.shape[1] != x.size:
        raise ValueError(
            f"noise dimension {noise.vectors.shape[1]} does not match "
            f"objective dimension {x.size}")
    pts = alpha * x + beta * noise.vectors
    k = noise.k
    values = np.empty(k)
    grads = np.empty((k, x.size)) if with_grad else None
    for i in range(k):
        v = obj.eval(pts[i])
        if not np.isfinite(v):
            raise SampleEvaluationError(i, pts[i], v)
        values[i] = v
        if with_grad:
            grads[i] = obj.grad(pts[i])
    return values, grads


def softmin_value(obj: Objective, x: np.ndarray, t: float, s: Schedule,
                  noise: NoiseBatch, counter: EvalCounter) -> float:
    """K-sample estimate of the smoothed energy F_t at x.

    Computed as  min_k f_k - lam * log(mean_k exp(-(f_k - min_k f_k)/lam)),
    which collapses to f(alpha x) exactly when beta = 0.
    """
    alpha, beta, lam = schedule_eval(s, t)
    values, _ = _sample_values(obj, x, alpha, beta, noise, with_grad=False)
    counter.add(noise.k)
    shift = values.min()
    return float(shift - lam * np.log(np.mean(np.exp(-(values - shift) / lam))))


def softmin_gradient(obj: Objective, x: np.ndarray, t: float, s: Schedule,
                     noise: NoiseBatch, counter: EvalCounter) -> GradientEstimate:
    """Soft-min value plus its exact gradient under the same fixed noise.

    weights_k = softmax_k(-f_k / lam), grad = alpha * sum_k weights_k * grad_k.
    This is the true gradient of the K-sample objective, not a separate
    estimate, so it matches finite differences of `softmin_value` taken
    with the same NoiseBatch.
    """
    alpha, beta, lam = schedule_eval(s, t)
    values, grads = _sample_values(obj, x, alpha, beta, noise, with_grad=True)
    counter.add(noise.k)
    shift = values.min()
    expv = np.exp(-(values - shift) / lam)
    weights = expv / expv.sum()
    value = float(shift - lam * np.log(expv.mean()))
    grad = alpha * (weights @ grads)
    return GradientEstimate(value=value, grad=grad, weights=weights,
                            samples_used=noise.k)


def classical_gh_gradient(obj: Objective, x: np.ndarray, sigma: float,
                          noise: NoiseBatch, counter: EvalCounter):
    """Uniform-average smoothing estimate: objective convolved with a Gaussian.

    Returns (mean_k f(x + sigma z_k), mean_k grad f(x + sigma z_k)).
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    values, grads = _sample_values(obj, x, 1.0, sigma, noise, with_grad=True)
    counter.add(noise.k)
    return float(values.mean()), grads.mean(axis=0)
