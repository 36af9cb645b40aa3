"""1D quadrature oracles for smoothing identities.

These routines exist to verify, by direct numerical integration, that

  * the smoothed energy F_t equals a finite-temperature (soft-min) Moreau
    envelope up to an x-independent constant under the canonical scaling
    alpha = 1, beta^2 = lambda, and
  * a step along -grad F_lambda moves the iterate toward the Bayesian
    posterior mean E[y | x] of the Gaussian denoising model with prior
    density proportional to exp(-f).

They are verification tools only and never run in the optimization path.

A note on the soft Moreau envelope used here: the hard Moreau envelope is
min_y { f(y) + (x-y)^2 / (2 lambda) }, and the finite-temperature
relaxation that matches the canonical smoothed energy is

    -lambda * log INT exp( -f(y)/lambda - (x-y)^2 / (2 lambda) ) dy,

i.e. the Gaussian factor carries a single 1/lambda. Substituting
y = x + sqrt(lambda) z turns it into the smoothed energy plus the
constant lambda/2 * log(2 pi lambda).
"""

from typing import Callable

import numpy as np

DEFAULT_NODES = 256

# numpy's Golub-Welsch weight recurrence overflows somewhere above this
MAX_NODES = 370

_hermgauss_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def hermgauss(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes and weights for weight function exp(-u^2)."""
    if n_nodes < 2:
        raise ValueError("need at least 2 quadrature nodes")
    if n_nodes > MAX_NODES:
        raise ValueError(f"node counts above {MAX_NODES} overflow the "
                         "Hermite weight recurrence")
    if n_nodes not in _hermgauss_cache:
        _hermgauss_cache[n_nodes] = np.polynomial.hermite.hermgauss(n_nodes)
    return _hermgauss_cache[n_nodes]


def _log_weighted_exp_sum(weights, neg_exponents):
    """log(sum_i w_i exp(e_i)) with max-subtraction; e_i = -neg_exponents."""
    m = neg_exponents.min()
    s = np.sum(weights * np.exp(-(neg_exponents - m)))
    if s <= 0.0 or not np.isfinite(s):
        raise FloatingPointError("quadrature sum underflowed or is non-finite")
    return -m + np.log(s)


def moreau_oracle_1d(f: Callable[[float], float], x: float, lam: float,
                     grid: tuple[float, float, int] = (-20.0, 20.0, 4001)) -> float:
    """Moreau envelope min_y f(y) + (x-y)^2/(2 lam) by grid scan + refinement.

    The scan locates the best grid cell; a ternary-search pass inside the
    bracketing cell refines the minimizer. Raises if the scan minimum sits
    on the grid boundary, which means the grid does not contain the
    minimizer region.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    lo, hi, n = grid
    if n < 1000:
        raise ValueError("grid too coarse; use at least 1000 points")
    ys = np.linspace(lo, hi, n)
    g = np.array([f(y) + (x - y) ** 2 / (2.0 * lam) for y in ys])
    i = int(np.argmin(g))
    if i == 0 or i == n - 1:
        raise ValueError("minimizer at grid boundary; enlarge the grid")
    a, b = ys[i - 1], ys[i + 1]
    prox = lambda y: f(y) + (x - y) ** 2 / (2.0 * lam)
    for _ in range(200):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if prox(m1) <= prox(m2):
            b = m2
        else:
            a = m1
        if b - a < 1e-13 * max(1.0, abs(a) + abs(b)):
            break
    y_best = 0.5 * (a + b)
    return float(prox(y_best))


def soft_moreau_quadrature_1d(f: Callable, x: float, lam: float,
                              n_nodes: int = DEFAULT_NODES) -> float:
    """Finite-temperature Moreau envelope by Gauss-Hermite quadrature.

    Evaluates -lam log INT exp(-f(y)/lam - (x-y)^2/(2 lam)) dy with nodes
    centered at x and scaled by sqrt(lam), which absorbs the Gaussian
    factor into the quadrature weight exactly.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if n_nodes < 64:
        raise ValueError("use at least 64 nodes for the 1D oracles")
    u, w = hermgauss(n_nodes)
    scale = np.sqrt(2.0 * lam)
    ys = x + scale * u
    e = np.array([f(y) for y in ys]) / lam
    log_int = np.log(scale) + _log_weighted_exp_sum(w, e)
    return float(-lam * log_int)


def pgh_energy_quadrature_1d(f: Callable, x: float, t: float, s,
                             n_nodes: int = DEFAULT_NODES) -> float:
    """Smoothed energy F_t(x) = -lam log E_z[exp(-f(alpha x + beta z)/lam)].

    Gauss-Hermite over the standard normal z. At beta = 0 the expectation
    degenerates and f(alpha x) is returned exactly.
    """
    from .smoothing import schedule_eval

    alpha, beta, lam = schedule_eval(s, t)
    if beta == 0.0:
        return float(f(alpha * x))
    if n_nodes < 64:
        raise ValueError("use at least 64 nodes for the 1D oracles")
    u, w = hermgauss(n_nodes)
    zs = np.sqrt(2.0) * u
    e = np.array([f(alpha * x + beta * z) for z in zs]) / lam
    # normalize by sum(w) (= sqrt(pi)) so the expectation is a weighted mean
    log_mean = _log_weighted_exp_sum(w, e) - np.log(np.sum(w))
    return float(-lam * log_mean)


def log_marginal_quadrature_1d(f: Callable, x: float, lam: float,
                               n_nodes: int = DEFAULT_NODES) -> float:
    """log p_lam(x) for the marginal p_lam(x) = INT exp(-f(y)) N(x; y, lam) dy."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if n_nodes < 64:
        raise ValueError("use at least 64 nodes for the 1D oracles")
    u, w = hermgauss(n_nodes)
    ys = x + np.sqrt(2.0 * lam) * u
    e = np.array([f(y) for y in ys])
    # GH absorbs N(x; y, lam) up to the 1/sqrt(pi) normalization
    return float(_log_weighted_exp_sum(w, e) - 0.5 * np.log(np.pi))


def posterior_mean_quadrature_1d(f: Callable, x: float, lam: float,
                                 n_nodes: int = DEFAULT_NODES) -> float:
    """E[y | x] under posterior density prop. to exp(-f(y)) N(x; y, lam).

    Both integrals share the Gauss-Hermite rule centered at x with scale
    sqrt(lam); the prior factor exp(-f) is max-stabilized before weighting.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if n_nodes < 64:
        raise ValueError("use at least 64 nodes for the 1D oracles")
    u, w = hermgauss(n_nodes)
    ys = x + np.sqrt(2.0 * lam) * u
    e = np.array([f(y) for y in ys])
    q = w * np.exp(-(e - e.min()))
    denom = q.sum()
    if denom <= 0.0 or not np.isfinite(denom):
        raise FloatingPointError("posterior normalizer underflowed")
    return float(np.sum(q * ys) / denom)


# built-in 1D test objectives for the verification suite
def quad_1d(y):
    return 0.5 * y * y


def cos_quad_1d(y):
    return np.cos(y) + 0.05 * y * y


def two_well_1d(y):
    return (y * y - 1.0) ** 2 + 0.1 * y


VERIFY_OBJECTIVES_1D = {
    "quadratic": quad_1d,
    "cos+0.05y^2": cos_quad_1d,
    "two-well quartic": two_well_1d,
}
