"""Differentiable benchmark objectives with analytic gradients.

Every objective is a plain value object carrying f, grad f, a box domain
and (when known) the global minimizer. The box constrains iterates and
initialization only; the formulas themselves are defined on all of R^n,
so perturbed sample points may leave the box.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class Objective:
    """A differentiable scalar field on R^dim with a box domain."""

    name: str
    dim: int
    eval: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    lo: np.ndarray
    hi: np.ndarray
    optimum: Optional[tuple[np.ndarray, float]] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not np.all(self.lo < self.hi):
            raise ValueError("box must satisfy lo < hi componentwise")

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lo, self.hi

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)


@dataclass
class EvalCounter:
    """Counts combined (f, grad f) evaluation units consumed by a run."""

    count: int = 0

    def add(self, n: int = 1):
        if n < 0:
            raise ValueError("cannot decrement an evaluation counter")
        self.count += n


def eval_with_grad(obj: Objective, x: np.ndarray, counter: EvalCounter):
    """Evaluate f and its gradient at x for one combined evaluation unit."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite component in evaluation point")
    f = obj.eval(x)
    g = obj.grad(x)
    counter.add(1)
    return f, g


def fd_gradient_check(obj: Objective, x: np.ndarray, h: float) -> float:
    """Max relative disagreement between analytic and central-difference gradients.

    Relative error per component uses denominator max(|g_i|, 1e-8).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    g = np.asarray(obj.grad(x), dtype=float)
    fd = np.empty_like(g)
    for i in range(obj.dim):
        e = np.zeros(obj.dim)
        e[i] = h
        fd[i] = (obj.eval(x + e) - obj.eval(x - e)) / (2.0 * h)
    denom = np.maximum(np.abs(g), 1e-8)
    return float(np.max(np.abs(fd - g) / denom))


# ---------------------------------------------------------------------------
# benchmark formulas
# ---------------------------------------------------------------------------

def _ackley_eval(x):
    n = x.size
    r = np.sqrt(np.sum(x * x) / n)
    c = np.sum(np.cos(2.0 * np.pi * x)) / n
    # terms grouped so both cancellations at the optimum are exact
    return float((20.0 - 20.0 * np.exp(-0.2 * r)) + (np.e - np.exp(c)))


def _ackley_grad(x):
    n = x.size
    s = np.sum(x * x)
    c = np.sum(np.cos(2.0 * np.pi * x)) / n
    g = (2.0 * np.pi / n) * np.exp(c) * np.sin(2.0 * np.pi * x)
    if s > 0.0:
        r = np.sqrt(s / n)
        # radial term is kinked at the origin; its limit contribution there is 0
        g = g + 4.0 * np.exp(-0.2 * r) * x / (n * r)
    return g


def _griewank_eval(x):
    # quadratic coefficient 1/40 (not the older 1/4000 convention)
    idx = np.sqrt(np.arange(1.0, x.size + 1.0))
    return float(np.sum(x * x) / 40.0 - np.prod(np.cos(x / idx)) + 1.0)


def _griewank_grad(x):
    idx = np.sqrt(np.arange(1.0, x.size + 1.0))
    u = x / idx
    cos_u = np.cos(u)
    # product over j != i via prefix/suffix products; robust to zero factors
    n = x.size
    prefix = np.ones(n)
    suffix = np.ones(n)
    np.cumprod(cos_u[:-1], out=prefix[1:])
    np.cumprod(cos_u[:0:-1], out=suffix[-2::-1])
    prod_wo_i = prefix * suffix
    return x / 20.0 + np.sin(u) / idx * prod_wo_i


def _alpine1_eval(x):
    return float(np.sum(np.abs(x * np.sin(x) + 0.1 * x)))


def _alpine1_grad(x):
    u = x * np.sin(x) + 0.1 * x
    # subgradient sign(0) := 0 at the kink set
    return np.sign(u) * (np.sin(x) + x * np.cos(x) + 0.1)


def _levy_w(x):
    return 1.0 + (x - 1.0) / 4.0


def _levy_eval(x):
    w = _levy_w(x)
    head = np.sin(np.pi * w[0]) ** 2
    mid = w[:-1]
    middle = np.sum((mid - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * mid + 1.0) ** 2))
    tail = (w[-1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[-1]) ** 2)
    return float(head + middle + tail)


def _levy_grad(x):
    w = _levy_w(x)
    g = np.zeros_like(w)
    g[0] += np.pi * np.sin(2.0 * np.pi * w[0])
    mid = w[:-1]
    theta = np.pi * mid + 1.0
    g[:-1] += 2.0 * (mid - 1.0) * (1.0 + 10.0 * np.sin(theta) ** 2) \
        + 10.0 * np.pi * (mid - 1.0) ** 2 * np.sin(2.0 * theta)
    wn = w[-1]
    g[-1] += 2.0 * (wn - 1.0) * (1.0 + np.sin(2.0 * np.pi * wn) ** 2) \
        + 2.0 * np.pi * (wn - 1.0) ** 2 * np.sin(4.0 * np.pi * wn)
    return g / 4.0  # dw/dx


def _logrosen_eval(x, alpha):
    x1, x2 = x[0], x[1]
    rosen = 100.0 * (x2 - x1 * x1) ** 2 + (1.0 - x1) ** 2
    return float(np.log(rosen + alpha * (1.0 + np.sin(3.0 * x1) * np.sin(3.0 * x2))))


def _logrosen_grad(x, alpha):
    x1, x2 = x[0], x[1]
    rosen = 100.0 * (x2 - x1 * x1) ** 2 + (1.0 - x1) ** 2
    inner = rosen + alpha * (1.0 + np.sin(3.0 * x1) * np.sin(3.0 * x2))
    d1 = -400.0 * x1 * (x2 - x1 * x1) - 2.0 * (1.0 - x1) \
        + 3.0 * alpha * np.cos(3.0 * x1) * np.sin(3.0 * x2)
    d2 = 200.0 * (x2 - x1 * x1) + 3.0 * alpha * np.sin(3.0 * x1) * np.cos(3.0 * x2)
    return np.array([d1, d2]) / inner


def _box(dim, half_width):
    return -half_width * np.ones(dim), half_width * np.ones(dim)


def make_benchmark(name: str, dim: int, alpha: float = 10.0) -> Objective:
    """Build a benchmark objective by name.

    Names: ackley, griewank, alpine1, levy (any dim >= 1) and logrosen
    (2D only). `alpha` is the ripple amplitude of logrosen; there is no
    standard value for it, 10.0 is this library's default.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if name == "ackley":
        lo, hi = _box(dim, 5.0)
        return Objective("ackley", dim, _ackley_eval, _ackley_grad, lo, hi,
                         optimum=(np.zeros(dim), 0.0))
    if name == "griewank":
        lo, hi = _box(dim, 600.0)
        return Objective("griewank", dim, _griewank_eval, _griewank_grad, lo, hi,
                         optimum=(np.zeros(dim), 0.0))
    if name == "alpine1":
        lo, hi = _box(dim, 10.0)
        return Objective("alpine1", dim, _alpine1_eval, _alpine1_grad, lo, hi,
                         optimum=(np.zeros(dim), 0.0))
    if name == "levy":
        lo, hi = _box(dim, 10.0)
        return Objective("levy", dim, _levy_eval, _levy_grad, lo, hi,
                         optimum=(np.ones(dim), 0.0))
    if name == "logrosen":
        if dim != 2:
            raise ValueError("logrosen is defined for dim = 2 only")
        lo, hi = _box(2, 2.0)
        return Objective("logrosen", 2,
                         lambda x: _logrosen_eval(x, alpha),
                         lambda x: _logrosen_grad(x, alpha),
                         lo, hi)
    raise ValueError(f"unknown benchmark {name!r}; known: {sorted(BENCHMARK_NAMES)}")


BENCHMARK_NAMES = ("ackley", "griewank", "alpine1", "levy", "logrosen")


def quadratic_objective(dim: int, center=None, half_width: float = 10.0) -> Objective:
    """Convex test objective 0.5*||x - c||^2 (not part of the benchmark set)."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    lo, hi = _box(dim, half_width)
    return Objective(
        "quadratic", dim,
        lambda x: float(0.5 * np.sum((x - c) ** 2)),
        lambda x: x - c,
        lo, hi,
        optimum=(c.copy(), 0.0),
    )
