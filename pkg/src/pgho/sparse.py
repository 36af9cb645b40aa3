"""Sparse recovery from undersampled linear measurements.

Model: y = A x_true + noise with A (m x n), m < n, x_true k-sparse.
Recovery minimizes the smooth l0-regularized least squares

    f_tau(x) = 0.5 ||A x - y||^2 + lambda_reg * sum_i (1 - exp(-x_i^2 / tau^2)),

whose penalty approaches the support count ||x||_0 as tau -> 0 while
staying differentiable for fixed tau. The regularization-path experiment
runs each configured method over a lambda grid from the zero vector and
records the misfit/sparsity tradeoff of the final iterate.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .objectives import Objective
from .optimizers import RunConfig, run


@dataclass(frozen=True)
class SparseProblem:
    A: np.ndarray            # (m, n), entries N(0, 1/m)
    y: np.ndarray            # (m,)
    x_true: np.ndarray       # (n,), exactly k nonzeros
    noise_sigma: float
    tau: float
    m: int
    n: int
    k: int
    seed: int


def generate_sparse_problem(n: int, m: int, k: int, noise_sigma: float,
                            tau: float, seed: int) -> SparseProblem:
    """Draw a random sensing problem.

    Columns of A have unit expected norm (entries scaled by 1/sqrt(m)).
    Ground-truth nonzeros are standard normal pushed away from zero to
    magnitude at least 0.5, so they stay distinguishable from noise.
    """
    if not (k <= n and m < n):
        raise ValueError("need k <= n and m < n")
    if k < 1 or m < 1:
        raise ValueError("need k >= 1 and m >= 1")
    if tau <= 0:
        raise ValueError("tau must be positive")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA]))
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    support = rng.choice(n, size=k, replace=False)
    vals = rng.standard_normal(k)
    signs = np.where(vals >= 0.0, 1.0, -1.0)
    vals = signs * np.maximum(np.abs(vals), 0.5)
    x_true = np.zeros(n)
    x_true[support] = vals
    y = A @ x_true
    if noise_sigma > 0:
        y = y + noise_sigma * rng.standard_normal(m)
    return SparseProblem(A=A, y=y, x_true=x_true, noise_sigma=noise_sigma,
                         tau=tau, m=m, n=n, k=k, seed=seed)


def misfit(p: SparseProblem, x: np.ndarray) -> float:
    r = p.A @ x - p.y
    return float(0.5 * np.dot(r, r))


def l0_surrogate(x: np.ndarray, tau: float) -> float:
    """sum_i (1 - exp(-x_i^2/tau^2)); in [0, n], -> ||x||_0 as tau -> 0."""
    return float(np.sum(1.0 - np.exp(-(x * x) / (tau * tau))))


def smooth_l0_objective(p: SparseProblem, lambda_reg: float) -> Objective:
    """The smooth l0-regularized least-squares objective as an Objective.

    The domain is unbounded in principle; a wide box [-1e6, 1e6]^n stands
    in so the driver's clamping is a no-op in practice.
    """
    if lambda_reg <= 0:
        raise ValueError("lambda_reg must be positive")
    A, y, tau = p.A, p.y, p.tau
    tau2 = tau * tau

    def f(x):
        r = A @ x - y
        return float(0.5 * np.dot(r, r) + lambda_reg * np.sum(1.0 - np.exp(-(x * x) / tau2)))

    def g(x):
        r = A @ x - y
        return A.T @ r + lambda_reg * (2.0 * x / tau2) * np.exp(-(x * x) / tau2)

    lo = -1e6 * np.ones(p.n)
    hi = 1e6 * np.ones(p.n)
    return Objective(f"smooth_l0(lambda={lambda_reg:g})", p.n, f, g, lo, hi)


def support_jaccard(p: SparseProblem, x: np.ndarray) -> float:
    """Jaccard distance between {i: |x_i| > tau} and the true support."""
    est = np.abs(x) > p.tau
    true = p.x_true != 0.0
    union = np.count_nonzero(est | true)
    if union == 0:
        return 0.0
    inter = np.count_nonzero(est & true)
    return 1.0 - inter / union


@dataclass(frozen=True)
class PathEntry:
    lambda_reg: float
    method: str
    misfit: float
    surrogate: float
    objective: float
    support_jaccard: float


@dataclass(frozen=True)
class PathRecord:
    """Per-(method, lambda) averages over trials along a regularization path."""

    entries: tuple
    lambdas: tuple
    methods: tuple
    trials: int
    master_seed: int

    def for_method(self, method: str):
        return [e for e in self.entries if e.method == method]


def default_lambda_grid(n_values: int = 30, lo: float = 1e-2,
                        hi: float = 1.0) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), n_values)


def lambda_path_sweep(p: SparseProblem, methods: dict, lambdas,
                      trials: int = 3, master_seed: int = 0) -> PathRecord:
    """Run each named RunConfig over the lambda grid from the zero vector.

    Per (method, lambda, trial) the driver runs on the smooth l0 objective
    with the trial index salting the noise streams; recorded metrics are
    the final iterate's misfit, surrogate, objective value and support
    error, averaged over trials. Entries are ordered by method then
    ascending lambda.
    """
    lambdas = np.sort(np.asarray(lambdas, dtype=float))
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValueError("need a non-empty 1D lambda grid")
    if np.any(np.diff(lambdas) <= 0.0):
        raise ValueError("lambda grid values must be distinct")
    entries = []
    x0 = np.zeros(p.n)
    for name, cfg in methods.items():
        for lam in lambdas:
            obj = smooth_l0_objective(p, float(lam))
            mis = np.empty(trials)
            sur = np.empty(trials)
            fin = np.empty(trials)
            jac = np.empty(trials)
            for trial in range(trials):
                cfg_t = RunConfig(**{**cfg.__dict__, "seed": master_seed})
                rec = run(obj, cfg_t, trial=trial, x0=x0)
                xf = _best_particle(obj, rec)
                mis[trial] = misfit(p, xf)
                sur[trial] = l0_surrogate(xf, p.tau)
                fin[trial] = obj.eval(xf)
                jac[trial] = support_jaccard(p, xf)
            entries.append(PathEntry(
                lambda_reg=float(lam), method=name,
                misfit=float(mis.mean()), surrogate=float(sur.mean()),
                objective=float(fin.mean()), support_jaccard=float(jac.mean()),
            ))
    return PathRecord(entries=tuple(entries), lambdas=tuple(lambdas),
                      methods=tuple(methods), trials=trials,
                      master_seed=master_seed)


def _best_particle(obj: Objective, rec) -> np.ndarray:
    vals = [obj.eval(x) for x in rec.final_particles]
    return rec.final_particles[int(np.argmin(vals))]


PATH_CSV_COLUMNS = ("lambda", "method", "misfit", "surrogate", "objective",
                    "support_jaccard", "seed")


def path_record_to_csv(record: PathRecord) -> str:
    """Render a PathRecord in the documented column order.

    The seed column carries the sweep's master seed (entries are averages
    over its derived trial streams).
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PATH_CSV_COLUMNS)
    for e in record.entries:
        writer.writerow([
            f"{e.lambda_reg:.12g}", e.method, f"{e.misfit:.12g}",
            f"{e.surrogate:.12g}", f"{e.objective:.12g}",
            f"{e.support_jaccard:.12g}", record.master_seed,
        ])
    return buf.getvalue()
