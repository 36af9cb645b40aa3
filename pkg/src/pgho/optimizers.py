"""Update rules, run configuration and the four run drivers.

Drivers: the probabilistic homotopy method (soft-min weighted gradients
along an annealed schedule), classical Gaussian-homotopy continuation
(uniform gradient averaging along the same schedule), plain GD/Adam on
the raw objective, and pure random search.

Reproducibility contract: every random stream is keyed by the tuple
(seed, trial, stream tag, particle, iteration) through numpy's
SeedSequence, so traces are bit-identical for a fixed (config, seed)
regardless of how trials are scheduled across workers. Initialization
uses stream tag 1, per-iteration perturbation noise tag 2, random search
tag 3.

Evaluation accounting: one combined (f, grad f) call costs 1 unit. The
per-iteration success check evaluates the raw objective at each particle
and costs 1 unit per particle; `count_success_checks=False` switches to
the accounting mode where those checks are free. Plain GD/Adam reuse the
objective value from their own gradient call for the success check, so
they consume exactly 1 unit per particle per iteration. A run never
starts new work once the budget is consumed; at most one in-flight
particle step plus the boundary success checks may overshoot.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .objectives import Objective, EvalCounter, eval_with_grad
from .smoothing import (
    make_schedule,
    sample_noise,
    softmin_gradient,
    classical_gh_gradient,
    schedule_eval,
)

METHODS = ("pgho", "gh", "gd", "adam", "prs")

_INIT_TAG = 1
_NOISE_TAG = 2
_PRS_TAG = 3

_PRS_CHUNK = 512


def _stream(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(key)))


@dataclass
class UpdateRule:
    """Per-particle base update: plain gradient step or bias-corrected Adam."""

    kind: str = "gd"
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    step_index: int = 0

    def __post_init__(self):
        if self.kind not in ("gd", "adam"):
            raise ValueError(f"unknown update rule {self.kind!r}")


def apply_update(rule: UpdateRule, x: np.ndarray, g: np.ndarray,
                 eta: float) -> np.ndarray:
    """One descent step; mutates Adam state, gd is stateless."""
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite gradient passed to update rule")
    if rule.kind == "gd":
        return x - eta * g
    if rule.m is None:
        rule.m = np.zeros_like(x)
        rule.v = np.zeros_like(x)
    rule.step_index += 1
    t = rule.step_index
    rule.m = rule.beta1 * rule.m + (1.0 - rule.beta1) * g
    rule.v = rule.beta2 * rule.v + (1.0 - rule.beta2) * g * g
    m_hat = rule.m / (1.0 - rule.beta1 ** t)
    v_hat = rule.v / (1.0 - rule.beta2 ** t)
    return x - eta * m_hat / (np.sqrt(v_hat) + rule.eps_adam)


@dataclass
class RunConfig:
    """Full parameterization of a single optimization run."""

    method: str = "pgho"
    update: str = "gd"              # base rule for the homotopy methods
    T: int = 100                    # homotopy steps
    B: int = 1                      # particles
    K: int = 4                      # Monte Carlo samples per step
    eta0: float = 1.0
    lr_schedule: str = "cosine"     # cosine | constant
    t_schedule: str = "linear"      # linear | sqrt_from_tmin
    t_min: float = 0.0
    schedule_kind: str = "canonical"
    eps: float = 0.1                # perturbation scale beta(0)
    lambda_min: float = 1e-8
    budget: int = 200_000
    success_threshold: float = 0.05
    seed: int = 0
    box_init: bool = True
    antithetic: bool = True
    early_stop: bool = True
    count_success_checks: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.update not in ("gd", "adam"):
            raise ValueError(f"unknown update rule {self.update!r}")
        if self.method in ("gd", "adam"):
            self.update = self.method
        if self.lr_schedule not in ("cosine", "constant"):
            raise ValueError(f"unknown lr schedule {self.lr_schedule!r}")
        if self.t_schedule not in ("linear", "sqrt_from_tmin"):
            raise ValueError(f"unknown t schedule {self.t_schedule!r}")
        if self.T < 2 or self.B < 1 or self.K < 1:
            raise ValueError("need T >= 2, B >= 1, K >= 1")
        if self.budget < self.K:
            raise ValueError("budget must cover at least one estimate (>= K)")
        if not 0.0 <= self.t_min < 1.0:
            raise ValueError("t_min must lie in [0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def lr_at(cfg: RunConfig, k: int) -> float:
    """Step size at iteration k; the cosine decays to 0 at k = T-1 and stays."""
    if k < 0:
        raise ValueError("iteration index must be non-negative")
    if cfg.lr_schedule == "constant":
        return cfg.eta0
    frac = min(k, cfg.T - 1) / (cfg.T - 1)
    return cfg.eta0 * 0.5 * (1.0 + np.cos(np.pi * frac))


def t_at(cfg: RunConfig, k: int) -> float:
    """Homotopy time at iteration k; pinned to 1 for k >= T-1."""
    if k < 0:
        raise ValueError("iteration index must be non-negative")
    frac = min(k / (cfg.T - 1), 1.0)
    if cfg.t_schedule == "linear":
        return frac
    return cfg.t_min + (1.0 - cfg.t_min) * np.sqrt(frac)


@dataclass
class RunRecord:
    """Trace and outcome of one run.

    The trace records the state at every iteration where the running best
    improved, plus the final iteration; between recorded rows the best is
    unchanged, so step interpolation over the rows reconstructs the full
    per-iteration history.
    """

    method: str
    iters: np.ndarray
    ts: np.ndarray
    best_f: np.ndarray
    evals_used: np.ndarray
    final_particles: np.ndarray
    success: bool
    evals_at_success: Optional[int]
    evals_total: int
    n_iterations: int


class _Trace:
    def __init__(self):
        self.rows = []

    def record(self, k, t, best, evals):
        if self.rows and self.rows[-1][3] == evals:
            self.rows[-1] = (k, t, best, evals)
        else:
            self.rows.append((k, t, best, evals))

    def arrays(self):
        if not self.rows:
            z = np.empty(0)
            return z.astype(int), z, z, z.astype(int)
        it, ts, bf, ev = zip(*self.rows)
        return (np.array(it, dtype=int), np.array(ts), np.array(bf),
                np.array(ev, dtype=int))


def _init_particles(obj: Objective, cfg: RunConfig, trial: int,
                    x0) -> np.ndarray:
    if x0 is not None:
        arr = np.array(x0, dtype=float)
        if arr.ndim == 1:
            arr = np.tile(arr, (cfg.B, 1))
        if arr.shape != (cfg.B, obj.dim):
            raise ValueError(f"x0 must have shape ({cfg.B}, {obj.dim})")
        return obj.clamp(arr)
    rng = _stream(cfg.seed, trial, _INIT_TAG)
    if cfg.box_init:
        return rng.uniform(obj.lo, obj.hi, size=(cfg.B, obj.dim))
    return obj.clamp(rng.standard_normal((cfg.B, obj.dim)))


def _finish(cfg, method, trace, particles, best, success, evals_at_success,
            counter, k):
    iters, ts, bf, ev = trace.arrays()
    return RunRecord(method=method, iters=iters, ts=ts, best_f=bf,
                     evals_used=ev, final_particles=particles,
                     success=success, evals_at_success=evals_at_success,
                     evals_total=counter.count, n_iterations=k)


def _homotopy_run(obj: Objective, cfg: RunConfig, trial, x0, use_softmin):
    sched = make_schedule(cfg.schedule_kind, cfg.eps, cfg.lambda_min)
    counter = EvalCounter()
    check_cost = cfg.B if cfg.count_success_checks else 0
    if cfg.budget < cfg.B * cfg.K + check_cost:
        raise ValueError("budget smaller than one iteration's cost")
    particles = _init_particles(obj, cfg, trial, x0)
    rules = [UpdateRule(cfg.update) for _ in range(cfg.B)]
    trace = _Trace()
    best = np.inf
    success = False
    evals_at_success = None
    k = 0
    while counter.count < cfg.budget:
        t_k = t_at(cfg, k)
        eta = lr_at(cfg, k)
        exhausted = False
        for i in range(cfg.B):
            if counter.count >= cfg.budget:
                exhausted = True
                break
            noise = sample_noise(_stream(cfg.seed, trial, _NOISE_TAG, i, k),
                                 cfg.K, obj.dim, cfg.antithetic)
            if use_softmin:
                g = softmin_gradient(obj, particles[i], t_k, sched, noise,
                                     counter).grad
            else:
                _, beta, _ = schedule_eval(sched, t_k)
                _, g = classical_gh_gradient(obj, particles[i], beta, noise,
                                             counter)
            particles[i] = obj.clamp(apply_update(rules[i], particles[i], g, eta))
        improved = False
        for i in range(cfg.B):
            fv = obj.eval(particles[i])
            if cfg.count_success_checks:
                counter.add(1)
            if fv < best:
                best = fv
                improved = True
        if improved or k == 0:
            trace.record(k, t_k, best, counter.count)
        if not success and best < cfg.success_threshold:
            success = True
            evals_at_success = counter.count
        k += 1
        if (success and cfg.early_stop) or exhausted:
            break
    trace.record(k - 1, t_at(cfg, max(k - 1, 0)), best, counter.count)
    return _finish(cfg, cfg.method, trace, particles, best, success,
                   evals_at_success, counter, k)


def pgho_run(obj: Objective, cfg: RunConfig, trial: int = 0,
             x0=None) -> RunRecord:
    """Soft-min weighted Monte Carlo homotopy descent (the main method)."""
    if cfg.method != "pgho":
        raise ValueError("config method must be 'pgho'")
    return _homotopy_run(obj, cfg, trial, x0, use_softmin=True)


def gh_run(obj: Objective, cfg: RunConfig, trial: int = 0,
           x0=None) -> RunRecord:
    """Classical continuation: uniform gradient averaging, sigma(t) = beta(t)."""
    if cfg.method != "gh":
        raise ValueError("config method must be 'gh'")
    return _homotopy_run(obj, cfg, trial, x0, use_softmin=False)


def baseline_run(obj: Objective, cfg: RunConfig, trial: int = 0,
                 x0=None) -> RunRecord:
    """Plain GD or Adam on the raw objective; 1 evaluation per particle step."""
    if cfg.method not in ("gd", "adam"):
        raise ValueError("config method must be 'gd' or 'adam'")
    counter = EvalCounter()
    if cfg.budget < cfg.B:
        raise ValueError("budget smaller than one iteration's cost")
    particles = _init_particles(obj, cfg, trial, x0)
    rules = [UpdateRule(cfg.method) for _ in range(cfg.B)]
    trace = _Trace()
    best = np.inf
    success = False
    evals_at_success = None
    k = 0
    while counter.count < cfg.budget:
        eta = lr_at(cfg, k)
        improved = False
        exhausted = False
        for i in range(cfg.B):
            if counter.count >= cfg.budget:
                exhausted = True
                break
            fv, g = eval_with_grad(obj, particles[i], counter)
            if fv < best:
                best = fv
                improved = True
            particles[i] = obj.clamp(apply_update(rules[i], particles[i], g, eta))
        if improved or k == 0:
            trace.record(k, 1.0, best, counter.count)
        if not success and best < cfg.success_threshold:
            success = True
            evals_at_success = counter.count
        k += 1
        if (success and cfg.early_stop) or exhausted:
            break
    trace.record(k - 1, 1.0, best, counter.count)
    return _finish(cfg, cfg.method, trace, particles, best, success,
                   evals_at_success, counter, k)


def prs_run(obj: Objective, cfg: RunConfig, trial: int = 0,
            x0=None) -> RunRecord:
    """Uniform random sampling of the box, keeping the best value observed."""
    if cfg.method != "prs":
        raise ValueError("config method must be 'prs'")
    counter = EvalCounter()
    rng = _stream(cfg.seed, trial, _PRS_TAG)
    trace = _Trace()
    best = np.inf
    x_best = obj.clamp(np.zeros(obj.dim))
    success = False
    evals_at_success = None
    k = 0
    done = False
    while not done and counter.count < cfg.budget:
        n = min(_PRS_CHUNK, cfg.budget - counter.count)
        pts = rng.uniform(obj.lo, obj.hi, size=(n, obj.dim))
        for j in range(n):
            fv = obj.eval(pts[j])
            counter.add(1)
            if fv < best:
                best = fv
                x_best = pts[j].copy()
                trace.record(k, 1.0, best, counter.count)
            if not success and best < cfg.success_threshold:
                success = True
                evals_at_success = counter.count
                if cfg.early_stop:
                    done = True
            k += 1
            if done:
                break
    trace.record(k - 1, 1.0, best, counter.count)
    return _finish(cfg, "prs", trace, x_best[None, :], best, success,
                   evals_at_success, counter, k)


def run(obj: Objective, cfg: RunConfig, trial: int = 0, x0=None) -> RunRecord:
    """Dispatch on cfg.method."""
    if cfg.method == "pgho":
        return pgho_run(obj, cfg, trial, x0)
    if cfg.method == "gh":
        return gh_run(obj, cfg, trial, x0)
    if cfg.method in ("gd", "adam"):
        return baseline_run(obj, cfg, trial, x0)
    return prs_run(obj, cfg, trial, x0)
