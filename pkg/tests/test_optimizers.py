import numpy as np
import pytest

from pgho import (
    EvalCounter,
    RunConfig,
    UpdateRule,
    apply_update,
    baseline_run,
    canonical_schedule,
    gh_run,
    lr_at,
    make_benchmark,
    pgho_run,
    prs_run,
    quadratic_objective,
    run,
    sample_noise,
    softmin_gradient,
    t_at,
)
from pgho.objectives import Objective
from pgho.optimizers import _NOISE_TAG, _stream


def constant_objective(dim, c):
    return Objective("const", dim, lambda x: c, lambda x: np.zeros(dim),
                     -10.0 * np.ones(dim), 10.0 * np.ones(dim))


def linear_objective(dim, a):
    a = np.asarray(a, dtype=float)
    return Objective("linear", dim, lambda x: float(a @ x), lambda x: a,
                     -10.0 * np.ones(dim), 10.0 * np.ones(dim))


class TestSchedules:
    def test_cosine_endpoints(self):
        cfg = RunConfig(T=101, eta0=1.0, lr_schedule="cosine")
        assert lr_at(cfg, 0) == 1.0
        assert lr_at(cfg, 100) == pytest.approx(0.0, abs=1e-16)
        assert lr_at(cfg, 5000) == pytest.approx(0.0, abs=1e-16)

    def test_cosine_midpoint(self):
        cfg = RunConfig(T=101, eta0=2.0)
        assert lr_at(cfg, 50) == pytest.approx(1.0, abs=1e-12)

    def test_constant(self):
        cfg = RunConfig(T=50, eta0=0.3, lr_schedule="constant")
        assert lr_at(cfg, 0) == lr_at(cfg, 10_000) == 0.3

    def test_t_linear(self):
        cfg = RunConfig(T=101)
        assert t_at(cfg, 0) == 0.0
        assert t_at(cfg, 100) == 1.0
        assert t_at(cfg, 250) == 1.0
        assert t_at(cfg, 25) == 0.25

    def test_t_sqrt_from_tmin(self):
        cfg = RunConfig(T=101, t_schedule="sqrt_from_tmin", t_min=0.37)
        assert t_at(cfg, 0) == 0.37
        assert t_at(cfg, 25) == pytest.approx(0.37 + 0.63 * 0.5)
        assert t_at(cfg, 100) == pytest.approx(1.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RunConfig(T=1)
        with pytest.raises(ValueError):
            RunConfig(t_min=1.0)
        with pytest.raises(ValueError):
            RunConfig(method="nope")
        with pytest.raises(ValueError):
            RunConfig(K=4, budget=2)


class TestApplyUpdate:
    def test_gd_step(self):
        rule = UpdateRule("gd")
        x = apply_update(rule, np.array([1.0, 1.0]), np.array([1.0, 0.0]), 0.5)
        assert np.array_equal(x, np.array([0.5, 1.0]))

    def test_gd_zero_gradient(self):
        rule = UpdateRule("gd")
        x0 = np.array([0.7, -0.3])
        assert np.array_equal(apply_update(rule, x0, np.zeros(2), 1.0), x0)

    def test_adam_first_step_magnitude(self):
        rule = UpdateRule("adam")
        x0 = np.array([1.0, -2.0, 3.0])
        g = np.array([10.0, -0.5, 1e-3])
        eta = 0.1
        x1 = apply_update(rule, x0, g, eta)
        step = np.abs(x1 - x0)
        assert np.all(step >= 0.9 * eta)
        assert np.all(step <= eta)
        assert np.all(np.sign(x0 - x1) == np.sign(g))
        assert rule.step_index == 1

    def test_adam_zero_gradient_stationary(self):
        rule = UpdateRule("adam")
        x = np.array([0.5, 0.5])
        for _ in range(3):
            x = apply_update(rule, x, np.zeros(2), 0.1)
        assert np.array_equal(x, np.array([0.5, 0.5]))

    def test_rejects_non_finite_gradient(self):
        with pytest.raises(ValueError):
            apply_update(UpdateRule("gd"), np.zeros(2),
                         np.array([np.nan, 0.0]), 0.1)


class TestPghoRun:
    def test_convex_quadratic_succeeds_fast(self):
        # plain GD contracts this quadratic by 1/2 per unit step, so the
        # smoothed method has no excuse: well under 5000 evaluations
        obj = quadratic_objective(10)
        cfg = RunConfig(method="pgho", T=100, K=4, eta0=0.5,
                        lr_schedule="constant", eps=0.5,
                        success_threshold=0.05, budget=200_000, seed=3)
        rec = pgho_run(obj, cfg)
        assert rec.success
        assert rec.evals_at_success < 5000

    def test_constant_objective_never_succeeds(self):
        obj = constant_objective(3, 5.0)
        cfg = RunConfig(method="pgho", T=10, K=2, budget=200,
                        success_threshold=1e-2, seed=0)
        rec = pgho_run(obj, cfg)
        assert not rec.success
        assert rec.evals_at_success is None
        assert np.all(rec.best_f == 5.0)

    def test_trace_invariants(self):
        obj = make_benchmark("ackley", 5)
        cfg = RunConfig(method="pgho", T=40, K=4, eta0=1.0, eps=1.0,
                        budget=2000, success_threshold=1e-12, seed=5)
        rec = pgho_run(obj, cfg)
        assert np.all(np.diff(rec.best_f) <= 0.0)
        assert np.all(np.diff(rec.evals_used) > 0)
        assert rec.evals_total <= cfg.budget + cfg.K * cfg.B
        assert rec.evals_used[-1] == rec.evals_total

    def test_determinism_bit_identical(self):
        obj = make_benchmark("griewank", 4)
        cfg = RunConfig(method="pgho", T=20, K=4, eta0=5.0, eps=50.0,
                        budget=500, success_threshold=1e-9, seed=11)
        a = pgho_run(obj, cfg, trial=2)
        b = pgho_run(obj, cfg, trial=2)
        assert np.array_equal(a.best_f, b.best_f)
        assert np.array_equal(a.final_particles, b.final_particles)
        c = pgho_run(obj, cfg, trial=3)
        assert not np.array_equal(a.final_particles, c.final_particles)

    def test_budget_smaller_than_iteration_cost(self):
        obj = make_benchmark("ackley", 3)
        cfg = RunConfig(method="pgho", K=8, B=2, budget=10, seed=0)
        with pytest.raises(ValueError, match="one iteration's cost"):
            pgho_run(obj, cfg)

    def test_box_feasibility(self):
        obj = make_benchmark("ackley", 4)
        cfg = RunConfig(method="pgho", T=30, K=2, eta0=50.0, eps=3.0,
                        budget=600, success_threshold=1e-12, seed=7)
        rec = pgho_run(obj, cfg)
        assert np.all(rec.final_particles >= obj.lo)
        assert np.all(rec.final_particles <= obj.hi)

    def test_driver_matches_manual_simulation(self):
        # re-derive the trajectory from the documented stream keying; after
        # the homotopy phase (k >= T-1) each step must equal a plain
        # gradient step on f
        obj = quadratic_objective(3)
        cfg = RunConfig(method="pgho", T=2, K=4, eta0=0.25,
                        lr_schedule="constant", eps=0.5,
                        budget=(4 + 1) * 4, success_threshold=-1.0,
                        seed=21, early_stop=False)
        rec = pgho_run(obj, cfg, trial=0)
        sched = canonical_schedule(cfg.eps, cfg.lambda_min)
        x = pgho_run(obj, RunConfig(**{**cfg.__dict__, "budget": cfg.K + 1}),
                     trial=0).final_particles[0]  # state after iteration 0
        manual = x.copy()
        for k in range(1, 4):
            t_k = t_at(cfg, k)
            assert t_k == 1.0
            noise = sample_noise(_stream(cfg.seed, 0, _NOISE_TAG, 0, k),
                                 cfg.K, obj.dim, cfg.antithetic)
            est = softmin_gradient(obj, manual, t_k, sched, noise,
                                   EvalCounter())
            assert np.array_equal(est.grad, obj.grad(manual))
            manual = obj.clamp(manual - cfg.eta0 * est.grad)
        assert np.allclose(rec.final_particles[0], manual, rtol=0, atol=0)

    def test_multi_particle_runs(self):
        obj = make_benchmark("levy", 3)
        cfg = RunConfig(method="pgho", T=10, B=3, K=2, eta0=0.5, eps=1.0,
                        budget=300, success_threshold=1e-12, seed=2)
        rec = pgho_run(obj, cfg)
        assert rec.final_particles.shape == (3, 3)

    def test_early_stop_toggle(self):
        obj = quadratic_objective(4)
        base = dict(method="pgho", T=50, K=2, eta0=0.5,
                    lr_schedule="constant", eps=0.3, budget=3000,
                    success_threshold=0.05, seed=9)
        stop = pgho_run(obj, RunConfig(**base))
        full = pgho_run(obj, RunConfig(**{**base, "early_stop": False}))
        assert stop.success and full.success
        assert stop.evals_total < full.evals_total
        assert full.evals_at_success == stop.evals_at_success


class TestGhRun:
    def test_linear_matches_plain_gd_trajectory(self):
        obj = linear_objective(3, [1.0, -2.0, 0.5])
        x0 = np.array([0.2, 0.3, -0.4])
        iters = 8
        gh_cfg = RunConfig(method="gh", T=10, K=4, eta0=0.1,
                           lr_schedule="constant",
                           budget=iters * 5, success_threshold=-np.inf,
                           seed=4)
        gd_cfg = RunConfig(method="gd", T=10, eta0=0.1,
                           lr_schedule="constant", budget=iters,
                           success_threshold=-np.inf, seed=4)
        a = gh_run(obj, gh_cfg, x0=x0)
        b = baseline_run(obj, gd_cfg, x0=x0)
        assert a.n_iterations == b.n_iterations == iters
        assert np.allclose(a.final_particles, b.final_particles,
                           rtol=0, atol=0)

    def test_constant_objective_never_moves(self):
        obj = constant_objective(2, 3.0)
        cfg = RunConfig(method="gh", T=5, K=2, eta0=1.0, budget=60,
                        success_threshold=0.1, seed=6)
        x0 = np.array([1.0, -1.0])
        rec = gh_run(obj, cfg, x0=x0)
        assert np.array_equal(rec.final_particles[0], x0)


class TestBaselineRun:
    def test_quadratic_geometric_contraction(self):
        # x_{k+1} = x_k - 0.5 x_k exactly halves the iterate every step
        obj = quadratic_objective(4)
        x0 = np.array([8.0, -4.0, 2.0, 1.0])
        cfg = RunConfig(method="gd", eta0=0.5, lr_schedule="constant",
                        T=10, budget=6, success_threshold=-np.inf, seed=0)
        rec = baseline_run(obj, cfg, x0=x0)
        assert np.array_equal(rec.final_particles[0], x0 * 0.5 ** 6)

    def test_adam_runs_and_descends(self):
        obj = quadratic_objective(6)
        cfg = RunConfig(method="adam", eta0=0.5, lr_schedule="constant",
                        T=10, budget=500, success_threshold=0.05, seed=1)
        rec = baseline_run(obj, cfg)
        assert rec.success

    def test_gd_traps_on_ackley(self):
        # the ripple structure should trap plain descent from most starts
        obj = make_benchmark("ackley", 10)
        successes = 0
        for trial in range(12):
            cfg = RunConfig(method="gd", eta0=0.05, T=2000, budget=20_000,
                            success_threshold=0.05, seed=123)
            rec = baseline_run(obj, cfg, trial=trial)
            successes += rec.success
        assert successes / 12 < 0.5

    def test_one_eval_per_iteration_per_particle(self):
        obj = quadratic_objective(2)
        cfg = RunConfig(method="gd", eta0=0.1, lr_schedule="constant",
                        T=5, B=2, budget=20, success_threshold=-np.inf,
                        seed=0)
        rec = baseline_run(obj, cfg)
        assert rec.evals_total == 20
        assert rec.n_iterations == 10


class TestPrsRun:
    def test_best_non_increasing(self):
        obj = make_benchmark("ackley", 4)
        cfg = RunConfig(method="prs", budget=2000,
                        success_threshold=1e-12, seed=8)
        rec = prs_run(obj, cfg)
        assert np.all(np.diff(rec.best_f) <= 0.0)
        # all rows except the terminal one are improvement events
        assert np.all(np.diff(rec.best_f[:-1]) < 0.0)
        assert rec.evals_total == 2000

    def test_easy_1d_target_is_hit(self):
        # threshold region |x| < 0.1 is 10% of the box; 1e4 draws miss it
        # with probability 0.9^10000
        obj = Objective("sq", 1, lambda x: float(x[0] ** 2),
                        lambda x: 2.0 * x, np.array([-1.0]), np.array([1.0]))
        cfg = RunConfig(method="prs", budget=10_000,
                        success_threshold=1e-2, seed=12)
        rec = prs_run(obj, cfg)
        assert rec.success

    def test_determinism(self):
        obj = make_benchmark("griewank", 3)
        cfg = RunConfig(method="prs", budget=500, success_threshold=0.0,
                        seed=13)
        a = prs_run(obj, cfg, trial=1)
        b = prs_run(obj, cfg, trial=1)
        assert np.array_equal(a.best_f, b.best_f)
        assert np.array_equal(a.evals_used, b.evals_used)


class TestDispatch:
    def test_run_routes_by_method(self):
        obj = quadratic_objective(2)
        for method in ("pgho", "gh", "gd", "adam", "prs"):
            cfg = RunConfig(method=method, T=5, K=2, eta0=0.1, budget=60,
                            success_threshold=1e-12, seed=0)
            rec = run(obj, cfg)
            assert rec.method == method

    def test_method_mismatch_rejected(self):
        obj = quadratic_objective(2)
        cfg = RunConfig(method="gd", budget=10, seed=0)
        with pytest.raises(ValueError):
            pgho_run(obj, cfg)
