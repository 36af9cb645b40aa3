"""Command-line entry point.

Subcommands
    bench   evaluations-to-success table over one or more benchmarks
    dims    fixed-budget success rate vs dimension scan
    curves  median/IQR convergence curves at evaluation checkpoints
    sparse  regularization-path sweep for sparse recovery
    verify  numerical checks of the smoothing identities and gradients
    tune    factorial (eta0, T) grid search for one method

Every run writes a manifest JSON recording the resolved config and seed
derivation; passing a manifest as --config reproduces the run. Exit
codes: 0 success, 1 config error, 2 runtime/numerical error (including a
failing verify suite).
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    apply_overrides,
    load_config,
    method_configs,
    runconfig_to_dict,
)
from .harness import (
    ExperimentSpec,
    convergence_curves,
    curves_rows,
    export_results,
    grid_search,
    run_experiment,
    stats_rows,
    success_vs_dimension,
)
from .objectives import fd_gradient_check, make_benchmark, quadratic_objective, EvalCounter
from .oracles import (
    VERIFY_OBJECTIVES_1D,
    log_marginal_quadrature_1d,
    pgh_energy_quadrature_1d,
    posterior_mean_quadrature_1d,
    soft_moreau_quadrature_1d,
)
from .smoothing import canonical_schedule, sample_noise, schedule_eval, softmin_gradient, softmin_value
from .sparse import (
    PATH_CSV_COLUMNS,
    default_lambda_grid,
    generate_sparse_problem,
    lambda_path_sweep,
)

SUBCOMMANDS = ("bench", "dims", "curves", "sparse", "verify", "tune")


@dataclass
class CliInvocation:
    subcommand: str
    config: str = ""
    overrides: list = field(default_factory=list)
    outdir: str = ""
    seed: int = None
    workers: int = 1
    fmt: str = "csv"


# ---------------------------------------------------------------------------
# verification suite
# ---------------------------------------------------------------------------

def _central_diff(fn, x, h):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def verify_suite(n_nodes: int = 128) -> list:
    """Quadrature and estimator checks; returns one row per check."""
    rows = []

    def add(name, achieved, tol):
        rows.append({"check": name, "achieved": float(achieved),
                     "tolerance": float(tol),
                     "passed": bool(achieved < tol) or (achieved == 0.0 == tol)})

    xs = np.linspace(-3.0, 3.0, 20)

    # soft-Moreau equivalence: energy minus envelope is constant in x
    for fname, f in VERIFY_OBJECTIVES_1D.items():
        for lam_target in (0.1, 0.5, 1.0):
            s = canonical_schedule(eps=float(np.sqrt(lam_target)),
                                   lambda_min=1e-12)
            _, _, lam = schedule_eval(s, 0.0)
            diffs = [pgh_energy_quadrature_1d(f, x, 0.0, s, n_nodes)
                     - soft_moreau_quadrature_1d(f, x, lam, n_nodes)
                     for x in xs]
            add(f"envelope-const[{fname}, lam={lam_target}]",
                np.var(diffs), 1e-10)

    # quadratic closed forms (derived analytically; see tests for the algebra)
    lam = 0.5
    s = canonical_schedule(eps=float(np.sqrt(lam)), lambda_min=1e-12)
    quad = VERIFY_OBJECTIVES_1D["quadratic"]
    err_e = max(abs(pgh_energy_quadrature_1d(quad, x, 0.0, s, n_nodes)
                    - (x * x / 4.0 + 0.5 * lam * np.log(2.0))) for x in xs)
    err_m = max(abs(soft_moreau_quadrature_1d(quad, x, lam, n_nodes)
                    - (x * x / 4.0 - 0.5 * lam * np.log(np.pi * lam)))
                for x in xs)
    add("energy-closed-form[quadratic, lam=0.5]", err_e, 1e-8)
    add("envelope-closed-form[quadratic, lam=0.5]", err_m, 1e-8)

    # posterior-mean identity: E[y|x] = x - lam * d/dx(-log marginal)
    for fname, f in VERIFY_OBJECTIVES_1D.items():
        worst = 0.0
        for lam in (0.25, 1.0):
            for x in (-2.0, -1.0, 0.0, 1.0, 2.0):
                pm = posterior_mean_quadrature_1d(f, x, lam, n_nodes)
                h = 1e-4 * max(1.0, abs(x))
                score = _central_diff(
                    lambda u: log_marginal_quadrature_1d(f, u, lam, n_nodes),
                    x, h)
                worst = max(worst, abs(pm - (x + lam * score)))
        add(f"posterior-mean[{fname}]", worst, 1e-6)
    worst = max(abs(posterior_mean_quadrature_1d(quad, x, lam, n_nodes)
                    - x / (1.0 + lam))
                for lam in (0.25, 1.0) for x in (-2.0, -1.0, 0.0, 1.0, 2.0))
    add("posterior-mean-gaussian-analytic", worst, 1e-6)

    # estimator collapse at t = 1: soft-min value equals f exactly
    rng = np.random.default_rng(11)
    s = canonical_schedule(eps=0.5)
    worst_v = 0.0
    worst_g = 0.0
    for name in ("ackley", "levy", "griewank"):
        obj = make_benchmark(name, 6)
        x = rng.uniform(obj.lo / 2, obj.hi / 2)
        noise = sample_noise(rng, 4, 6)
        est = softmin_gradient(obj, x, 1.0, s, noise, EvalCounter())
        worst_v = max(worst_v, abs(est.value - obj.eval(x)))
        gref = obj.grad(x)
        worst_g = max(worst_g, float(np.max(np.abs(est.grad - gref)))
                      / max(1e-8, float(np.max(np.abs(gref)))))
    add("collapse-value-exact[t=1]", worst_v, 0.0)
    add("collapse-grad[t=1]", worst_g, 1e-12)

    # analytic benchmark gradients vs central differences
    for name in ("ackley", "griewank", "alpine1", "levy", "logrosen"):
        obj = make_benchmark(name, 2 if name == "logrosen" else 8)
        worst = 0.0
        tries = 0
        while tries < 20:
            x = rng.uniform(0.3 * obj.lo, 0.3 * obj.hi)
            if name == "alpine1" and np.any(
                    np.abs(x * np.sin(x) + 0.1 * x) < 1e-3):
                continue
            tries += 1
            worst = max(worst, fd_gradient_check(obj, x, 1e-6))
        add(f"benchmark-grad-fd[{name}]", worst, 1e-4)

    # soft-min gradient is the exact gradient of the sampled objective
    worst = 0.0
    for _ in range(20):
        obj = make_benchmark(("ackley", "griewank", "levy")[rng.integers(3)], 5)
        x = rng.uniform(0.3 * obj.lo, 0.3 * obj.hi)
        t = float(rng.uniform(0.0, 0.8))
        noise = sample_noise(rng, 6, 5)
        est = softmin_gradient(obj, x, t, s, noise, EvalCounter())
        h = 1e-6 * (1.0 + float(np.linalg.norm(x)))
        fd = np.empty(5)
        for i in range(5):
            e = np.zeros(5)
            e[i] = h
            fp = softmin_value(obj, x + e, t, s, noise, EvalCounter())
            fm = softmin_value(obj, x - e, t, s, noise, EvalCounter())
            fd[i] = (fp - fm) / (2.0 * h)
        rel = np.linalg.norm(fd - est.grad) / max(1e-8, np.linalg.norm(est.grad))
        worst = max(worst, float(rel))
    add("softmin-grad-vs-fd", worst, 1e-5)

    return rows


def _print_report(rows) -> bool:
    width = max(len(r["check"]) for r in rows) + 2
    print(f"{'check':<{width}}{'achieved':>14}{'tolerance':>12}  status")
    for r in rows:
        status = "pass" if r["passed"] else "FAIL"
        print(f"{r['check']:<{width}}{r['achieved']:>14.3e}"
              f"{r['tolerance']:>12.1e}  {status}")
    ok = all(r["passed"] for r in rows)
    print(f"verify: {'all checks passed' if ok else 'CHECKS FAILED'}")
    return ok


# ---------------------------------------------------------------------------
# subcommand plumbing
# ---------------------------------------------------------------------------

def _load_resolved(inv: CliInvocation) -> dict:
    if not inv.config:
        raise ConfigError(f"subcommand {inv.subcommand!r} requires --config")
    if not os.path.exists(inv.config):
        raise ConfigError(f"config file not found: {inv.config}")
    head = open(inv.config).read(1)
    if head == "{":  # manifest round-trip
        manifest = json.load(open(inv.config))
        resolved = manifest["config"]
    else:
        resolved = load_config(inv.config)
    apply_overrides(resolved, inv.overrides)
    if inv.seed is not None:
        if "experiment" in resolved:
            resolved["experiment"]["master_seed"] = inv.seed
        if "sparse" in resolved:
            resolved["sparse"]["problem_seed"] = inv.seed
    return resolved


def _outdir(inv: CliInvocation) -> str:
    out = inv.outdir or os.environ.get("PGHO_OUTDIR", "pgho_out")
    os.makedirs(out, exist_ok=True)
    return out


def _write_manifest(inv, resolved, outdir, extra=None):
    exp = resolved.get("experiment", {})
    trials = exp.get("trials", resolved.get("sparse", {}).get("trials", 0))
    seed = exp.get("master_seed", 0)
    manifest = {
        "tool": "pgho",
        "version": __version__,
        "subcommand": inv.subcommand,
        "config": resolved,
        "seed_derivation": "streams keyed by (master_seed, trial, tag, particle, iteration)",
        "trial_keys": [[seed, t] for t in range(int(trials))],
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(outdir, f"manifest_{inv.subcommand}.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def _experiment_specs(resolved) -> list:
    exp = resolved.get("experiment")
    if exp is None:
        raise ConfigError("config needs an [experiment] section")
    for key in ("objective", "methods"):
        if key not in exp:
            raise ConfigError(f"[experiment] needs key {key!r}")
    methods = method_configs(resolved, labels=exp["methods"])
    kwargs = {}
    if "logrosen_alpha" in exp:
        kwargs["alpha"] = exp["logrosen_alpha"]
    return [ExperimentSpec(objective=name, dim=exp["dim"], methods=methods,
                           trials=exp["trials"], budget=exp["budget"],
                           success_threshold=exp["success_threshold"],
                           master_seed=exp["master_seed"],
                           objective_kwargs=kwargs)
            for name in exp["objective"]]


def _cmd_bench(inv: CliInvocation) -> int:
    resolved = _load_resolved(inv)
    outdir = _outdir(inv)
    specs = _experiment_specs(resolved)
    all_stats = [run_experiment(spec, workers=inv.workers) for spec in specs]
    rows = stats_rows(all_stats)
    path = os.path.join(outdir, f"results_bench.{inv.fmt}")
    export_results(rows, path, fmt=inv.fmt, meta={"config": resolved})
    _write_manifest(inv, resolved, outdir)
    for r in rows:
        me = r["mean_evals_to_success"]
        print(f"{r['objective']:<10} {r['method']:<12} "
              f"success_rate={r['success_rate']:.2f} "
              f"mean_evals={'N' if me is None else f'{me:.0f}'}")
    print(f"wrote {path}")
    return 0


def _cmd_dims(inv: CliInvocation) -> int:
    resolved = _load_resolved(inv)
    outdir = _outdir(inv)
    exp = resolved.get("experiment", {})
    if "dims" not in exp:
        raise ConfigError("[experiment] needs key 'dims' for the dims scan")
    spec = _experiment_specs(resolved)[0]
    rows = success_vs_dimension(spec, exp["dims"], workers=inv.workers)
    path = os.path.join(outdir, f"results_dims.{inv.fmt}")
    export_results(rows, path, fmt=inv.fmt, meta={"config": resolved})
    _write_manifest(inv, resolved, outdir)
    for r in rows:
        print(f"dim={r['dim']:<4} {r['method']:<12} "
              f"success_rate={r['success_rate']:.2f}")
    print(f"wrote {path}")
    return 0


def _cmd_curves(inv: CliInvocation) -> int:
    resolved = _load_resolved(inv)
    outdir = _outdir(inv)
    exp = resolved.get("experiment", {})
    spec = _experiment_specs(resolved)[0]
    # convergence curves want full trajectories, not stopped-at-success ones
    spec.methods = {k: type(v)(**{**v.__dict__, "early_stop": False})
                    for k, v in spec.methods.items()}
    checkpoints = exp.get("checkpoints")
    if not checkpoints:
        checkpoints = np.unique(np.logspace(
            1, np.log10(spec.budget), 20).astype(int)).tolist()
    stats = run_experiment(spec, workers=inv.workers)
    curves = convergence_curves(stats, checkpoints)
    rows = curves_rows(curves)
    path = os.path.join(outdir, f"results_curves.{inv.fmt}")
    export_results(rows, path, fmt=inv.fmt, meta={"config": resolved})
    _write_manifest(inv, resolved, outdir)
    print(f"wrote {path}")
    return 0


def _cmd_sparse(inv: CliInvocation) -> int:
    resolved = _load_resolved(inv)
    outdir = _outdir(inv)
    sp = resolved.get("sparse")
    if sp is None:
        raise ConfigError("config needs a [sparse] section")
    if "methods" not in sp:
        raise ConfigError("[sparse] needs key 'methods'")
    methods = method_configs(resolved, labels=sp["methods"])
    methods = {label: type(cfg)(**{
        **cfg.__dict__, "budget": sp["budget"],
        "success_threshold": 0.0, "early_stop": False,
    }) for label, cfg in methods.items()}
    problem = generate_sparse_problem(sp["n"], sp["m"], sp["k"],
                                      sp["noise_sigma"], sp["tau"],
                                      sp["problem_seed"])
    grid = default_lambda_grid(sp["lambda_count"], sp["lambda_lo"],
                               sp["lambda_hi"])
    record = lambda_path_sweep(problem, methods, grid, trials=sp["trials"],
                               master_seed=sp["problem_seed"])
    rows = [{"lambda": e.lambda_reg, "method": e.method, "misfit": e.misfit,
             "surrogate": e.surrogate, "objective": e.objective,
             "support_jaccard": e.support_jaccard,
             "seed": record.master_seed} for e in record.entries]
    path = os.path.join(outdir, f"results_sparse.{inv.fmt}")
    export_results(rows, path, fmt=inv.fmt, meta={"config": resolved},
                   columns=list(PATH_CSV_COLUMNS))
    _write_manifest(inv, resolved, outdir)
    print(f"wrote {path}")
    return 0


def _cmd_tune(inv: CliInvocation) -> int:
    resolved = _load_resolved(inv)
    outdir = _outdir(inv)
    tune = resolved.get("tune")
    if tune is None:
        raise ConfigError("config needs a [tune] section")
    for key in ("label", "eta0_grid", "T_grid"):
        if key not in tune:
            raise ConfigError(f"[tune] needs key {key!r}")
    spec = _experiment_specs(resolved)[0]
    if tune["label"] not in spec.methods:
        raise ConfigError(f"tune label {tune['label']!r} has no "
                          f"[method.{tune['label']}] section")
    best_cfg, rows = grid_search(spec, tune["label"], tune["eta0_grid"],
                                 tune["T_grid"], workers=inv.workers)
    path = os.path.join(outdir, f"results_tune.{inv.fmt}")
    export_results(rows, path, fmt=inv.fmt, meta={"config": resolved})
    chosen_path = os.path.join(outdir, "tune_chosen.json")
    with open(chosen_path, "w") as fh:
        json.dump({"label": tune["label"],
                   "config": runconfig_to_dict(best_cfg)}, fh, indent=2,
                  sort_keys=True)
    _write_manifest(inv, resolved, outdir)
    print(f"chosen eta0={best_cfg.eta0:g} T={best_cfg.T}")
    print(f"wrote {path} and {chosen_path}")
    return 0


def _cmd_verify(inv: CliInvocation) -> int:
    rows = verify_suite()
    ok = _print_report(rows)
    outdir = _outdir(inv)
    export_results(rows, os.path.join(outdir, f"results_verify.{inv.fmt}"),
                   fmt=inv.fmt)
    return 0 if ok else 2


_HANDLERS = {
    "bench": _cmd_bench,
    "dims": _cmd_dims,
    "curves": _cmd_curves,
    "sparse": _cmd_sparse,
    "verify": _cmd_verify,
    "tune": _cmd_tune,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgho",
        description="probabilistic Gaussian homotopy optimization toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default="",
                       help="config file (or a manifest JSON to reproduce)")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override a config key after parsing")
        p.add_argument("--outdir", default="",
                       help="output directory (default $PGHO_OUTDIR or ./pgho_out)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
        p.add_argument("--workers", type=int, default=1,
                       help="max parallel trials (results are invariant)")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                       default="csv")
    return parser


def parse_and_dispatch(argv) -> int:
    try:
        ns = _build_parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 0
        return 1 if code not in (0,) else 0
    inv = CliInvocation(subcommand=ns.subcommand, config=ns.config,
                        overrides=ns.override, outdir=ns.outdir,
                        seed=ns.seed, workers=ns.workers, fmt=ns.fmt)
    try:
        return _HANDLERS[inv.subcommand](inv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 2
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
