"""Probabilistic Gaussian homotopy optimization toolkit."""

__version__ = "0.1.0"

from .objectives import (
    Objective,
    EvalCounter,
    make_benchmark,
    eval_with_grad,
    fd_gradient_check,
    quadratic_objective,
    BENCHMARK_NAMES,
)
from .smoothing import (
    Schedule,
    NoiseBatch,
    GradientEstimate,
    canonical_schedule,
    linear_beta_schedule,
    make_schedule,
    schedule_eval,
    sample_noise,
    softmin_value,
    softmin_gradient,
    classical_gh_gradient,
    SampleEvaluationError,
)
from .optimizers import (
    RunConfig,
    RunRecord,
    UpdateRule,
    apply_update,
    lr_at,
    t_at,
    pgho_run,
    gh_run,
    baseline_run,
    prs_run,
    run,
)
from .sparse import (
    SparseProblem,
    PathRecord,
    generate_sparse_problem,
    smooth_l0_objective,
    lambda_path_sweep,
)
from .harness import (
    ExperimentSpec,
    AggregateStats,
    run_experiment,
    success_vs_dimension,
    convergence_curves,
    export_results,
    load_results,
    grid_search,
)
