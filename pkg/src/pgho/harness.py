"""Multi-trial experiment runner, aggregation and result serialization.

Trial r of an experiment passes (spec.master_seed, r) straight into the
run drivers, whose internal streams are keyed by that pair, so no two
trials share randomness and re-running a spec reproduces every file
byte for byte. Trials may execute on a thread pool; aggregation folds
results in trial order, so statistics are worker-count invariant.
"""

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .objectives import Objective, make_benchmark
from .optimizers import RunConfig, RunRecord, run


@dataclass
class ExperimentSpec:
    objective: str
    dim: int
    methods: dict                 # label -> RunConfig
    trials: int = 30
    budget: int = 200_000
    success_threshold: float = 0.05
    master_seed: int = 0
    objective_kwargs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.success_threshold <= 0:
            raise ValueError("success threshold must be positive")

    def build_objective(self) -> Objective:
        return make_benchmark(self.objective, self.dim, **self.objective_kwargs)

    def resolved_config(self, label: str) -> RunConfig:
        """Method config with the spec-level budget/threshold/seed applied."""
        cfg = self.methods[label]
        return RunConfig(**{
            **cfg.__dict__,
            "budget": self.budget,
            "success_threshold": self.success_threshold,
            "seed": self.master_seed,
        })


@dataclass
class MethodStats:
    method: str
    trials: int
    errors: int
    successes: int
    success_rate: float
    mean_evals_to_success: Optional[float]   # successful trials only
    mean_evals_all: Optional[float]          # success evals or total consumed
    median_final_best: float
    records: list                            # per-trial RunRecord or None

    @property
    def mean_evals_display(self) -> str:
        if self.mean_evals_to_success is None:
            return "N"
        return f"{self.mean_evals_to_success:.1f}"


@dataclass
class AggregateStats:
    objective: str
    dim: int
    per_method: dict              # label -> MethodStats
    trial_errors: dict            # label -> {trial: message}


def _run_one(spec: ExperimentSpec, label: str, trial: int):
    obj = spec.build_objective()
    cfg = spec.resolved_config(label)
    return run(obj, cfg, trial=trial)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> AggregateStats:
    """Run every (method, trial) cell and aggregate.

    A trial that raises is recorded as failed-with-error; by default it
    still counts in the success-rate denominator (as a failure), so
    numerical blowups hurt the score instead of hiding.
    """
    per_method = {}
    trial_errors = {}
    for label in spec.methods:
        results: list = [None] * spec.trials
        errors = {}

        def cell(trial, label=label):
            try:
                return trial, _run_one(spec, label, trial), None
            except Exception as exc:  # noqa: BLE001 - record, don't crash the sweep
                return trial, None, f"{type(exc).__name__}: {exc}"

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(cell, range(spec.trials)))
        else:
            outcomes = [cell(t) for t in range(spec.trials)]
        for trial, rec, err in sorted(outcomes, key=lambda o: o[0]):
            results[trial] = rec
            if err is not None:
                errors[trial] = err
        per_method[label] = _aggregate(label, results)
        trial_errors[label] = errors
    return AggregateStats(objective=spec.objective, dim=spec.dim,
                          per_method=per_method, trial_errors=trial_errors)


def _aggregate(label: str, records: list) -> MethodStats:
    ok = [r for r in records if r is not None]
    n_err = len(records) - len(ok)
    succ = [r for r in ok if r.success]
    success_rate = len(succ) / len(records)
    mean_success = (float(np.mean([r.evals_at_success for r in succ]))
                    if succ else None)
    all_evals = [r.evals_at_success if r.success else r.evals_total for r in ok]
    mean_all = float(np.mean(all_evals)) if all_evals else None
    finals = [r.best_f[-1] for r in ok if r.best_f.size]
    median_final = float(np.median(finals)) if finals else float("nan")
    return MethodStats(method=label, trials=len(records), errors=n_err,
                       successes=len(succ), success_rate=success_rate,
                       mean_evals_to_success=mean_success,
                       mean_evals_all=mean_all,
                       median_final_best=median_final, records=records)


def success_vs_dimension(spec: ExperimentSpec, dims, workers: int = 1):
    """Fixed-budget success-rate scan over dimensions.

    Returns rows (dim, method, success_rate, mean_evals_to_success).
    """
    rows = []
    for dim in dims:
        sub = ExperimentSpec(objective=spec.objective, dim=int(dim),
                             methods=spec.methods, trials=spec.trials,
                             budget=spec.budget,
                             success_threshold=spec.success_threshold,
                             master_seed=spec.master_seed,
                             objective_kwargs=spec.objective_kwargs)
        stats = run_experiment(sub, workers=workers)
        for label, ms in stats.per_method.items():
            rows.append({"dim": int(dim), "method": label,
                         "success_rate": ms.success_rate,
                         "mean_evals_to_success": ms.mean_evals_to_success})
    return rows


def interpolate_best(record: RunRecord, checkpoints) -> np.ndarray:
    """best_f at given evaluation counts, last recorded value carried forward.

    Checkpoints before the first recorded row take the first row's value.
    """
    checkpoints = np.asarray(checkpoints)
    ev = record.evals_used
    bf = record.best_f
    idx = np.searchsorted(ev, checkpoints, side="right") - 1
    idx = np.clip(idx, 0, len(ev) - 1)
    return bf[idx]


def convergence_curves(stats: AggregateStats, checkpoints):
    """Median and interquartile band of best_f across trials per method.

    Returns {method: {"checkpoints", "median", "q25", "q75"}}.
    """
    checkpoints = np.asarray(checkpoints, dtype=int)
    out = {}
    for label, ms in stats.per_method.items():
        recs = [r for r in ms.records if r is not None]
        if not recs:
            continue
        vals = np.vstack([interpolate_best(r, checkpoints) for r in recs])
        out[label] = {
            "checkpoints": checkpoints,
            "median": np.median(vals, axis=0),
            "q25": np.quantile(vals, 0.25, axis=0),
            "q75": np.quantile(vals, 0.75, axis=0),
        }
    return out


# ---------------------------------------------------------------------------
# hyperparameter grid search
# ---------------------------------------------------------------------------

def grid_search(spec: ExperimentSpec, label: str, eta0_grid, T_grid,
                workers: int = 1):
    """Factorial (eta0, T) sweep for one method config.

    Ranks by success rate, then mean evals to success, then median final
    best value. Returns (best RunConfig, rows).
    """
    rows = []
    base = spec.methods[label]
    for eta0 in eta0_grid:
        for T in T_grid:
            cfg = RunConfig(**{**base.__dict__, "eta0": float(eta0),
                               "T": int(T)})
            sub = ExperimentSpec(objective=spec.objective, dim=spec.dim,
                                 methods={label: cfg}, trials=spec.trials,
                                 budget=spec.budget,
                                 success_threshold=spec.success_threshold,
                                 master_seed=spec.master_seed,
                                 objective_kwargs=spec.objective_kwargs)
            ms = run_experiment(sub, workers=workers).per_method[label]
            rows.append({"eta0": float(eta0), "T": int(T),
                         "success_rate": ms.success_rate,
                         "mean_evals_to_success": ms.mean_evals_to_success,
                         "median_final_best": ms.median_final_best})
    def rank(row):
        me = row["mean_evals_to_success"]
        return (-row["success_rate"],
                me if me is not None else float("inf"),
                row["median_final_best"])
    best = min(rows, key=rank)
    best_cfg = RunConfig(**{**base.__dict__, "eta0": best["eta0"],
                            "T": best["T"]})
    return best_cfg, rows


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return "N"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _meta_dict(meta: dict) -> dict:
    return {"tool": "pgho", "version": __version__, **(meta or {})}


def stats_rows(stats_list) -> list:
    """One row per (objective, method) pair, Table-style."""
    if isinstance(stats_list, AggregateStats):
        stats_list = [stats_list]
    rows = []
    for st in stats_list:
        for label, ms in st.per_method.items():
            rows.append({
                "objective": st.objective, "dim": st.dim, "method": label,
                "trials": ms.trials, "errors": ms.errors,
                "success_rate": ms.success_rate,
                "mean_evals_to_success": ms.mean_evals_to_success,
                "mean_evals_all": ms.mean_evals_all,
                "median_final_best": ms.median_final_best,
            })
    return rows


def curves_rows(curves: dict) -> list:
    rows = []
    for label in curves:
        c = curves[label]
        for i, cp in enumerate(c["checkpoints"]):
            rows.append({"method": label, "evals": int(cp),
                         "median": float(c["median"][i]),
                         "q25": float(c["q25"][i]),
                         "q75": float(c["q75"][i])})
    return rows


def export_results(rows: list, path, fmt: str = "csv", meta: dict = None,
                   columns=None):
    """Write rows of dicts as CSV or JSON with an embedded metadata header.

    CSV files start with one comment line `# meta: {...}` followed by the
    column header; floats use 12 significant digits. JSON files carry
    {"meta": ..., "rows": ...}. Missing means are rendered as "N".
    """
    rows = list(rows)
    meta = _meta_dict(meta)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    if fmt == "json":
        payload = {"meta": meta, "columns": columns,
                   "rows": [{k: (None if r.get(k) is None else
                                 (float(f"{r[k]:.12g}") if isinstance(r[k], float) else r[k]))
                             for k in columns} for r in rows]}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        buf.write("# meta: " + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_fmt(r.get(c)) for c in columns])
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(text)
    return path


def load_results(path):
    """Parse a file written by export_results back into (meta, rows)."""
    text = open(path).read()
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        return payload["meta"], payload["rows"]
    lines = text.splitlines()
    meta = json.loads(lines[0].split("# meta: ", 1)[1])
    reader = csv.reader(lines[1:])
    header = next(reader)
    rows = []
    for raw in reader:
        row = {}
        for k, v in zip(header, raw):
            if v == "N":
                row[k] = None
            else:
                try:
                    row[k] = int(v)
                except ValueError:
                    try:
                        row[k] = float(v)
                    except ValueError:
                        row[k] = v
        rows.append(row)
    return meta, rows
