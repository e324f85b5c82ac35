"""Error measurement, the three-way error split, and convergence sweeps.

H1 errors against ground truth come from Monte Carlo quadrature (any
dimension, with standard errors) or trapezoidal grid quadrature (d = 1,
deterministic).  The decomposition mirrors the approximation / statistics /
optimization split: each part gets a measurable surrogate, not a certified
value, and the report carries methodology notes saying exactly which
surrogate was used.

Sweeps realize accuracy plans as concrete architectures, train one network
per (plan, seed) cell, and emit plot-ready CSV rows that pair measured H1
errors and generalization gaps with the closed-form statistical bound of the
realized class.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .bounds import HyperParamPlan, statistical_error_bound
from .geometry import Domain, sample_batch, sample_interior
from .network import NetworkArch, NetworkFunction, init_params
from .ritz import EllipticProblem, FieldLike, dirichlet_penalty, generalization_gap, zero_field
from .train import TrainConfig, TrainingDiverged, train

__all__ = [
    "ErrorReport",
    "h1_error",
    "h1_error_of_params",
    "h1_norm",
    "DecompositionReport",
    "decompose_errors",
    "SweepCell",
    "SWEEP_FIELDS",
    "arch_from_plan",
    "convergence_sweep",
    "median_by_plan",
]

GRID_MIN_NODES = 512


@dataclass(frozen=True)
class ErrorReport:
    """L2, H1-seminorm and full H1 distances with their standard errors.

    The three squared fields satisfy h1^2 = l2^2 + seminorm^2 up to float
    accumulation because all come from one shared sample set.  Grid
    quadrature reports zero standard errors (deterministic).
    """

    l2_error: float
    h1_seminorm_error: float
    h1_error: float
    l2_stderr: float
    h1_seminorm_stderr: float
    h1_stderr: float
    n_samples: int
    method: str

    def as_dict(self) -> dict:
        return {
            "l2_error": self.l2_error,
            "h1_seminorm_error": self.h1_seminorm_error,
            "h1_error": self.h1_error,
            "l2_stderr": self.l2_stderr,
            "h1_seminorm_stderr": self.h1_seminorm_stderr,
            "h1_stderr": self.h1_stderr,
            "n_samples": self.n_samples,
            "method": self.method,
        }


def _sqrt_with_stderr(mean_sq: float, var_of_mean: float) -> tuple[float, float]:
    val = math.sqrt(max(mean_sq, 0.0))
    if val <= 0.0:
        return 0.0, 0.0
    # delta method through the square root
    return val, math.sqrt(max(var_of_mean, 0.0)) / (2.0 * val)


def h1_error(
    u: FieldLike,
    v: FieldLike,
    domain: Domain,
    n_quad: int = 4096,
    seed: int = 0,
    method: str = "mc",
) -> ErrorReport:
    """H1 distance between two fields over the domain; symmetric in u and v.

    ``mc`` draws uniform interior points and reports standard errors;
    ``grid`` (d = 1 only) uses the trapezoid rule on at least 512 nodes.
    """
    if method == "grid":
        if domain.dim != 1:
            raise ValueError("grid quadrature is one-dimensional")
        nodes = max(int(n_quad), GRID_MIN_NODES)
        a, b = domain.interval()
        xs = np.linspace(a, b, nodes)[:, None]
        uv, ug = u.value_and_grad(xs)
        vv, vg = v.value_and_grad(xs)
        dv = uv - vv
        dg = ug[:, 0] - vg[:, 0]
        i_l2 = float(np.trapezoid(dv * dv, xs[:, 0]))
        i_semi = float(np.trapezoid(dg * dg, xs[:, 0]))
        return ErrorReport(
            l2_error=math.sqrt(i_l2),
            h1_seminorm_error=math.sqrt(i_semi),
            h1_error=math.sqrt(i_l2 + i_semi),
            l2_stderr=0.0,
            h1_seminorm_stderr=0.0,
            h1_stderr=0.0,
            n_samples=nodes,
            method="grid",
        )
    if method != "mc":
        raise ValueError(f"unknown quadrature method: {method!r}")
    if n_quad < 2:
        raise ValueError("need at least two sample points")
    pts = sample_interior(domain, int(n_quad), seed)
    vol = domain.interior_measure()
    uv, ug = u.value_and_grad(pts)
    vv, vg = v.value_and_grad(pts)
    s_l2 = vol * (uv - vv) ** 2
    s_semi = vol * np.einsum("nd,nd->n", ug - vg, ug - vg)
    n = pts.shape[0]
    i_l2 = float(s_l2.mean())
    i_semi = float(s_semi.mean())
    var_l2 = float(np.var(s_l2, ddof=1)) / n
    var_semi = float(np.var(s_semi, ddof=1)) / n
    var_sum = float(np.var(s_l2 + s_semi, ddof=1)) / n
    l2, l2_se = _sqrt_with_stderr(i_l2, var_l2)
    semi, semi_se = _sqrt_with_stderr(i_semi, var_semi)
    h1, h1_se = _sqrt_with_stderr(i_l2 + i_semi, var_sum)
    return ErrorReport(
        l2_error=l2,
        h1_seminorm_error=semi,
        h1_error=h1,
        l2_stderr=l2_se,
        h1_seminorm_stderr=semi_se,
        h1_stderr=h1_se,
        n_samples=n,
        method="mc",
    )


def h1_error_of_params(
    arch: NetworkArch,
    params,
    exact: FieldLike,
    domain: Domain,
    n_quad: int = 4096,
    seed: int = 0,
    method: str = "mc",
) -> ErrorReport:
    """H1 error of a parameterized network against ground truth."""
    return h1_error(NetworkFunction(arch, params), exact, domain, n_quad, seed, method)


def h1_norm(
    u: FieldLike, domain: Domain, n_quad: int = 4096, seed: int = 0, method: str = "mc"
) -> float:
    """Full H1 norm of a field (distance to zero)."""
    return h1_error(u, zero_field(), domain, n_quad, seed, method).h1_error


# ---------------------------------------------------------------------------
# error decomposition


@dataclass(frozen=True)
class DecompositionReport:
    """Measured surrogates for the approximation / statistical / optimization split."""

    e_app_surrogate: float
    e_sta_surrogate: float
    e_opt_surrogate: float
    notes: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "e_app_surrogate": self.e_app_surrogate,
            "e_sta_surrogate": self.e_sta_surrogate,
            "e_opt_surrogate": self.e_opt_surrogate,
            "notes": list(self.notes),
        }


def decompose_errors(
    arch: NetworkArch,
    problem: EllipticProblem,
    batch,
    config: TrainConfig,
    n_ensemble: int = 5,
    c_over_beta: float = 1.0,
    n_quad: int = 4096,
    gap_trials: int = 8,
    gap_samples: int = 8192,
    seed: int = 0,
) -> DecompositionReport:
    """Train an ensemble and measure one surrogate per error source.

    Approximation: (C/beta) times the squared best H1 error across the
    ensemble, the richness limit reachable by this class under this budget.
    Statistical: the largest measured generalization gap among the members.
    Optimization: the spread of best achieved training losses.  All three
    are nonnegative by construction.
    """
    if n_ensemble < 1:
        raise ValueError("need at least one ensemble member")
    if problem.exact is None:
        raise ValueError("the decomposition needs a problem with known ground truth")
    results = []
    for k in range(n_ensemble):
        cfg = replace(config, seed=config.seed + k)
        results.append(train(arch, problem, batch, cfg))

    method = "grid" if problem.domain.dim == 1 else "mc"
    h1s = [
        h1_error_of_params(
            arch, r.params, problem.exact, problem.domain,
            n_quad=n_quad, seed=70_000 + seed, method=method,
        ).h1_error
        for r in results
    ]
    gaps = [
        generalization_gap(
            NetworkFunction(arch, r.params), problem, batch,
            n_fresh=gap_samples, trials=gap_trials, seed=80_000 + seed,
        ).mean
        for r in results
    ]
    best_totals = [r.best_total for r in results]
    e_app = c_over_beta * min(h1s) ** 2
    e_sta = max(gaps)
    e_opt = max(best_totals) - min(best_totals)
    notes = (
        f"e_app: (C/beta) = {c_over_beta} times squared best-of-{n_ensemble} H1 error "
        f"({method} quadrature, {n_quad} points)",
        f"e_sta: max mean generalization gap over the ensemble "
        f"({gap_trials} fresh trials of {gap_samples} points each)",
        f"e_opt: spread of best training losses across {n_ensemble} seeded restarts",
    )
    return DecompositionReport(e_app, e_sta, e_opt, notes)


# ---------------------------------------------------------------------------
# convergence sweeps


SWEEP_FIELDS = (
    "plan_id",
    "eps",
    "seed",
    "depth",
    "width_total",
    "B_theta",
    "N",
    "M",
    "beta",
    "h1_error",
    "h1_stderr",
    "gap",
    "stat_bound",
    "status",
)


@dataclass(frozen=True)
class SweepCell:
    """One (plan, seed) measurement row of a convergence sweep."""

    plan_id: str
    eps: float
    seed: int
    depth: int
    width_total: int
    b_theta: float
    n: int
    m: int
    beta: float
    h1_error: float
    h1_stderr: float
    gap: float
    stat_bound: float
    status: str

    def as_row(self) -> list:
        return [
            self.plan_id,
            repr(self.eps),
            self.seed,
            self.depth,
            self.width_total,
            repr(self.b_theta),
            self.n,
            self.m,
            repr(self.beta),
            repr(self.h1_error),
            repr(self.h1_stderr),
            repr(self.gap),
            repr(self.stat_bound),
            self.status,
        ]


def arch_from_plan(plan: HyperParamPlan, dim: int, activation: str = "tanh") -> NetworkArch:
    """Realize a plan as constant-hidden-width network of the planned depth.

    Picks the largest hidden width whose total weight count stays within the
    plan's target (width 1 when even that exceeds it).
    """
    hidden_layers = plan.depth - 1

    def count(width: int) -> int:
        widths = (dim,) + (width,) * hidden_layers + (1,)
        return NetworkArch(
            widths=widths, activation=activation, weight_bound=max(plan.weight_bound, 1.0)
        ).total_weight_count()

    width = 1
    while count(width + 1) <= plan.weight_count:
        width += 1
    widths = (dim,) + (width,) * hidden_layers + (1,)
    return NetworkArch(
        widths=widths, activation=activation, weight_bound=max(plan.weight_bound, 1.0)
    )


def _cell_problem(problem: EllipticProblem, plan: HyperParamPlan) -> EllipticProblem:
    if plan.beta is None:
        return problem
    if problem.bc.kind != "dirichlet_penalty":
        raise ValueError("a plan with a penalty size needs a penalized Dirichlet problem")
    return replace(problem, bc=dirichlet_penalty(plan.beta))


def _run_cell(
    problem: EllipticProblem,
    plan: HyperParamPlan,
    plan_id: str,
    seed: int,
    train_template: TrainConfig,
    n_quad: int,
    gap_trials: int,
    gap_samples: int,
) -> SweepCell:
    prob = _cell_problem(problem, plan)
    arch = arch_from_plan(plan, prob.domain.dim)
    base = dict(
        plan_id=plan_id,
        eps=plan.eps,
        seed=seed,
        depth=arch.depth,
        width_total=arch.total_weight_count(),
        b_theta=arch.weight_bound,
        n=plan.samples,
        m=plan.samples,
        beta=prob.bc.beta,
    )
    try:
        batch = sample_batch(prob.domain, plan.samples, plan.samples, seed=100 + seed)
        cfg = replace(train_template, seed=seed)
        result = train(arch, prob, batch, cfg)
        fn = NetworkFunction(arch, result.params)
        method = "grid" if prob.domain.dim == 1 else "mc"
        err = h1_error(fn, prob.exact, prob.domain, n_quad, seed=70_000 + seed, method=method)
        gap = generalization_gap(
            fn, prob, batch, n_fresh=gap_samples, trials=gap_trials, seed=80_000 + seed
        )
        stat = statistical_error_bound(
            arch, plan.samples, plan.samples, alpha=prob.bc.alpha, beta=prob.bc.beta
        )
        return SweepCell(
            h1_error=err.h1_error,
            h1_stderr=err.h1_stderr,
            gap=gap.mean,
            stat_bound=stat.value,
            status="ok",
            **base,
        )
    except TrainingDiverged:
        return SweepCell(
            h1_error=math.nan, h1_stderr=math.nan, gap=math.nan, stat_bound=math.nan,
            status="diverged", **base,
        )
    except Exception as exc:  # individual cells must never abort the sweep
        return SweepCell(
            h1_error=math.nan, h1_stderr=math.nan, gap=math.nan, stat_bound=math.nan,
            status=f"error:{type(exc).__name__}", **base,
        )


def _worker_cell(args) -> SweepCell:
    from .problems import built_in_problem

    (problem_name, problem_beta, plan, plan_id, seed, template, n_quad,
     gap_trials, gap_samples) = args
    prob = built_in_problem(problem_name, problem_beta)
    return _run_cell(prob, plan, plan_id, seed, template, n_quad, gap_trials, gap_samples)


def convergence_sweep(
    problem,
    plans: Sequence[HyperParamPlan],
    seeds: Sequence[int],
    out_csv: str | None = None,
    train_template: TrainConfig | None = None,
    n_quad: int = 4096,
    gap_trials: int = 4,
    gap_samples: int = 8192,
    jobs: int = 1,
    problem_beta: float = 0.1,
) -> list[SweepCell]:
    """Train one cell per (plan, seed) and collect rows; optionally write CSV.

    ``problem`` is an :class:`EllipticProblem` or a built-in problem name
    (names are required when jobs > 1, since cells then run in worker
    processes).  Plans must arrive ordered by strictly decreasing target
    accuracy.  Rows are flushed to ``out_csv`` as they finish; failed cells
    become rows with a status and NaN measurements.
    """
    plans = list(plans)
    for a, b in zip(plans, plans[1:]):
        if not a.eps > b.eps:
            raise ValueError("plans must be ordered by strictly decreasing eps")
    if train_template is None:
        train_template = TrainConfig(optimizer="adam", lr=3e-4, lr_schedule="cosine", steps=2000)
    if isinstance(problem, str):
        from .problems import built_in_problem

        problem_name = problem
        problem_obj = built_in_problem(problem_name, problem_beta)
    else:
        problem_name = None
        problem_obj = problem
    if jobs > 1 and problem_name is None:
        raise ValueError("parallel sweeps need a built-in problem name")
    if problem_obj.exact is None:
        raise ValueError("sweeps need a problem with known ground truth")

    cells = [
        (plan, f"plan{k}", seed)
        for k, plan in enumerate(plans)
        for seed in seeds
    ]

    writer = None
    handle = None
    if out_csv is not None:
        fresh = not os.path.exists(out_csv) or os.path.getsize(out_csv) == 0
        handle = open(out_csv, "a", newline="")
        writer = csv.writer(handle)
        if fresh:
            writer.writerow(SWEEP_FIELDS)
            handle.flush()
            os.fsync(handle.fileno())

    def emit(row: SweepCell):
        if writer is not None:
            writer.writerow(row.as_row())
            handle.flush()
            os.fsync(handle.fileno())

    rows: list[SweepCell] = []
    try:
        if jobs > 1:
            args = [
                (problem_name, problem_beta, plan, plan_id, seed, train_template,
                 n_quad, gap_trials, gap_samples)
                for plan, plan_id, seed in cells
            ]
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for row in pool.map(_worker_cell, args):
                    rows.append(row)
                    emit(row)
        else:
            for plan, plan_id, seed in cells:
                row = _run_cell(
                    problem_obj, plan, plan_id, seed, train_template,
                    n_quad, gap_trials, gap_samples,
                )
                rows.append(row)
                emit(row)
    finally:
        if handle is not None:
            handle.close()
    return rows


def median_by_plan(rows: Sequence[SweepCell], field: str = "h1_error") -> dict:
    """Per-plan median and mean of a numeric cell field, skipping failed rows."""
    groups: dict[str, list[float]] = {}
    for row in rows:
        if row.status != "ok":
            continue
        groups.setdefault(row.plan_id, []).append(getattr(row, field))
    return {
        pid: {"median": float(np.median(vals)), "mean": float(np.mean(vals)), "count": len(vals)}
        for pid, vals in groups.items()
    }
