"""Variational training of neural networks for elliptic boundary problems,
with closed-form capacity bounds to compare measured generalization gaps
against.

The pieces: geometry (domains and samplers), network (tanh MLP plus nested
forward/reverse derivatives), ritz (energy functional and its gradient),
train (projected Adam/SGD), bounds (Rademacher/covering/chaining
calculators and accuracy-driven hyperparameter plans), problems
(manufactured solutions and 1D reference solvers), analysis (H1 errors,
error decomposition, convergence sweeps), cli (the ``ritzlab`` command).
"""

from .geometry import (
    Domain,
    ball,
    sample_batch,
    sample_boundary,
    sample_interior,
    unit_hypercube,
)
from .network import (
    NetworkArch,
    NetworkFunction,
    NetworkParams,
    empirical_loss_and_gradient,
    init_params,
    load_params,
    project_weights,
    save_params,
)
from .ritz import (
    BoundaryCondition,
    EllipticProblem,
    continuous_loss_estimate,
    dirichlet_penalty,
    empirical_loss,
    generalization_gap,
    neumann,
    robin,
    zero_field,
)
from .train import TrainConfig, TrainResult, TrainingDiverged, history_to_csv, train
from .bounds import (
    BoundValue,
    HyperParamPlan,
    HyperParamRequest,
    bound_report,
    chaining_rademacher_bound,
    class_constants,
    covering_bound_class,
    covering_bound_euclidean,
    exact_rademacher,
    greedy_cover_count,
    lipschitz_in_theta_check,
    massart_bound,
    penalty_gap_bound,
    plan_hyperparams,
    statistical_error_bound,
)
from .problems import (
    built_in_problem,
    fit_loglog_slope,
    make_manufactured,
    penalty_gap_1d,
    sin_product,
    solve_reference_1d,
)
from .analysis import (
    arch_from_plan,
    convergence_sweep,
    decompose_errors,
    h1_error,
    h1_norm,
    median_by_plan,
)

__version__ = "0.1.0"

__all__ = [
    "Domain", "ball", "sample_batch", "sample_boundary", "sample_interior",
    "unit_hypercube",
    "NetworkArch", "NetworkFunction", "NetworkParams",
    "empirical_loss_and_gradient", "init_params", "load_params",
    "project_weights", "save_params",
    "BoundaryCondition", "EllipticProblem", "continuous_loss_estimate",
    "dirichlet_penalty", "empirical_loss", "generalization_gap",
    "neumann", "robin", "zero_field",
    "TrainConfig", "TrainResult", "TrainingDiverged", "history_to_csv", "train",
    "BoundValue", "HyperParamPlan", "HyperParamRequest", "bound_report",
    "chaining_rademacher_bound", "class_constants", "covering_bound_class",
    "covering_bound_euclidean", "exact_rademacher", "greedy_cover_count",
    "lipschitz_in_theta_check", "massart_bound", "penalty_gap_bound",
    "plan_hyperparams", "statistical_error_bound",
    "built_in_problem", "fit_loglog_slope", "make_manufactured",
    "penalty_gap_1d", "sin_product", "solve_reference_1d",
    "arch_from_plan", "convergence_sweep", "decompose_errors", "h1_error",
    "h1_norm", "median_by_plan",
]
