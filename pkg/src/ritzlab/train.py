"""Projected first-order training of the sampled energy.

The default mode matches the analysis setting: one fixed batch for the whole
run ("full"), every parameter entry clamped back into the weight box after
each update, and the returned parameters are the iterate with the lowest
recorded loss (not the last one).  A "resample" mode drawing a fresh batch
per step (seeds derived as seed + step + 1) is provided for comparison; it
minimizes a different functional each step and sits outside the fixed-batch
analysis, which is why it is not the default.

Runs are bit-reproducible from (arch, problem, batch, config): the wall-clock
column in records is the only field that varies between reruns.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .geometry import SampleBatch, sample_batch
from .network import (
    NetworkArch,
    NetworkFunction,
    NetworkParams,
    empirical_loss_and_gradient,
    init_params,
    project_weights,
)
from .ritz import EllipticProblem, LossBreakdown, empirical_loss

__all__ = [
    "TrainConfig",
    "TrainRecord",
    "TrainResult",
    "TrainingDiverged",
    "train",
    "train_ensemble",
    "ensemble_reference_loss",
    "optimization_error_estimate",
    "history_to_csv",
]

HISTORY_FIELDS = ("step", "l1", "l2", "l3", "l4", "l5", "total", "param_inf_norm", "seconds")


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer, schedule and sampling mode for one run."""

    optimizer: str = "adam"  # "adam" | "sgd"
    lr: float = 1e-3
    lr_schedule: str = "constant"  # "constant" | "cosine"
    lr_min_ratio: float = 0.0  # cosine floor as a fraction of lr
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    steps: int = 1000
    batch_mode: str = "full"  # "full" | "resample"
    resample_n: int | None = None
    resample_m: int | None = None
    project_every_step: bool = True
    seed: int = 0
    log_every: int = 100
    init_scheme: str = "uniform_scaled"

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer: {self.optimizer!r}")
        if self.batch_mode not in ("full", "resample"):
            raise ValueError(f"unknown batch mode: {self.batch_mode!r}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr schedule: {self.lr_schedule!r}")
        if not 0.0 <= self.lr_min_ratio <= 1.0:
            raise ValueError("lr_min_ratio must lie in [0, 1]")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")
        if self.batch_mode == "resample" and not (self.resample_n and self.resample_m):
            raise ValueError("resample mode needs resample_n and resample_m")


@dataclass(frozen=True)
class TrainRecord:
    step: int
    breakdown: LossBreakdown
    param_inf_norm: float
    seconds: float


@dataclass(frozen=True)
class TrainResult:
    """Best-iterate parameters plus the recorded history."""

    params: NetworkParams
    history: tuple
    best_step: int
    best_total: float
    final_total: float


class TrainingDiverged(RuntimeError):
    """Raised when the loss or gradient stops being finite (lr blow-up)."""

    def __init__(self, step: int, history: tuple, breakdown: LossBreakdown):
        super().__init__(f"non-finite loss at step {step}")
        self.step = step
        self.history = history
        self.breakdown = breakdown


def _finite(breakdown: LossBreakdown, grad: np.ndarray | None) -> bool:
    ok = math.isfinite(breakdown.total)
    if grad is not None:
        ok = ok and bool(np.isfinite(grad).all())
    return ok


def train(
    arch: NetworkArch,
    problem: EllipticProblem,
    batch: SampleBatch | None,
    config: TrainConfig,
    params0: NetworkParams | None = None,
) -> TrainResult:
    """Minimize the sampled energy; returns the lowest-loss iterate.

    ``batch`` is required in "full" mode and ignored in "resample" mode.
    ``params0`` overrides the seeded initialization when given.  Raises
    :class:`TrainingDiverged` (carrying the partial history and the offending
    breakdown) if the loss or gradient leaves the finite range.
    """
    if config.batch_mode == "full" and batch is None:
        raise ValueError("full-batch training requires a batch")
    if params0 is not None:
        params = params0.copy()
    else:
        params = init_params(arch, config.init_scheme, config.seed)
    if config.project_every_step:
        params = project_weights(params, arch.weight_bound)
    theta = params.flatten()

    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    best_total = math.inf
    best_theta = theta.copy()
    best_step = 0
    history: list[TrainRecord] = []
    t0 = time.perf_counter()

    def step_batch(step: int) -> SampleBatch:
        if config.batch_mode == "full":
            return batch
        return sample_batch(
            problem.domain, config.resample_n, config.resample_m, seed=config.seed + step + 1
        )

    def evaluate(step: int, need_grad: bool):
        p = NetworkParams.unflatten(arch, theta)
        if need_grad:
            return empirical_loss_and_gradient(arch, p, step_batch(step), problem)
        return empirical_loss(NetworkFunction(arch, p), step_batch(step), problem), None

    breakdown = None
    for step in range(config.steps):
        # divergence is detected and raised below; silence the float overflow
        # chatter it produces on the way there
        with np.errstate(over="ignore", invalid="ignore"):
            breakdown, grad = evaluate(step, need_grad=True)
        norm = float(np.abs(theta).max())
        if not _finite(breakdown, grad):
            history.append(TrainRecord(step, breakdown, norm, time.perf_counter() - t0))
            raise TrainingDiverged(step, tuple(history), breakdown)
        if breakdown.total < best_total:
            best_total = breakdown.total
            best_theta = theta.copy()
            best_step = step
        if step % config.log_every == 0:
            history.append(TrainRecord(step, breakdown, norm, time.perf_counter() - t0))
        if config.lr_schedule == "cosine":
            lo = config.lr * config.lr_min_ratio
            lr = lo + (config.lr - lo) * 0.5 * (1.0 + math.cos(math.pi * step / config.steps))
        else:
            lr = config.lr
        if config.optimizer == "sgd":
            theta = theta - lr * grad
        else:
            t = step + 1
            m = config.beta1 * m + (1.0 - config.beta1) * grad
            v = config.beta2 * v + (1.0 - config.beta2) * grad * grad
            m_hat = m / (1.0 - config.beta1**t)
            v_hat = v / (1.0 - config.beta2**t)
            theta = theta - lr * m_hat / (np.sqrt(v_hat) + config.eps)
        if config.project_every_step:
            theta = np.clip(theta, -arch.weight_bound, arch.weight_bound)

    breakdown, _ = evaluate(config.steps, need_grad=False)
    norm = float(np.abs(theta).max())
    if not _finite(breakdown, None):
        history.append(TrainRecord(config.steps, breakdown, norm, time.perf_counter() - t0))
        raise TrainingDiverged(config.steps, tuple(history), breakdown)
    if breakdown.total < best_total:
        best_total = breakdown.total
        best_theta = theta.copy()
        best_step = config.steps
    history.append(TrainRecord(config.steps, breakdown, norm, time.perf_counter() - t0))

    return TrainResult(
        params=NetworkParams.unflatten(arch, best_theta),
        history=tuple(history),
        best_step=best_step,
        best_total=best_total,
        final_total=breakdown.total,
    )


def train_ensemble(
    arch: NetworkArch,
    problem: EllipticProblem,
    batch: SampleBatch | None,
    config: TrainConfig,
    seeds,
) -> list[TrainResult]:
    """Independent runs varying the initialization seed over one shared batch.

    Sharing the batch keeps every run minimizing the same empirical
    functional, so loss spreads across the ensemble measure optimization
    error and nothing else.
    """
    return [train(arch, problem, batch, replace(config, seed=int(s))) for s in seeds]


def ensemble_reference_loss(results) -> float:
    """Lowest loss achieved anywhere in the ensemble."""
    return min(r.best_total for r in results)


def optimization_error_estimate(history, reference_loss: float) -> float:
    """max(0, achieved loss - reference); histories or results accepted."""
    if isinstance(history, TrainResult):
        records = history.history
    else:
        records = tuple(history)
    if not records:
        raise ValueError("empty history")
    achieved = min(r.breakdown.total for r in records)
    return max(0.0, achieved - reference_loss)


def history_to_csv(history, path) -> None:
    """Write records with fields step,l1..l5,total,param_inf_norm,seconds."""
    if isinstance(history, TrainResult):
        history = history.history
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_FIELDS)
        for rec in history:
            bd = rec.breakdown
            writer.writerow(
                [rec.step]
                + [repr(v) for v in (bd.l1, bd.l2, bd.l3, bd.l4, bd.l5, bd.total)]
                + [repr(rec.param_inf_norm), repr(rec.seconds)]
            )
