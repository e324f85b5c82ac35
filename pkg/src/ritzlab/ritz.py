"""Energy formulation of  -Δu + w·u = f  with Robin-type boundary data.

The boundary condition is  alpha·u + beta·∂u/∂n = g  with beta != 0.  A plain
Neumann condition is the alpha = 0, beta = 1 case; a penalized Dirichlet
condition is alpha = 1, g = 0 with a small beta.  The energy of a candidate
function u splits into five sampled terms:

    l1 = (|Omega| / 2N)    sum_i |grad u(X_i)|^2
    l2 = (|Omega| / 2N)    sum_i w(X_i) u(X_i)^2
    l3 = -(|Omega| / N)    sum_i f(X_i) u(X_i)
    l4 = (alpha |dOmega| / 2 beta M) sum_j u(Y_j)^2
    l5 = -(|dOmega| / beta M)        sum_j g(Y_j) u(Y_j)

with X uniform on the interior and Y uniform on the boundary.  All five sums
run through exactly-rounded compensated summation, so a breakdown is
invariant under reordering of the sample points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .geometry import Domain, SampleBatch, measures, sample_batch, sample_boundary, sample_interior

__all__ = [
    "BoundaryCondition",
    "robin",
    "neumann",
    "dirichlet_penalty",
    "EllipticProblem",
    "LossBreakdown",
    "LossEstimate",
    "GapReport",
    "FieldLike",
    "FunctionField",
    "zero_field",
    "constant_field",
    "empirical_loss",
    "breakdown_from_values",
    "loss_output_adjoints",
    "continuous_loss_estimate",
    "generalization_gap",
]

COERCIVITY_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# boundary conditions


@dataclass(frozen=True)
class BoundaryCondition:
    """alpha*u + beta*du/dn = g on the boundary; beta must be nonzero."""

    alpha: float
    beta: float
    kind: str = "robin"

    def __post_init__(self):
        if self.beta == 0.0:
            raise ValueError("beta = 0 is outside the variational setting")
        if self.kind not in ("robin", "neumann", "dirichlet_penalty"):
            raise ValueError(f"unknown boundary condition kind: {self.kind!r}")


def robin(alpha: float, beta: float) -> BoundaryCondition:
    return BoundaryCondition(alpha=float(alpha), beta=float(beta), kind="robin")


def neumann() -> BoundaryCondition:
    """du/dn = g, i.e. the alpha = 0, beta = 1 case."""
    return BoundaryCondition(alpha=0.0, beta=1.0, kind="neumann")


def dirichlet_penalty(beta: float) -> BoundaryCondition:
    """Penalized homogeneous Dirichlet condition: alpha = 1, g = 0, small beta > 0."""
    if beta <= 0.0:
        raise ValueError("penalty beta must be positive")
    return BoundaryCondition(alpha=1.0, beta=float(beta), kind="dirichlet_penalty")


# ---------------------------------------------------------------------------
# scalar fields


@runtime_checkable
class FieldLike(Protocol):
    """Anything evaluable with values and spatial gradients on point batches."""

    def value(self, points: np.ndarray) -> np.ndarray: ...

    def value_and_grad(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


@dataclass(frozen=True)
class FunctionField:
    """Direct function hook: a value callable plus its gradient callable.

    Both receive an (n, d) array; ``fn`` returns (n,), ``grad`` returns (n, d).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]

    def value(self, points):
        return np.asarray(self.fn(points), dtype=float)

    def value_and_grad(self, points):
        return self.value(points), np.asarray(self.grad(points), dtype=float)


def zero_field() -> FunctionField:
    return FunctionField(
        fn=lambda pts: np.zeros(pts.shape[0]),
        grad=lambda pts: np.zeros_like(np.asarray(pts, dtype=float)),
    )


def constant_field(c: float) -> Callable[[np.ndarray], np.ndarray]:
    """A scalar-data field w, f or g that is identically c."""
    value = float(c)

    def fn(points: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(points).shape[0], value)

    return fn


def _as_data_field(obj) -> Callable[[np.ndarray], np.ndarray]:
    if callable(obj):
        return obj
    return constant_field(float(obj))


# ---------------------------------------------------------------------------
# the problem container


@dataclass
class EllipticProblem:
    """-Δu + w·u = f on a domain with alpha*u + beta*du/dn = g on its boundary.

    ``w``, ``f`` are interior data fields, ``g`` is a boundary data field;
    scalars are accepted and wrapped.  ``c_w`` is the stored coercivity floor
    for w (at least 1e-6); construction spot-checks w >= c_w on a seeded
    sample and, for penalized Dirichlet conditions, that g vanishes.
    ``exact`` may hold a known solution object with value/gradient callables.
    """

    domain: Domain
    w: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    bc: BoundaryCondition
    c_w: float = COERCIVITY_FLOOR
    exact: object | None = None
    label: str = ""

    def __post_init__(self):
        self.w = _as_data_field(self.w)
        self.f = _as_data_field(self.f)
        self.g = _as_data_field(self.g)
        if self.c_w < COERCIVITY_FLOOR:
            raise ValueError(f"c_w must be at least {COERCIVITY_FLOOR}")
        self.check_coercivity()
        if self.bc.kind == "dirichlet_penalty":
            pts = sample_boundary(self.domain, 64, seed=0)
            if np.max(np.abs(self.g(pts))) > 1e-12:
                raise ValueError("penalized Dirichlet data g must vanish on the boundary")

    def check_coercivity(self, n: int = 256, seed: int = 0) -> float:
        """Sampled min of w; raises if it drops below the stored floor."""
        pts = sample_interior(self.domain, n, seed)
        wmin = float(np.min(self.w(pts)))
        if wmin < self.c_w - 1e-12:
            raise ValueError(
                f"w dips to {wmin:.3e} below the coercivity floor c_w = {self.c_w:.3e}"
            )
        return wmin


# ---------------------------------------------------------------------------
# loss assembly


def _fsum(values: np.ndarray) -> float:
    # exactly-rounded compensated summation
    return math.fsum(np.asarray(values, dtype=float).tolist())


@dataclass(frozen=True)
class LossBreakdown:
    """The five sampled energy terms and their compensated total."""

    l1: float
    l2: float
    l3: float
    l4: float
    l5: float
    total: float

    CSV_FIELDS = ("l1", "l2", "l3", "l4", "l5", "total")

    @classmethod
    def from_terms(cls, l1, l2, l3, l4, l5) -> "LossBreakdown":
        return cls(l1, l2, l3, l4, l5, math.fsum((l1, l2, l3, l4, l5)))

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.CSV_FIELDS}


def _term_samples(u: FieldLike, problem: EllipticProblem, interior, boundary):
    """Per-point contributions whose means are the five loss terms."""
    vol, surf = measures(problem.domain)
    bc = problem.bc
    ui, gi = u.value_and_grad(interior)
    ub = u.value(boundary)
    w = np.asarray(problem.w(interior), dtype=float)
    f = np.asarray(problem.f(interior), dtype=float)
    g = np.asarray(problem.g(boundary), dtype=float)
    c1 = 0.5 * vol * np.einsum("nd,nd->n", gi, gi)
    c2 = 0.5 * vol * w * ui * ui
    c3 = -vol * f * ui
    sb = surf / bc.beta
    c4 = 0.5 * bc.alpha * sb * ub * ub
    c5 = -sb * g * ub
    return (c1, c2, c3, c4, c5)


def breakdown_from_values(
    problem: EllipticProblem,
    batch: SampleBatch,
    values_interior: np.ndarray,
    grads_interior: np.ndarray,
    values_boundary: np.ndarray,
) -> LossBreakdown:
    """Assemble the five terms from already-evaluated network outputs."""
    vol, surf = measures(problem.domain)
    bc = problem.bc
    n, m = batch.n, batch.m
    w = np.asarray(problem.w(batch.interior), dtype=float)
    f = np.asarray(problem.f(batch.interior), dtype=float)
    g = np.asarray(problem.g(batch.boundary), dtype=float)
    ui = np.asarray(values_interior, dtype=float)
    gi = np.asarray(grads_interior, dtype=float)
    ub = np.asarray(values_boundary, dtype=float)
    ai = vol / n
    ab = surf / (bc.beta * m)
    l1 = 0.5 * ai * _fsum(np.einsum("nd,nd->n", gi, gi))
    l2 = 0.5 * ai * _fsum(w * ui * ui)
    l3 = -ai * _fsum(f * ui)
    l4 = 0.5 * bc.alpha * ab * _fsum(ub * ub)
    l5 = -ab * _fsum(g * ub)
    return LossBreakdown.from_terms(l1, l2, l3, l4, l5)


def empirical_loss(u: FieldLike, batch: SampleBatch, problem: EllipticProblem) -> LossBreakdown:
    """Sampled energy of u over one batch, split into the five terms."""
    if batch.n < 1 or batch.m < 1:
        raise ValueError("batch must contain interior and boundary points")
    ui, gi = u.value_and_grad(batch.interior)
    ub = u.value(batch.boundary)
    return breakdown_from_values(problem, batch, ui, gi, ub)


def loss_output_adjoints(
    problem: EllipticProblem,
    batch: SampleBatch,
    values_interior: np.ndarray,
    grads_interior: np.ndarray,
    values_boundary: np.ndarray,
):
    """Derivatives of the sampled energy w.r.t. the network outputs.

    Returns (d/du at interior, d/d(grad u) at interior, d/du at boundary);
    these seed the reverse sweep that produces parameter gradients.
    """
    vol, surf = measures(problem.domain)
    bc = problem.bc
    ai = vol / batch.n
    ab = surf / (bc.beta * batch.m)
    w = np.asarray(problem.w(batch.interior), dtype=float)
    f = np.asarray(problem.f(batch.interior), dtype=float)
    g = np.asarray(problem.g(batch.boundary), dtype=float)
    du_int = ai * (w * values_interior - f)
    dgrad_int = ai * np.asarray(grads_interior, dtype=float)
    du_bdy = ab * (bc.alpha * values_boundary - g)
    return du_int, dgrad_int, du_bdy


# ---------------------------------------------------------------------------
# continuous-loss estimation and the generalization gap


@dataclass(frozen=True)
class LossEstimate:
    """Estimate of the population energy with per-term standard errors."""

    breakdown: LossBreakdown
    stderr: tuple[float, float, float, float, float]
    stderr_total: float
    n_interior: int
    n_boundary: int
    method: str


def _gauss_legendre_panels(a: float, b: float, n_quad: int):
    order = 8
    panels = max(1, math.ceil(n_quad / order))
    nodes, weights = np.polynomial.legendre.leggauss(order)
    h = (b - a) / panels
    starts = a + h * np.arange(panels)
    x = (starts[:, None] + 0.5 * h * (nodes[None, :] + 1.0)).ravel()
    wq = np.tile(0.5 * h * weights, panels)
    return x, wq


def continuous_loss_estimate(
    u: FieldLike,
    problem: EllipticProblem,
    n_quad: int = 4096,
    seed: int = 0,
    method: str = "mc",
) -> LossEstimate:
    """Estimate the population energy of u.

    ``method="mc"`` draws a fresh batch (n_quad interior and boundary points)
    and reports per-term Monte Carlo standard errors.  ``method="quadrature"``
    is available for one-dimensional domains: composite Gauss-Legendre on the
    interval plus the exact two-point boundary sum, with zero standard error.
    """
    if n_quad < 1000:
        raise ValueError("n_quad must be at least 1000")
    if method == "mc":
        batch = sample_batch(problem.domain, n_quad, n_quad, seed)
        c1, c2, c3, c4, c5 = _term_samples(u, problem, batch.interior, batch.boundary)
        terms = [_fsum(c) / len(c) for c in (c1, c2, c3, c4, c5)]
        breakdown = LossBreakdown.from_terms(*terms)

        def se(c):
            return float(np.std(c, ddof=1) / math.sqrt(len(c))) if len(c) > 1 else 0.0

        stderr = tuple(se(c) for c in (c1, c2, c3, c4, c5))
        stderr_total = math.sqrt(se(c1 + c2 + c3) ** 2 + se(c4 + c5) ** 2)
        return LossEstimate(breakdown, stderr, stderr_total, batch.n, batch.m, "mc")
    if method == "quadrature":
        if problem.domain.dim != 1:
            raise ValueError("quadrature estimation is available only for d = 1")
        a, b = problem.domain.interval()
        x, wq = _gauss_legendre_panels(a, b, n_quad)
        pts = x[:, None]
        ui, gi = u.value_and_grad(pts)
        w = np.asarray(problem.w(pts), dtype=float)
        f = np.asarray(problem.f(pts), dtype=float)
        l1 = 0.5 * _fsum(wq * gi[:, 0] ** 2)
        l2 = 0.5 * _fsum(wq * w * ui * ui)
        l3 = -_fsum(wq * f * ui)
        bc = problem.bc
        bpts = np.array([[a], [b]])
        ub = u.value(bpts)
        g = np.asarray(problem.g(bpts), dtype=float)
        l4 = 0.5 * bc.alpha / bc.beta * _fsum(ub * ub)
        l5 = -(1.0 / bc.beta) * _fsum(g * ub)
        breakdown = LossBreakdown.from_terms(l1, l2, l3, l4, l5)
        return LossEstimate(breakdown, (0.0,) * 5, 0.0, len(x), 2, "quadrature")
    raise ValueError(f"unknown method: {method!r}")


@dataclass(frozen=True)
class GapReport:
    """Per-trial |population estimate - training loss| and summary stats."""

    gaps: tuple[float, ...]
    mean: float
    std: float
    train_total: float


def generalization_gap(
    u: FieldLike,
    problem: EllipticProblem,
    train_batch: SampleBatch,
    n_fresh: int = 8192,
    trials: int = 8,
    seed: int = 0,
) -> GapReport:
    """Measure |L_fresh - L_train| over independent fresh sample sets.

    Trial t uses seed + t, so the whole report is reproducible from one seed.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    base = empirical_loss(u, train_batch, problem).total
    gaps = []
    for t in range(trials):
        est = continuous_loss_estimate(u, problem, n_quad=n_fresh, seed=seed + t, method="mc")
        gaps.append(abs(est.breakdown.total - base))
    arr = np.asarray(gaps)
    std = float(np.std(arr, ddof=1)) if trials > 1 else 0.0
    return GapReport(tuple(gaps), float(arr.mean()), std, base)
