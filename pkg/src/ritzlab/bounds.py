"""Closed-form capacity and generalization-bound calculators.

Everything here evaluates explicit formulas attached to the network class

    N(depth D, total weight count n, weight box bound B)

and to the five sampled energy terms.  Index i in {1..5} always refers to
those terms in order: gradient energy, reaction energy, source coupling,
boundary energy, boundary data coupling.  Per class the calculators provide

* a sup-norm bound B_i and a parameter-Lipschitz constant L_i,
* covering-number bounds (Euclidean ball / parameter-Lipschitz class form),
* finite-class Rademacher bounds and a chaining bound,
* one aggregate statistical-error bound (up to a user constant), and
* accuracy-driven hyperparameter plans with adjustable leading constants.

Values can overflow double precision for planned architectures; every
formula is therefore tracked in the log domain alongside the direct value.
A :class:`BoundValue` carries both, with ``value = inf`` flagging overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .network import NetworkArch, NetworkParams, forward_with_input_grad

__all__ = [
    "BoundValue",
    "ClassConstants",
    "class_constants",
    "covering_bound_euclidean",
    "covering_bound_class",
    "massart_bound",
    "exact_rademacher",
    "contraction_scaled_set",
    "greedy_cover_count",
    "chaining_rademacher_bound",
    "statistical_error_bound",
    "statistical_error_bound_from_counts",
    "HyperParamRequest",
    "HyperParamPlan",
    "plan_hyperparams",
    "penalty_gap_bound",
    "LipschitzProbeReport",
    "lipschitz_in_theta_check",
    "BoundReport",
    "bound_report",
]

_LN10 = math.log(10.0)


@dataclass(frozen=True)
class BoundValue:
    """A positive bound tracked as a float and in the log domain.

    ``value`` is the directly evaluated formula (``inf`` once it leaves
    double range); ``ln`` is its natural log, always finite.
    """

    value: float
    ln: float

    @property
    def log10(self) -> float:
        return self.ln / _LN10

    @property
    def overflow(self) -> bool:
        return not math.isfinite(self.value)

    @classmethod
    def from_factors(cls, *factors: tuple[float, float]) -> "BoundValue":
        """Product of base**exponent pairs; bases must be positive."""
        ln = math.fsum(e * math.log(b) for b, e in factors)
        value = 1.0
        for b, e in factors:
            try:
                value *= float(b) ** float(e)
            except OverflowError:
                value = math.inf
            if math.isinf(value):
                break
        return cls(value=value, ln=ln)

    def squared(self) -> "BoundValue":
        v = self.value * self.value if math.isfinite(self.value) else math.inf
        return BoundValue(value=v, ln=2.0 * self.ln)

    def scaled_by(self, c: float) -> "BoundValue":
        if c <= 0:
            raise ValueError("scale must be positive")
        v = self.value * c if math.isfinite(self.value) else math.inf
        return BoundValue(value=v, ln=self.ln + math.log(c))

    def as_dict(self) -> dict:
        return {
            "value": self.value if math.isfinite(self.value) else None,
            "log10": self.log10,
        }


# ---------------------------------------------------------------------------
# per-class constants


@dataclass(frozen=True)
class ClassConstants:
    """Sup-norm bounds B_1..B_5 and parameter-Lipschitz constants L_1..L_5."""

    value_bounds: tuple[BoundValue, BoundValue, BoundValue, BoundValue, BoundValue]
    theta_lipschitz: tuple[BoundValue, BoundValue, BoundValue, BoundValue, BoundValue]
    dim: int
    depth: int
    n_weights: int
    width_product: int
    weight_bound: float

    def as_dict(self) -> dict:
        out = {"dim": self.dim, "depth": self.depth, "n_weights": self.n_weights,
               "width_product": self.width_product, "weight_bound": self.weight_bound}
        for i, bv in enumerate(self.value_bounds, start=1):
            out[f"B{i}"] = bv.as_dict()
        for i, lv in enumerate(self.theta_lipschitz, start=1):
            out[f"L{i}"] = lv.as_dict()
        return out


def class_constants(arch: NetworkArch, dim: int | None = None) -> ClassConstants:
    """Evaluate the closed-form B_i / L_i constants for an architecture.

    The structural identities hold exactly in the returned floats:
    B_2 = B_4 = B_3^2, B_3 = B_5, L_2 = L_4 and L_3 = L_5.
    """
    d = arch.input_dim if dim is None else int(dim)
    D = arch.depth
    n = arch.total_weight_count()
    P = arch.hidden_width_product()
    B = arch.weight_bound
    n_last = arch.widths[-2]
    sqrt_n = math.sqrt(n)

    b1 = BoundValue.from_factors((d, 1), (P, 2), (B, 2 * D))
    b3 = BoundValue.from_factors((n_last + 1, 1), (B, 1))
    b2 = b3.squared()
    l1 = BoundValue.from_factors((2 * d, 1), (sqrt_n, 1), (D + 1, 1), (B, 3 * D), (P, 3))
    l2 = BoundValue.from_factors((2, 1), (sqrt_n, 1), (B, D), (n_last + 1, 1), (P, 1))
    l3 = BoundValue.from_factors((sqrt_n, 1), (B, D - 1), (P, 1))
    return ClassConstants(
        value_bounds=(b1, b2, b3, b2, b3),
        theta_lipschitz=(l1, l2, l3, l2, l3),
        dim=d,
        depth=D,
        n_weights=n,
        width_product=P,
        weight_bound=B,
    )


# ---------------------------------------------------------------------------
# covering numbers


def covering_bound_euclidean(eps: float, radius: float, dim: int) -> BoundValue:
    """Cover count bound (2*radius*sqrt(dim)/eps)^dim for a radius-bounded set.

    Clamped below at one ball.  The grid construction behind the formula
    covers the whole cube [-radius, radius]^dim, so greedy covers of that
    cube may be compared against it directly.
    """
    if eps <= 0 or radius <= 0 or dim < 1:
        raise ValueError("eps and radius must be positive, dim >= 1")
    per = 2.0 * radius * math.sqrt(dim) / eps
    bv = BoundValue.from_factors((per, dim))
    if bv.ln < 0.0:
        return BoundValue(value=1.0, ln=0.0)
    return bv


def covering_bound_class(class_index: int, arch: NetworkArch, eps: float) -> BoundValue:
    """Covering bound for sampled-term class i via its parameter-Lipschitz map.

    log count <= n_weights * log(2 * L_i * weight_bound * sqrt(n_weights) / eps),
    clamped below at a single-element cover.
    """
    if not 1 <= class_index <= 5:
        raise ValueError("class_index must be in 1..5")
    if eps <= 0:
        raise ValueError("eps must be positive")
    cc = class_constants(arch)
    n = cc.n_weights
    li = cc.theta_lipschitz[class_index - 1]
    # ln of (2 L_i B sqrt(n) / eps), computed in the log domain
    ln_arg = math.log(2.0) + li.ln + math.log(arch.weight_bound) + 0.5 * math.log(n) - math.log(eps)
    ln_count = n * ln_arg
    if ln_count <= 0.0:
        return BoundValue(value=1.0, ln=0.0)
    try:
        value = math.exp(ln_count)
    except OverflowError:
        value = math.inf
    return BoundValue(value=value, ln=ln_count)


def greedy_cover_count(points: np.ndarray, radius: float) -> int:
    """Size of a greedy radius-cover of a finite point set (first-uncovered rule)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if radius <= 0:
        raise ValueError("radius must be positive")
    uncovered = np.ones(pts.shape[0], dtype=bool)
    r2 = radius * radius
    count = 0
    while uncovered.any():
        center = pts[int(np.argmax(uncovered))]
        dist2 = ((pts - center) ** 2).sum(axis=1)
        uncovered &= dist2 > r2
        count += 1
    return count


# ---------------------------------------------------------------------------
# Rademacher complexity of finite classes


def _as_point_set(points) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(points, dtype=float))
    if arr.size == 0:
        raise ValueError("empty point set")
    return arr


def massart_bound(points) -> float:
    """Finite-class bound (max ||a||_2 / N) * sqrt(2 log |A|)."""
    arr = _as_point_set(points)
    k, n = arr.shape
    radius = float(np.linalg.norm(arr, axis=1).max())
    return radius / n * math.sqrt(2.0 * math.log(k))


def exact_rademacher(points) -> float:
    """Exact Rademacher average of a finite set by sign enumeration (N <= 20)."""
    arr = _as_point_set(points)
    k, n = arr.shape
    if n > 20:
        raise ValueError("enumeration is limited to N <= 20 coordinates")
    total = 0.0
    chunk = 1 << min(n, 16)
    all_patterns = 1 << n
    for start in range(0, all_patterns, chunk):
        idx = np.arange(start, min(start + chunk, all_patterns), dtype=np.uint32)
        bits = (idx[:, None] >> np.arange(n, dtype=np.uint32)[None, :]) & 1
        signs = 2.0 * bits - 1.0
        total += float(np.max(signs @ arr.T, axis=1).sum())
    return total / all_patterns / n


def contraction_scaled_set(points, weights) -> np.ndarray:
    """Coordinate-wise reweighting a_i -> w_i a_i of every vector in the set."""
    arr = _as_point_set(points)
    w = np.asarray(weights, dtype=float)
    if w.shape != (arr.shape[1],):
        raise ValueError("weights must have one entry per coordinate")
    return arr * w[None, :]


# ---------------------------------------------------------------------------
# chaining


def _chaining_objective(delta, sqrt_n, b_i, ln_2lb_sqrtn, n_samples):
    inner = ln_2lb_sqrtn - math.log(delta)
    if inner <= 0:
        return math.inf
    return 4.0 * delta + 6.0 * sqrt_n * b_i / math.sqrt(n_samples) * math.sqrt(inner)


def chaining_rademacher_bound(
    class_index: int,
    arch: NetworkArch,
    n_samples: int,
    optimize_delta: bool = False,
) -> float:
    """Dudley-type chaining bound for sampled-term class i at N sample points.

    With the default fixed cutoff delta = 1/sqrt(N):

        4/sqrt(N) + (6 sqrt(n) B_i / sqrt(N)) * sqrt(log(2 L_i B sqrt(n) sqrt(N)))

    Requires 1/sqrt(N) < B_i / 2.  With ``optimize_delta`` the cutoff is
    instead chosen by golden-section search over (0, B_i/2), for comparison.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    cc = class_constants(arch)
    b_i = cc.value_bounds[class_index - 1].value
    l_i = cc.theta_lipschitz[class_index - 1]
    if not (math.isfinite(b_i) and not l_i.overflow):
        raise OverflowError("class constants exceed double range; no finite chaining value")
    n = cc.n_weights
    sqrt_n = math.sqrt(n)
    delta0 = 1.0 / math.sqrt(n_samples)
    if not delta0 < b_i / 2.0:
        raise ValueError("need 1/sqrt(N) < B_i/2; increase N for this class")
    ln_2lb_sqrtn = math.log(2.0) + l_i.ln + math.log(arch.weight_bound) + 0.5 * math.log(n)
    if not optimize_delta:
        return _chaining_objective(delta0, sqrt_n, b_i, ln_2lb_sqrtn, n_samples)
    lo, hi = 1e-12 * b_i, b_i / 2.0
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc = _chaining_objective(c, sqrt_n, b_i, ln_2lb_sqrtn, n_samples)
    fd = _chaining_objective(d, sqrt_n, b_i, ln_2lb_sqrtn, n_samples)
    for _ in range(200):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = _chaining_objective(c, sqrt_n, b_i, ln_2lb_sqrtn, n_samples)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = _chaining_objective(d, sqrt_n, b_i, ln_2lb_sqrtn, n_samples)
    return min(fc, fd)


# ---------------------------------------------------------------------------
# aggregate statistical error bound


def statistical_error_bound_from_counts(
    depth: int,
    n_weights: int,
    weight_bound: float,
    n_interior: int,
    n_boundary: int,
    alpha: float,
    beta: float,
    dim: int,
    c_aggregate: float = 1.0,
) -> BoundValue:
    """Expected uniform loss deviation bound, up to the aggregate constant.

    (C/beta) * d * sqrt(D) * n^{2D} * B^{2D} / sqrt(N)
           * sqrt(log(d * D * n * B * N)),  requiring N = M.

    ``alpha`` is part of the absorbed constant and only echoed by reports.
    """
    if n_interior != n_boundary:
        raise ValueError("the statistical bound is stated for N == M sampling")
    if n_interior < 1:
        raise ValueError("need at least one sample point")
    if beta <= 0 or c_aggregate <= 0:
        raise ValueError("beta and c_aggregate must be positive")
    if depth < 2 or n_weights < 1 or weight_bound < 1 or dim < 1:
        raise ValueError("invalid class description")
    del alpha  # absorbed into c_aggregate
    n = float(n_weights)
    ln_log_arg = math.fsum(
        (
            math.log(dim),
            math.log(depth),
            math.log(n),
            math.log(weight_bound),
            math.log(n_interior),
        )
    )
    main = BoundValue.from_factors(
        (c_aggregate, 1),
        (beta, -1),
        (dim, 1),
        (depth, 0.5),
        (n, 2 * depth),
        (weight_bound, 2 * depth),
        (n_interior, -0.5),
    )
    # the sqrt(log(.)) factor is >= 0 since every argument factor is >= 1
    return main.scaled_by(math.sqrt(ln_log_arg)) if ln_log_arg > 0 else main.scaled_by(1e-300)


def statistical_error_bound(
    arch: NetworkArch,
    n_interior: int,
    n_boundary: int,
    alpha: float,
    beta: float,
    dim: int | None = None,
    c_aggregate: float = 1.0,
) -> BoundValue:
    """Aggregate statistical bound for an architecture; see the counts variant."""
    return statistical_error_bound_from_counts(
        depth=arch.depth,
        n_weights=arch.total_weight_count(),
        weight_bound=arch.weight_bound,
        n_interior=n_interior,
        n_boundary=n_boundary,
        alpha=alpha,
        beta=beta,
        dim=arch.input_dim if dim is None else int(dim),
        c_aggregate=c_aggregate,
    )


# ---------------------------------------------------------------------------
# accuracy-driven hyperparameter plans

_PLAN_CONSTANTS = (
    "C_depth",
    "C_width",
    "C_weight",
    "C_samples",
    "C_samples_exponent",
    "C_coe",
)


@dataclass(frozen=True)
class HyperParamRequest:
    """Target accuracy eps, input dimension, and the rate parameter mu in (0,1).

    ``constants`` may override the leading constants C_depth, C_width,
    C_weight, C_samples, C_samples_exponent and (Dirichlet mode) C_coe; all
    default to 1.
    """

    target_accuracy: float
    dim: int
    mu: float = 0.5
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.target_accuracy <= 0:
            raise ValueError("target accuracy must be positive")
        if not 0.0 < self.mu < 1.0:
            raise ValueError("mu must lie strictly between 0 and 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        unknown = set(self.constants) - set(_PLAN_CONSTANTS)
        if unknown:
            raise ValueError(f"unknown plan constants: {sorted(unknown)}")

    def constant(self, name: str) -> float:
        return float(self.constants.get(name, 1.0))


@dataclass(frozen=True)
class HyperParamPlan:
    """Prescribed depth, weight-count target, weight bound and sample count."""

    eps: float
    mode: str
    depth: int
    weight_count: int
    weight_bound: float
    samples: int
    beta: float | None = None


def plan_hyperparams(request: HyperParamRequest, mode: str = "robin") -> HyperParamPlan:
    """Turn a target accuracy into class/sampling sizes.

    Robin/Neumann mode:
        depth  = max(2, ceil(C_depth * log(d+1)))
        n      = ceil(C_width  * eps^(-d/(1-mu)))
        B      = max(1, C_weight * eps^(-(9d+8)/(2-2mu)))
        N = M  = ceil(C_samples * eps^(-C_se * d * log(d+1)/(1-mu)))
    Dirichlet mode replaces the width/weight exponents by -5d/(2(1-mu)) and
    -(45d+40)/(4(1-mu)) and adds the penalty size beta = C_coe * eps.

    Logs are natural.  A target accuracy >= 1 is allowed but warned about,
    since the prescriptions are meaningful for small eps.
    """
    if mode not in ("robin", "neumann", "dirichlet"):
        raise ValueError(f"unknown plan mode: {mode!r}")
    eps = request.target_accuracy
    if eps >= 1.0:
        warnings.warn("hyperparameter plans target accuracies below 1", stacklevel=2)
    d, mu = request.dim, request.mu
    depth = max(2, math.ceil(request.constant("C_depth") * math.log(d + 1)))
    if mode == "dirichlet":
        width_exp = 5.0 * d / (2.0 * (1.0 - mu))
        weight_exp = (45.0 * d + 40.0) / (4.0 * (1.0 - mu))
        beta = request.constant("C_coe") * eps
    else:
        width_exp = d / (1.0 - mu)
        weight_exp = (9.0 * d + 8.0) / (2.0 - 2.0 * mu)
        beta = None
    weight_count = math.ceil(request.constant("C_width") * eps**-width_exp)
    weight_bound = max(1.0, request.constant("C_weight") * eps**-weight_exp)
    sample_exp = request.constant("C_samples_exponent") * d * math.log(d + 1) / (1.0 - mu)
    samples = math.ceil(request.constant("C_samples") * eps**-sample_exp)
    return HyperParamPlan(
        eps=eps,
        mode=mode,
        depth=depth,
        weight_count=int(weight_count),
        weight_bound=float(weight_bound),
        samples=int(samples),
        beta=beta,
    )


def penalty_gap_bound(beta: float, c_coe: float = 1.0) -> float:
    """Linear-in-beta bound on the penalized-to-Dirichlet solution distance."""
    if beta < 0 or c_coe <= 0:
        raise ValueError("beta must be >= 0 and c_coe positive")
    return c_coe * beta


# ---------------------------------------------------------------------------
# empirical probe of the parameter-Lipschitz constants


@dataclass(frozen=True)
class LipschitzProbeReport:
    max_value_ratio: float
    max_grad_ratio: float
    value_bound: float
    grad_bound: float
    n_probes: int
    seed: int


def lipschitz_in_theta_check(
    arch: NetworkArch, n_probes: int = 10_000, seed: int = 0
) -> LipschitzProbeReport:
    """Probe |f(x;a) - f(x;b)| / ||a - b|| against the closed-form constants.

    Draws parameter pairs uniformly from the weight box and points uniformly
    from the unit cube; tracks the max observed ratio for values and for each
    input-derivative component, and asserts both stay below their bounds.
    """
    if n_probes < 10:
        raise ValueError("need at least 10 probes")
    n = arch.total_weight_count()
    P = arch.hidden_width_product()
    B = arch.weight_bound
    D = arch.depth
    value_bound = math.sqrt(n) * B ** (D - 1) * P
    grad_bound = math.sqrt(n) * (D + 1) * B ** (2 * D) * P * P
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    max_val = 0.0
    max_grad = 0.0
    for _ in range(n_probes):
        ta = rng.uniform(-B, B, size=n)
        tb = rng.uniform(-B, B, size=n)
        dist = float(np.linalg.norm(ta - tb))
        if dist < 1e-15:
            continue  # zero-separation pair carries no ratio information
        x = rng.random(arch.input_dim)
        ra = forward_with_input_grad(arch, NetworkParams.unflatten(arch, ta), x)
        rb = forward_with_input_grad(arch, NetworkParams.unflatten(arch, tb), x)
        max_val = max(max_val, abs(ra.value - rb.value) / dist)
        max_grad = max(
            max_grad, float(np.abs(ra.input_gradient - rb.input_gradient).max()) / dist
        )
    report = LipschitzProbeReport(
        max_value_ratio=max_val,
        max_grad_ratio=max_grad,
        value_bound=value_bound,
        grad_bound=grad_bound,
        n_probes=n_probes,
        seed=seed,
    )
    if max_val > value_bound or max_grad > grad_bound:
        raise AssertionError(f"probe exceeded the closed-form constant: {report}")
    return report


# ---------------------------------------------------------------------------
# combined report


@dataclass(frozen=True)
class BoundReport:
    """Everything the calculators say about one architecture and sample size."""

    constants: ClassConstants
    covering_log_offsets: tuple[float, float, float, float, float]
    rademacher: tuple[float, float, float, float, float]
    statistical: BoundValue
    n_interior: int
    n_boundary: int
    alpha: float
    beta: float
    c_aggregate: float
    widths: tuple[int, ...]
    activation: str

    def as_dict(self) -> dict:
        out = {
            "arch": {
                "widths": list(self.widths),
                "activation": self.activation,
                "weight_bound": self.constants.weight_bound,
                "depth": self.constants.depth,
                "n_weights": self.constants.n_weights,
            },
            "inputs": {
                "N": self.n_interior,
                "M": self.n_boundary,
                "alpha": self.alpha,
                "beta": self.beta,
                "C_aggregate": self.c_aggregate,
            },
            "statistical_bound": self.statistical.as_dict(),
        }
        out.update(self.constants.as_dict())
        out["covering_log_offsets"] = list(self.covering_log_offsets)
        out["rademacher"] = [r if math.isfinite(r) else None for r in self.rademacher]
        return out


def bound_report(
    arch: NetworkArch,
    n_interior: int,
    n_boundary: int,
    alpha: float,
    beta: float,
    c_aggregate: float = 1.0,
) -> BoundReport:
    """Assemble constants, covering data, chaining values and the aggregate bound.

    Per class the covering entry is the offset log(2 L_i B sqrt(n)); the log
    cover count at radius eps is n_weights * (offset - log eps), clamped at 0.
    Chaining entries fall back to inf when the constants overflow doubles.
    """
    cc = class_constants(arch)
    n = cc.n_weights
    offsets = tuple(
        math.log(2.0) + li.ln + math.log(arch.weight_bound) + 0.5 * math.log(n)
        for li in cc.theta_lipschitz
    )
    rad = []
    for i in range(1, 6):
        try:
            rad.append(chaining_rademacher_bound(i, arch, n_interior))
        except (OverflowError, ValueError):
            rad.append(math.inf)
    stat = statistical_error_bound(arch, n_interior, n_boundary, alpha, beta, None, c_aggregate)
    return BoundReport(
        constants=cc,
        covering_log_offsets=offsets,
        rademacher=tuple(rad),
        statistical=stat,
        n_interior=n_interior,
        n_boundary=n_boundary,
        alpha=alpha,
        beta=beta,
        c_aggregate=c_aggregate,
        widths=arch.widths,
        activation=arch.activation,
    )
