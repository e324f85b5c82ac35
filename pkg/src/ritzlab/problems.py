"""Manufactured problems and non-neural reference solutions.

Ground truth comes from two places: analytic manufactured solutions (pick u,
derive f and g symbolically) and, in one dimension, a second-order finite
difference solver whose Robin closure uses one-sided three-point stencils.
The reference solver exists so that statements about the penalized Dirichlet
formulation can be checked against an object that is independent of any
network, sampler, or training loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .geometry import Domain, unit_hypercube
from .ritz import (
    BoundaryCondition,
    EllipticProblem,
    dirichlet_penalty,
    robin,
)

__all__ = [
    "ManufacturedSolution",
    "sin_product",
    "gaussian_bump",
    "quadratic",
    "make_manufactured",
    "built_in_problem",
    "BUILT_IN_PROBLEMS",
    "ReferenceSolution1D",
    "solve_reference_1d",
    "penalty_gap_1d",
    "fit_loglog_slope",
]


@dataclass(frozen=True)
class ManufacturedSolution:
    """An analytic u with its gradient and Laplacian, used as ground truth."""

    u: Callable[[np.ndarray], np.ndarray]
    grad_u: Callable[[np.ndarray], np.ndarray]
    laplacian_u: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    # FieldLike interface so a solution drops into error measurement directly
    def value(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.u(np.atleast_2d(points)), dtype=float)

    def value_and_grad(self, points: np.ndarray):
        pts = np.atleast_2d(points)
        return self.value(pts), np.asarray(self.grad_u(pts), dtype=float)


def sin_product(dim: int) -> ManufacturedSolution:
    """u(x) = prod_k sin(pi x_k); vanishes on the unit-cube boundary."""

    def u(pts):
        return np.prod(np.sin(math.pi * pts), axis=1)

    def grad(pts):
        s = np.sin(math.pi * pts)
        c = np.cos(math.pi * pts)
        out = np.empty_like(s)
        # column k carries cos at k and sin elsewhere; no division, so the
        # zeros of sin need no special casing
        for k in range(pts.shape[1]):
            others = np.prod(np.delete(s, k, axis=1), axis=1)
            out[:, k] = math.pi * c[:, k] * others
        return out

    def lap(pts):
        d = pts.shape[1]
        return -d * math.pi**2 * np.prod(np.sin(math.pi * pts), axis=1)

    return ManufacturedSolution(u, grad, lap, "product of coordinate sines")


def gaussian_bump(dim: int, center: float = 0.5, width: float = 0.2) -> ManufacturedSolution:
    """u(x) = exp(-|x - c|^2 / (2 s^2)) with c at the cube midpoint."""
    if width <= 0:
        raise ValueError("width must be positive")
    s2 = width * width

    def u(pts):
        r2 = np.sum((pts - center) ** 2, axis=1)
        return np.exp(-r2 / (2.0 * s2))

    def grad(pts):
        return -(pts - center) / s2 * u(pts)[:, None]

    def lap(pts):
        d = pts.shape[1]
        r2 = np.sum((pts - center) ** 2, axis=1)
        return (r2 / (s2 * s2) - d / s2) * u(pts)

    return ManufacturedSolution(u, grad, lap, "isotropic Gaussian bump")


def quadratic(dim: int) -> ManufacturedSolution:
    """u(x) = prod_k x_k (1 - x_k); also vanishes on the cube boundary."""

    def parts(pts):
        return pts * (1.0 - pts)

    def u(pts):
        return np.prod(parts(pts), axis=1)

    def grad(pts):
        p = parts(pts)
        out = np.empty_like(p)
        for k in range(pts.shape[1]):
            others = np.prod(np.delete(p, k, axis=1), axis=1)
            out[:, k] = (1.0 - 2.0 * pts[:, k]) * others
        return out

    def lap(pts):
        p = parts(pts)
        total = np.zeros(pts.shape[0])
        for k in range(pts.shape[1]):
            others = np.prod(np.delete(p, k, axis=1), axis=1)
            total += -2.0 * others
        return total

    return ManufacturedSolution(u, grad, lap, "product of parabolic arches")


_BUILT_IN_SOLUTIONS = {
    "sin_product": sin_product,
    "gaussian_bump": gaussian_bump,
    "quadratic": quadratic,
}


def make_manufactured(
    domain: Domain,
    u_expr,
    w=1.0,
    bc: BoundaryCondition | None = None,
    label: str = "",
) -> EllipticProblem:
    """Build the problem whose exact solution is the chosen u.

    ``u_expr`` is a built-in name ("sin_product", "gaussian_bump",
    "quadratic") or a :class:`ManufacturedSolution`.  The source is derived
    as f = -lap(u) + w u and the boundary data as g = alpha u + beta du/dn.
    A penalized Dirichlet condition requires u to vanish on the boundary
    (g is then identically zero); a nonvanishing trace is an error.
    """
    if bc is None:
        bc = robin(1.0, 1.0)
    if isinstance(u_expr, str):
        try:
            sol = _BUILT_IN_SOLUTIONS[u_expr](domain.dim)
        except KeyError:
            raise ValueError(f"unknown manufactured solution: {u_expr!r}") from None
    else:
        sol = u_expr

    w_fn = w if callable(w) else (lambda pts, _c=float(w): np.full(pts.shape[0], _c))

    def f(pts):
        return -sol.laplacian_u(pts) + w_fn(pts) * sol.u(pts)

    if bc.kind == "dirichlet_penalty":
        from .geometry import sample_boundary

        trace = sol.u(sample_boundary(domain, 128, seed=0))
        if np.max(np.abs(trace)) > 1e-10:
            raise ValueError("penalized Dirichlet needs a solution vanishing on the boundary")
        g = 0.0
    else:

        def g(pts):
            normals = domain.boundary_normal(pts)
            du_dn = np.einsum("nd,nd->n", sol.grad_u(pts), normals)
            return bc.alpha * sol.u(pts) + bc.beta * du_dn

    return EllipticProblem(
        domain=domain, w=w_fn, f=f, g=g, bc=bc, exact=sol, label=label
    )


def built_in_problem(name: str, beta: float = 0.1) -> EllipticProblem:
    """Named test problems addressable from configs.

    sin1d_robin      u = sin(pi x) on [0,1], w = 1, Robin(1, 1); g = -pi.
    sin2d_dirichlet  u = sin(pi x) sin(pi y), w = 1, penalty Dirichlet(beta).
    gauss2d_robin    Gaussian bump on the unit square, w = 1, Robin(1, 1).
    quad1d_robin     u = x(1-x), w = 1, Robin(1, 1); g = -1.
    """
    if name == "sin1d_robin":
        return make_manufactured(unit_hypercube(1), "sin_product", 1.0, robin(1.0, 1.0), name)
    if name == "sin2d_dirichlet":
        return make_manufactured(
            unit_hypercube(2), "sin_product", 1.0, dirichlet_penalty(beta), name
        )
    if name == "gauss2d_robin":
        return make_manufactured(unit_hypercube(2), "gaussian_bump", 1.0, robin(1.0, 1.0), name)
    if name == "quad1d_robin":
        return make_manufactured(unit_hypercube(1), "quadratic", 1.0, robin(1.0, 1.0), name)
    raise ValueError(f"unknown built-in problem: {name!r}")


BUILT_IN_PROBLEMS = ("sin1d_robin", "sin2d_dirichlet", "gauss2d_robin", "quad1d_robin")


# ---------------------------------------------------------------------------
# one-dimensional finite difference reference


@dataclass(frozen=True)
class ReferenceSolution1D:
    """Grid solution of -u'' + w u = f on [0,1] with its derivative values."""

    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    bc_kind: str
    alpha: float
    beta: float

    def value(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.interp(pts[:, 0], self.grid, self.values)

    def value_and_grad(self, points: np.ndarray):
        pts = np.atleast_2d(points)
        v = np.interp(pts[:, 0], self.grid, self.values)
        d = np.interp(pts[:, 0], self.grid, self.derivative)
        return v, d[:, None]


def solve_reference_1d(
    problem: EllipticProblem,
    n_grid: int = 512,
    bc_override: BoundaryCondition | None = None,
    homogeneous_g: bool = False,
) -> ReferenceSolution1D:
    """Second-order finite differences for the 1D problem.

    ``n_grid`` counts subintervals (>= 16).  Robin rows close the boundary
    with one-sided three-point first derivatives, keeping the whole scheme
    second order; Dirichlet rows pin the endpoint values to zero.
    ``bc_override`` solves the same interior equation under a different
    boundary condition, and ``homogeneous_g`` forces g = 0; both exist for
    the penalty-gap experiment.
    """
    if problem.domain.dim != 1:
        raise ValueError("the reference solver is one-dimensional")
    if n_grid < 16:
        raise ValueError("n_grid must be at least 16")
    a, b = problem.domain.interval()
    bc = bc_override if bc_override is not None else problem.bc
    n = int(n_grid)
    h = (b - a) / n
    x = np.linspace(a, b, n + 1)
    pts = x[:, None]
    w = np.asarray(problem.w(pts), dtype=float)
    f = np.asarray(problem.f(pts), dtype=float)

    main = 2.0 / h**2 + w
    off = np.full(n, -1.0 / h**2)
    mat = scipy.sparse.diags_array(
        (off, main, off), offsets=(-1, 0, 1), shape=(n + 1, n + 1)
    ).tolil()
    rhs = f.copy()

    if bc.kind == "dirichlet_penalty":
        # the reference object for the penalty limit is the true Dirichlet
        # solution: hard zero endpoint values
        for i in (0, n):
            mat.rows[i] = [i]
            mat.data[i] = [1.0]
            rhs[i] = 0.0
        kind = "dirichlet"
    else:
        alpha, beta = bc.alpha, bc.beta
        if homogeneous_g:
            g0 = gn = 0.0
        else:
            gb = np.asarray(problem.g(np.array([[a], [b]])), dtype=float)
            g0, gn = float(gb[0]), float(gb[1])
        # alpha u - beta u'(a) = g with u'(a) ~ (-1.5 u0 + 2 u1 - 0.5 u2)/h
        mat.rows[0] = [0, 1, 2]
        mat.data[0] = [alpha + 1.5 * beta / h, -2.0 * beta / h, 0.5 * beta / h]
        rhs[0] = g0
        mat.rows[n] = [n - 2, n - 1, n]
        mat.data[n] = [0.5 * beta / h, -2.0 * beta / h, alpha + 1.5 * beta / h]
        rhs[n] = gn
        kind = bc.kind

    values = scipy.sparse.linalg.spsolve(mat.tocsr(), rhs)
    if not np.all(np.isfinite(values)):
        raise ValueError("reference solve produced non-finite values")

    deriv = np.empty_like(values)
    deriv[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    deriv[0] = (-1.5 * values[0] + 2.0 * values[1] - 0.5 * values[2]) / h
    deriv[-1] = (1.5 * values[-1] - 2.0 * values[-2] + 0.5 * values[-3]) / h
    return ReferenceSolution1D(
        grid=x,
        values=values,
        derivative=deriv,
        bc_kind=kind,
        alpha=bc.alpha,
        beta=bc.beta,
    )


def _h1_grid_gap(sa: ReferenceSolution1D, sb: ReferenceSolution1D) -> float:
    dv = sa.values - sb.values
    dd = sa.derivative - sb.derivative
    l2 = np.trapezoid(dv * dv, sa.grid)
    semi = np.trapezoid(dd * dd, sa.grid)
    return math.sqrt(l2 + semi)


def penalty_gap_1d(
    problem: EllipticProblem,
    beta_list: Sequence[float],
    n_grid: int = 512,
) -> list[tuple[float, float]]:
    """H1 distances between Robin(1, beta, g=0) solutions and the Dirichlet one.

    The Robin problems keep the interior data (w, f) of ``problem`` and set
    alpha = 1, g = 0; the comparison target pins zero endpoint values.  Gaps
    are trapezoidal-grid H1 norms of the difference.
    """
    if any(bta <= 0 for bta in beta_list):
        raise ValueError("penalty sizes must be positive")
    u_d = solve_reference_1d(problem, n_grid, bc_override=dirichlet_penalty(1e-8))
    out = []
    for bta in beta_list:
        u_r = solve_reference_1d(
            problem, n_grid, bc_override=robin(1.0, bta), homogeneous_g=True
        )
        out.append((float(bta), _h1_grid_gap(u_r, u_d)))
    return out


def fit_loglog_slope(pairs: Sequence[tuple[float, float]]) -> float:
    """Least squares slope of log(gap) against log(beta)."""
    arr = np.asarray(pairs, dtype=float)
    if arr.shape[0] < 2:
        raise ValueError("need at least two points for a slope")
    return float(np.polyfit(np.log(arr[:, 0]), np.log(arr[:, 1]), 1)[0])
