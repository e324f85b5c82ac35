"""Sampleable domains inside the unit cube.

Two shapes are supported: the unit hypercube ``[0,1]^d`` and Euclidean balls
contained in it.  Both have closed-form interior and boundary measures, exact
membership tests, and uniform samplers for the interior and the boundary.

Sampling is a pure function of ``(domain, count, seed)``.  Streams come from
numpy's Philox generator (counter-based, 64-bit key), so a batch is
reproducible bit for bit across processes and platforms.

Example
-------
>>> dom = unit_hypercube(2)
>>> batch = sample_batch(dom, n=4, m=4, seed=0)
>>> batch.interior.shape, batch.boundary.shape
((4, 2), (4, 2))
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Domain",
    "SampleBatch",
    "unit_hypercube",
    "ball",
    "measures",
    "sample_interior",
    "sample_boundary",
    "sample_batch",
]

BOUNDARY_TOL = 1e-12


def _philox(seed: int) -> np.random.Philox:
    if seed < 0:
        raise ValueError("seed must be a nonnegative 64-bit integer")
    return np.random.Philox(key=np.uint64(seed))


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(_philox(seed))


@dataclass(frozen=True)
class Domain:
    """A sampleable region Omega inside [0,1]^d.

    Use :func:`unit_hypercube` or :func:`ball` to construct one; the
    constructor itself performs no clipping.
    """

    kind: str
    dim: int
    center: tuple[float, ...] = ()
    radius: float = 0.0

    def __post_init__(self):
        if self.kind not in ("hypercube", "ball"):
            raise ValueError(f"unknown domain kind: {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")

    # -- measures ---------------------------------------------------------

    def interior_measure(self) -> float:
        """Lebesgue measure of the interior (volume)."""
        if self.kind == "hypercube":
            return 1.0
        d, r = self.dim, self.radius
        return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * r**d

    def boundary_measure(self) -> float:
        """Surface measure of the boundary; counting measure when d = 1."""
        d = self.dim
        if self.kind == "hypercube":
            return 2.0 * d
        r = self.radius
        return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0) * r ** (d - 1)

    # -- membership -------------------------------------------------------

    def contains_interior(self, points: np.ndarray) -> np.ndarray:
        """Strict interior membership test, one bool per row."""
        pts = _as_points(points, self.dim)
        if self.kind == "hypercube":
            return np.all((pts > 0.0) & (pts < 1.0), axis=1)
        dist = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        return dist < self.radius

    def on_boundary(self, points: np.ndarray, tol: float = BOUNDARY_TOL) -> np.ndarray:
        """Whether each row satisfies the boundary defining equation within tol."""
        pts = _as_points(points, self.dim)
        if self.kind == "hypercube":
            inside = np.all((pts >= -tol) & (pts <= 1.0 + tol), axis=1)
            edge = np.min(np.minimum(np.abs(pts), np.abs(1.0 - pts)), axis=1) <= tol
            return inside & edge
        dist = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        return np.abs(dist - self.radius) <= tol

    def boundary_normal(self, points: np.ndarray) -> np.ndarray:
        """Outward unit normal at boundary points (rows)."""
        pts = _as_points(points, self.dim)
        if self.kind == "ball":
            diff = pts - np.asarray(self.center)
            nrm = np.linalg.norm(diff, axis=1, keepdims=True)
            if np.any(nrm < BOUNDARY_TOL):
                raise ValueError("point at ball center has no outward normal")
            return diff / nrm
        # hypercube: the active face is the first coordinate pinned at 0 or 1
        normals = np.zeros_like(pts)
        lo = np.abs(pts) <= BOUNDARY_TOL
        hi = np.abs(1.0 - pts) <= BOUNDARY_TOL
        active = lo | hi
        if not np.all(active.any(axis=1)):
            raise ValueError("some points do not lie on a hypercube face")
        first = np.argmax(active, axis=1)
        rows = np.arange(pts.shape[0])
        normals[rows, first] = np.where(hi[rows, first], 1.0, -1.0)
        return normals

    def interval(self) -> tuple[float, float]:
        """Endpoints [a, b] of a one-dimensional domain."""
        if self.dim != 1:
            raise ValueError("interval() is defined only for d = 1")
        if self.kind == "hypercube":
            return 0.0, 1.0
        c, r = self.center[0], self.radius
        return c - r, c + r


def unit_hypercube(dim: int) -> Domain:
    """The unit hypercube [0,1]^dim."""
    return Domain(kind="hypercube", dim=int(dim))


def ball(center, radius: float) -> Domain:
    """A Euclidean ball, radius clipped so the closure stays inside [0,1]^d.

    Raises if the center offers no positive clipped radius.
    """
    c = tuple(float(x) for x in np.atleast_1d(center))
    if not all(0.0 <= x <= 1.0 for x in c):
        raise ValueError("ball center must lie in [0,1]^d")
    if radius <= 0.0:
        raise ValueError("ball radius must be positive")
    room = min(min(x, 1.0 - x) for x in c)
    if room <= 0.0:
        raise ValueError("ball center sits on the cube boundary; no interior radius fits")
    return Domain(kind="ball", dim=len(c), center=c, radius=min(float(radius), room))


def measures(domain: Domain) -> tuple[float, float]:
    """(interior measure, boundary measure) of the domain."""
    return domain.interior_measure(), domain.boundary_measure()


# ---------------------------------------------------------------------------
# samplers


def _as_points(points, dim: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, domain has {dim}")
    return pts


def _interior(domain: Domain, n: int, rng: np.random.Generator) -> np.ndarray:
    d = domain.dim
    if domain.kind == "hypercube":
        pts = rng.random((n, d))
        # random() is [0,1); redraw the measure-zero exact zeros so points are
        # strictly interior
        while True:
            hit = pts == 0.0
            if not hit.any():
                break
            pts[hit] = rng.random(int(hit.sum()))
        return pts
    center = np.asarray(domain.center)
    dirs = _unit_directions(n, d, rng)
    radii = domain.radius * rng.random(n) ** (1.0 / d)
    return center + radii[:, None] * dirs


def _boundary(domain: Domain, m: int, rng: np.random.Generator) -> np.ndarray:
    d = domain.dim
    if domain.kind == "hypercube":
        # all 2d faces of the unit cube have equal measure
        faces = rng.integers(0, 2 * d, size=m)
        pts = rng.random((m, d))
        axis = faces // 2
        side = faces % 2
        pts[np.arange(m), axis] = side.astype(float)
        return pts
    center = np.asarray(domain.center)
    return center + domain.radius * _unit_directions(m, d, rng)


def _unit_directions(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((n, d))
    while True:
        nrm = np.linalg.norm(v, axis=1)
        bad = nrm < 1e-12
        if not bad.any():
            break
        v[bad] = rng.standard_normal((int(bad.sum()), d))
    return v / nrm[:, None]


def sample_interior(domain: Domain, n: int, seed: int) -> np.ndarray:
    """n points uniform on the interior of the domain, shape (n, d)."""
    if n < 1:
        raise ValueError("need at least one interior sample")
    return _interior(domain, int(n), _rng(seed))


def sample_boundary(domain: Domain, m: int, seed: int) -> np.ndarray:
    """m points uniform (w.r.t. surface measure) on the boundary, shape (m, d)."""
    if m < 1:
        raise ValueError("need at least one boundary sample")
    return _boundary(domain, int(m), _rng(seed))


@dataclass(frozen=True)
class SampleBatch:
    """One Monte Carlo batch: interior rows, boundary rows, and its seed."""

    interior: np.ndarray
    boundary: np.ndarray
    seed: int

    def __post_init__(self):
        self.interior.setflags(write=False)
        self.boundary.setflags(write=False)

    @property
    def n(self) -> int:
        return self.interior.shape[0]

    @property
    def m(self) -> int:
        return self.boundary.shape[0]


def sample_batch(domain: Domain, n: int, m: int, seed: int) -> SampleBatch:
    """Draw a full batch from one seed.

    The interior stream is Philox(seed); the boundary stream is the same key
    jumped once, so the two sets are independent yet reproducible together.
    """
    if n < 1 or m < 1:
        raise ValueError("batch needs n >= 1 interior and m >= 1 boundary samples")
    interior = _interior(domain, int(n), np.random.Generator(_philox(seed)))
    boundary = _boundary(domain, int(m), np.random.Generator(_philox(seed).jumped(1)))
    return SampleBatch(interior=interior, boundary=boundary, seed=int(seed))
