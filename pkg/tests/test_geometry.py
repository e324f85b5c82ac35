import math

import numpy as np
import pytest

from ritzlab.geometry import (
    SampleBatch,
    ball,
    measures,
    sample_batch,
    sample_boundary,
    sample_interior,
    unit_hypercube,
)


def test_sampling_is_deterministic_in_seed():
    dom = unit_hypercube(3)
    a = sample_interior(dom, 100, seed=7)
    b = sample_interior(dom, 100, seed=7)
    assert np.array_equal(a, b)
    c = sample_boundary(dom, 50, seed=7)
    d = sample_boundary(dom, 50, seed=7)
    assert np.array_equal(c, d)
    assert not np.array_equal(a, sample_interior(dom, 100, seed=8))


def test_batch_is_deterministic_and_streams_differ():
    dom = ball([0.5, 0.5], 0.3)
    b1 = sample_batch(dom, 64, 32, seed=3)
    b2 = sample_batch(dom, 64, 32, seed=3)
    assert np.array_equal(b1.interior, b2.interior)
    assert np.array_equal(b1.boundary, b2.boundary)
    assert b1.n == 64 and b1.m == 32 and b1.seed == 3
    # interior stream of the batch matches the standalone sampler
    assert np.array_equal(b1.interior, sample_interior(dom, 64, seed=3))


@pytest.mark.parametrize(
    "dom",
    [unit_hypercube(1), unit_hypercube(3), ball([0.5, 0.5], 0.3), ball([0.4], 0.2)],
)
def test_interior_points_strictly_inside(dom):
    pts = sample_interior(dom, 2000, seed=11)
    assert pts.shape == (2000, dom.dim)
    assert dom.contains_interior(pts).all()


@pytest.mark.parametrize(
    "dom",
    [unit_hypercube(1), unit_hypercube(2), ball([0.5, 0.5, 0.5], 0.25)],
)
def test_boundary_points_satisfy_defining_equation(dom):
    pts = sample_boundary(dom, 2000, seed=12)
    assert dom.on_boundary(pts, tol=1e-12).all()


def test_ball_interior_mean_matches_center():
    # law of large numbers; 0.01 is far beyond five standard errors at n=1e5
    dom = ball([0.5, 0.5], 0.3)
    pts = sample_interior(dom, 100_000, seed=1)
    assert np.abs(pts.mean(axis=0) - 0.5).max() < 0.01


def test_hypercube_interior_mean_1d():
    pts = sample_interior(unit_hypercube(1), 100_000, seed=1)
    assert abs(pts.mean() - 0.5) < 0.005


def test_hypercube_boundary_edge_fractions_2d():
    m = 40_000
    pts = sample_boundary(unit_hypercube(2), m, seed=2)
    frac = [
        np.mean(pts[:, 0] == 0.0),
        np.mean(pts[:, 0] == 1.0),
        np.mean(pts[:, 1] == 0.0),
        np.mean(pts[:, 1] == 1.0),
    ]
    assert sum(frac) == pytest.approx(1.0)
    for f in frac:
        assert abs(f - 0.25) < 0.01


def test_ball_boundary_radii_exact():
    dom = ball([0.5, 0.5, 0.5], 0.25)
    pts = sample_boundary(dom, 5000, seed=4)
    radii = np.linalg.norm(pts - 0.5, axis=1)
    assert np.abs(radii - 0.25).max() <= 1e-12


def test_interval_boundary_is_two_points():
    pts = sample_boundary(unit_hypercube(1), 1000, seed=5)
    assert set(np.unique(pts)) <= {0.0, 1.0}
    dom = ball([0.5], 0.25)
    pts = sample_boundary(dom, 1000, seed=5)
    assert set(np.round(np.unique(pts), 12)) <= {0.25, 0.75}


def test_single_ball_boundary_point():
    dom = ball([0.5, 0.5], 0.25)
    pt = sample_boundary(dom, 1, seed=5)
    assert pt.shape == (1, 2)
    assert abs(np.linalg.norm(pt[0] - 0.5) - 0.25) <= 1e-12


def test_measures_closed_forms():
    assert measures(unit_hypercube(1)) == (1.0, 2.0)
    assert measures(unit_hypercube(3)) == (1.0, 6.0)
    vol, surf = measures(ball([0.5, 0.5], 0.25))
    assert vol == pytest.approx(math.pi / 16.0, rel=1e-14)
    assert surf == pytest.approx(math.pi / 2.0, rel=1e-14)
    # interval ball: length 2r, two endpoints
    vol1, surf1 = measures(ball([0.5], 0.3))
    assert vol1 == pytest.approx(0.6, rel=1e-14)
    assert surf1 == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_interior_uniformity_on_subboxes(seed):
    # empirical fraction in an axis-aligned sub-box tracks its volume fraction
    dom = unit_hypercube(2)
    n = 50_000
    pts = sample_interior(dom, n, seed=seed)
    boxes = [((0.0, 0.5), (0.0, 0.5)), ((0.2, 0.9), (0.1, 0.4)), ((0.5, 1.0), (0.0, 1.0))]
    for (x0, x1), (y0, y1) in boxes:
        p = (x1 - x0) * (y1 - y0)
        inside = (
            (pts[:, 0] >= x0) & (pts[:, 0] < x1) & (pts[:, 1] >= y0) & (pts[:, 1] < y1)
        )
        tol = 5.0 * math.sqrt(p * (1.0 - p) / n)
        assert abs(inside.mean() - p) < tol


def test_ball_uniformity_radial_cdf():
    # fraction with ||x-c|| <= s*r is (s)^d for a uniform ball draw
    dom = ball([0.5, 0.5], 0.3)
    n = 50_000
    pts = sample_interior(dom, n, seed=9)
    radii = np.linalg.norm(pts - 0.5, axis=1)
    for s in (0.3, 0.6, 0.9):
        p = s**2
        tol = 5.0 * math.sqrt(p * (1.0 - p) / n)
        assert abs(np.mean(radii <= s * dom.radius) - p) < tol


def test_ball_clipping_and_validation():
    d = ball([0.9, 0.5], 0.5)
    assert d.radius == pytest.approx(0.1)
    with pytest.raises(ValueError):
        ball([0.0, 0.5], 0.1)  # center on the cube boundary
    with pytest.raises(ValueError):
        ball([0.5, 0.5], -1.0)
    with pytest.raises(ValueError):
        sample_interior(unit_hypercube(2), 0, seed=0)


def test_boundary_normals():
    dom = unit_hypercube(2)
    pts = np.array([[0.0, 0.3], [1.0, 0.7], [0.4, 0.0], [0.6, 1.0]])
    normals = dom.boundary_normal(pts)
    expect = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
    assert np.array_equal(normals, expect)
    bdom = ball([0.5, 0.5], 0.25)
    bpts = sample_boundary(bdom, 100, seed=3)
    bn = bdom.boundary_normal(bpts)
    assert np.allclose(np.linalg.norm(bn, axis=1), 1.0, atol=1e-12)
    assert np.allclose(bpts, 0.5 + 0.25 * bn, atol=1e-12)


def test_batch_arrays_read_only():
    b = sample_batch(unit_hypercube(2), 8, 8, seed=0)
    assert isinstance(b, SampleBatch)
    with pytest.raises(ValueError):
        b.interior[0, 0] = 2.0
