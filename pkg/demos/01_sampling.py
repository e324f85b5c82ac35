"""Domains and Monte Carlo sampling.

Draws interior and boundary points on a square and on a ball, checks the
advertised measures against the sampler's own geometry, and shows how the
boundary normal field looks at a few points.
"""

import numpy as np

from ritzlab import ball, sample_batch, unit_hypercube

square = unit_hypercube(2)
print(f"unit square: |Omega| = {square.interior_measure()}, "
      f"|dOmega| = {square.boundary_measure()}")

batch = sample_batch(square, 2000, 400, seed=0)
print(f"interior points inside: {square.contains_interior(batch.interior).mean():.3f}")
print(f"boundary points on boundary: {square.on_boundary(batch.boundary).mean():.3f}")

normals = square.boundary_normal(batch.boundary[:4])
for p, n in zip(batch.boundary[:4], normals):
    print(f"  x = {np.round(p, 3)}  n = {np.round(n, 3)}")

disc = ball(center=(0.5, 0.5), radius=0.3)
print(f"\ndisc: |Omega| = {disc.interior_measure():.6f} "
      f"(pi r^2 = {np.pi * 0.09:.6f})")
print(f"disc boundary length = {disc.boundary_measure():.6f} "
      f"(2 pi r = {2 * np.pi * 0.3:.6f})")

# MC estimate of the disc area via the square sampler, as a sanity check
pts = sample_batch(square, 20000, 4, seed=1).interior
inside = disc.contains_interior(pts).mean()
print(f"MC area estimate from 20k square samples: {inside:.4f}")
