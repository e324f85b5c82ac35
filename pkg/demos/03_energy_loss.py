"""The sampled energy and where its minimum sits.

For -u'' + u = f on [0,1] with Robin data from u* = sin(pi x), the
population energy is minimized at u* with value -(pi^2 + 1)/4.  The demo
evaluates the five loss terms at the zero field, at a wrong candidate, and
at the exact solution, using both Monte Carlo and 1D quadrature.
"""

import math

from ritzlab import built_in_problem, continuous_loss_estimate, sample_batch, zero_field
from ritzlab.ritz import empirical_loss
from ritzlab.problems import sin_product

problem = built_in_problem("sin1d_robin")
exact = sin_product(1)
target = -(math.pi**2 + 1.0) / 4.0
print(f"continuous minimum value: {target:.6f}")

batch = sample_batch(problem.domain, 512, 512, seed=0)

for name, field in (("zero", zero_field()), ("exact", exact)):
    bd = empirical_loss(field, batch, problem)
    est = continuous_loss_estimate(field, problem, n_quad=4096, method="quadrature")
    print(f"\n{name} candidate:")
    print(f"  l1..l5 = {bd.l1:+.4f} {bd.l2:+.4f} {bd.l3:+.4f} {bd.l4:+.4f} {bd.l5:+.4f}")
    print(f"  sampled total    = {bd.total:+.6f}")
    print(f"  quadrature total = {est.breakdown.total:+.6f}")

# the sampled energy at the exact solution scatters around the true minimum
print("\nempirical totals at u* over five batches:")
for seed in range(5):
    b = sample_batch(problem.domain, 512, 512, seed=seed)
    print(f"  seed {seed}: {empirical_loss(exact, b, problem).total:+.6f}")
