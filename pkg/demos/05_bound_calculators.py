"""Capacity constants, covering numbers, chaining, and the aggregate bound.

Everything here is a closed-form evaluation: no training.  Values that
overflow double precision are still usable through their log10 field.
"""

from ritzlab import (
    NetworkArch,
    bound_report,
    class_constants,
    covering_bound_euclidean,
    exact_rademacher,
    greedy_cover_count,
    massart_bound,
    plan_hyperparams,
    HyperParamRequest,
)

import numpy as np

arch = NetworkArch(widths=(1, 4, 4, 1), activation="tanh", weight_bound=2.0)
cc = class_constants(arch)
print(f"arch {arch.widths}, {cc.n_weights} weights, depth {cc.depth}")
for i, (b, l) in enumerate(zip(cc.value_bounds, cc.theta_lipschitz), start=1):
    print(f"  B{i} = {b.value:.6g}   L{i} = {l.value:.6g}")

# finite-set Rademacher averages: exact enumeration vs the ln|A| bound
rng = np.random.Generator(np.random.Philox(key=3))
pts = rng.normal(size=(8, 5))  # 8 set elements over 5 sign coordinates
print(f"\nexact Rademacher of 8 vectors in R^5: {exact_rademacher(pts):.5f}")
print(f"Massart bound:                        {massart_bound(pts):.5f}")

# covering: a greedy cover of a parameter ball never beats the volumetric bound
dim, radius, eps = 2, 1.0, 0.25
cloud = rng.uniform(-radius, radius, size=(4000, dim))
greedy = greedy_cover_count(cloud, eps)
volumetric = covering_bound_euclidean(eps, radius, dim)
print(f"\ngreedy cover of the radius-{radius} box in {dim}D at eps={eps}: "
      f"{greedy} centers (bound {volumetric.value:.0f})")

# the full report, including the planned-scale regime where only logs survive
report = bound_report(arch, n_interior=4096, n_boundary=4096, alpha=1.0, beta=1.0)
print(f"\naggregate statistical bound at N=M=4096: "
      f"{report.statistical.value:.4g} (log10 {report.statistical.log10:.3f})")

plan = plan_hyperparams(HyperParamRequest(target_accuracy=0.1, dim=2), mode="robin")
print(f"\naccuracy plan for eps=0.1 in 2D: depth {plan.depth}, "
      f"{plan.weight_count} weights, B = 10^{np.log10(plan.weight_bound):.1f}, "
      f"N = M = {plan.samples}")
