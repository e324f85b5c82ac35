"""A small plan ladder: decreasing target accuracy, growing class and sample sizes.

The theorem's prescriptions with unit constants are astronomically large, so
the ladder uses the same exponent structure with small calibrated constants.
Each cell trains one net and records H1 error, gap, and the statistical
bound into a crash-safe CSV.
"""

import os
import tempfile

from ritzlab import (
    HyperParamRequest,
    TrainConfig,
    arch_from_plan,
    convergence_sweep,
    median_by_plan,
    plan_hyperparams,
)

constants = {"C_width": 2, "C_samples": 100}
plans = [
    plan_hyperparams(HyperParamRequest(target_accuracy=eps, dim=1, constants=constants))
    for eps in (0.4, 0.2, 0.1)
]
print("plan ladder:")
for p in plans:
    widths = arch_from_plan(p, dim=1).widths
    print(f"  eps {p.eps:<4g} -> widths {widths}, N = M = {p.samples}, "
          f"B_theta = {p.weight_bound:.3g}")

out_csv = os.path.join(tempfile.mkdtemp(prefix="ritz_sweep_"), "sweep.csv")
rows = convergence_sweep(
    "sin1d_robin",
    plans,
    seeds=[0, 1, 2],
    out_csv=out_csv,
    train_template=TrainConfig(optimizer="adam", lr=1e-3, lr_schedule="cosine",
                               steps=1500, log_every=500),
    n_quad=2048,
    gap_trials=2,
    gap_samples=4096,
)

medians = median_by_plan(rows, "h1_error")
print(f"\n{len(rows)} cells -> {out_csv}")
for plan_id, stats in medians.items():
    print(f"  {plan_id}: median H1 error {stats['median']:.5f} over {stats['count']} seeds")
