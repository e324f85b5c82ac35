"""Generalization gap of a trained net, against the statistical bound.

Trains the same architecture on training sets of increasing size and
measures |L_fresh - L_train| over independent fresh batches.  The constants
in the theoretical bound are not exhibited, so the curve is calibrated at
the worst gap of the smallest N; its N-dependence (decay like
sqrt(log N / N)) then has to dominate everything else on its own.

This is the slowest demo: fifteen 2000-step training runs, a few minutes.
"""

import numpy as np

from ritzlab import (
    NetworkArch,
    NetworkFunction,
    TrainConfig,
    built_in_problem,
    generalization_gap,
    sample_batch,
    statistical_error_bound,
    train,
)

problem = built_in_problem("sin1d_robin")
arch = NetworkArch(widths=(1, 8, 8, 1), activation="tanh", weight_bound=10.0)

rows = []
for n_train in (250, 1000, 4000):
    per_seed = []
    for seed in range(5):
        config = TrainConfig(optimizer="adam", lr=3e-4, lr_schedule="cosine",
                             steps=2000, seed=seed, log_every=500)
        batch = sample_batch(problem.domain, n_train, n_train, seed=100 + seed)
        res = train(arch, problem, batch, config)
        rep = generalization_gap(NetworkFunction(arch, res.params), problem, batch,
                                 n_fresh=8192, trials=4, seed=80_000 + seed)
        per_seed.append(rep.mean)
    rows.append((n_train, float(np.median(per_seed)), max(per_seed)))
    print(f"N = {n_train:5d}: median gap {rows[-1][1]:.5f}  worst {rows[-1][2]:.5f}")

raw = [statistical_error_bound(arch, n, n, alpha=1.0, beta=1.0).value for n, _, _ in rows]
c = rows[0][2] / raw[0]
print(f"\ncalibrating C_aggregate = {c:.3e} at the worst gap of N = {rows[0][0]}")
for (n, med, worst), r in zip(rows, raw):
    ok = "ok" if worst <= c * r * (1 + 1e-9) else "VIOLATED"
    print(f"N = {n:5d}: bound {c * r:.5f}  vs worst measured {worst:.5f}  {ok}")
