"""Train a small net on the 1D Robin problem and measure its H1 error.

Mirrors what `ritzlab solve` does: full-batch Adam with a cosine schedule,
projection onto the weight box each step, best-iterate selection, then a
relative H1 error against the manufactured solution.
"""

import math

from ritzlab import (
    NetworkArch,
    NetworkFunction,
    TrainConfig,
    built_in_problem,
    h1_error,
    sample_batch,
    train,
)
from ritzlab.analysis import h1_norm

problem = built_in_problem("sin1d_robin")
arch = NetworkArch(widths=(1, 16, 16, 1), activation="tanh", weight_bound=10.0)
batch = sample_batch(problem.domain, 512, 512, seed=100)
config = TrainConfig(optimizer="adam", lr=3e-4, lr_schedule="cosine",
                     steps=5000, seed=0, log_every=1000)

result = train(arch, problem, batch, config)
for rec in result.history:
    print(f"step {rec.step:5d}  total {rec.breakdown.total:+.6f}  "
          f"|theta|_inf {rec.param_inf_norm:.3f}")

print(f"\nbest total {result.best_total:+.6f} at step {result.best_step} "
      f"(continuous minimum {-(math.pi**2 + 1) / 4:+.6f})")

fn = NetworkFunction(arch, result.params)
err = h1_error(fn, problem.exact, problem.domain, n_quad=4096, method="grid")
denom = h1_norm(problem.exact, problem.domain, n_quad=4096, method="grid")
print(f"H1 error {err.h1_error:.4f}  relative {err.h1_error / denom:.4f}")
print(f"(L2 part {err.l2_error:.4f}, seminorm part {err.h1_seminorm_error:.4f})")
