"""The network and its nested derivatives.

The energy functional needs grad_x u inside the integrand, and training
needs the parameter gradient of that, so the network carries a
forward-with-input-tangents pass and a reverse sweep through it.  Here we
check both against central finite differences at a point.
"""

import numpy as np

from ritzlab import NetworkArch, init_params
from ritzlab.network import forward, forward_with_input_grad

arch = NetworkArch(widths=(2, 6, 6, 1), activation="tanh", weight_bound=3.0)
params = init_params(arch, seed=0)
x = np.array([0.3, 0.7])

res = forward_with_input_grad(arch, params, x)
print(f"u(x)      = {res.value:.10f}")
print(f"grad u(x) = {res.input_gradient}")

h = 1e-6
for i in range(2):
    xp, xm = x.copy(), x.copy()
    xp[i] += h
    xm[i] -= h
    fd = (forward(arch, params, xp) - forward(arch, params, xm)) / (2 * h)
    err = abs(fd - res.input_gradient[i])
    print(f"  d/dx_{i}: FD = {fd:.10f}  AD = {res.input_gradient[i]:.10f}  "
          f"|diff| = {err:.2e}")

# the same machinery vectorizes over a batch of points
pts = np.random.Generator(np.random.Philox(key=7)).random((5, 2))
res = forward_with_input_grad(arch, params, pts)
print(f"\nbatched: values shape {res.value.shape}, "
      f"gradients shape {res.input_gradient.shape}")
