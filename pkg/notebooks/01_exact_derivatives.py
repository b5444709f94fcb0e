"""
Exact gradients and Hessians of bias-free networks
==================================================

Forward a scalar linear net by hand, then cross-check the analytic
derivatives of random linear and sigmoid nets against finite differences.
"""

# %%
# a 1-1-1 linear net with W1 = 2, W2 = 3 on x = 1, y = 0
import numpy as np
from landscape_probe import Activation, Architecture, WeightPoint, forward
from landscape_probe.exactdiff import fd_hessian, gradient, hessian, index_of, sample_grad_fn

arch = Architecture((1, 1, 1))
w = WeightPoint((np.array([[2.0]]), np.array([[3.0]])))
tr = forward(arch, w, [1.0], [0.0])
print("loss", tr.loss)
print("gradient", gradient(tr, w))
H = hessian(tr, w)
print("Hessian\n", H)
print("index", index_of(H, 1e-3).index, "eigenvalues", np.linalg.eigvalsh(H))

# %%
# a deeper sigmoid net: analytic Hessian against FD of the analytic gradient
rng = np.random.default_rng(0)
sig = Architecture((3, 4, 2, 2), Activation.SIGMOID)
w = WeightPoint.random(sig, 2.0, rng)
x, y = rng.standard_normal(3), rng.uniform(0, 1, 2)
H = hessian(forward(sig, w, x, y), w)
H_fd = fd_hessian(sample_grad_fn(sig, x, y), w.flat())
print(f"{sig}: {sig.n_params} weights, max |H - H_fd| = {np.max(np.abs(H - H_fd)):.2e}")
