"""
Uniform-convergence bound formulas
==================================

Evaluate the closed-form gap bounds for a small net, watch them shrink
with n, and calibrate one constant against observed gradient norms.
"""

# %%
import numpy as np
from landscape_probe import Activation, Architecture, BoundConfig, bounds

cfg = BoundConfig(Architecture((2, 3, 1), Activation.SIGMOID), radius=2.0, tau=1.0, n=1000)
report = bounds.bound_report(cfg)
for name, value in report["bounds"].items():
    print(f"{name:>18s}  {value:.4f}")
print("uncalibrated constants:", ", ".join(report["uncalibrated"]))

# %%
# the loss bound against n: close to a -1/2 slope on log axes
for n in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6):
    print(n, round(bounds.epsilon_sigmoid(cfg.with_(n=n)), 5))

# %%
# sample-size thresholds for each theorem at failure probability 0.05
for tid in bounds.THEOREM_IDS:
    print(tid, bounds.sample_threshold(cfg, tid))

# %%
# calibrate c_t from gradient norms seen in practice (scaled by a 1.05 safety factor)
lin = BoundConfig(Architecture((2, 3, 2)), radius=1.5, tau=1.0, n=1000)
observed = np.random.default_rng(1).uniform(0.2, 1.4, 50)
print("calibrated c_t =", bounds.calibrate_constant(lin, "c_t", observed))
