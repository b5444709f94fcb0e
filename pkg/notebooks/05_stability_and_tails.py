"""
Stability, generalization and tail probabilities
================================================

Estimate the replace-one stability and the generalization gap of the
empirical minimizer, then tabulate how often the empirical risk at a
fixed point strays from its mean.
"""

# %%
import numpy as np
from landscape_probe import (Activation, Architecture, InputLaw, PopulationOracle, SamplerSpec,
                             Teacher, WeightPoint, loo_stability, tail_experiment)

arch = Architecture((1, 2, 1), Activation.SIGMOID)
w_star = WeightPoint((np.array([[-0.44], [1.82]]), np.array([[-1.62, 1.56]])), 4.0)
teacher = Teacher(arch, w_star, noise=0.05)
spec = SamplerSpec(InputLaw.GAUSSIAN, tau=4.0, d0=1, seed=7)
oracle = PopulationOracle.monte_carlo(spec, teacher, 100_000, seed=8)

# %%
res = loo_stability(arch, spec, teacher, n=32, trials=20, oracle=oracle, w0=w_star)
print(f"stability {res.stability:.5f}  generalization {res.generalization:.5f}  "
      f"stderr {res.stderr:.5f}  failed fits {res.failed}")

# %%
lin = Architecture((2, 3, 1))
lt = Teacher(lin, WeightPoint.random(lin, 1.0, np.random.default_rng(0)))
lspec = SamplerSpec(InputLaw.BOUNDED_SUBGAUSSIAN, 1.0, 2, seed=0)
w = WeightPoint.random(lin, 1.0, np.random.default_rng(1))
for row in tail_experiment(lin, w, lspec, lt, PopulationOracle.exact_linear(lspec, lt),
                           [16, 64, 256, 1024], t=0.01, trials=300):
    print(f"n={row['n']:5d}  P(gap > 0.01) = {row['exceedance']:.3f}  "
          f"[{row['ci_low']:.3f}, {row['ci_high']:.3f}]")
