"""
Empirical-versus-population gaps and their rate in n
====================================================

A linear teacher under Rademacher inputs has a closed-form population
risk, so the sup-gap over the weight ball can be probed exactly and its
median fitted on a log-log grid.
"""

# %%
import numpy as np
from landscape_probe import (Architecture, InputLaw, PopulationOracle, ProbeBudget, SamplerSpec,
                             Teacher, WeightPoint, fit_rate, make_dataset, sup_gap)

arch = Architecture((2, 3, 2))
teacher = Teacher(arch, WeightPoint.random(arch, 1.0, np.random.default_rng(7)))
spec = SamplerSpec(InputLaw.BOUNDED_SUBGAUSSIAN, tau=1.0, d0=2, seed=7)
oracle = PopulationOracle.exact_linear(spec, teacher)

# %%
table = []
for n in [2 ** k for k in range(7, 14)]:
    gaps = [sup_gap(arch, make_dataset(spec, teacher, n, trial=t), oracle, "grad",
                    ProbeBudget(64, seed=7), radius=1.0).sup_gap for t in range(20)]
    table.append((n, float(np.median(gaps))))
    print(f"n={n:5d}  median sup-gap {table[-1][1]:.5f}")

# %%
fit = fit_rate(table)
print(f"slope {fit.slope:.3f}  (r^2 {fit.r2:.3f})")
