"""
Stationary points of empirical and population risks
===================================================

Find the minimizers of a small sigmoid teacher task under both risks,
pair them up and compare Hessian indices and distances as n grows.
"""

# %%
import numpy as np
from landscape_probe import (Activation, Architecture, InputLaw, PopulationOracle, RiskFunction,
                             SamplerSpec, Teacher, WeightPoint, find_stationary, make_dataset,
                             pair_points)

arch = Architecture((1, 2, 1), Activation.SIGMOID)
w_star = WeightPoint((np.array([[-0.44], [1.82]]), np.array([[-1.62, 1.56]])), 4.0)
teacher = Teacher(arch, w_star, noise=0.02)
spec = SamplerSpec(InputLaw.GAUSSIAN, tau=4.0, d0=1, seed=7)
oracle = PopulationOracle.monte_carlo(spec, teacher, 200_000, seed=8)

# %%
# the population minimizer and its spectrum; the teacher is nearly flat in two directions
population, _ = find_stationary(RiskFunction.population(arch, oracle, 4.0), [w_star], zeta=1e-4)
for rec in population:
    print("index", rec.index, "degenerate", rec.degenerate, "eigenvalues", rec.spectrum.round(5))

# %%
for n in (256, 1024, 4096):
    ds = make_dataset(spec, teacher, n, trial=0)
    empirical, _ = find_stationary(RiskFunction.empirical(arch, ds, 4.0), [r.w for r in population],
                                   zeta=1e-4)
    res = pair_points(empirical, population, zeta=1e-4)
    print(n, [(round(p.distance, 4), p.empirical.index, p.population.index) for p in res.pairs])
