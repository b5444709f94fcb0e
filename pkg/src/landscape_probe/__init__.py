"""Numerical probes of the risk landscape of deep linear and sigmoid networks.

Closed-form per-sample gradients and Hessians, uniform-convergence bound
formulas with configurable universal constants, empirical versus population
risk experiments, and stationary-point pairing.
"""
from .model import (Activation, Architecture, ForwardTrace, WeightPoint, chain_product, forward,
                    forward_batch, loss)
from .bounds import BoundConfig, bound_report, calibrate_constant, sample_threshold
from .data import Dataset, InputLaw, SamplerSpec, Teacher, make_dataset, sample_inputs, teacher_targets
from .risk import (PopulationOracle, ProbeBudget, Quantity, RiskFunction, empirical_gradient,
                   empirical_hessian, empirical_risk, loo_stability, population_risk, sup_gap,
                   tail_experiment)
from .landscape import StationaryRecord, find_stationary, pair_points
from .harness import ExperimentConfig, fit_rate, run

__all__ = [
    "Activation", "Architecture", "BoundConfig", "Dataset", "ExperimentConfig", "ForwardTrace",
    "InputLaw", "PopulationOracle", "ProbeBudget", "Quantity", "RiskFunction", "SamplerSpec",
    "StationaryRecord", "Teacher", "WeightPoint", "bound_report", "calibrate_constant",
    "chain_product", "empirical_gradient", "empirical_hessian", "empirical_risk",
    "find_stationary", "fit_rate", "forward", "forward_batch", "loo_stability", "loss",
    "make_dataset", "pair_points", "population_risk", "run", "sample_inputs",
    "sample_threshold", "sup_gap", "tail_experiment", "teacher_targets",
]
