"""Constants and bound formulas for uniform convergence of deep networks.

The unnamed universal constants in the bounds are configuration parameters
(default 1.0, reported as uncalibrated).  Rate comparisons never depend on
them.  Logarithms are natural.

Each bound has a plain-arithmetic ``*_value`` function taking scalars, and
a wrapper taking a :class:`BoundConfig`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import Activation, Architecture

DEFAULT_CONSTANTS = {
    "c_f": 1.0, "c_f'": 1.0, "c_g": 1.0, "c_g'": 1.0, "c_h": 1.0, "c_h'": 1.0,
    "c_y": 1.0, "c_y'": 1.0, "c_s": 1.0, "c_m": 1.0, "c_s1": 1.0, "c_s2": 1.0,
    "c_t": 1.0, "c_t'": 1.0, "gamma": 1.0, "xi": 1.0, "alpha_p": 1.0, "zeta": 1.0,
}

CALIBRATION_SAFETY = 1.05

# Theorem-5 leading factor 512/729 against the mixed-derivative constant 2^6/3^8
BETA_FACTOR = 2.0 ** 6 / 3.0 ** 8
SIGMOID_GRAD_FACTOR = 512.0 / 729.0


@dataclass(frozen=True)
class BoundConfig:
    arch: Architecture
    radius: float = 1.0
    tau: float = 1.0
    n: int = 1000
    eps_fail: float = 0.05
    r_x: float | None = None
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if not 0 < self.eps_fail < 1:
            raise ValueError(f"failure probability must lie in (0, 1), got {self.eps_fail}")
        if self.tau <= 0 or self.radius < 0:
            raise ValueError("tau must be positive and the radius nonnegative")
        unknown = set(self.constants) - set(DEFAULT_CONSTANTS)
        if unknown:
            raise ValueError(f"unknown constants: {sorted(unknown)}")
        if self.r_x is None:
            # Rademacher inputs with entries +-tau have norm exactly tau sqrt(d_0)
            object.__setattr__(self, "r_x", self.tau * math.sqrt(self.arch.dims[0]))
        elif self.r_x <= 0:
            raise ValueError("r_x must be positive")

    def const(self, name: str) -> float:
        return float(self.constants.get(name, DEFAULT_CONSTANTS[name]))

    @property
    def calibrated(self) -> list[str]:
        return sorted(self.constants)

    def with_constants(self, **values) -> "BoundConfig":
        merged = dict(self.constants)
        for key, val in values.items():
            merged[key.replace("_prime", "'")] = float(val)
        return replace(self, constants=merged)

    def with_(self, **changes) -> "BoundConfig":
        return replace(self, **changes)

    # derived quantities
    @property
    def depth(self) -> int:
        return self.arch.depth

    @property
    def d(self) -> int:
        return self.arch.n_params

    @property
    def c_d(self) -> int:
        return self.arch.max_width

    @property
    def c_r(self) -> float:
        return ratio_constant(self.radius, self.depth)


def ratio_constant(r: float, l: int) -> float:
    """``max(r^2/16, (r^2/16)^(l-1))``."""
    q = r * r / 16.0
    return max(q, q ** (l - 1))


def log_term(d: int, n: int, l: int, eps_fail: float, numerator: float) -> float:
    """``sqrt((d log(n l) + log(numerator / eps)) / n)``."""
    return math.sqrt((d * math.log(n * l) + math.log(numerator / eps_fail)) / n)


# ---- Theorem-level formulas on scalars --------------------------------------

def epsilon_linear_value(c_f, tau, r, l, d_out, d, n, eps_fail) -> float:
    lead = max(math.sqrt(d_out) * tau * r ** (2 * l), r ** l)
    return c_f * tau * lead * log_term(d, n, l, eps_fail, 8.0)


def epsilon_sigmoid_value(tau, c_y, c_d, c_r, l, d, n, eps_fail) -> float:
    return tau * math.sqrt(9.0 / 8.0 * c_y * c_d * (1.0 + c_r * (l - 1))) \
        * log_term(d, n, l, eps_fail, 4.0)


def omega_g_value(tau, d_in, r, l) -> float:
    """Gradient scale ``max(tau sqrt(d_0) r^(2l-1), sqrt(d_0) r^(2l-1), r^(l-1))``."""
    return max(tau * math.sqrt(d_in) * r ** (2 * l - 1), math.sqrt(d_in) * r ** (2 * l - 1),
               r ** (l - 1))


def omega_h_value(tau, r, l) -> float:
    return max(tau * r ** (2 * (l - 1)), r ** (2 * (l - 1)), r ** (l - 2))


def sigmoid_grad_scale(c_y, c_r, c_d, l, d, factor=SIGMOID_GRAD_FACTOR) -> float:
    return math.sqrt(factor * c_y * c_r * (l + 2) * (d * c_r + l * c_d + (l - 1) * l * c_d * c_r))


# ---- configuration wrappers -------------------------------------------------

def epsilon_linear(cfg: BoundConfig) -> float:
    return epsilon_linear_value(cfg.const("c_f"), cfg.tau, cfg.radius, cfg.depth,
                                cfg.arch.dims[-1], cfg.d, cfg.n, cfg.eps_fail)


def epsilon_sigmoid(cfg: BoundConfig) -> float:
    return epsilon_sigmoid_value(cfg.tau, cfg.const("c_y"), cfg.c_d, cfg.c_r, cfg.depth,
                                 cfg.d, cfg.n, cfg.eps_fail)


def omega_g(cfg: BoundConfig) -> float:
    return omega_g_value(cfg.tau, cfg.arch.dims[0], cfg.radius, cfg.depth)


def omega_h(cfg: BoundConfig) -> float:
    return omega_h_value(cfg.tau, cfg.radius, cfg.depth)


def _activation(cfg: BoundConfig, activation) -> Activation:
    return cfg.arch.activation if activation is None else Activation(activation)


def grad_gap_bound(cfg: BoundConfig, activation=None) -> float:
    """Sup over the weight set of the empirical-minus-population gradient norm."""
    l = cfg.depth
    if _activation(cfg, activation) is Activation.LINEAR:
        return cfg.const("c_g") * cfg.tau * omega_g(cfg) * math.sqrt(l * cfg.arch.width_factor) \
            * log_term(cfg.d, cfg.n, l, cfg.eps_fail, 12.0)
    return cfg.tau * sigmoid_grad_scale(cfg.const("c_y"), cfg.c_r, cfg.c_d, l, cfg.d) \
        * log_term(cfg.d, cfg.n, l, cfg.eps_fail, 4.0)


def hess_gap_bound(cfg: BoundConfig, activation=None) -> float:
    """Sup over the weight set of the Hessian gap in operator norm."""
    l = cfg.depth
    if _activation(cfg, activation) is Activation.LINEAR:
        return cfg.const("c_h") * cfg.tau * l * omega_h(cfg) * cfg.arch.width_factor \
            * log_term(cfg.d, cfg.n, l, cfg.eps_fail, 20.0)
    return cfg.const("c_m") * cfg.const("gamma") * cfg.tau \
        * log_term(cfg.d, cfg.n, l, cfg.eps_fail, 4.0)


def stationary_distance_bound(cfg: BoundConfig, activation=None) -> float:
    """Distance between paired empirical and population stationary points: ``2/zeta`` times the gradient gap."""
    zeta = cfg.const("zeta")
    if not zeta > 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    return 2.0 / zeta * grad_gap_bound(cfg, activation)


# ---- per-sample norm constants ----------------------------------------------

def alpha_g(cfg: BoundConfig) -> float:
    """Linear nets: squared gradient-norm bound ``c_t l r_x^4 r^(4l-2)``."""
    return cfg.const("c_t") * cfg.depth * cfg.r_x ** 4 * cfg.radius ** (4 * cfg.depth - 2)


def alpha_l(cfg: BoundConfig) -> float:
    """Linear nets: the Hessian Frobenius norm is at most ``l sqrt(alpha_l)``."""
    return cfg.const("c_t'") * cfg.r_x ** 4 * cfg.radius ** (4 * cfg.depth - 2)


def alpha_sigmoid(cfg: BoundConfig) -> float:
    """Sigmoid nets: Lipschitz constant of the loss, ``sqrt(c_y c_d (1 + c_r (l-1)) / 16)``."""
    return math.sqrt(cfg.const("c_y") * cfg.c_d * (1.0 + cfg.c_r * (cfg.depth - 1)) / 16.0)


def varsigma_explicit(cfg: BoundConfig) -> float:
    """Sigmoid Hessian Frobenius bound before its constants are absorbed.

    This is the fully written-out sum of per-block bounds (off-diagonal blocks
    times ``(l-1) l`` plus the diagonal blocks).
    """
    l, c_y, c_d, c_r, d = cfg.depth, cfg.const("c_y"), cfg.c_d, cfg.c_r, cfg.d
    off = (l - 1) * l * (l + 1) * (64 / 6561 * c_y * c_d ** 3 * c_r
                                   + 4096 / 6561 * c_y * (l - 2) * c_d ** 2 * c_r ** 2
                                   + c_y * c_d * c_r / 256 + c_d * c_r ** 2 / 256)
    diag = (l + 2) * (64 / 6561 * c_y * c_d ** 2 * d * c_r
                      + 4096 / 6561 * c_y * (l - 1) * l * c_d ** 2 * c_r ** 2
                      + l * c_d ** 2 * c_r ** 2 / 256)
    return math.sqrt(off + diag)


def varsigma(cfg: BoundConfig) -> float:
    """``sqrt(c_s1 c_r c_d^2 l^2 (c_s2 c_d^2 + l^2 c_r))`` with configurable constants."""
    l, c_d, c_r = cfg.depth, cfg.c_d, cfg.c_r
    return math.sqrt(cfg.const("c_s1") * c_r * c_d ** 2 * l ** 2
                     * (cfg.const("c_s2") * c_d ** 2 + l ** 2 * c_r))


def beta(cfg: BoundConfig) -> float:
    """Bound on the mixed weight/input second derivative of a sigmoid loss."""
    return sigmoid_grad_scale(cfg.const("c_y"), cfg.c_r, cfg.c_d, cfg.depth, cfg.d,
                              factor=BETA_FACTOR)


# ---- sample-size thresholds -------------------------------------------------

def _thresholds(cfg: BoundConfig) -> dict:
    l, d, r, tau, eps = cfg.depth, cfg.d, cfg.radius, cfg.tau, cfg.eps_fail
    r_x, d_in, d_out, c_d = cfg.r_x, cfg.arch.dims[0], cfg.arch.dims[-1], cfg.c_d
    zeta, logl = cfg.const("zeta"), math.log(l)
    wf = cfg.arch.width_factor
    return {
        "theorem1": cfg.const("c_f'") * max(l * r_x ** 4 / (d_out * d * eps ** 2 * tau ** 4 * logl),
                                            d * logl / d_out),
        "theorem2": cfg.const("c_g'") * max(l ** 2 * r ** 2 * r_x ** 4
                                            / (d_in * d ** 2 * eps ** 2 * tau ** 4 * logl),
                                            d * logl),
        "theorem3": cfg.const("c_h") * max(l ** 2 * r ** 2 * r_x ** 4
                                           / (d_in * d ** 2 * eps ** 2 * tau ** 4 * logl),
                                           d * logl / zeta ** 2),
        "theorem4": 18.0 * r ** 2 / (d * tau ** 2 * eps ** 2 * logl),
        "theorem5": cfg.const("c_y'") * c_d * l * r ** 2 / (d * tau ** 2 * eps ** 2 * logl),
        "theorem6": cfg.const("c_s") * max(c_d * l * r ** 2 / (d * tau ** 2 * eps ** 2 * logl),
                                           d * logl / zeta ** 2),
        "hessian_linear": cfg.const("c_h'") * max(
            cfg.const("alpha_p") ** 2 * r ** 2
            / (tau ** 2 * l ** 2 * omega_h(cfg) ** 2 * eps ** 2 * wf ** 2 * d * logl)
            if omega_h(cfg) > 0 else 0.0,
            d * logl),
    }


THEOREM_IDS = ("theorem1", "theorem2", "theorem3", "theorem4", "theorem5", "theorem6",
               "hessian_linear")


def sample_threshold(cfg: BoundConfig, theorem_id: str) -> int:
    """Smallest integer ``n`` satisfying the named result's sample-size condition."""
    table = _thresholds(cfg)
    if theorem_id not in table:
        raise KeyError(f"unknown theorem id {theorem_id!r}; known: {sorted(table)}")
    return max(1, math.ceil(table[theorem_id] - 1e-9))


# ---- calibration -------------------------------------------------------------

def structural_factor(cfg: BoundConfig, name: str) -> tuple[float, int]:
    """Constant-free part of a bound and the power the constant enters with.

    A constant entering under a square root has power 2: calibration then
    returns ``(observed / factor)^2``.
    """
    l = cfg.depth
    if name == "c_t":
        return math.sqrt(l * cfg.r_x ** 4 * cfg.radius ** (4 * l - 2)), 2
    if name == "c_t'":
        return l * math.sqrt(cfg.r_x ** 4 * cfg.radius ** (4 * l - 2)), 2
    unit = cfg.with_constants(**{name: 1.0})
    if name == "c_f":
        return epsilon_linear(unit), 1
    if name == "c_g":
        return grad_gap_bound(unit, Activation.LINEAR), 1
    if name == "c_h":
        return hess_gap_bound(unit, Activation.LINEAR), 1
    if name == "c_m":
        return hess_gap_bound(unit, Activation.SIGMOID), 1
    raise KeyError(f"no calibration rule for constant {name!r}")


def calibrate_constant(cfg: BoundConfig, name: str, samples,
                       safety: float = CALIBRATION_SAFETY) -> float:
    """Smallest constant for which every observed value satisfies its bound, times ``safety``."""
    samples = np.asarray(samples, dtype=float).reshape(-1)
    if samples.size == 0:
        raise ValueError("calibration needs at least one sample")
    factor, power = structural_factor(cfg, name.replace("_prime", "'"))
    observed = float(np.max(np.abs(samples)))
    if observed == 0.0:
        return 0.0
    return (observed / factor) ** power * safety


# ---- reports -----------------------------------------------------------------

def c_y_from_outputs(outputs, targets) -> float:
    """Exact ``max_i ||v^(l)_i - y_i||^2`` over a dataset."""
    diff = np.atleast_2d(outputs) - np.atleast_2d(targets)
    return float(np.max(np.sum(diff * diff, axis=1)))


def bound_report(cfg: BoundConfig) -> dict:
    """Every constant and bound value for one configuration, JSON-ready."""
    l = cfg.depth
    consts = {
        "d": cfg.d, "l": l, "c_d": cfg.c_d, "c_r": cfg.c_r, "width_factor": cfg.arch.width_factor,
        "omega_f": cfg.radius ** l, "omega_g": omega_g(cfg), "omega_h": omega_h(cfg),
        "alpha_g": alpha_g(cfg), "alpha_l": alpha_l(cfg), "alpha": alpha_sigmoid(cfg),
        "varsigma": varsigma(cfg), "varsigma_explicit": varsigma_explicit(cfg), "beta": beta(cfg),
        "r_x": cfg.r_x,
    }
    values = {
        "epsilon_linear": epsilon_linear(cfg), "epsilon_sigmoid": epsilon_sigmoid(cfg),
        "grad_gap_linear": grad_gap_bound(cfg, Activation.LINEAR),
        "grad_gap_sigmoid": grad_gap_bound(cfg, Activation.SIGMOID),
        "hess_gap_linear": hess_gap_bound(cfg, Activation.LINEAR),
        "hess_gap_sigmoid": hess_gap_bound(cfg, Activation.SIGMOID),
        "dist_linear": stationary_distance_bound(cfg, Activation.LINEAR),
        "dist_sigmoid": stationary_distance_bound(cfg, Activation.SIGMOID),
    }
    return {
        "config": {"arch": str(cfg.arch), "radius": cfg.radius, "tau": cfg.tau, "n": cfg.n,
                   "eps_fail": cfg.eps_fail, "r_x": cfg.r_x,
                   "constants": {k: cfg.const(k) for k in sorted(DEFAULT_CONSTANTS)}},
        "constants": consts,
        "bounds": values,
        "thresholds": {k: sample_threshold(cfg, k) for k in _thresholds(cfg)},
        "calibrated": cfg.calibrated,
        "uncalibrated": sorted(set(DEFAULT_CONSTANTS) - set(cfg.constants)),
        "notes": {
            "sigmoid_gradient_factor": "gradient gap uses the 512/729 leading factor; beta uses "
                                       "2^6/3^8; their ratio is exactly 72",
            "beta_factor_ratio": SIGMOID_GRAD_FACTOR / BETA_FACTOR,
        },
    }
