"""Damped Newton iterations on flat weight vectors, with projection onto the weight set."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

SHIFT_FLOOR = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-9
    max_iters: int = 100
    mode: str = "minimize"          # or "stationary" (drives the gradient norm to zero)
    armijo: float = 1e-4
    max_backtracks: int = 40

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")
        if self.mode not in ("minimize", "stationary"):
            raise ValueError(f"unknown solver mode {self.mode!r}")


@dataclass(frozen=True)
class SolverResult:
    x: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool
    reason: str


def shifted_solve(H, g) -> np.ndarray:
    """Solve ``(H + mu I) p = g`` with ``mu = max(0, 1e-6 - lambda_min(H))``."""
    lam, V = np.linalg.eigh(0.5 * (H + H.T))
    mu = max(0.0, SHIFT_FLOOR - lam[0])
    return V @ ((V.T @ g) / (lam + mu))


def newton(value: Callable, grad: Callable, hess: Callable, x0, project: Callable | None = None,
           cfg: SolverConfig = SolverConfig()) -> SolverResult:
    """Damped Newton with backtracking.

    ``minimize`` descends ``value`` along the shifted Newton direction.
    ``stationary`` descends ``|grad|^2 / 2`` with the shift applied to ``H^2``,
    which also converges to saddles.
    """
    project = project or (lambda v: v)
    x = project(np.array(x0, dtype=float))
    g = grad(x)
    for it in range(cfg.max_iters + 1):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= cfg.tol:
            return SolverResult(x, gnorm, it, True, "gradient tolerance reached")
        if it == cfg.max_iters:
            break
        H = hess(x)
        if cfg.mode == "minimize":
            step = -shifted_solve(H, g)
            merit = value(x)
            slope = float(g @ step)
            if slope >= 0:
                step, slope = -g, -gnorm ** 2
            meritfn = value
        else:
            step = -shifted_solve(H @ H, H @ g)
            merit = 0.5 * gnorm ** 2
            slope = float((H @ g) @ step)
            meritfn = lambda v: 0.5 * float(np.sum(grad(v) ** 2))
        t = 1.0
        for _ in range(cfg.max_backtracks):
            trial = project(x + t * step)
            m = meritfn(trial)
            if m <= merit + cfg.armijo * t * slope:
                break
            # merit differences below rounding: fall back to gradient-norm decrease
            if abs(m - merit) <= 1e-13 * max(1.0, abs(merit)) \
                    and np.linalg.norm(grad(trial)) < gnorm:
                break
            t *= 0.5
        else:
            return SolverResult(x, gnorm, it, False, "line search failed")
        if np.array_equal(trial, x):
            return SolverResult(x, gnorm, it, False, "stalled")
        x = trial
        g = grad(x)
    return SolverResult(x, float(np.linalg.norm(g)), cfg.max_iters, False, "iteration limit")
