"""Central finite differences, used as an independent check on the closed forms."""
from __future__ import annotations

import numpy as np

DEFAULT_STEP = 1e-5


def _steps(w, h):
    if not h > 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    return h * np.maximum(1.0, np.abs(w))


def fd_gradient(lossfn, w, h: float = DEFAULT_STEP) -> np.ndarray:
    """Coordinate-wise central differences of a scalar function.

    The step for coordinate ``i`` is ``h * max(1, |w_i|)``.
    """
    w = np.asarray(w, dtype=float)
    steps = _steps(w, h)
    grad = np.empty_like(w)
    for i, hi in enumerate(steps):
        wp = w.copy()
        wm = w.copy()
        wp[i] += hi
        wm[i] -= hi
        grad[i] = (lossfn(wp) - lossfn(wm)) / (2.0 * hi)
    return grad


def fd_hessian(gradfn, w, h: float = DEFAULT_STEP) -> np.ndarray:
    """Central differences of a gradient, symmetrised."""
    w = np.asarray(w, dtype=float)
    steps = _steps(w, h)
    cols = []
    for i, hi in enumerate(steps):
        wp = w.copy()
        wm = w.copy()
        wp[i] += hi
        wm[i] -= hi
        cols.append((np.asarray(gradfn(wp)) - np.asarray(gradfn(wm))) / (2.0 * hi))
    H = np.column_stack(cols)
    return 0.5 * (H + H.T)


def relative_error(approx, exact, floor: float = 1e-10) -> float:
    """``||approx - exact|| / max(||exact||, floor)`` in the Euclidean/Frobenius norm."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    return float(np.linalg.norm(approx - exact) / max(np.linalg.norm(exact), floor))
