from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class IndexInfo:
    index: int
    degenerate: bool
    min_abs_eig: float


def asymmetry(H) -> float:
    H = np.asarray(H, dtype=float)
    return float(np.max(np.abs(H - H.T))) if H.size else 0.0


def spectrum(H, tol: float = 1e-8) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix.

    Raises if the asymmetry exceeds ``tol`` relative to ``max(1, |H|_max)``.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if asymmetry(H) > tol * scale:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asymmetry(H):.3g})")
    return np.linalg.eigvalsh(0.5 * (H + H.T))


def index_from_eigenvalues(eigs, zeta: float) -> IndexInfo:
    eigs = np.asarray(eigs, dtype=float)
    min_abs = float(np.min(np.abs(eigs))) if eigs.size else np.inf
    return IndexInfo(index=int(np.sum(eigs < -NEGATIVE_TOL)),
                     degenerate=bool(min_abs < zeta),
                     min_abs_eig=min_abs)


def index_of(H, zeta: float) -> IndexInfo:
    """Number of negative eigenvalues and whether ``min |lambda| < zeta``."""
    if not zeta > 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    return index_from_eigenvalues(spectrum(H), zeta)
