"""Closed-form derivatives of the squared loss for deep linear networks.

For a linear network ``e = B x - y`` with ``B = W_l ... W_1``, so the loss,
gradient and Hessian averaged over any input law depend on the data only
through the second moments ``E[x x^T]``, ``E[y x^T]`` and ``E[y y^T]``.
The routines here take those moments, which covers a single sample (outer
products), a dataset (sample means) and an exact population covariance with
the same code.

Layer arrays may carry leading batch axes (e.g. one entry per probe point);
everything broadcasts through ``@``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import Activation, Architecture, ForwardTrace, WeightPoint, chain_product


@dataclass(frozen=True, eq=False)
class Moments:
    """Second moments ``E[x x^T]``, ``E[y x^T]``, ``E[y y^T]``."""

    xx: np.ndarray
    yx: np.ndarray
    yy: np.ndarray

    @classmethod
    def from_sample(cls, x, y) -> "Moments":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return cls(np.outer(x, x), np.outer(y, x), np.outer(y, y))

    @classmethod
    def from_data(cls, X, Y) -> "Moments":
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        n = X.shape[0]
        if n == 0:
            raise ValueError("empty dataset")
        return cls(X.T @ X / n, Y.T @ X / n, Y.T @ Y / n)

    @classmethod
    def population(cls, cov, teacher_map) -> "Moments":
        """Moments for ``y = T x`` with ``E[x x^T] = cov``."""
        cov = np.asarray(cov, dtype=float)
        T = np.asarray(teacher_map, dtype=float)
        return cls(cov, T @ cov, T @ cov @ T.T)

    def __sub__(self, other: "Moments") -> "Moments":
        return Moments(self.xx - other.xx, self.yx - other.yx, self.yy - other.yy)


def _T(A):
    return np.swapaxes(A, -1, -2)


def _vec(A):
    """Column-major vectorisation over the last two axes."""
    return _T(A).reshape(A.shape[:-2] + (-1,))


def chain(layers, s: int, t: int):
    """``W_s W_{s-1} ... W_t``; the identity of size ``d_s`` when ``s < t``.

    ``layers[j-1]`` is ``W_j``; ``s = 0`` or ``t = l + 1`` give identities.
    """
    if s < t:
        d = layers[0].shape[-1] if s == 0 else layers[s - 1].shape[-2]
        return np.eye(d)
    out = layers[s - 1]
    for i in range(s - 1, t - 1, -1):
        out = out @ layers[i - 1]
    return out


def end_to_end(layers):
    return chain(layers, len(layers), 1)


def error_moment(layers, m: Moments):
    """``E[e x^T] = B E[x x^T] - E[y x^T]``."""
    return end_to_end(layers) @ m.xx - m.yx


def moment_risk(layers, m: Moments):
    B = end_to_end(layers)
    quad = np.trace(B @ m.xx @ _T(B), axis1=-2, axis2=-1)
    cross = np.trace(B @ _T(m.yx), axis1=-2, axis2=-1)
    return 0.5 * (quad - 2.0 * cross + np.trace(m.yy))


def moment_gradient(layers, m: Moments):
    """Flat gradient; block ``j`` is ``vec(B_{l:j+1}^T E[e x^T] B_{j-1:1}^T)``."""
    l = len(layers)
    C = error_moment(layers, m)
    blocks = [_vec(_T(chain(layers, l, j + 1)) @ C @ _T(chain(layers, j - 1, 1)))
              for j in range(1, l + 1)]
    return np.concatenate(blocks, axis=-1)


def _commute_columns(K, p: int, q: int):
    """Reorder columns indexed ``(c, d)`` (c outer, size p) to ``(d, c)``."""
    rows = K.shape[0]
    return K.reshape(rows, p, q).transpose(0, 2, 1).reshape(rows, p * q)


def moment_hessian(layers, m: Moments) -> np.ndarray:
    """Dense Hessian assembled block by block from Kronecker products.

    Block ``(s, t)`` is a Gauss-Newton part
    ``(B_{s-1:1} Sxx B_{t-1:1}^T) kron (B_{l:s+1}^T B_{l:t+1})`` plus, for
    ``s != t``, an error-weighted cross part.  The cross part is a Kronecker
    product of a chain product with the error moment, followed by a column
    commutation that maps it onto the column-major weight layout.
    """
    l = len(layers)
    dims = [layers[0].shape[1]] + [W.shape[0] for W in layers]
    sizes = [dims[j] * dims[j - 1] for j in range(1, l + 1)]
    off = np.concatenate([[0], np.cumsum(sizes)])
    C = error_moment(layers, m)
    H = np.zeros((off[-1], off[-1]))
    for s in range(1, l + 1):
        left_s = chain(layers, s - 1, 1)
        top_s = chain(layers, l, s + 1)
        for t in range(1, l + 1):
            left_t = chain(layers, t - 1, 1)
            top_t = chain(layers, l, t + 1)
            blk = np.kron(left_s @ m.xx @ left_t.T, top_s.T @ top_t)
            if s < t:
                K = left_s @ C.T @ top_t
                blk = blk + _commute_columns(np.kron(K, chain(layers, t - 1, s + 1).T),
                                             dims[t], dims[t - 1])
            elif s > t:
                K = top_s.T @ C @ left_t.T
                blk = blk + _commute_columns(np.kron(chain(layers, s - 1, t + 1), K),
                                             dims[t], dims[t - 1])
            H[off[s - 1]:off[s], off[t - 1]:off[t]] = blk
    return H


def _require_linear(trace: ForwardTrace):
    if trace.activation is not Activation.LINEAR:
        raise ValueError("expected a linear-network trace")


def grad_linear(trace: ForwardTrace, w: WeightPoint) -> np.ndarray:
    """Per-layer gradient ``((B_{j-1:1} x) kron B_{l:j+1}^T) e``, concatenated."""
    _require_linear(trace)
    l = len(w.layers)
    blocks = []
    for j in range(1, l + 1):
        a = chain_product(trace, w, j - 1, 1) @ trace.input
        blocks.append(np.kron(a[:, None], chain_product(trace, w, l, j + 1).T) @ trace.error)
    return np.concatenate(blocks)


def hessian_linear(trace: ForwardTrace, w: WeightPoint) -> np.ndarray:
    _require_linear(trace)
    return moment_hessian(w.layers, Moments.from_sample(trace.input, trace.target))


def dataset_moments(arch: Architecture, X, Y) -> Moments:
    if arch.activation is not Activation.LINEAR:
        raise ValueError("moment form only exists for linear networks")
    return Moments.from_data(X, Y)
