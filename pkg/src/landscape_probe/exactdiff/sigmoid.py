"""Gradient and Hessian of the squared loss for sigmoid networks.

The Hessian block for layers ``(j, i)`` is the derivative of
``g_j = v_{j-1} kron delta_j`` (``delta_j = G(u_j) B_{j+1:l} e``) and splits
into five contributions:

* curvature of layer ``j``'s own sigmoid (``G(u_j)`` moving with ``w_i``),
* curvature of every later sigmoid ``k > j``,
* the explicit ``W_i^T`` factor inside ``B_{j+1:l}`` (only when ``i > j``),
* the output error moving with ``w_i`` (the Gauss-Newton part),
* the layer input ``v_{j-1}`` moving with ``w_i`` (only when ``i < j``).

All batched routines average over a leading sample axis.
"""
from __future__ import annotations

import numpy as np

from ..model import (Activation, Architecture, ForwardTrace, WeightPoint,
                     chain_product, forward_batch, sigmoid, sigmoid_derivative)

CURVATURE_BOUND = 2.0 ** 3 / 3.0 ** 4


def gain_matrix(u) -> np.ndarray:
    """``G(u)``: diagonal of sigmoid slopes ``sigma(u)(1 - sigma(u))``."""
    return np.diag(sigmoid_derivative(np.asarray(u, dtype=float)))


def curvature_values(u) -> np.ndarray:
    s = sigmoid(np.asarray(u, dtype=float))
    return s * (1.0 - s) * (1.0 - 2.0 * s)


def curvature_matrix(u) -> np.ndarray:
    """``P(u)`` of shape ``(k^2, k)``: derivative of ``vec(G(u))`` w.r.t. ``u``."""
    vals = curvature_values(u)
    k = vals.size
    P = np.zeros((k * k, k))
    idx = np.arange(k)
    P[idx * k + idx, idx] = vals
    return P


def _require_sigmoid(trace: ForwardTrace):
    if trace.activation is not Activation.SIGMOID:
        raise ValueError("expected a sigmoid-network trace")


def grad_sigmoid(trace: ForwardTrace, w: WeightPoint) -> np.ndarray:
    """Per-layer gradient ``vec(G(u_j) B_{j+1:l} e v_{j-1}^T)``, concatenated."""
    _require_sigmoid(trace)
    l = len(w.layers)
    blocks = []
    for j in range(1, l + 1):
        delta = gain_matrix(trace.preacts[j - 1]) @ chain_product(trace, w, j + 1, l) @ trace.error
        blocks.append(np.outer(delta, trace.acts[j - 1]).ravel(order="F"))
    return np.concatenate(blocks)


def _backprop(w: WeightPoint, acts, Y):
    """Slopes, curvatures, ``df/dv_k`` and ``df/du_k`` for every layer."""
    l = len(w.layers)
    gains = [None] + [v * (1.0 - v) for v in acts[1:]]
    curv = [None] + [g * (1.0 - 2.0 * v) for g, v in zip(gains[1:], acts[1:])]
    mus = [None] * (l + 1)
    deltas = [None] * (l + 1)
    mus[l] = acts[l] - Y
    deltas[l] = gains[l] * mus[l]
    for k in range(l - 1, 0, -1):
        mus[k] = deltas[k + 1] @ w.layers[k]
        deltas[k] = gains[k] * mus[k]
    return gains, curv, mus, deltas


def batch_gradient(arch: Architecture, w: WeightPoint, X, Y) -> np.ndarray:
    """Mean gradient over a batch via backpropagation (either activation)."""
    acts = forward_batch(arch, w, X)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = acts[0].shape[0]
    if arch.activation is Activation.LINEAR:
        deltas = [None] * (arch.depth + 1)
        deltas[-1] = acts[-1] - Y
        for k in range(arch.depth - 1, 0, -1):
            deltas[k] = deltas[k + 1] @ w.layers[k]
    else:
        deltas = _backprop(w, acts, Y)[3]
    return np.concatenate([(deltas[j].T @ acts[j - 1] / n).ravel(order="F")
                           for j in range(1, arch.depth + 1)])


def per_sample_gradients(arch: Architecture, w: WeightPoint, X, Y) -> np.ndarray:
    """Gradient of every sample's loss, shape ``(n, d)``."""
    acts = forward_batch(arch, w, X)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if arch.activation is Activation.LINEAR:
        deltas = [None] * (arch.depth + 1)
        deltas[-1] = acts[-1] - Y
        for k in range(arch.depth - 1, 0, -1):
            deltas[k] = deltas[k + 1] @ w.layers[k]
    else:
        deltas = _backprop(w, acts, Y)[3]
    n = acts[0].shape[0]
    # vec(delta v^T) in column-major order is v kron delta
    return np.concatenate([np.einsum("nb,na->nba", acts[j - 1], deltas[j]).reshape(n, -1)
                           for j in range(1, arch.depth + 1)], axis=1)


def _hessian_sum(w: WeightPoint, acts, Y) -> np.ndarray:
    """Sum over the batch of per-sample sigmoid Hessians."""
    l = len(w.layers)
    n = acts[0].shape[0]
    dims = [acts[0].shape[1]] + [W.shape[0] for W in w.layers]
    gains, curv, mus, deltas = _backprop(w, acts, Y)
    weighted_curv = [None] + [curv[k] * mus[k] for k in range(1, l + 1)]

    # R[i][k] = du_k/du_i, shape (n, d_k, d_i), for k >= i
    R = [[None] * (l + 1) for _ in range(l + 1)]
    for i in range(1, l + 1):
        R[i][i] = np.broadcast_to(np.eye(dims[i]), (n, dims[i], dims[i]))
        for k in range(i, l):
            R[i][k + 1] = np.einsum("pq,nqc->npc", w.layers[k], gains[k][:, :, None] * R[i][k])
    # output sensitivities dv_l/du_i
    out_sens = [None] + [gains[l][:, :, None] * R[i][l] for i in range(1, l + 1)]

    sizes = [dims[j] * dims[j - 1] for j in range(1, l + 1)]
    off = np.concatenate([[0], np.cumsum(sizes)])
    H = np.zeros((off[-1], off[-1]))
    for j in range(1, l + 1):
        vj = acts[j - 1]
        for i in range(1, l + 1):
            vi = acts[i - 1]
            # inner[n, a, c]: the part of d(delta_j[a])/dW_i[c, d] that
            # multiplies v_{i-1}[d]; everything except the explicit-weight term
            inner = np.einsum("nsa,nsc->nac", out_sens[j], out_sens[i])
            if i <= j:
                inner = inner + weighted_curv[j][:, :, None] * R[i][j]
            for k in range(max(j + 1, i), l + 1):
                inner = inner + np.einsum("nsa,ns,nsc->nac", R[j][k], weighted_curv[k], R[i][k])
            blk = np.einsum("nb,nac,nd->badc", vj, inner, vi)
            if i > j:
                # explicit W_i^T inside the chain product
                lead = gains[i - 1][:, :, None] * R[j][i - 1]
                blk = blk + np.einsum("nb,nda,nc->badc", vj, lead, deltas[i])
            if i < j:
                # the layer input v_{j-1} depends on W_i
                lead = gains[j - 1][:, :, None] * R[i][j - 1]
                blk = blk + np.einsum("na,nbc,nd->badc", deltas[j], lead, vi)
            H[off[j - 1]:off[j], off[i - 1]:off[i]] = blk.reshape(sizes[j - 1], sizes[i - 1])
    return H


def batch_hessian(arch: Architecture, w: WeightPoint, X, Y, chunk: int = 2048) -> np.ndarray:
    """Mean sigmoid Hessian over a batch, accumulated in fixed-size chunks."""
    if arch.activation is not Activation.SIGMOID:
        raise ValueError("batch_hessian handles sigmoid networks; use the moment form for linear")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    H = np.zeros((arch.n_params, arch.n_params))
    for lo in range(0, n, chunk):
        acts = forward_batch(arch, w, X[lo:lo + chunk])
        H += _hessian_sum(w, acts, Y[lo:lo + chunk])
    return H / n


def hessian_sigmoid(trace: ForwardTrace, w: WeightPoint) -> np.ndarray:
    _require_sigmoid(trace)
    acts = [a[None, :] for a in trace.acts]
    return _hessian_sum(w, acts, trace.target[None, :])
