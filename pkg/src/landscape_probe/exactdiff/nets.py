"""Covering nets of the unit sphere and the norm estimates built on them.

Nets for dimension <= 3 are deterministic and certified: every unit vector
lies within chord distance ``eps`` of some net point.  Dimensions 4..``cap``
use a seeded uniform sample of the sphere, which carries no certificate.
"""
from __future__ import annotations

import math

import numpy as np

DIM_CAP = 8
SAMPLED_NET_MAX = 100_000


def _circle_net(eps: float) -> np.ndarray:
    # covering radius of m equispaced points is 2 sin(pi / 2m)
    m = max(2, math.ceil(math.pi / (2.0 * math.asin(min(eps, 2.0) / 2.0))))
    ang = 2.0 * math.pi * np.arange(m) / m
    return np.column_stack([np.cos(ang), np.sin(ang)])


def _sphere3_net(eps: float) -> np.ndarray:
    # polar rings at spacing <= eps, each ring sampled at arc spacing <= eps;
    # any point is then within eps/2 + eps/2 of the net in angle, hence chord
    h = min(eps, math.pi)
    K = math.ceil(math.pi / h)
    pts = []
    for k in range(K + 1):
        theta = math.pi * k / K
        m = max(1, math.ceil(2.0 * math.pi * math.sin(theta) / h))
        phi = 2.0 * math.pi * np.arange(m) / m
        pts.append(np.column_stack([np.sin(theta) * np.cos(phi),
                                    np.sin(theta) * np.sin(phi),
                                    np.full(m, math.cos(theta))]))
    return np.vstack(pts)


def sphere_net(dim: int, eps: float, seed: int = 0, cap: int = DIM_CAP) -> np.ndarray:
    """Points on the unit sphere of ``R^dim`` (one per row) forming an ``eps``-net."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    if dim > cap:
        raise ValueError(f"dimension {dim} exceeds the net cap {cap}")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        return _circle_net(eps)
    if dim == 3:
        return _sphere3_net(eps)
    size = min(SAMPLED_NET_MAX, math.ceil((1.0 + 2.0 / eps) ** dim))
    g = np.random.default_rng(seed).standard_normal((size, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return np.vstack([np.eye(dim), -np.eye(dim), g])


def is_certified(dim: int) -> bool:
    return dim <= 3


def net_vector_norm(v, eps: float, net=None, seed: int = 0, cap: int = DIM_CAP) -> float:
    """``max_lambda <lambda, v> / (1 - eps)`` over an ``eps``-net."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if net is None:
        net = sphere_net(v.size, eps, seed=seed, cap=cap)
    return float(np.max(net @ v)) / (1.0 - eps)


def net_operator_norm(X, eps: float, net=None, seed: int = 0, cap: int = DIM_CAP) -> float:
    """``max_lambda |<lambda, X lambda>| / (1 - 2 eps)`` for symmetric ``X``."""
    X = np.asarray(X, dtype=float)
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    if np.max(np.abs(X - X.T)) > 1e-10 * max(1.0, np.max(np.abs(X))):
        raise ValueError("operator-norm estimate needs a symmetric matrix")
    if net is None:
        net = sphere_net(X.shape[0], eps, seed=seed, cap=cap)
    quad = np.einsum("ki,ij,kj->k", net, X, net)
    return float(np.max(np.abs(quad))) / (1.0 - 2.0 * eps)
