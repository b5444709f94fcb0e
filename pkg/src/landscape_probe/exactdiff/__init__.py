"""Closed-form gradients and Hessians, finite-difference oracles, spectra and nets."""
from __future__ import annotations

import numpy as np

from ..model import Activation, Architecture, ForwardTrace, WeightPoint, forward
from .fd import DEFAULT_STEP, fd_gradient, fd_hessian, relative_error
from .linear import Moments, grad_linear, hessian_linear, moment_gradient, moment_hessian, moment_risk
from .nets import net_operator_norm, net_vector_norm, sphere_net
from .sigmoid import (CURVATURE_BOUND, batch_gradient, batch_hessian, curvature_matrix,
                      curvature_values, gain_matrix, grad_sigmoid, hessian_sigmoid,
                      per_sample_gradients)
from .spectral import IndexInfo, asymmetry, index_from_eigenvalues, index_of, spectrum

__all__ = [
    "CURVATURE_BOUND", "DEFAULT_STEP", "IndexInfo", "Moments", "asymmetry", "batch_gradient",
    "batch_hessian", "curvature_matrix", "curvature_values", "fd_gradient", "fd_hessian",
    "gain_matrix", "grad_linear", "grad_sigmoid", "gradient", "hessian", "hessian_linear",
    "hessian_sigmoid", "index_from_eigenvalues", "index_of", "moment_gradient", "moment_hessian",
    "moment_risk", "net_operator_norm", "net_vector_norm", "per_sample_gradients",
    "relative_error", "sample_loss_fn", "sample_grad_fn", "spectrum", "sphere_net",
]


def gradient(trace: ForwardTrace, w: WeightPoint) -> np.ndarray:
    if trace.activation is Activation.SIGMOID:
        return grad_sigmoid(trace, w)
    return grad_linear(trace, w)


def hessian(trace: ForwardTrace, w: WeightPoint) -> np.ndarray:
    if trace.activation is Activation.SIGMOID:
        return hessian_sigmoid(trace, w)
    return hessian_linear(trace, w)


def sample_loss_fn(arch: Architecture, x, y, radius: float = np.inf):
    """Single-sample loss as a function of the flat weight vector."""
    return lambda vec: forward(arch, WeightPoint.from_flat(arch, vec, radius), x, y).loss


def sample_grad_fn(arch: Architecture, x, y, radius: float = np.inf):
    def grad(vec):
        w = WeightPoint.from_flat(arch, vec, radius)
        return gradient(forward(arch, w, x, y), w)
    return grad
