"""Bias-free deep linear and sigmoid networks.

Weights are stored per layer as ``d_j x d_{j-1}`` matrices.  The flat weight
vector concatenates the column-major vectorisation of every layer in layer
order; all gradient and Hessian indexing in this package follows that layout.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit


class Activation(str, enum.Enum):
    LINEAR = "linear"
    SIGMOID = "sigmoid"


def sigmoid(u):
    # expit uses the branch-stable form, no overflow for large |u|
    return expit(u)


@dataclass(frozen=True)
class Architecture:
    """Layer widths ``d_0..d_l`` plus the activation shared by every layer."""

    dims: tuple[int, ...]
    activation: Activation = Activation.LINEAR

    def __post_init__(self):
        dims = tuple(int(k) for k in self.dims)
        if len(dims) < 3:
            raise ValueError(f"need at least two layers (l >= 2), got dims={dims}")
        if any(k < 1 for k in dims):
            raise ValueError(f"layer widths must be positive, got dims={dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "activation", Activation(self.activation))

    @classmethod
    def parse(cls, text: str) -> "Architecture":
        """Parse ``"3,5,4:sigmoid"``; the activation defaults to linear."""
        head, _, act = text.partition(":")
        dims = tuple(int(tok) for tok in head.split(",") if tok.strip())
        return cls(dims, Activation(act.strip().lower() or "linear"))

    def __str__(self):
        return ",".join(map(str, self.dims)) + ":" + self.activation.value

    @property
    def depth(self) -> int:
        return len(self.dims) - 1

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        return [(self.dims[j], self.dims[j - 1]) for j in range(1, len(self.dims))]

    @property
    def layer_sizes(self) -> list[int]:
        return [a * b for a, b in self.layer_shapes]

    @property
    def n_params(self) -> int:
        return sum(self.layer_sizes)

    @property
    def offsets(self) -> list[int]:
        return list(np.concatenate([[0], np.cumsum(self.layer_sizes)]).astype(int))

    @property
    def max_width(self) -> int:
        return max(self.dims)

    @property
    def width_factor(self) -> int:
        """``max_j d_j d_{j-1}``, the widest single layer."""
        return max(self.layer_sizes)

    def layer_slice(self, j: int) -> slice:
        """Slice of layer ``j`` (1-based) inside the flat weight vector."""
        off = self.offsets
        return slice(off[j - 1], off[j])

    def split(self, vec) -> list[np.ndarray]:
        """Per-layer blocks of a flat vector, each reshaped to ``d_j x d_{j-1}``."""
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_params,):
            raise ValueError(f"expected a vector of length {self.n_params}, got {vec.shape}")
        return [vec[self.layer_slice(j)].reshape(shape, order="F")
                for j, shape in enumerate(self.layer_shapes, start=1)]

    def block(self, H, s: int, t: int) -> np.ndarray:
        """Block ``(s, t)`` of a ``d x d`` matrix, layers numbered from 1."""
        return np.asarray(H)[self.layer_slice(s), self.layer_slice(t)]


@dataclass(frozen=True, eq=False)
class WeightPoint:
    """Per-layer weight matrices together with the per-layer radius ``r``."""

    layers: tuple[np.ndarray, ...]
    radius: float = np.inf

    def __post_init__(self):
        layers = tuple(np.array(W, dtype=np.float64) for W in self.layers)
        for W in layers:
            if W.ndim != 2:
                raise ValueError("every layer must be a 2-d matrix")
            W.setflags(write=False)
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def from_flat(cls, arch: Architecture, vec, radius: float = np.inf) -> "WeightPoint":
        return cls(tuple(arch.split(vec)), radius)

    @classmethod
    def zeros(cls, arch: Architecture, radius: float = np.inf) -> "WeightPoint":
        return cls(tuple(np.zeros(s) for s in arch.layer_shapes), radius)

    @classmethod
    def random(cls, arch: Architecture, radius: float, rng: np.random.Generator,
               shell: str = "interior") -> "WeightPoint":
        """Draw each layer uniformly from its Frobenius ball of radius ``radius``.

        ``shell="boundary"`` puts every layer exactly on the sphere instead.
        """
        layers = []
        for shape in arch.layer_shapes:
            g = rng.standard_normal(shape)
            g /= np.linalg.norm(g)
            if shell == "boundary":
                rho = radius
            elif shell == "interior":
                rho = radius * rng.uniform() ** (1.0 / g.size)
            else:
                raise ValueError(f"unknown shell {shell!r}")
            layers.append(rho * g)
        return cls(tuple(layers), radius)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def flat(self) -> np.ndarray:
        return np.concatenate([W.ravel(order="F") for W in self.layers])

    def layer_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(W) for W in self.layers])

    def in_ball(self, atol: float = 1e-12) -> bool:
        return bool(np.all(self.layer_norms() <= self.radius * (1 + atol)))

    def project(self) -> "WeightPoint":
        """Radial per-layer projection onto the constraint set."""
        out = []
        for W in self.layers:
            nrm = np.linalg.norm(W)
            out.append(W * min(1.0, self.radius / nrm) if nrm > 0 else W)
        return WeightPoint(tuple(out), self.radius)

    def conforms(self, arch: Architecture) -> bool:
        return [W.shape for W in self.layers] == arch.layer_shapes


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    """Per-layer quantities of one forward pass.

    ``acts[0]`` is the input and ``preacts[j-1]`` is the pre-activation of
    layer ``j``.
    """

    activation: Activation
    input: np.ndarray
    target: np.ndarray
    preacts: tuple[np.ndarray, ...]
    acts: tuple[np.ndarray, ...]
    error: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "error", self.acts[-1] - self.target)

    @property
    def output(self) -> np.ndarray:
        return self.acts[-1]

    @property
    def loss(self) -> float:
        return loss(self)


def _check_weights(arch: Architecture, w: WeightPoint):
    if len(w.layers) != arch.depth:
        raise ValueError(f"architecture has {arch.depth} layers, weights have {len(w.layers)}")
    for j, (W, shape) in enumerate(zip(w.layers, arch.layer_shapes), start=1):
        if W.shape != shape:
            raise ValueError(f"layer {j}: expected shape {shape}, got {W.shape}")


def forward(arch: Architecture, w: WeightPoint, x, y) -> ForwardTrace:
    _check_weights(arch, w)
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape[0] != arch.dims[0]:
        raise ValueError(f"layer 1: input has length {x.shape[0]}, expected {arch.dims[0]}")
    if y.shape[0] != arch.dims[-1]:
        raise ValueError(f"layer {arch.depth}: target has length {y.shape[0]}, "
                         f"expected {arch.dims[-1]}")
    v = x
    preacts, acts = [], [x]
    for W in w.layers:
        u = W @ v
        v = sigmoid(u) if arch.activation is Activation.SIGMOID else u
        preacts.append(u)
        acts.append(v)
    return ForwardTrace(arch.activation, x, y, tuple(preacts), tuple(acts))


def loss(trace: ForwardTrace) -> float:
    return 0.5 * float(trace.error @ trace.error)


def forward_batch(arch: Architecture, w: WeightPoint, X) -> list[np.ndarray]:
    """Activations ``v^(0..l)`` for a batch of inputs, each of shape ``(n, d_j)``."""
    _check_weights(arch, w)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != arch.dims[0]:
        raise ValueError(f"layer 1: inputs have width {X.shape[1]}, expected {arch.dims[0]}")
    acts = [X]
    for W in w.layers:
        u = acts[-1] @ W.T
        acts.append(sigmoid(u) if arch.activation is Activation.SIGMOID else u)
    return acts


def sigmoid_derivative(u) -> np.ndarray:
    s = sigmoid(u)
    return s * (1.0 - s)


def chain_product(trace: ForwardTrace, w: WeightPoint, s: int, t: int) -> np.ndarray:
    """Chain product of layer maps between layers ``s`` and ``t``.

    Linear: ``W_s W_{s-1} ... W_t`` (shape ``d_s x d_{t-1}``), identity of
    size ``d_s`` when ``s < t``.

    Sigmoid: ``A_s A_{s+1} ... A_t`` with ``A_i = W_i^T diag(sigma'(u_i))``
    (shape ``d_{s-1} x d_t``), identity of size ``d_{s-1}`` when ``s > t``.
    """
    l = len(w.layers)
    dims = [w.layers[0].shape[1]] + [W.shape[0] for W in w.layers]
    if trace.activation is Activation.LINEAR:
        if not (0 <= s <= l and 1 <= t <= l + 1):
            raise IndexError(f"layer indices out of range: s={s}, t={t}, l={l}")
        if s < t:
            return np.eye(dims[s])
        out = w.layers[s - 1]
        for i in range(s - 1, t - 1, -1):
            out = out @ w.layers[i - 1]
        return out
    if not (1 <= s <= l + 1 and 0 <= t <= l):
        raise IndexError(f"layer indices out of range: s={s}, t={t}, l={l}")
    if s > t:
        return np.eye(dims[s - 1])
    out = None
    for i in range(s, t + 1):
        A = w.layers[i - 1].T * sigmoid_derivative(trace.preacts[i - 1])[None, :]
        out = A if out is None else out @ A
    return out


def parse_dims(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def as_weight_point(arch: Architecture, w, radius: float = np.inf) -> WeightPoint:
    """Accept a WeightPoint, a flat vector, or a sequence of layer matrices."""
    if isinstance(w, WeightPoint):
        return w
    if isinstance(w, np.ndarray) and w.ndim == 1:
        return WeightPoint.from_flat(arch, w, radius)
    if isinstance(w, Sequence):
        return WeightPoint(tuple(w), radius)
    raise TypeError(f"cannot interpret {type(w).__name__} as weights")
