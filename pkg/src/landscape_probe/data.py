"""Input samplers, teacher targets and persisted datasets.

Every random stream is derived from ``(seed, trial, tag)`` through
``SeedSequence`` and drives a Philox counter-based generator, so trial
``t`` draws the same numbers no matter which process runs it or in what
order trials are scheduled.
"""
from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Activation, Architecture, WeightPoint, forward_batch

MAGIC = b"LPD1"
_HEADER = struct.Struct("<4sIIQQ")

# stream tags, so inputs, noise and probes of one trial never share bits
TAG_INPUTS = 0
TAG_NOISE = 1
TAG_PROBES = 2
TAG_INIT = 3
TAG_FRESH = 4


def stream(seed: int, trial: int = 0, tag: int = TAG_INPUTS) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & (2 ** 64 - 1), int(trial), int(tag)])
    return np.random.Generator(np.random.Philox(ss))


class InputLaw(str, enum.Enum):
    BOUNDED_SUBGAUSSIAN = "rademacher"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class SamplerSpec:
    kind: InputLaw
    tau: float
    d0: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", InputLaw(self.kind))
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.d0 < 1:
            raise ValueError(f"input dimension must be positive, got {self.d0}")

    @property
    def r_x(self) -> float:
        """Input norm bound; only finite for the bounded law."""
        if self.kind is InputLaw.BOUNDED_SUBGAUSSIAN:
            return self.tau * float(np.sqrt(self.d0))
        return np.inf

    @property
    def covariance(self) -> np.ndarray:
        return self.tau ** 2 * np.eye(self.d0)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "tau": self.tau, "d0": self.d0, "seed": self.seed}


def sample_inputs(spec: SamplerSpec, n: int, trial: int = 0, tag: int = TAG_INPUTS) -> np.ndarray:
    """``n x d_0`` inputs; Rademacher entries are exactly ``+-tau``."""
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    rng = stream(spec.seed, trial, tag)
    if spec.kind is InputLaw.BOUNDED_SUBGAUSSIAN:
        signs = rng.integers(0, 2, size=(n, spec.d0), dtype=np.int8) * 2 - 1
        return spec.tau * signs.astype(np.float64)
    return spec.tau * rng.standard_normal((n, spec.d0))


@dataclass(frozen=True, eq=False)
class Teacher:
    arch: Architecture
    weights: WeightPoint
    noise: float = 0.0

    def __post_init__(self):
        if not self.weights.conforms(self.arch):
            raise ValueError("teacher weights do not match the architecture")
        if not self.weights.in_ball():
            raise ValueError("teacher weights lie outside the constraint set")
        if self.noise < 0:
            raise ValueError("noise scale must be nonnegative")

    @property
    def linear_map(self) -> np.ndarray:
        """``T = W_l ... W_1``; only meaningful for a linear teacher."""
        if self.arch.activation is not Activation.LINEAR:
            raise ValueError("a sigmoid teacher has no linear map")
        T = self.weights.layers[0]
        for W in self.weights.layers[1:]:
            T = W @ T
        return T

    def to_dict(self) -> dict:
        return {"arch": str(self.arch), "noise": self.noise,
                "radius": self.weights.radius if np.isfinite(self.weights.radius) else None,
                "weights": [W.tolist() for W in self.weights.layers]}


def teacher_targets(teacher: Teacher, inputs, rng: np.random.Generator | None = None) -> np.ndarray:
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    if X.shape[1] != teacher.arch.dims[0]:
        raise ValueError(f"inputs have {X.shape[1]} columns, teacher expects {teacher.arch.dims[0]}")
    Y = forward_batch(teacher.arch, teacher.weights, X)[-1]
    if teacher.noise > 0:
        if rng is None:
            raise ValueError("noisy targets need an explicit generator")
        Y = Y + teacher.noise * rng.standard_normal(Y.shape)
    return Y


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    spec: SamplerSpec | None = None
    teacher: Teacher | None = None
    trial: int = 0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        Y = np.atleast_2d(np.asarray(self.targets, dtype=np.float64))
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"{X.shape[0]} inputs but {Y.shape[0]} targets")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", Y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.inputs[idx], self.targets[idx], self.spec, self.teacher, self.trial,
                       dict(self.provenance, subset=True))

    def replace_row(self, i: int, x, y) -> "Dataset":
        X = self.inputs.copy()
        Y = self.targets.copy()
        X[i] = x
        Y[i] = y
        return Dataset(X, Y, self.spec, self.teacher, self.trial, dict(self.provenance, replaced=i))

    def describe(self) -> dict:
        doc = {"n": self.n, "trial": self.trial, **self.provenance}
        if self.spec is not None:
            doc["sampler"] = self.spec.to_dict()
        if self.teacher is not None:
            doc["teacher"] = self.teacher.to_dict()
        return doc


def make_dataset(spec: SamplerSpec, teacher: Teacher, n: int, trial: int = 0,
                 tag: int = TAG_INPUTS) -> Dataset:
    """Draw ``n`` samples for one trial; rerunning with the same arguments is bit-identical."""
    if spec.d0 != teacher.arch.dims[0]:
        raise ValueError("sampler and teacher disagree on the input dimension")
    X = sample_inputs(spec, n, trial, tag)
    Y = teacher_targets(teacher, X, stream(spec.seed, trial, tag + 100 * TAG_NOISE))
    return Dataset(X, Y, spec, teacher, trial, {"tag": tag})


def regenerate(ds: Dataset, n: int | None = None) -> Dataset:
    if ds.spec is None or ds.teacher is None:
        raise ValueError("dataset carries no provenance to regenerate from")
    return make_dataset(ds.spec, ds.teacher, ds.n if n is None else n, ds.trial,
                        ds.provenance.get("tag", TAG_INPUTS))


# ---- persistence -------------------------------------------------------------

def save_dataset(ds: Dataset, path) -> Path:
    """Write ``path`` (binary) and ``path.json`` (provenance sidecar)."""
    path = Path(path)
    seed = ds.spec.seed if ds.spec is not None else 0
    header = _HEADER.pack(MAGIC, ds.inputs.shape[1], ds.targets.shape[1], ds.n,
                          int(seed) & (2 ** 64 - 1))
    body = np.hstack([ds.inputs, ds.targets]).astype("<f8").tobytes(order="C")
    path.write_bytes(header + body)
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps(ds.describe(), indent=2, sort_keys=True))
    return path


def load_dataset(path) -> Dataset:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path} is too short to hold a dataset header")
    magic, d0, dl, n, seed = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path} is not a dataset file (magic {magic!r})")
    expected = _HEADER.size + 8 * n * (d0 + dl)
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n, d0 + dl)
    provenance = {"seed": seed}
    sidecar = path.with_name(path.name + ".json")
    if sidecar.exists():
        provenance = json.loads(sidecar.read_text())
    return Dataset(data[:, :d0].astype(np.float64), data[:, d0:].astype(np.float64),
                   provenance=provenance)


def export_csv(ds: Dataset, path) -> Path:
    path = Path(path)
    d0, dl = ds.inputs.shape[1], ds.targets.shape[1]
    header = ",".join([f"x{i}" for i in range(d0)] + [f"y{i}" for i in range(dl)])
    np.savetxt(path, np.hstack([ds.inputs, ds.targets]), delimiter=",", header=header,
               comments="", fmt="%.17g")
    return path


def rademacher_mgf_gap(tau: float, d0: int, lambdas) -> np.ndarray:
    """``log E exp<lambda, x> - tau^2 |lambda|^2 / 2`` for Rademacher inputs.

    Computed in closed form (the law is a product of two-point atoms), so it
    is the exact enumeration over all ``2^d0`` sign patterns.
    """
    lam = np.atleast_2d(np.asarray(lambdas, dtype=float))
    if lam.shape[1] != d0:
        raise ValueError("lambda dimension does not match d0")
    log_mgf = np.sum(np.log(np.cosh(tau * lam)), axis=1)
    return log_mgf - 0.5 * tau ** 2 * np.sum(lam * lam, axis=1)
