"""Empirical and population risk, their derivatives, and sup-gap estimates over the weight set."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .data import TAG_FRESH, TAG_PROBES, Dataset, SamplerSpec, Teacher, make_dataset, stream
from .exactdiff.linear import Moments, moment_gradient, moment_hessian, moment_risk
from .exactdiff.sigmoid import batch_gradient, batch_hessian, per_sample_gradients
from .model import Activation, Architecture, WeightPoint, forward_batch
from .solver import SolverConfig, newton


# ---- empirical aggregates ----------------------------------------------------

def _check_data(arch: Architecture, ds: Dataset):
    if ds.n == 0:
        raise ValueError("empty dataset")
    if ds.inputs.shape[1] != arch.dims[0] or ds.targets.shape[1] != arch.dims[-1]:
        raise ValueError(f"dataset shapes {ds.inputs.shape}/{ds.targets.shape} do not fit {arch}")


def sample_losses(arch: Architecture, w: WeightPoint, X, Y) -> np.ndarray:
    e = forward_batch(arch, w, X)[-1] - Y
    return 0.5 * np.sum(e * e, axis=1)


def empirical_risk(arch: Architecture, w: WeightPoint, ds: Dataset) -> float:
    _check_data(arch, ds)
    # np.mean reduces pairwise in a fixed order, so reruns are bit-identical
    return float(np.mean(sample_losses(arch, w, ds.inputs, ds.targets)))


def empirical_gradient(arch: Architecture, w: WeightPoint, ds: Dataset) -> np.ndarray:
    _check_data(arch, ds)
    return batch_gradient(arch, w, ds.inputs, ds.targets)


def empirical_hessian(arch: Architecture, w: WeightPoint, ds: Dataset) -> np.ndarray:
    _check_data(arch, ds)
    if arch.activation is Activation.LINEAR:
        return moment_hessian(w.layers, Moments.from_data(ds.inputs, ds.targets))
    return batch_hessian(arch, w, ds.inputs, ds.targets)


# ---- population oracles ------------------------------------------------------

class OracleKind(str, enum.Enum):
    EXACT_LINEAR = "exact-linear"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True, eq=False)
class PopulationOracle:
    kind: OracleKind
    moments: Moments | None = None
    sample: Dataset | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def exact_linear(cls, spec: SamplerSpec, teacher: Teacher) -> "PopulationOracle":
        if teacher.arch.activation is not Activation.LINEAR or teacher.noise > 0:
            raise ValueError("the exact oracle needs a noiseless linear teacher")
        m = Moments.population(spec.covariance, teacher.linear_map)
        return cls(OracleKind.EXACT_LINEAR, moments=m, meta={"sampler": spec.to_dict()})

    @classmethod
    def monte_carlo(cls, spec: SamplerSpec, teacher: Teacher, n_pop: int,
                    seed: int | None = None) -> "PopulationOracle":
        """A frozen held-out sample of ``n_pop`` draws (its own stream, never a training trial)."""
        src = spec if seed is None else SamplerSpec(spec.kind, spec.tau, spec.d0, seed)
        ds = make_dataset(src, teacher, n_pop, trial=0, tag=TAG_FRESH)
        return cls(OracleKind.MONTE_CARLO, sample=ds, meta={"n_pop": n_pop, "sampler": src.to_dict()})

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "PopulationOracle":
        return cls(OracleKind.MONTE_CARLO, sample=ds, meta={"n_pop": ds.n})

    def describe(self) -> dict:
        return {"kind": self.kind.value, **self.meta}


def _require_fit(oracle: PopulationOracle, arch: Architecture):
    if oracle.kind is OracleKind.EXACT_LINEAR and arch.activation is not Activation.LINEAR:
        raise ValueError("exact linear oracle requested for a sigmoid network")


def population_risk(oracle: PopulationOracle, arch: Architecture, w: WeightPoint) -> tuple[float, float]:
    """``(J(w), standard error)``; the exact oracle has zero error."""
    _require_fit(oracle, arch)
    if oracle.kind is OracleKind.EXACT_LINEAR:
        return float(moment_risk(w.layers, oracle.moments)), 0.0
    f = sample_losses(arch, w, oracle.sample.inputs, oracle.sample.targets)
    return float(np.mean(f)), float(np.std(f, ddof=1) / math.sqrt(f.size))


def population_gradient(oracle: PopulationOracle, arch: Architecture, w: WeightPoint) -> np.ndarray:
    _require_fit(oracle, arch)
    if oracle.kind is OracleKind.EXACT_LINEAR:
        return moment_gradient(w.layers, oracle.moments)
    return batch_gradient(arch, w, oracle.sample.inputs, oracle.sample.targets)


def population_gradient_stderr(oracle: PopulationOracle, arch: Architecture, w: WeightPoint) -> float:
    """Euclidean norm of the coordinate-wise standard errors of the gradient."""
    if oracle.kind is OracleKind.EXACT_LINEAR:
        return 0.0
    G = per_sample_gradients(arch, w, oracle.sample.inputs, oracle.sample.targets)
    return float(np.linalg.norm(np.std(G, axis=0, ddof=1)) / math.sqrt(G.shape[0]))


def population_hessian(oracle: PopulationOracle, arch: Architecture, w: WeightPoint) -> np.ndarray:
    _require_fit(oracle, arch)
    if oracle.kind is OracleKind.EXACT_LINEAR:
        return moment_hessian(w.layers, oracle.moments)
    return empirical_hessian(arch, w, oracle.sample)


# ---- risk objects on flat vectors (used by the solvers) ------------------------

@dataclass(frozen=True, eq=False)
class RiskFunction:
    arch: Architecture
    radius: float
    source: str
    dataset: Dataset | None = None
    oracle: PopulationOracle | None = None

    @classmethod
    def empirical(cls, arch: Architecture, ds: Dataset, radius: float) -> "RiskFunction":
        _check_data(arch, ds)
        return cls(arch, radius, "empirical", dataset=ds)

    @classmethod
    def population(cls, arch: Architecture, oracle: PopulationOracle, radius: float) -> "RiskFunction":
        _require_fit(oracle, arch)
        return cls(arch, radius, "population", oracle=oracle)

    def point(self, vec) -> WeightPoint:
        return WeightPoint.from_flat(self.arch, vec, self.radius)

    def value(self, vec) -> float:
        w = self.point(vec)
        if self.dataset is not None:
            return empirical_risk(self.arch, w, self.dataset)
        return population_risk(self.oracle, self.arch, w)[0]

    def grad(self, vec) -> np.ndarray:
        w = self.point(vec)
        if self.dataset is not None:
            return empirical_gradient(self.arch, w, self.dataset)
        return population_gradient(self.oracle, self.arch, w)

    def hess(self, vec) -> np.ndarray:
        w = self.point(vec)
        if self.dataset is not None:
            return empirical_hessian(self.arch, w, self.dataset)
        return population_hessian(self.oracle, self.arch, w)

    def project(self, vec) -> np.ndarray:
        return self.point(vec).project().flat()


# ---- sup-gap estimation ------------------------------------------------------

class Quantity(str, enum.Enum):
    LOSS = "loss"
    GRAD_NORM = "grad"
    HESS_OP_NORM = "hess"


class GapMethod(str, enum.Enum):
    NET_SAMPLE = "net-sample"
    NET_SAMPLE_WITH_ASCENT = "net-sample+ascent"


@dataclass(frozen=True)
class ProbeBudget:
    probes: int = 256
    ascent_steps: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.probes < 1:
            raise ValueError("need at least one probe")
        if self.ascent_steps < 0:
            raise ValueError("ascent steps must be nonnegative")


@dataclass(frozen=True, eq=False)
class GapEstimate:
    """A lower estimate of a sup over the weight set (probing cannot certify the sup)."""

    sup_gap: float
    argmax_w: WeightPoint
    probes: int
    method: GapMethod
    stderr: float
    argmax_shell: str
    gaps: np.ndarray

    def to_dict(self) -> dict:
        return {"sup_gap": self.sup_gap, "probes": self.probes, "method": self.method.value,
                "stderr": self.stderr, "argmax_shell": self.argmax_shell,
                "argmax_layer_norms": self.argmax_w.layer_norms().tolist(), "is_lower_bound": True}


def probe_points(arch: Architecture, radius: float, count: int, seed: int = 0) -> list[tuple[WeightPoint, str]]:
    """Seeded draws from the product of per-layer balls, alternating interior and boundary shells.

    The probe set depends only on ``seed``, so every trial is probed at the same points.
    """
    rng = stream(seed, 0, TAG_PROBES)
    out = []
    for k in range(count):
        shell = "interior" if k % 2 == 0 else "boundary"
        out.append((WeightPoint.random(arch, radius, rng, shell=shell), shell))
    return out


def _stack(points: list[WeightPoint]) -> list[np.ndarray]:
    return [np.stack([p.layers[j] for p in points]) for j in range(points[0].depth)]


def _linear_gaps(points, dm: Moments, quantity: Quantity) -> np.ndarray:
    if quantity is Quantity.LOSS:
        return np.abs(moment_risk(_stack(points), dm))
    if quantity is Quantity.GRAD_NORM:
        return np.linalg.norm(moment_gradient(_stack(points), dm), axis=-1)
    return np.array([np.linalg.norm(moment_hessian(p.layers, dm), 2) for p in points])


def _generic_gap(arch, w, ds, oracle, quantity) -> float:
    if quantity is Quantity.LOSS:
        return abs(empirical_risk(arch, w, ds) - population_risk(oracle, arch, w)[0])
    if quantity is Quantity.GRAD_NORM:
        return float(np.linalg.norm(empirical_gradient(arch, w, ds)
                                    - population_gradient(oracle, arch, w)))
    D = empirical_hessian(arch, w, ds) - population_hessian(oracle, arch, w)
    return float(np.linalg.norm(D, 2))


def _gap_stderr(arch, w, oracle, quantity) -> float:
    if oracle.kind is OracleKind.EXACT_LINEAR:
        return 0.0
    if quantity is Quantity.LOSS:
        return population_risk(oracle, arch, w)[1]
    if quantity is Quantity.GRAD_NORM:
        return population_gradient_stderr(oracle, arch, w)
    return float("nan")


def _ascent_direction(arch, w, ds, oracle, quantity, dm) -> np.ndarray:
    """Gradient in ``w`` of the gap (loss) or of half its square (gradient norm)."""
    if dm is not None:
        if quantity is Quantity.LOSS:
            return np.sign(moment_risk(w.layers, dm)) * moment_gradient(w.layers, dm)
        return moment_hessian(w.layers, dm) @ moment_gradient(w.layers, dm)
    dg = empirical_gradient(arch, w, ds) - population_gradient(oracle, arch, w)
    if quantity is Quantity.LOSS:
        sign = np.sign(empirical_risk(arch, w, ds) - population_risk(oracle, arch, w)[0])
        return sign * dg
    return (empirical_hessian(arch, w, ds) - population_hessian(oracle, arch, w)) @ dg


def _ascend(arch, w, ds, oracle, quantity, dm, steps) -> tuple[WeightPoint, float]:
    def gap(p):
        if dm is not None:
            return float(_linear_gaps([p], dm, quantity)[0])
        return _generic_gap(arch, p, ds, oracle, quantity)

    best = gap(w)
    eta = 0.1 * w.radius if np.isfinite(w.radius) else 0.1
    for _ in range(steps):
        g = _ascent_direction(arch, w, ds, oracle, quantity, dm)
        gn = np.linalg.norm(g)
        if gn == 0:
            break
        cand = WeightPoint.from_flat(arch, w.flat() + eta * g / gn, w.radius).project()
        val = gap(cand)
        if val > best:
            w, best, eta = cand, val, eta * 1.2
        else:
            eta *= 0.5
    return w, best


def sup_gap(arch: Architecture, ds: Dataset, oracle: PopulationOracle, quantity=Quantity.LOSS,
            budget: ProbeBudget = ProbeBudget(), radius: float = 1.0) -> GapEstimate:
    """Largest gap between empirical and population quantities over seeded probes."""
    quantity = Quantity(quantity)
    _check_data(arch, ds)
    _require_fit(oracle, arch)
    pts = probe_points(arch, radius, budget.probes, budget.seed)
    points = [p for p, _ in pts]
    dm = None
    if oracle.kind is OracleKind.EXACT_LINEAR:
        dm = Moments.from_data(ds.inputs, ds.targets) - oracle.moments
        gaps = _linear_gaps(points, dm, quantity)
    else:
        gaps = np.array([_generic_gap(arch, p, ds, oracle, quantity) for p in points])
    k = int(np.argmax(gaps))
    best_w, best, shell = points[k], float(gaps[k]), pts[k][1]
    method = GapMethod.NET_SAMPLE
    if budget.ascent_steps > 0:
        method = GapMethod.NET_SAMPLE_WITH_ASCENT
        if quantity is Quantity.HESS_OP_NORM:
            raise ValueError("ascent is only defined for the loss and gradient gaps")
        # refine the best few probes
        for idx in np.argsort(gaps)[::-1][:min(8, len(points))]:
            w, val = _ascend(arch, points[idx], ds, oracle, quantity, dm, budget.ascent_steps)
            if val > best:
                on_sphere = np.all(np.isclose(w.layer_norms(), radius, rtol=1e-9))
                best_w, best, shell = w, val, "boundary" if on_sphere else "interior"
    return GapEstimate(best, best_w, budget.probes, method,
                       _gap_stderr(arch, best_w, oracle, quantity), shell, gaps)


# ---- stability versus generalization -----------------------------------------

@dataclass(frozen=True)
class StabilityResult:
    stability: float
    generalization: float
    stderr: float
    stability_stderr: float
    generalization_stderr: float
    trials: int
    failed: int
    scheme: str
    per_trial: np.ndarray = field(repr=False, default=None)

    @property
    def difference(self) -> float:
        return self.stability - self.generalization

    def to_dict(self) -> dict:
        return {"stability": self.stability, "generalization": self.generalization,
                "difference": self.difference, "stderr": self.stderr,
                "stability_stderr": self.stability_stderr,
                "generalization_stderr": self.generalization_stderr,
                "trials": self.trials, "failed": self.failed, "scheme": self.scheme}


def fit_minimizer(arch: Architecture, ds: Dataset, w0: WeightPoint,
                  cfg: SolverConfig = SolverConfig()) -> tuple[WeightPoint, bool]:
    fn = RiskFunction.empirical(arch, ds, w0.radius)
    res = newton(fn.value, fn.grad, fn.hess, w0.flat(), fn.project, cfg)
    return fn.point(res.x), res.converged


def loo_stability_trial(arch: Architecture, ds: Dataset, fresh: Dataset, oracle: PopulationOracle,
                        w0: WeightPoint, cfg: SolverConfig = SolverConfig(),
                        scheme: str = "replace-one") -> tuple[float, float, float] | None:
    """One trial's ``(stability, generalization, oracle stderr)``; ``None`` if any fit failed.

    ``replace-one`` refits on the data with sample ``j`` swapped for fresh sample ``j``;
    ``leave-one-out`` refits on the data with sample ``j`` removed.
    """
    if ds.n < 2:
        raise ValueError("stability needs at least two samples")
    w_n, ok = fit_minimizer(arch, ds, w0, cfg)
    if not ok:
        return None
    own = sample_losses(arch, w_n, ds.inputs, ds.targets)
    refit_losses = np.empty(ds.n)
    for j in range(ds.n):
        if scheme == "replace-one":
            sub = ds.replace_row(j, fresh.inputs[j], fresh.targets[j])
        elif scheme == "leave-one-out":
            sub = ds.subset(np.delete(np.arange(ds.n), j))
        else:
            raise ValueError(f"unknown stability scheme {scheme!r}")
        w_j, ok = fit_minimizer(arch, sub, w_n, cfg)
        if not ok:
            return None
        refit_losses[j] = sample_losses(arch, w_j, ds.inputs[j:j + 1], ds.targets[j:j + 1])[0]
    stability = float(np.mean(refit_losses - own))
    pop, pop_se = population_risk(oracle, arch, w_n)
    return stability, pop - float(np.mean(own)), pop_se


def loo_stability(arch: Architecture, spec: SamplerSpec, teacher: Teacher, n: int, trials: int,
                  oracle: PopulationOracle, w0: WeightPoint, cfg: SolverConfig = SolverConfig(),
                  scheme: str = "replace-one", first_trial: int = 0) -> StabilityResult:
    """Average stability and generalization gap over independent trials.

    Failed fits are excluded and counted.  The reported ``stderr`` combines the two
    Monte-Carlo standard errors and the oracle's own error at the fitted points.
    """
    if n < 2:
        raise ValueError("stability needs at least two samples")
    rows, failed = [], 0
    for t in range(first_trial, first_trial + trials):
        ds = make_dataset(spec, teacher, n, trial=t)
        fresh = make_dataset(spec, teacher, n, trial=t, tag=TAG_FRESH + 10)
        out = loo_stability_trial(arch, ds, fresh, oracle, w0, cfg, scheme)
        if out is None:
            failed += 1
            continue
        rows.append(out)
    if len(rows) < 2:
        raise RuntimeError(f"only {len(rows)} of {trials} trials converged")
    arr = np.array(rows)
    se = arr.std(axis=0, ddof=1) / math.sqrt(len(arr))
    # the oracle sample is shared by every trial, so its error does not average out
    se_gen = math.hypot(se[1], float(arr[:, 2].mean()))
    return StabilityResult(float(arr[:, 0].mean()), float(arr[:, 1].mean()),
                           math.hypot(se[0], se_gen), float(se[0]), se_gen,
                           len(arr), failed, scheme, arr[:, :2])


# ---- tail experiment ---------------------------------------------------------

def tail_experiment(arch: Architecture, w: WeightPoint, spec: SamplerSpec, teacher: Teacher,
                    oracle: PopulationOracle, n_grid, t: float, trials: int) -> list[dict]:
    """Fraction of trials with ``|mean f - E f| > t`` for each ``n``, with a Wilson 95% interval."""
    if not t > 0:
        raise ValueError(f"threshold must be positive, got {t}")
    mean_f = population_risk(oracle, arch, w)[0]
    rows = []
    for n in n_grid:
        hits = 0
        for k in range(trials):
            ds = make_dataset(spec, teacher, int(n), trial=k)
            hits += abs(empirical_risk(arch, w, ds) - mean_f) > t
        p = hits / trials
        z = 1.959963984540054
        centre = (p + z * z / (2 * trials)) / (1 + z * z / trials)
        half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials ** 2)) / (1 + z * z / trials)
        # clamp so rounding never pushes the interval off the point estimate
        rows.append({"n": int(n), "exceedance": p, "ci_low": max(0.0, min(p, centre - half)),
                     "ci_high": min(1.0, max(p, centre + half)), "trials": trials, "t": t})
    return rows
