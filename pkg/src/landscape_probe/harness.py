"""Seeded experiment pipelines with JSON/CSV result documents.

Every experiment is a function ``cfg -> Outcome``.  :func:`run` wraps it with
the config, a git-style hash of the inputs, the runtime and a hash of the
result that excludes the runtime, so identical configs hash identically.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from . import bounds as B
from .data import InputLaw, SamplerSpec, TAG_INIT, Teacher, make_dataset, stream
from .exactdiff import (fd_gradient, fd_hessian, gradient, hessian, relative_error,
                        sample_grad_fn, sample_loss_fn)
from .exactdiff.linear import Moments, moment_gradient
from .exactdiff.nets import is_certified, net_operator_norm, net_vector_norm, sphere_net
from .exactdiff.spectral import asymmetry
from .landscape import degenerate_gradient_audit, find_stationary, pair_points
from .model import Activation, Architecture, WeightPoint, chain_product, forward
from .risk import (PopulationOracle, ProbeBudget, Quantity, RiskFunction, empirical_gradient,
                   loo_stability, sup_gap, tail_experiment)
from .solver import SolverConfig

SCHEMA = "lp-1"

# the fixed sigmoid teacher used by the pairing and stability runs; its
# population Hessian has smallest eigenvalue ~2.9e-4 under N(0, 16) inputs
SIGMOID_TEACHER = [[[-0.44], [1.82]], [[-1.62, 1.56]]]


@dataclass
class ExperimentConfig:
    experiment: str
    arch: str = "2,3,2:linear"
    radius: float = 1.0
    tau: float = 1.0
    inputs: str = "rademacher"
    n: int = 1024
    n_grid: list = field(default_factory=lambda: [2 ** k for k in range(7, 14)])
    trials: int = 20
    probes: int = 256
    ascent_steps: int = 0
    quantity: str = "loss"
    seed: int = 7
    constants: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; known: {sorted(EXPERIMENTS)}")
        if not self.n_grid:
            raise ValueError("n grid is empty")
        if any(int(n) < 1 for n in self.n_grid):
            raise ValueError(f"n grid entries must be positive: {self.n_grid}")
        if self.trials < 1 or self.probes < 1 or self.n < 1:
            raise ValueError("trials, probes and n must be positive")
        self.architecture  # parses
        InputLaw(self.inputs)
        Quantity(self.quantity)
        return self

    @property
    def architecture(self) -> Architecture:
        return Architecture.parse(self.arch)

    @classmethod
    def for_experiment(cls, name: str, **overrides) -> "ExperimentConfig":
        """Experiment defaults with ``overrides`` applied on top (nested dicts merge)."""
        base = dict(DEFAULTS.get(name, {}))
        for key in ("thresholds", "params", "constants"):
            base[key] = {**base.get(key, {}), **overrides.pop(key, {})}
        base.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)}
        unknown = set(base) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(experiment=name, **{k: v for k, v in base.items() if k != "experiment"})

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        doc = json.loads(Path(path).read_text())
        name = overrides.pop("experiment", None) or doc.pop("experiment")
        doc.pop("experiment", None)
        merged = dict(doc)
        for key, val in overrides.items():
            if val is None:
                continue
            if key in ("params", "thresholds", "constants"):
                merged[key] = {**merged.get(key, {}), **val}
            else:
                merged[key] = val
        return cls.for_experiment(name, **merged)

    def to_dict(self) -> dict:
        return asdict(self)

    def spec(self, d0: int | None = None) -> SamplerSpec:
        return SamplerSpec(InputLaw(self.inputs), self.tau, d0 or self.architecture.dims[0], self.seed)

    def threshold(self, name: str) -> float:
        return float(self.thresholds[name])


@dataclass
class Outcome:
    result: dict
    assertions: dict
    rows: list | None = None


# ---- rate fitting ------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    points: list
    slope: float
    intercept: float
    r2: float
    excluded: list

    def to_dict(self) -> dict:
        return asdict(self)


def fit_rate(table) -> RateFit:
    """OLS of ``ln gap`` on ``ln n``; rows with a nonpositive gap are excluded and listed."""
    rows = [(float(n), float(g)) for n, g in table]
    keep = [(n, g) for n, g in rows if g > 0 and n > 0]
    excluded = [(n, g) for n, g in rows if not (g > 0 and n > 0)]
    if len(keep) < 4:
        raise ValueError(f"rate fit needs at least 4 positive points, got {len(keep)}")
    x = np.log([n for n, _ in keep])
    y = np.log([g for _, g in keep])
    if np.ptp(y) == 0:
        return RateFit(list(zip(x.tolist(), y.tolist())), 0.0, float(y[0]), 1.0, excluded)
    fit = stats.linregress(x, y)
    return RateFit(list(zip(x.tolist(), y.tolist())), float(fit.slope), float(fit.intercept),
                   float(fit.rvalue ** 2), excluded)


# ---- shared helpers ----------------------------------------------------------

def _random_case(rng, activation: Activation, max_dim: int, max_depth: int, radius: float):
    depth = int(rng.integers(2, max_depth + 1))
    arch = Architecture(tuple(int(k) for k in rng.integers(1, max_dim + 1, depth + 1)), activation)
    w = WeightPoint.random(arch, radius, rng, shell="interior" if rng.uniform() < 0.5 else "boundary")
    x = rng.standard_normal(arch.dims[0])
    y = rng.standard_normal(arch.dims[-1])
    if activation is Activation.SIGMOID:
        y = rng.uniform(0, 1, arch.dims[-1])
    return arch, w, x, y


def _activations(cfg: ExperimentConfig) -> list[Activation]:
    acts = cfg.params.get("activations", ["linear", "sigmoid"])
    return [Activation(a) for a in acts]


def _teacher(cfg: ExperimentConfig, arch: Architecture, noise: float = 0.0) -> Teacher:
    if "teacher" in cfg.params:
        layers = tuple(np.array(W, dtype=float) for W in cfg.params["teacher"])
        return Teacher(arch, WeightPoint(layers, cfg.radius), noise)
    rng = stream(cfg.seed, 0, TAG_INIT)
    return Teacher(arch, WeightPoint.random(arch, cfg.radius, rng), noise)


def _med_q(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"median": float(np.median(v)), "q25": float(np.quantile(v, 0.25)),
            "q75": float(np.quantile(v, 0.75))}


# ---- experiments -------------------------------------------------------------

def exp_grad_check(cfg: ExperimentConfig) -> Outcome:
    tol = cfg.threshold("max_rel_err")
    rows = []
    for act in _activations(cfg):
        rng = stream(cfg.seed, 0, 10 + list(Activation).index(act))
        for k in range(cfg.trials):
            arch, w, x, y = _random_case(rng, act, cfg.params["max_dim"], cfg.params["max_depth"],
                                         cfg.radius)
            exact = gradient(forward(arch, w, x, y), w)
            approx = fd_gradient(sample_loss_fn(arch, x, y, w.radius), w.flat())
            err = relative_error(approx, exact)
            rows.append({"case_id": f"{act.value}-{k}", "arch": str(arch),
                         "max_rel_err": err, "pass": err <= tol})
    worst = max(r["max_rel_err"] for r in rows)
    return Outcome({"cases": len(rows), "max_rel_err": worst, "records": rows},
                   {"gradient_rel_err": worst <= tol}, rows)


def exp_hess_check(cfg: ExperimentConfig) -> Outcome:
    sym_tol = cfg.threshold("max_asymmetry")
    rows = []
    for act in _activations(cfg):
        tol = cfg.threshold(f"max_rel_err_{act.value}")
        rng = stream(cfg.seed, 0, 20 + list(Activation).index(act))
        for k in range(cfg.trials):
            arch, w, x, y = _random_case(rng, act, cfg.params["max_dim"], cfg.params["max_depth"],
                                         cfg.radius)
            H = hessian(forward(arch, w, x, y), w)
            approx = fd_hessian(sample_grad_fn(arch, x, y, w.radius), w.flat())
            err = relative_error(approx, H)
            asym = asymmetry(H)
            rows.append({"case_id": f"{act.value}-{k}", "arch": str(arch), "max_rel_err": err,
                         "asymmetry": asym, "pass": err <= tol and asym <= sym_tol})
    checks = {}
    for act in _activations(cfg):
        errs = [r["max_rel_err"] for r in rows if r["case_id"].startswith(act.value)]
        checks[f"hessian_rel_err_{act.value}"] = max(errs) <= cfg.threshold(f"max_rel_err_{act.value}")
    checks["hessian_symmetry"] = max(r["asymmetry"] for r in rows) <= sym_tol
    return Outcome({"cases": len(rows), "max_rel_err": max(r["max_rel_err"] for r in rows),
                    "max_asymmetry": max(r["asymmetry"] for r in rows), "records": rows}, checks, rows)


def _bound_config(cfg: ExperimentConfig, n: int | None = None) -> B.BoundConfig:
    return B.BoundConfig(cfg.architecture, cfg.radius, cfg.tau, n or cfg.n,
                         cfg.params.get("eps_fail", 0.05), cfg.params.get("r_x"), dict(cfg.constants))


def parse_sweep(text: str) -> list[int]:
    """``n=64..65536:geometric`` (doubling) or ``n=100..1000:linear:10`` (step)."""
    name, _, rest = text.partition("=")
    if name.strip() != "n" or ".." not in rest:
        raise ValueError(f"cannot parse sweep {text!r}; expected n=LO..HI:geometric")
    span, _, mode = rest.partition(":")
    lo, hi = (int(v) for v in span.split(".."))
    kind, _, step = mode.partition(":")
    if lo < 1 or hi < lo:
        raise ValueError(f"invalid sweep range {lo}..{hi}")
    if kind in ("", "geometric"):
        out, n = [], lo
        while n <= hi:
            out.append(n)
            n *= int(step or 2)
        return out
    if kind == "linear":
        return list(range(lo, hi + 1, int(step or 1)))
    raise ValueError(f"unknown sweep kind {kind!r}")


def monotonicity_violations(arch: Architecture, radii, depths, n_grid, tau: float = 1.0) -> list[str]:
    """Grid check: every bound decreases in ``n`` and is nondecreasing in ``r`` and ``l``."""
    names = ["epsilon_linear", "epsilon_sigmoid", "grad_gap_linear", "grad_gap_sigmoid",
             "hess_gap_linear", "hess_gap_sigmoid"]

    def values(dims, r, n):
        return B.bound_report(B.BoundConfig(Architecture(dims, arch.activation), r, tau, n))["bounds"]

    bad = []
    width = arch.dims[1]
    for l in depths:
        dims = (arch.dims[0],) + (width,) * (l - 1) + (arch.dims[-1],)
        for r in radii:
            seq = [values(dims, r, n) for n in n_grid]
            for a, b, n in zip(seq, seq[1:], n_grid[1:]):
                bad += [f"{k} not decreasing at n={n}, r={r}, l={l}" for k in names if not b[k] < a[k]]
        for n in n_grid[::4]:
            seq = [values(dims, r, n) for r in radii]
            for a, b, r in zip(seq, seq[1:], radii[1:]):
                bad += [f"{k} decreasing in r at r={r}, l={l}" for k in names if b[k] < a[k]]
    for r in radii:
        for n in n_grid[::4]:
            seq = [values((arch.dims[0],) + (width,) * (l - 1) + (arch.dims[-1],), r, n) for l in depths]
            for a, b, l in zip(seq, seq[1:], depths[1:]):
                bad += [f"{k} decreasing in l at l={l}, r={r}" for k in names if b[k] < a[k]]
    return bad


def exp_bounds(cfg: ExperimentConfig) -> Outcome:
    report = B.bound_report(_bound_config(cfg))
    rows = None
    if cfg.params.get("sweep"):
        rows = []
        for n in parse_sweep(cfg.params["sweep"]):
            rep = B.bound_report(_bound_config(cfg, n))
            rows.append({"n": n, **rep["bounds"]})
    viol = monotonicity_violations(cfg.architecture, cfg.params["mono_radii"],
                                   cfg.params["mono_depths"], cfg.params["mono_n"], cfg.tau)
    report["monotonicity_violations"] = viol
    return Outcome(report, {"monotonicity": not viol}, rows)


def gap_rate_curve(cfg: ExperimentConfig) -> tuple[list[dict], RateFit, dict]:
    arch = cfg.architecture
    spec = cfg.spec()
    teacher = _teacher(cfg, arch)
    if arch.activation is Activation.LINEAR:
        oracle = PopulationOracle.exact_linear(spec, teacher)
    else:
        oracle = PopulationOracle.monte_carlo(spec, teacher, cfg.params.get("n_pop", 200_000),
                                              seed=cfg.seed + 1)
    budget = ProbeBudget(cfg.probes, cfg.ascent_steps, cfg.seed)
    rows, shells = [], {"interior": 0, "boundary": 0}
    for n in cfg.n_grid:
        gaps = []
        for k in range(cfg.trials):
            est = sup_gap(arch, make_dataset(spec, teacher, int(n), trial=k), oracle,
                          cfg.quantity, budget, cfg.radius)
            gaps.append(est.sup_gap)
            shells[est.argmax_shell] += 1
        rows.append({"n": int(n), **{k: v for k, v in _med_q(gaps).items()}})
    fit = fit_rate([(r["n"], r["median"]) for r in rows])
    return [{"n": r["n"], "median_gap": r["median"], "q25": r["q25"], "q75": r["q75"]} for r in rows], \
        fit, {"oracle": oracle.describe(), "argmax_shells": shells}


def exp_gap_rate(cfg: ExperimentConfig) -> Outcome:
    rows, fit, meta = gap_rate_curve(cfg)
    lo, hi = cfg.threshold("slope_min"), cfg.threshold("slope_max")
    return Outcome({"fit": fit.to_dict(), "slope": fit.slope, "quantity": cfg.quantity,
                    "sup_is_lower_bound": True, **meta, "curve": rows},
                   {"slope_in_band": lo <= fit.slope <= hi}, rows)


def _sigmoid_task(cfg: ExperimentConfig, noise: float):
    arch = cfg.architecture
    spec = cfg.spec()
    teacher = _teacher(cfg, arch, noise)
    oracle = PopulationOracle.monte_carlo(spec, teacher, cfg.params["n_pop"], seed=cfg.seed + 1)
    return arch, spec, teacher, oracle


def exp_stationary_pair(cfg: ExperimentConfig) -> Outcome:
    arch, spec, teacher, oracle = _sigmoid_task(cfg, cfg.params["noise"])
    zeta = cfg.params["zeta"]
    radius = cfg.radius
    starts = [teacher.weights]
    if arch.depth == 2:
        # the hidden-unit swap of the teacher is a second global minimizer
        W1, W2 = teacher.weights.layers
        perm = np.arange(W1.shape[0])[::-1]
        starts.append(WeightPoint((W1[perm], W2[:, perm]), radius))
    pop_fn = RiskFunction.population(arch, oracle, radius)
    population, _ = find_stationary(pop_fn, starts, tol=cfg.params["tol"], zeta=zeta)
    bcfg = _bound_config(cfg).with_constants(zeta=zeta)
    rows, pair_docs, all_match, unmatched = [], [], True, 0
    medians = {}
    for n in cfg.n_grid:
        dists = []
        for k in range(cfg.trials):
            ds = make_dataset(spec, teacher, int(n), trial=k)
            emp_fn = RiskFunction.empirical(arch, ds, radius)
            empirical, _ = find_stationary(emp_fn, [r.w for r in population], tol=cfg.params["tol"],
                                           zeta=zeta)
            res = pair_points(empirical, population, zeta, cfg.params["match_radius"])
            all_match &= res.all_indices_match and all(
                p.empirical.index == p.population.index for p in res.pairs)
            unmatched += len(res.unmatched_empirical) + len(res.unmatched_population)
            dists += [p.distance for p in res.pairs]
            pair_docs.append({"n": int(n), "trial": k, **res.to_dict()})
        medians[int(n)] = float(np.median(dists)) if dists else math.inf
        bound = B.stationary_distance_bound(bcfg.with_(n=int(n)), arch.activation)
        rows.append({"n": int(n), **_med_q(dists), "pairs": len(dists), "bound_uncalibrated": bound})
    first, last = medians[int(cfg.n_grid[0])], medians[int(cfg.n_grid[-1])]
    result = {"population": [r.to_dict() for r in population], "zeta": zeta,
              "oracle": oracle.describe(), "curve": rows, "pairings": pair_docs,
              "unmatched": unmatched, "bound_calibrated": "zeta" in cfg.constants}
    checks = {"population_found": bool(population), "equal_index": all_match,
              "distance_shrinks": last < first}
    return Outcome(result, checks, rows)


def exp_loo_stability(cfg: ExperimentConfig) -> Outcome:
    arch, spec, teacher, oracle = _sigmoid_task(cfg, cfg.params["noise"])
    solver = SolverConfig(tol=cfg.params["tol"])
    out, checks = {}, {}
    k = cfg.threshold("stderr_multiple")
    for scheme in cfg.params["schemes"]:
        res = loo_stability(arch, spec, teacher, cfg.n, cfg.trials, oracle, teacher.weights,
                            solver, scheme)
        out[scheme] = res.to_dict()
        if scheme in cfg.params["asserted_schemes"]:
            checks[f"equality_{scheme}"] = abs(res.difference) <= k * res.stderr
    return Outcome({"schemes": out, "oracle": oracle.describe(), "n": cfg.n}, checks,
                   [{"scheme": s, **v} for s, v in out.items()])


def _bounded_inputs(rng, arch: Architecture, tau: float, count: int) -> np.ndarray:
    return tau * (rng.integers(0, 2, (count, arch.dims[0])) * 2 - 1).astype(float)


def exp_norm_audit(cfg: ExperimentConfig) -> Outcome:
    draws = cfg.params["draws"]
    r = cfg.radius
    result, checks = {}, {}

    # linear chain products and the calibrated gradient/Hessian bounds
    lin = Architecture(cfg.architecture.dims, Activation.LINEAR)
    bcfg = B.BoundConfig(lin, r, cfg.tau, 100, r_x=cfg.tau * math.sqrt(lin.dims[0]))
    rng = stream(cfg.seed, 0, 30)

    def linear_draw():
        shell = "boundary" if rng.uniform() < 0.5 else "interior"
        w = WeightPoint.random(lin, r, rng, shell=shell)
        teacher = WeightPoint.random(lin, r, rng, shell="boundary")
        x = _bounded_inputs(rng, lin, cfg.tau, 1)[0]
        y = forward(lin, teacher, x, np.zeros(lin.dims[-1])).output
        return w, forward(lin, w, x, y)

    chain_bad = 0
    train_g, train_h = [], []
    for _ in range(cfg.params["calibration_draws"]):
        w, tr = linear_draw()
        train_g.append(np.linalg.norm(gradient(tr, w)))
        train_h.append(np.linalg.norm(hessian(tr, w)))
    c_t = B.calibrate_constant(bcfg, "c_t", train_g)
    c_tp = B.calibrate_constant(bcfg, "c_t'", train_h)
    cal = bcfg.with_constants(c_t=c_t, c_t_prime=c_tp)
    g_lim, h_lim = math.sqrt(B.alpha_g(cal)), lin.depth * math.sqrt(B.alpha_l(cal))
    g_bad = h_bad = 0
    for _ in range(draws):
        w, tr = linear_draw()
        l = lin.depth
        for s in range(1, l + 1):
            for t in range(1, s + 1):
                chain_bad += np.linalg.norm(chain_product(tr, w, s, t)) > r ** (s - t + 1) * (1 + 1e-12)
        g_bad += np.linalg.norm(gradient(tr, w)) > g_lim
        h_bad += np.linalg.norm(hessian(tr, w)) > h_lim
    result["linear"] = {"chain_violations": int(chain_bad), "c_t": c_t, "c_t_prime": c_tp,
                        "grad_violations": int(g_bad), "hess_violations": int(h_bad)}
    checks["linear_chain_norms"] = chain_bad == 0
    checks["linear_grad_calibrated"] = g_bad == 0
    checks["linear_hess_calibrated"] = h_bad == 0

    # sigmoid: chain products, alpha and varsigma with c_y taken from the draws
    sig = Architecture(cfg.architecture.dims, Activation.SIGMOID)
    rng = stream(cfg.seed, 0, 31)
    cases, errs, x_big = [], [], 0
    for _ in range(draws):
        w = WeightPoint.random(sig, r, rng, shell="boundary" if rng.uniform() < 0.5 else "interior")
        x = cfg.tau * rng.standard_normal(sig.dims[0])
        y = rng.uniform(0, 1, sig.dims[-1])
        tr = forward(sig, w, x, y)
        cases.append((w, tr))
        errs.append(float(tr.error @ tr.error))
        x_big += float(x @ x) > sig.max_width
    scfg = B.BoundConfig(sig, r, cfg.tau, 100).with_constants(c_y=max(errs))
    alpha, vs = B.alpha_sigmoid(scfg), B.varsigma_explicit(scfg)
    chain_bad = g_bad = h_bad = 0
    g_max = h_max = 0.0
    for w, tr in cases:
        l = sig.depth
        for s in range(1, l + 1):
            for t in range(s, l + 1):
                chain_bad += np.linalg.norm(chain_product(tr, w, s, t)) > (r / 4) ** (t - s + 1) * (1 + 1e-12)
        gn, hn = np.linalg.norm(gradient(tr, w)), np.linalg.norm(hessian(tr, w))
        g_max, h_max = max(g_max, gn), max(h_max, hn)
        g_bad += gn > alpha
        h_bad += hn > vs
    # third-derivative scale: sampled Hessian Lipschitz ratios, reported and not asserted
    lip = 0.0
    delta = cfg.params.get("lipschitz_step", 1e-4)
    for w, tr in cases[:cfg.params.get("lipschitz_draws", 500)]:
        u = rng.standard_normal(sig.n_params)
        w2 = WeightPoint.from_flat(sig, w.flat() + delta * u / np.linalg.norm(u), r)
        tr2 = forward(sig, w2, tr.input, tr.target)
        step = np.linalg.norm(w2.flat() - w.flat())
        lip = max(lip, np.linalg.norm(hessian(tr2, w2) - hessian(tr, w), 2) / step)
    result["sigmoid"] = {"c_y": max(errs), "alpha": alpha, "varsigma": vs, "max_grad": g_max,
                         "hessian_lipschitz_max": lip,
                         "hessian_lipschitz_finite": bool(np.isfinite(lip)),
                         "max_hess_fro": h_max, "chain_violations": int(chain_bad),
                         "grad_violations": int(g_bad), "hess_violations": int(h_bad),
                         "inputs_beyond_c_d": int(x_big)}
    checks["sigmoid_chain_norms"] = chain_bad == 0
    checks["sigmoid_alpha"] = g_bad == 0
    checks["sigmoid_varsigma"] = h_bad == 0
    result["draws"] = draws
    return Outcome(result, checks, None)


def exp_tail(cfg: ExperimentConfig) -> Outcome:
    arch = cfg.architecture
    spec = cfg.spec()
    teacher = _teacher(cfg, arch)
    oracle = (PopulationOracle.exact_linear(spec, teacher) if arch.activation is Activation.LINEAR
              else PopulationOracle.monte_carlo(spec, teacher, cfg.params.get("n_pop", 200_000),
                                                seed=cfg.seed + 1))
    w = WeightPoint.random(arch, cfg.radius, stream(cfg.seed, 1, TAG_INIT))
    rows = tail_experiment(arch, w, spec, teacher, oracle, cfg.n_grid, cfg.params["t"], cfg.trials)
    ex = [r["exceedance"] for r in rows]
    inversions = sum(b > a for a, b in zip(ex, ex[1:]))
    return Outcome({"table": rows, "inversions": inversions},
                   {"nonincreasing": inversions <= cfg.params.get("allowed_inversions", 1)}, rows)


def exp_net_norms(cfg: ExperimentConfig) -> Outcome:
    rng = stream(cfg.seed, 0, 40)
    eps_v, eps_o = cfg.params["eps_vector"], cfg.params["eps_operator"]
    bad, rows = 0, []
    nets = {}
    for k in range(cfg.trials):
        dim = int(rng.integers(1, cfg.params["max_dim"] + 1))
        key = (dim, eps_v)
        if key not in nets:
            nets[key] = sphere_net(dim, eps_v)
        if (dim, eps_o) not in nets:
            nets[(dim, eps_o)] = sphere_net(dim, eps_o)
        v = rng.standard_normal(dim)
        A = rng.standard_normal((dim, dim))
        X = 0.5 * (A + A.T)
        tv, to = np.linalg.norm(v), np.linalg.norm(X, 2)
        ev = net_vector_norm(v, eps_v, net=nets[(dim, eps_v)])
        eo = net_operator_norm(X, eps_o, net=nets[(dim, eps_o)])
        okv = tv * (1 - 1e-12) <= ev <= tv / (1 - eps_v) * (1 + 1e-12)
        oko = to * (1 - 1e-12) <= eo <= to / (1 - 2 * eps_o) * (1 + 1e-12)
        bad += (not okv) + (not oko)
        rows.append({"case": k, "dim": dim, "certified": is_certified(dim), "vector_norm": tv,
                     "vector_estimate": ev, "operator_norm": to, "operator_estimate": eo,
                     "pass": bool(okv and oko)})
    return Outcome({"cases": cfg.trials, "violations": bad, "records": rows},
                   {"bracketed": bad == 0}, rows)


def exp_degenerate_audit(cfg: ExperimentConfig) -> Outcome:
    arch = cfg.architecture
    spec = cfg.spec()
    teacher = _teacher(cfg, arch)
    point = WeightPoint(tuple(np.array(W, dtype=float) for W in cfg.params["point"]), cfg.radius)
    oracle = PopulationOracle.exact_linear(spec, teacher)
    pop_grad = float(np.linalg.norm(moment_gradient(point.layers, oracle.moments)))
    datasets = {int(n): [make_dataset(spec, teacher, int(n), trial=k) for k in range(cfg.trials)]
                for n in cfg.n_grid}
    zero = WeightPoint.zeros(arch, cfg.radius)
    zero_max = max(float(np.max(np.abs(empirical_gradient(arch, zero, ds))))
                   for group in datasets.values() for ds in group)
    table = degenerate_gradient_audit(arch, point, datasets)
    rows = [{k: v for k, v in r.items() if k != "norms"} for r in table]
    first, last = table[0]["median"], table[-1]["median"]
    return Outcome({"population_grad_norm": pop_grad, "zero_point_max_abs_grad": zero_max,
                    "table": rows},
                   {"zero_point_exact": zero_max == 0.0,
                    "population_stationary": pop_grad <= 1e-12,
                    "median_decreases": last < first}, rows)


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], Outcome]] = {
    "grad-check": exp_grad_check,
    "hess-check": exp_hess_check,
    "bounds": exp_bounds,
    "gap-rate": exp_gap_rate,
    "stationary-pair": exp_stationary_pair,
    "loo-stability": exp_loo_stability,
    "norm-audit": exp_norm_audit,
    "tail": exp_tail,
    "net-norms": exp_net_norms,
    "degenerate-audit": exp_degenerate_audit,
}

_SIGMOID_TASK = {"arch": "1,2,1:sigmoid", "radius": 4.0, "tau": 4.0, "inputs": "gaussian"}

DEFAULTS: dict[str, dict] = {
    "grad-check": {"trials": 100, "radius": 2.0,
                   "params": {"max_dim": 7, "max_depth": 4},
                   "thresholds": {"max_rel_err": 1e-6}},
    "hess-check": {"trials": 50, "radius": 2.0,
                   "params": {"max_dim": 5, "max_depth": 4},
                   "thresholds": {"max_rel_err_linear": 1e-5, "max_rel_err_sigmoid": 1e-4,
                                  "max_asymmetry": 1e-9}},
    "bounds": {"arch": "2,3,1:linear", "n": 1000,
               "params": {"mono_radii": [1.0, 1.5, 2.0, 3.0, 4.0], "mono_depths": [2, 3, 4],
                          "mono_n": [8, 32, 128, 512, 2048, 8192, 32768, 131072, 524288, 1000000]}},
    "gap-rate": {"arch": "2,3,2:linear", "trials": 32,
                 "thresholds": {"slope_min": -0.65, "slope_max": -0.35}},
    "stationary-pair": {**_SIGMOID_TASK, "n_grid": [256, 1024, 4096], "trials": 10,
                        "params": {"teacher": SIGMOID_TEACHER, "noise": 0.02, "n_pop": 200_000,
                                   "zeta": 1e-4, "match_radius": 0.5, "tol": 1e-9}},
    "loo-stability": {**_SIGMOID_TASK, "n": 64, "trials": 200,
                      "params": {"teacher": SIGMOID_TEACHER, "noise": 0.05, "n_pop": 200_000,
                                 "tol": 1e-9, "schemes": ["replace-one", "leave-one-out"],
                                 "asserted_schemes": ["replace-one"]},
                      "thresholds": {"stderr_multiple": 2.0}},
    "norm-audit": {"arch": "2,3,3,2:linear", "radius": 2.0,
                   "params": {"draws": 10_000, "calibration_draws": 10_000}},
    "tail": {"arch": "2,3,1:linear", "n_grid": [16, 64, 256, 1024], "trials": 1000,
             "params": {"t": 0.01, "allowed_inversions": 1}},
    "net-norms": {"trials": 100,
                  "params": {"max_dim": 3, "eps_vector": 0.25, "eps_operator": 0.25}},
    "degenerate-audit": {"arch": "2,2,1:linear", "radius": 2.0, "n_grid": [256, 1024, 4096],
                         "trials": 20,
                         "params": {"teacher": [[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0]]],
                                    "point": [[[0.0, 1.0], [0.0, 0.5]], [[0.0, 0.0]]]}},
}


# ---- documents ---------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def canonical(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, separators=(",", ":"))


def git_hash(text: str) -> str:
    """Content hash in git's blob format."""
    data = text.encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def run(cfg: ExperimentConfig) -> dict:
    """Run one experiment and return its result document (not written anywhere)."""
    cfg.validate()
    config_doc = _jsonable(cfg.to_dict())
    t0 = time.perf_counter()
    outcome = EXPERIMENTS[cfg.experiment](cfg)
    runtime = time.perf_counter() - t0
    doc = {"schema": SCHEMA, "experiment": cfg.experiment, "config": config_doc,
           "input_hash": git_hash(canonical(config_doc)),
           "result": _jsonable(outcome.result),
           "assertions": _jsonable(outcome.assertions),
           "pass": bool(all(outcome.assertions.values())),
           "rows": _jsonable(outcome.rows) if outcome.rows is not None else None}
    doc["result_hash"] = hashlib.sha256(canonical(doc).encode()).hexdigest()
    doc["runtime_s"] = runtime
    return doc


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys = list(rows[0])
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()})
    return buf.getvalue()


def write_outputs(doc: dict, out: str | None = None, csv_path: str | None = None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(json.dumps(doc, indent=2, sort_keys=True))
    if csv_path and doc.get("rows"):
        Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
        Path(csv_path).write_text(rows_to_csv(doc["rows"]))
