"""Stationary points of empirical and population risks, their indices, and pairing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .exactdiff.spectral import index_from_eigenvalues, spectrum
from .model import WeightPoint
from .risk import RiskFunction, empirical_gradient
from .solver import SolverConfig, newton

DEFAULT_ZETA = 1e-3
DEFAULT_MATCH_RADIUS = 0.5
BOUNDARY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class StationaryRecord:
    w: WeightPoint
    grad_norm: float
    spectrum: np.ndarray
    index: int
    degenerate: bool
    source: str
    boundary_active: bool = False

    @property
    def min_abs_eig(self) -> float:
        return float(np.min(np.abs(self.spectrum)))

    def to_dict(self) -> dict:
        return {"source": self.source, "grad_norm": self.grad_norm, "index": self.index,
                "degenerate": self.degenerate, "boundary_active": self.boundary_active,
                "spectrum": self.spectrum.tolist(), "w": self.w.flat().tolist()}


@dataclass(frozen=True)
class StartDiagnostic:
    start: int
    converged: bool
    grad_norm: float
    iterations: int
    reason: str


def classify(fn: RiskFunction, vec, zeta: float = DEFAULT_ZETA) -> StationaryRecord:
    w = fn.point(vec)
    eigs = spectrum(fn.hess(vec))
    info = index_from_eigenvalues(eigs, zeta)
    on_edge = bool(np.isfinite(w.radius) and
                   np.any(w.layer_norms() >= w.radius * (1 - BOUNDARY_RTOL)))
    return StationaryRecord(w, float(np.linalg.norm(fn.grad(vec))), eigs, info.index,
                            info.degenerate, fn.source, on_edge)


def find_stationary(fn: RiskFunction, starts, tol: float = 1e-9, max_iters: int = 100,
                    zeta: float = DEFAULT_ZETA, mode: str = "minimize",
                    merge_radius: float | None = None
                    ) -> tuple[list[StationaryRecord], list[StartDiagnostic]]:
    """Run damped Newton from every start and keep the converged, deduplicated points."""
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    cfg = SolverConfig(tol=tol, max_iters=max_iters, mode=mode)
    if merge_radius is None:
        merge_radius = 1e-5 * math.sqrt(fn.arch.n_params)
    records, diags = [], []
    for k, start in enumerate(starts):
        vec = start.flat() if isinstance(start, WeightPoint) else np.asarray(start, dtype=float)
        res = newton(fn.value, fn.grad, fn.hess, vec, fn.project, cfg)
        diags.append(StartDiagnostic(k, res.converged, res.grad_norm, res.iterations, res.reason))
        if not res.converged:
            continue
        rec = classify(fn, res.x, zeta)
        # independent re-check of stationarity before the record is emitted
        if rec.grad_norm > tol:
            continue
        dup = next((i for i, r in enumerate(records)
                    if np.linalg.norm(r.w.flat() - rec.w.flat()) <= merge_radius), None)
        if dup is None:
            records.append(rec)
        elif rec.grad_norm < records[dup].grad_norm:
            records[dup] = rec
    return records, diags


@dataclass(frozen=True, eq=False)
class Pair:
    empirical: StationaryRecord
    population: StationaryRecord
    distance: float
    index_match: bool
    within_bound: bool | None
    ambiguous: bool

    @property
    def both_nondegenerate(self) -> bool:
        return not (self.empirical.degenerate or self.population.degenerate)

    def to_dict(self) -> dict:
        return {"distance": self.distance, "index_empirical": self.empirical.index,
                "index_population": self.population.index, "index_match": self.index_match,
                "nondegenerate": self.both_nondegenerate, "within_bound": self.within_bound,
                "ambiguous": self.ambiguous,
                "boundary_active": self.empirical.boundary_active or self.population.boundary_active,
                "pass": self.index_match and self.within_bound is not False}


@dataclass(frozen=True, eq=False)
class PairingResult:
    pairs: list[Pair]
    unmatched_empirical: list[StationaryRecord]
    unmatched_population: list[StationaryRecord]
    bound: float | None
    match_radius: float
    ambiguous: int = 0

    @property
    def all_indices_match(self) -> bool:
        return all(p.index_match for p in self.pairs)

    def to_dict(self) -> dict:
        return {"pairs": [p.to_dict() for p in self.pairs],
                "unmatched_empirical": [r.to_dict() for r in self.unmatched_empirical],
                "unmatched_population": [r.to_dict() for r in self.unmatched_population],
                "bound": self.bound, "match_radius": self.match_radius, "ambiguous": self.ambiguous}


def pair_points(empirical, population, zeta: float = DEFAULT_ZETA,
                match_radius: float = DEFAULT_MATCH_RADIUS, bound: float | None = None) -> PairingResult:
    """Greedy nearest-neighbour matching under ``match_radius``.

    Closest pairs are committed first, so each record is used at most once.  A
    record with two or more candidates inside the radius is flagged ambiguous.
    Index equality is only demanded when both sides are non-degenerate.
    """
    if not match_radius > 0:
        raise ValueError(f"match radius must be positive, got {match_radius}")
    E = [r.w.flat() for r in empirical]
    P = [r.w.flat() for r in population]
    dist = np.array([[np.linalg.norm(e - p) for p in P] for e in E]).reshape(len(E), len(P))
    near = dist <= match_radius
    cand = sorted((dist[i, j], i, j) for i, j in zip(*np.nonzero(near)))
    used_e, used_p, pairs, n_amb = set(), set(), [], 0
    for dij, i, j in cand:
        if i in used_e or j in used_p:
            continue
        used_e.add(i)
        used_p.add(j)
        amb = bool(near[i].sum() > 1 or near[:, j].sum() > 1)
        n_amb += amb
        e, p = empirical[i], population[j]
        nondeg = not (e.degenerate or p.degenerate)
        pairs.append(Pair(e, p, float(dij), (e.index == p.index) if nondeg else True,
                          None if bound is None else bool(dij <= bound), amb))
    return PairingResult(pairs,
                         [r for i, r in enumerate(empirical) if i not in used_e],
                         [r for j, r in enumerate(population) if j not in used_p],
                         bound, match_radius, n_amb)


def degenerate_gradient_audit(arch, point: WeightPoint, datasets: dict[int, list[Dataset]]) -> list[dict]:
    """``|grad J_n|`` at a population-stationary point for every dataset on a grid of ``n``."""
    rows = []
    for n, group in sorted(datasets.items()):
        norms = np.array([np.linalg.norm(empirical_gradient(arch, point, ds)) for ds in group])
        rows.append({"n": int(n), "median": float(np.median(norms)), "max": float(norms.max()),
                     "q25": float(np.quantile(norms, 0.25)), "q75": float(np.quantile(norms, 0.75)),
                     "trials": len(group), "norms": norms.tolist()})
    return rows
