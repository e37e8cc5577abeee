"""Age-based threshold caching policy.

A threshold table maps a content's age tau in [0, T] to the minimal request
count k such that the posterior mean popularity given (k, tau) reaches the
storage quantile theta(gamma).  A content passes the table iff its count is
at least the threshold at its age; when more contents pass than the cache
holds, the ones with the smallest posterior means are evicted (deterministic
tie-break: larger content id goes first).

The same construction at other budget levels beta yields binary popularity
scores: score(content, beta) = 1 iff the content passes the beta-table.
Cluster tables replace the scalar prior volume by volume * K_omega(X) with X
uniform on the torus and K_omega the smoothed kernel, so the threshold
reflects what a cluster of caches jointly observes.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .estimator import ParetoPrior, _ThresholdSolver
from .kernels import KernelSpec, smoothed_kernel
from .numerics import gauss_legendre_01

__all__ = [
    "ThresholdTable",
    "CachingDecision",
    "ScoreSpec",
    "ScoreTables",
    "ClusterSpec",
    "build_threshold_table",
    "build_cluster_threshold_table",
    "decide",
    "score",
    "select_top",
]


@dataclass(frozen=True)
class ClusterSpec:
    """Cluster of caches covering a torus window of width omega."""

    omega: float
    kernel: KernelSpec

    def __post_init__(self) -> None:
        if not (0.0 < self.omega <= 1.0):
            raise ValueError("omega must lie in (0, 1]")

    def factor_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Smoothed-kernel values and weights at torus quadrature nodes.

        The torus integral over the content position X is split at the
        kinks of K_omega (window edges and their antipodes) so each panel
        is smooth.  A flat profile collapses to a single node.
        """
        cuts = sorted({0.0, self.omega, 0.5, min(0.5 + self.omega, 1.0), 1.0})
        gx, gw = gauss_legendre_01(32)
        nodes, weights = [], []
        for a, b in zip(cuts, cuts[1:]):
            if b - a <= 0.0:
                continue
            nodes.append(a + (b - a) * gx)
            weights.append((b - a) * gw)
        x = np.concatenate(nodes)
        w = np.concatenate(weights)
        k = np.asarray(smoothed_kernel(self.kernel, self.omega, x), dtype=float)
        if k.max() - k.min() < 1e-12:
            return np.array([float(k.mean())]), np.array([1.0])
        return k, w

    def to_dict(self) -> dict:
        return {"omega": self.omega,
                "kernel": {"family": self.kernel.family,
                           "params": list(self.kernel.params)}}

    @staticmethod
    def from_dict(d: dict) -> "ClusterSpec":
        return ClusterSpec(omega=float(d["omega"]),
                           kernel=KernelSpec(d["kernel"]["family"],
                                             tuple(d["kernel"].get("params", ()))))


def _make_solver(prior: ParetoPrior, T: float,
                 cluster: Optional[ClusterSpec]) -> _ThresholdSolver:
    if cluster is None:
        return _ThresholdSolver(prior=prior, shot_duration=T)
    factors, weights = cluster.factor_nodes()
    return _ThresholdSolver(prior=prior, shot_duration=T, factors=factors,
                            factor_weights=weights)


@dataclass(frozen=True)
class ThresholdTable:
    """Step function N~(tau) = k on [tau_k, tau_{k+1}) over [0, T].

    ``breakpoints`` is a sorted tuple of (tau, k) pairs with consecutive
    integer levels; the first entry is (0.0, k0) and the last level holds
    up to T.
    """

    gamma: float
    theta: float
    shot_duration: float
    prior: ParetoPrior
    breakpoints: tuple[tuple[float, int], ...]
    cluster: Optional[ClusterSpec] = None
    _taus: np.ndarray = field(init=False, repr=False, compare=False)
    _levels: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie in (0, 1)")
        if not self.breakpoints or self.breakpoints[0][0] != 0.0:
            raise ValueError("breakpoints must start at tau = 0")
        taus = np.array([b[0] for b in self.breakpoints], dtype=float)
        levels = np.array([b[1] for b in self.breakpoints], dtype=np.int64)
        if np.any(np.diff(taus) < 0) or np.any(np.diff(levels) <= 0):
            raise ValueError("breakpoints must be sorted with increasing levels")
        if taus[-1] > self.shot_duration:
            raise ValueError("breakpoints must lie within [0, T]")
        object.__setattr__(self, "_taus", taus)
        object.__setattr__(self, "_levels", levels)

    # ---- lookup ----------------------------------------------------------

    def threshold(self, age: float) -> int:
        """Minimal passing request count at the given age."""
        return int(self.thresholds(np.asarray([age]))[0])

    def thresholds(self, ages: np.ndarray) -> np.ndarray:
        ages = np.asarray(ages, dtype=float)
        if np.any(ages < 0.0) or np.any(ages > self.shot_duration * (1 + 1e-12)):
            raise ValueError("ages must lie in [0, T]")
        idx = np.searchsorted(self._taus, ages, side="right") - 1
        return self._levels[idx]

    def passes(self, count: int, age: float) -> bool:
        return count >= self.threshold(age)

    # ---- posterior-mean estimates ---------------------------------------

    def _solver(self) -> _ThresholdSolver:
        solver = getattr(self, "_solver_cache", None)
        if solver is None:
            solver = _make_solver(self.prior, self.shot_duration, self.cluster)
            object.__setattr__(self, "_solver_cache", solver)
        return solver

    def estimate(self, count: int, age: float) -> float:
        """Posterior mean popularity; +inf when the zero-age moment diverges."""
        return float(self.estimates(np.asarray([count]), np.asarray([age]))[0])

    def estimates(self, counts: np.ndarray, ages: np.ndarray) -> np.ndarray:
        counts = np.asarray(counts, dtype=float)
        ages = np.asarray(ages, dtype=float)
        solver = self._solver()
        out = np.empty(counts.shape)
        zero = ages <= 0.0
        if np.any(zero):
            out[zero] = [solver.posterior_mean_zero(int(c)) for c in counts[zero]]
        if np.any(~zero):
            out[~zero] = solver.posterior_mean_batch(counts[~zero], ages[~zero])
        return out

    def storage_fraction(self) -> float:
        """P(count >= threshold at a uniform age): the budget this table spends."""
        return self._solver().storage_fraction(self.theta)

    # ---- serialization ---------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "gamma": self.gamma,
            "theta": self.theta,
            "T": self.shot_duration,
            "prior": {"mu_bar": self.prior.mu_bar, "alpha": self.prior.alpha},
            "breakpoints": [[t, int(k)] for t, k in self.breakpoints],
        }
        if self.cluster is not None:
            doc["cluster"] = self.cluster.to_dict()
        return json.dumps(doc, indent=1) + "\n"

    @staticmethod
    def from_json(text: str) -> "ThresholdTable":
        doc = json.loads(text)
        cluster = ClusterSpec.from_dict(doc["cluster"]) if "cluster" in doc else None
        return ThresholdTable(
            gamma=float(doc["gamma"]),
            theta=float(doc["theta"]),
            shot_duration=float(doc["T"]),
            prior=ParetoPrior(mu_bar=float(doc["prior"]["mu_bar"]),
                              alpha=float(doc["prior"]["alpha"])),
            breakpoints=tuple((float(t), int(k)) for t, k in doc["breakpoints"]),
            cluster=cluster,
        )


def _build(gamma: float, prior: ParetoPrior, T: float,
           cluster: Optional[ClusterSpec]) -> ThresholdTable:
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    if not (T > 0.0):
        raise ValueError("T must be positive")
    solver = _make_solver(prior, T, cluster)
    theta = solver.quantile(gamma)
    n0, ages, n_end = solver.crossing_ages(theta)
    ages = np.minimum(np.maximum.accumulate(ages), T)
    breakpoints = [(0.0, n0)]
    breakpoints += [(float(a), n0 + 1 + i) for i, a in enumerate(ages)]
    table = ThresholdTable(gamma=gamma, theta=theta, shot_duration=T,
                           prior=prior, breakpoints=tuple(breakpoints),
                           cluster=cluster)
    object.__setattr__(table, "_solver_cache", solver)
    return table


def build_threshold_table(gamma: float, prior: ParetoPrior, T: float) -> ThresholdTable:
    """Table with theta = theta_quantile(gamma): stores a fraction gamma.

    The threshold at age tau is the minimal count whose posterior mean
    reaches theta; breakpoints are located by monotone bisection in age.
    """
    return _build(gamma, prior, T, cluster=None)


def build_cluster_threshold_table(gamma: float, omega: float, kernel: KernelSpec,
                                  prior: ParetoPrior, T: float) -> ThresholdTable:
    """Threshold table for a cluster of caches covering [0, omega].

    The cluster sees content volumes volume(Z) * K_omega(X) with X uniform;
    posterior means and the storage constraint integrate over both Z and X.
    """
    return _build(gamma, prior, T, cluster=ClusterSpec(omega=omega, kernel=kernel))


@dataclass(frozen=True)
class CachingDecision:
    content_id: int
    cached: bool
    estimate: float


def select_top(ids: np.ndarray, estimates: np.ndarray, capacity: int) -> np.ndarray:
    """Boolean keep-mask of the top-``capacity`` estimates.

    Ties keep the smaller content id (the larger id is evicted first).
    This is the single capacity-enforcement rule: decide() and the
    simulators all route overflow through it.
    """
    n = ids.size
    if n <= capacity:
        return np.ones(n, dtype=bool)
    order = np.lexsort((ids, -estimates))
    keep = np.zeros(n, dtype=bool)
    keep[order[:capacity]] = True
    return keep


def decide(contents: Sequence[tuple[int, int, float, ThresholdTable]],
           capacity: int) -> list[CachingDecision]:
    """Apply the age-based threshold test and enforce capacity.

    ``contents`` holds (content_id, count, age, table) tuples; a content is
    cached iff count >= table threshold at its age, and if more than
    ``capacity`` pass, only the top-capacity posterior means are kept.
    """
    if capacity < 0:
        raise ValueError("capacity must be nonnegative")
    if not contents:
        return []
    ids = np.array([c[0] for c in contents], dtype=np.int64)
    counts = np.array([c[1] for c in contents], dtype=np.int64)
    ages = np.array([c[2] for c in contents], dtype=float)
    estimates = np.empty(len(contents))
    passing = np.empty(len(contents), dtype=bool)
    # group by table so estimates vectorize
    by_table: dict[int, list[int]] = {}
    tables: dict[int, ThresholdTable] = {}
    for i, c in enumerate(contents):
        key = id(c[3])
        tables[key] = c[3]
        by_table.setdefault(key, []).append(i)
    for key, idxs in by_table.items():
        table = tables[key]
        sel = np.array(idxs)
        passing[sel] = counts[sel] >= table.thresholds(ages[sel])
        estimates[sel] = table.estimates(counts[sel], ages[sel])
    cached = passing.copy()
    n_pass = int(passing.sum())
    if n_pass > capacity:
        keep = select_top(ids[passing], estimates[passing], capacity)
        cached[np.flatnonzero(passing)[~keep]] = False
    return [CachingDecision(content_id=int(i), cached=bool(y), estimate=float(e))
            for i, y, e in zip(ids, cached, estimates)]


@dataclass(frozen=True)
class ScoreSpec:
    """Score levels for gated LRU and prefetching: 1 >= beta1 > gamma_c > beta2 >= 0."""

    beta1: float
    beta2: float
    gamma_c: float

    def __post_init__(self) -> None:
        if not (1.0 >= self.beta1 > self.gamma_c > self.beta2 >= 0.0):
            raise ValueError("require 1 >= beta1 > gamma_c > beta2 >= 0")


class ScoreTables:
    """Lazy, thread-safe cache of threshold tables keyed by budget level."""

    def __init__(self, prior: ParetoPrior, shot_duration: float):
        self.prior = prior
        self.shot_duration = shot_duration
        self._tables: dict[float, ThresholdTable] = {}
        self._lock = threading.Lock()

    def table(self, beta: float) -> ThresholdTable:
        key = float(beta)
        table = self._tables.get(key)
        if table is None:
            with self._lock:
                table = self._tables.get(key)
                if table is None:
                    table = build_threshold_table(key, self.prior, self.shot_duration)
                    self._tables[key] = table
        return table


def score(content: tuple[int, float], beta: float, table_cache: ScoreTables) -> int:
    """Binary popularity score: 1 iff the content passes the beta-level table."""
    count, age = content
    return int(table_cache.table(beta).passes(count, age))
