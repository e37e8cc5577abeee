"""Discrete-event simulation of local caches fed by shot-noise traffic.

L local caches run LRU or one of its score-aware variants while a global
coordinator aggregates request counts per content.  Scores are evaluated
lazily at event time from the current aggregate (count, age) pair, so the
controller always acts on fresh information.  A run is strictly
single-threaded and uses no randomness of its own: every random draw lives
in the trace, so equal (config, trace) pairs give bitwise-equal metrics.

Policies
--------
lru
    Every request inserts at the head; the tail is evicted on overflow;
    each miss costs one backhaul transmission.
gated_lru
    A miss is admitted to the cache only if the content's beta1-level
    score is 1; low-score misses are served from the origin without
    caching and still cost one transmission.  Hits behave as in lru.
lru_prefetch
    gated_lru plus a prefetch cycle every ``prefetch_period``: the
    coordinator pushes every alive content whose beta2-level score is 1
    to every cache.  A cache missing the content fetches it (one backhaul
    transmission, not a real request); a cache holding it just refreshes
    its recency.  Fake requests never count as hits or misses.
oracle_abt
    No cache state: a request is a hit iff the content passes the
    capacity_fraction threshold table on global counts and survives the
    capacity cut.  The cut keeps the top-capacity posterior means with
    the same ordering as the decision helper in the policy module (ages
    bucketed on a fixed grid per lifetime to keep ranking O(1) per
    content); used to cross-validate the analytic hit probability.

Dead contents (age > T) leave the coordinator's alive window but are never
force-evicted from caches; recency ages them out naturally.
"""

from __future__ import annotations

import math
import threading
from bisect import bisect_right
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from heapq import heappop, heappush
from typing import Optional, Sequence

import numpy as np

from .analytics import _atomic_write
from .estimator import ParetoPrior
from .policy import ScoreSpec, ScoreTables, ThresholdTable, build_threshold_table
from .traffic import RequestTrace, SnmConfig, generate_catalog, generate_requests

__all__ = [
    "CacheState",
    "SimConfig",
    "SimMetrics",
    "Coordinator",
    "SweepResult",
    "run",
    "sweep",
    "METRICS_HEADER",
    "save_metrics",
]

POLICY_KINDS = ("lru", "gated_lru", "lru_prefetch", "oracle_abt")


class CacheState:
    """LRU recency list with O(1) lookup; the head is the most recent."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self._items: OrderedDict[int, None] = OrderedDict()

    def __contains__(self, content_id: int) -> bool:
        return content_id in self._items

    def __len__(self) -> int:
        return len(self._items)

    def touch(self, content_id: int) -> None:
        """Move a resident content to the head."""
        self._items.move_to_end(content_id)

    def insert(self, content_id: int) -> Optional[int]:
        """Insert (or refresh) at the head; returns the evicted id, if any."""
        if content_id in self._items:
            self._items.move_to_end(content_id)
            return None
        self._items[content_id] = None
        if len(self._items) > self.capacity:
            return self._items.popitem(last=False)[0]
        return None

    def order(self) -> tuple[int, ...]:
        """Content ids from head (most recent) to tail."""
        return tuple(reversed(self._items))


@dataclass(frozen=True)
class SimConfig:
    """One simulation run: traffic model, topology, policy and accounting.

    Parameters
    ----------
    snm : SnmConfig
        Traffic parameters; its seed drives the trace.
    topology : Topology
        The L local caches and optional routing kernel.
    policy_kind : str
        One of "lru", "gated_lru", "lru_prefetch", "oracle_abt".
    capacity_fraction : float
        Per-cache capacity as a fraction of the mean alive catalog:
        C = max(1, round(capacity_fraction * lam * T)).
    scores : ScoreSpec, optional
        beta1/beta2 levels; required by the gated and prefetch policies.
    xi : float
        Chunking factor; divides transmissions_per_request into
        bandwidth_overhead.
    prefetch_period : float, optional
        Prefetch cycle length; defaults to the shot duration.
    t_start, t_end : float
        Measurement window; metrics accumulate only inside it.  t_end
        defaults to the trace horizon.  Events and cycles before t_start
        still update all state (warm-up).
    """

    snm: SnmConfig
    topology: Topology
    policy_kind: str
    capacity_fraction: float
    scores: Optional[ScoreSpec] = None
    xi: float = 1.0
    prefetch_period: Optional[float] = None
    t_start: float = 0.0
    t_end: Optional[float] = None

    def __post_init__(self) -> None:
        if self.policy_kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy_kind {self.policy_kind!r}")
        if not (0.0 < self.capacity_fraction < 1.0):
            raise ValueError("capacity_fraction must lie in (0, 1)")
        if not self.xi >= 1.0:
            raise ValueError("xi must be at least 1")
        if self.prefetch_period is not None and not (self.prefetch_period > 0.0):
            raise ValueError("prefetch_period must be positive")
        if self.t_start < 0.0:
            raise ValueError("t_start must be >= 0 (after the warm-up window)")
        end = self.snm.horizon if self.t_end is None else self.t_end
        if not (self.t_start < end <= self.snm.horizon):
            raise ValueError("need t_start < t_end <= horizon")
        if self.policy_kind in ("gated_lru", "lru_prefetch") and self.scores is None:
            raise ValueError(f"{self.policy_kind} requires scores")

    @property
    def capacity(self) -> int:
        return max(1, round(self.capacity_fraction * self.snm.lam
                            * self.snm.shot_duration))

    @property
    def seed(self) -> int:
        return self.snm.seed

    def window(self) -> tuple[float, float]:
        end = self.snm.horizon if self.t_end is None else self.t_end
        return self.t_start, end

    def to_dict(self) -> dict:
        return {
            "snm": self.snm.to_dict(),
            "topology": self.topology.to_dict(),
            "policy_kind": self.policy_kind,
            "capacity_fraction": self.capacity_fraction,
            "scores": None if self.scores is None else {
                "beta1": self.scores.beta1,
                "beta2": self.scores.beta2,
                "gamma_c": self.scores.gamma_c,
            },
            "xi": self.xi,
            "prefetch_period": self.prefetch_period,
            "t_start": self.t_start,
            "t_end": self.t_end,
        }


@dataclass(frozen=True)
class SimMetrics:
    """Counters from one run plus the derived rates."""

    real_requests: int
    hits: int
    misses: int
    backhaul_transmissions: int
    prefetch_fetches: int
    xi: float = 1.0

    def __post_init__(self) -> None:
        if min(self.real_requests, self.hits, self.misses,
               self.backhaul_transmissions, self.prefetch_fetches) < 0:
            raise ValueError("counters must be nonnegative")
        if self.hits + self.misses != self.real_requests:
            raise ValueError("hits + misses must equal real_requests")
        if self.backhaul_transmissions < self.misses:
            raise ValueError("backhaul_transmissions cannot be below misses")

    @property
    def hit_probability(self) -> float:
        return self.hits / self.real_requests if self.real_requests else 0.0

    @property
    def transmissions_per_request(self) -> float:
        if not self.real_requests:
            return 0.0
        return self.backhaul_transmissions / self.real_requests

    @property
    def bandwidth_overhead(self) -> float:
        return self.transmissions_per_request / self.xi

    def to_dict(self) -> dict:
        return {
            "real_requests": self.real_requests,
            "hits": self.hits,
            "misses": self.misses,
            "backhaul_transmissions": self.backhaul_transmissions,
            "prefetch_fetches": self.prefetch_fetches,
            "xi": self.xi,
            "hit_probability": self.hit_probability,
            "transmissions_per_request": self.transmissions_per_request,
            "bandwidth_overhead": self.bandwidth_overhead,
        }


class Coordinator:
    """Aggregate request counts and exact ages for the alive catalog.

    Shot ids are dense in arrival order, so the alive set at any time is a
    contiguous id window maintained by two pointers; advancing through a
    trace costs amortized O(1) per event.
    """

    def __init__(self, trace: RequestTrace) -> None:
        self.arrival_times = np.array([s.arrival_time for s in trace.catalog])
        self._arrivals = self.arrival_times.tolist()
        self.shot_duration = trace.config.shot_duration
        self.counts = np.zeros(len(trace.catalog), dtype=np.int64)
        self._lo = 0
        self._hi = 0

    def advance(self, now: float) -> None:
        """Slide the alive window to time ``now`` (monotone nondecreasing)."""
        arrivals = self._arrivals
        n = len(arrivals)
        hi = self._hi
        while hi < n and arrivals[hi] <= now:
            hi += 1
        self._hi = hi
        lo = self._lo
        dead_before = now - self.shot_duration
        while lo < hi and arrivals[lo] <= dead_before:
            lo += 1
        self._lo = lo

    def record(self, content_id: int) -> None:
        self.counts[content_id] += 1

    def alive_bounds(self) -> tuple[int, int]:
        """Current alive window as a half-open id range."""
        return self._lo, self._hi

    def alive_ids(self) -> np.ndarray:
        return np.arange(self._lo, self._hi)

    def count(self, content_id: int) -> int:
        return int(self.counts[content_id])

    def age(self, content_id: int, now: float) -> float:
        return now - self._arrivals[content_id]

    def counts_and_ages(self, now: float) -> tuple[np.ndarray, np.ndarray]:
        """(counts, ages) arrays over the alive window at time ``now``."""
        lo, hi = self._lo, self._hi
        return self.counts[lo:hi], now - self.arrival_times[lo:hi]


class _StepLookup:
    """Threshold-table step function on plain lists for per-event lookups."""

    def __init__(self, table: ThresholdTable) -> None:
        self._taus = [b[0] for b in table.breakpoints]
        self._levels = [b[1] for b in table.breakpoints]

    def level(self, age: float) -> int:
        return self._levels[bisect_right(self._taus, age) - 1]

    def passes(self, count: int, age: float) -> bool:
        return count >= self.level(age)


# Posterior-mean rows for the oracle ranker, shared across runs with equal
# (prior, T, gamma).  Rows live in a dense (count, age-bucket) array filled
# lazily one count at a time (np.empty commits pages only when written), so
# batch lookups are a single fancy-index gather instead of per-count work.
_ABT_LOCK = threading.Lock()
_ABT_TABLES: dict[tuple, ThresholdTable] = {}
_ABT_ROWS: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}

_ABT_GRID = 2048
_ABT_COUNT_CAP = 4096


class _AbtRanker:
    """Threshold steps and posterior-mean lookups for the oracle policy.

    Estimates come from per-count rows tabulated at age-bucket midpoints;
    counts above _ABT_COUNT_CAP use the large-count closed form
    (count - 1/alpha) / age, far above any plausible capacity boundary.
    The capacity ordering built on these (estimate descending, content id
    ascending) matches the policy module's rule.
    """

    def __init__(self, prior: ParetoPrior, shot_duration: float, gamma: float) -> None:
        key = (prior.mu_bar, prior.alpha, shot_duration, gamma)
        with _ABT_LOCK:
            table = _ABT_TABLES.get(key)
            if table is None:
                table = build_threshold_table(gamma, prior, shot_duration)
                _ABT_TABLES[key] = table
                _ABT_ROWS[key] = (np.empty((_ABT_COUNT_CAP + 1, _ABT_GRID)),
                                  np.zeros(_ABT_COUNT_CAP + 1, dtype=bool))
            self._rows, self._have = _ABT_ROWS[key]
        self.table = table
        self._taus = table._taus
        self._levels = table._levels
        self._tau_list = self._taus.tolist()
        self._level_list = self._levels.tolist()
        self._delta = shot_duration / _ABT_GRID
        self._mids = (np.arange(_ABT_GRID) + 0.5) * self._delta
        self._inv_alpha = 1.0 / prior.alpha

    def _fill_rows(self, counts: np.ndarray) -> None:
        with _ABT_LOCK:
            for count in counts:
                # the row is written before its flag: readers that see the
                # flag set always see a complete row
                if not self._have[count]:
                    self._rows[count] = self.table.estimates(
                        np.full(_ABT_GRID, count, dtype=np.int64), self._mids)
                    self._have[count] = True

    def _row(self, count: int) -> np.ndarray:
        if not self._have[count]:
            self._fill_rows(np.array([count]))
        return self._rows[count]

    def _estimate_one(self, count: int, age: float) -> float:
        if count > _ABT_COUNT_CAP:
            return (count - self._inv_alpha) / age
        bucket = min(int(age / self._delta), _ABT_GRID - 1)
        return float(self._row(count)[bucket])


class _OracleSession:
    """Per-run incremental pass-set tracker for oracle decisions.

    The required count only rises with age and a content's count only rises
    on its own requests, so the passing set changes at exactly three kinds
    of moments: a shot is born, a request bumps a content's count, or a
    content's age crosses the first breakpoint its count cannot meet.
    Births and deaths follow the coordinator's alive window; age crossings
    sit in a lazy min-heap whose entries are re-validated against the
    current count when popped.  Decisions then rank the requested content
    against the ~gamma*lambda*T passing contents instead of scanning the
    whole alive window.
    """

    def __init__(self, ranker: _AbtRanker, coord: Coordinator) -> None:
        self._ranker = ranker
        self._coord = coord
        self._taus = ranker._tau_list
        self._levels = ranker._level_list
        self._num_levels = len(self._levels)
        self._arrivals = coord._arrivals
        self._arrival_times = coord.arrival_times
        self._counts = coord.counts
        self._shot_duration = coord.shot_duration
        self._passing: set[int] = set()
        self._heap: list[tuple[float, int]] = []
        self._born = 0
        self._dead = 0
        self._ids = np.empty(0, dtype=np.int64)
        self._dirty = False

    def _fail_time(self, content_id: int, count: int) -> float:
        # earliest age at which the required count exceeds ``count``
        j = bisect_right(self._levels, count)
        step = self._taus[j] if j < self._num_levels else self._shot_duration
        return self._arrivals[content_id] + step

    def sync(self, now: float) -> None:
        """Fold births, deaths, and age crossings up to time ``now``."""
        coord = self._coord
        passing = self._passing
        if self._born < coord._hi:
            arrivals = self._arrivals
            taus = self._taus
            levels = self._levels
            counts = self._counts
            for cid in range(self._born, coord._hi):
                count = counts[cid]
                age = now - arrivals[cid]
                if count >= levels[bisect_right(taus, age) - 1]:
                    passing.add(cid)
                    heappush(self._heap, (self._fail_time(cid, count), cid))
                    self._dirty = True
            self._born = coord._hi
        if self._dead < coord._lo:
            for cid in range(self._dead, coord._lo):
                if cid in passing:
                    passing.discard(cid)
                    self._dirty = True
            self._dead = coord._lo
        heap = self._heap
        while heap and heap[0][0] <= now:
            _, cid = heappop(heap)
            if cid not in passing:
                continue
            when = self._fail_time(cid, self._counts[cid])
            if when <= now:
                passing.discard(cid)
                self._dirty = True
            else:
                heappush(heap, (when, cid))

    def on_record(self, content_id: int, now: float) -> None:
        """Re-test the pass bit after ``content_id``'s count was bumped."""
        if content_id in self._passing:
            return
        count = self._counts[content_id]
        age = now - self._arrivals[content_id]
        if count >= self._levels[bisect_right(self._taus, age) - 1]:
            self._passing.add(content_id)
            heappush(self._heap, (self._fail_time(content_id, count), content_id))
            self._dirty = True

    def hit(self, content_id: int, now: float, capacity: int) -> bool:
        my_count = int(self._counts[content_id])
        my_age = now - self._arrivals[content_id]
        if my_count < self._levels[bisect_right(self._taus, my_age) - 1]:
            return False
        passing = self._passing
        if len(passing) <= capacity:
            return True
        if self._dirty:
            self._ids = np.fromiter(passing, dtype=np.int64, count=len(passing))
            self._dirty = False
        ranker = self._ranker
        ids = self._ids
        sel_counts = self._counts[ids]
        sel_ages = now - self._arrival_times[ids]
        buckets = np.minimum((sel_ages / ranker._delta).astype(np.int64),
                             _ABT_GRID - 1)
        est = np.empty(ids.size)
        big_ix = np.flatnonzero(sel_counts > _ABT_COUNT_CAP)
        if big_ix.size:
            est[big_ix] = (sel_counts[big_ix] - ranker._inv_alpha) / sel_ages[big_ix]
        small_ix = np.flatnonzero(sel_counts <= _ABT_COUNT_CAP)
        if small_ix.size:
            small_counts = sel_counts[small_ix]
            fresh = ~ranker._have[small_counts]
            if fresh.any():
                ranker._fill_rows(np.unique(small_counts[fresh]))
            est[small_ix] = ranker._rows[small_counts, buckets[small_ix]]
        mine = ranker._estimate_one(my_count, my_age)
        rank = int(np.count_nonzero(est > mine))
        rank += int(np.count_nonzero((est == mine) & (ids < content_id)))
        return rank < capacity


def _require_matching(config: SimConfig, trace: RequestTrace) -> None:
    if trace.config != config.snm:
        raise ValueError("trace was generated under a different SnmConfig")
    if trace.topology != config.topology:
        raise ValueError("trace was generated under a different Topology")
    _, end = config.window()
    if end > trace.config.horizon:
        raise ValueError("trace horizon does not cover the measurement window")


def run(config: SimConfig, trace: RequestTrace) -> SimMetrics:
    """Simulate one policy over one trace; deterministic.

    Events before t_start warm the caches and the coordinator without
    touching the metrics; events after t_end are ignored.
    """
    _require_matching(config, trace)
    if config.policy_kind == "oracle_abt":
        return _run_oracle(config, trace)
    return _run_lru_family(config, trace)


def _run_oracle(config: SimConfig, trace: RequestTrace) -> SimMetrics:
    t_start, t_end = config.window()
    coord = Coordinator(trace)
    ranker = _AbtRanker(config.snm.prior, config.snm.shot_duration,
                        config.capacity_fraction)
    session = _OracleSession(ranker, coord)
    capacity = config.capacity
    hits = misses = 0
    times = trace.times.tolist()
    cids = trace.content_ids.tolist()
    for i in range(len(times)):
        t = times[i]
        if t > t_end:
            break
        coord.advance(t)
        session.sync(t)
        c = cids[i]
        if t >= t_start:
            if session.hit(c, t, capacity):
                hits += 1
            else:
                misses += 1
        coord.record(c)
        session.on_record(c, t)
    return SimMetrics(real_requests=hits + misses, hits=hits, misses=misses,
                      backhaul_transmissions=misses, prefetch_fetches=0,
                      xi=config.xi)


def _run_lru_family(config: SimConfig, trace: RequestTrace) -> SimMetrics:
    t_start, t_end = config.window()
    snm = config.snm
    coord = Coordinator(trace)
    capacity = config.capacity
    caches = [CacheState(capacity) for _ in range(config.topology.num_caches)]

    gated = config.policy_kind in ("gated_lru", "lru_prefetch")
    prefetching = config.policy_kind == "lru_prefetch"
    gate = push_table = None
    if gated:
        tables = ScoreTables(snm.prior, snm.shot_duration)
        gate = _StepLookup(tables.table(config.scores.beta1))
        if prefetching:
            push_table = tables.table(config.scores.beta2)
    period = config.prefetch_period or snm.shot_duration

    hits = misses = backhaul = prefetch_fetches = 0
    next_cycle = 0.0
    times = trace.times.tolist()
    cids = trace.content_ids.tolist()
    lids = trace.cache_ids.tolist()

    def cycle(now: float) -> None:
        nonlocal backhaul, prefetch_fetches
        coord.advance(now)
        lo, _ = coord.alive_bounds()
        measured = t_start <= now <= t_end
        counts, ages = coord.counts_and_ages(now)
        idx = np.searchsorted(push_table._taus, ages, side="right") - 1
        passing = counts >= push_table._levels[idx]
        for k in np.flatnonzero(passing).tolist():  # ascending content id
            cid = lo + k
            for cache in caches:
                if cid in cache:
                    cache.touch(cid)
                else:
                    cache.insert(cid)
                    if measured:
                        prefetch_fetches += 1
                        backhaul += 1

    for i in range(len(times)):
        t = times[i]
        if t > t_end:
            break
        if prefetching:
            while next_cycle <= t:
                cycle(next_cycle)
                next_cycle += period
        coord.advance(t)
        c = cids[i]
        measured = t >= t_start
        cache = caches[lids[i]]
        if c in cache:
            cache.touch(c)
            if measured:
                hits += 1
        else:
            if measured:
                misses += 1
                backhaul += 1
            if not gated or gate.passes(coord.count(c), coord.age(c, t)):
                cache.insert(c)
                assert len(cache) <= capacity
        coord.record(c)

    if prefetching:
        while next_cycle <= t_end:
            cycle(next_cycle)
            next_cycle += period

    return SimMetrics(real_requests=hits + misses, hits=hits, misses=misses,
                      backhaul_transmissions=backhaul,
                      prefetch_fetches=prefetch_fetches, xi=config.xi)


@dataclass(frozen=True)
class SweepResult:
    """Replication summary for one configuration."""

    config: SimConfig
    seeds: tuple[int, ...]
    runs: tuple[SimMetrics, ...]
    hit_mean: float = field(init=False)
    hit_halfwidth: float = field(init=False)
    tx_mean: float = field(init=False)
    tx_halfwidth: float = field(init=False)

    def __post_init__(self) -> None:
        hp = np.array([m.hit_probability for m in self.runs])
        tx = np.array([m.transmissions_per_request for m in self.runs])
        object.__setattr__(self, "hit_mean", float(hp.mean()))
        object.__setattr__(self, "tx_mean", float(tx.mean()))
        object.__setattr__(self, "hit_halfwidth", _halfwidth(hp))
        object.__setattr__(self, "tx_halfwidth", _halfwidth(tx))

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "seeds": list(self.seeds),
            "replications": len(self.runs),
            "hit_probability": {"mean": self.hit_mean,
                                "halfwidth": _json_float(self.hit_halfwidth)},
            "transmissions_per_request": {"mean": self.tx_mean,
                                          "halfwidth": _json_float(self.tx_halfwidth)},
            "runs": [m.to_dict() for m in self.runs],
        }


def _halfwidth(values: np.ndarray) -> float:
    if values.size < 2:
        return math.nan
    return float(1.96 * values.std(ddof=1) / math.sqrt(values.size))


def _json_float(value: float) -> Optional[float]:
    return None if math.isnan(value) else value


def _one_rep(config: SimConfig, seed: int) -> SimMetrics:
    snm = replace(config.snm, seed=seed)
    cfg = replace(config, snm=snm)
    trace = generate_requests(generate_catalog(snm), snm, cfg.topology)
    return run(cfg, trace)


def sweep(configs: Sequence[SimConfig], replications: int,
          seeds: Optional[Sequence[int]] = None,
          jobs: int = 1) -> list[SweepResult]:
    """Run every config over ``replications`` independent seeds.

    Seeds default to config.seed + rep index.  Means come with 95% normal
    half-widths; a single replication reports them as NaN.
    """
    if replications < 1:
        raise ValueError("replications must be at least 1")
    if seeds is not None and len(seeds) != replications:
        raise ValueError("need one seed per replication")
    results = []
    for config in configs:
        rep_seeds = tuple(seeds) if seeds is not None else tuple(
            config.snm.seed + r for r in range(replications))
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                runs = tuple(pool.map(lambda s: _one_rep(config, s), rep_seeds))
        else:
            runs = tuple(_one_rep(config, s) for s in rep_seeds)
        results.append(SweepResult(config=config, seeds=rep_seeds, runs=runs))
    return results


METRICS_HEADER = ("policy,T,lambda,L,gamma_C,beta1,beta2,xi,seed,"
                  "hit_prob,tx_per_req,bandwidth_overhead")


def metrics_row(config: SimConfig, metrics: SimMetrics) -> str:
    """One CSV row per run; floats use round-trip repr."""
    beta1 = repr(float(config.scores.beta1)) if config.scores else ""
    beta2 = repr(float(config.scores.beta2)) if config.scores else ""
    return ",".join([
        config.policy_kind,
        repr(float(config.snm.shot_duration)),
        repr(float(config.snm.lam)),
        str(config.topology.num_caches),
        repr(float(config.capacity_fraction)),
        beta1,
        beta2,
        repr(float(config.xi)),
        str(config.snm.seed),
        repr(metrics.hit_probability),
        repr(metrics.transmissions_per_request),
        repr(metrics.bandwidth_overhead),
    ])


def save_metrics(entries: Sequence[tuple[SimConfig, SimMetrics]],
                 csv_path: str) -> None:
    """Write per-run metrics rows under METRICS_HEADER (atomic)."""
    lines = [METRICS_HEADER]
    lines += [metrics_row(config, metrics) for config, metrics in entries]
    _atomic_write(csv_path, "\n".join(lines) + "\n")
