"""Shot Noise Model traffic generation.

Contents are born at the points of a Poisson process of rate lam; content m
born at arrival_time t_m requests service as an independent Poisson process
of rate volume_m on the window [t_m, t_m + T] (rectangular pulse).  Volumes
are Pareto: volume = z**(-alpha) * mu_bar * (1 - alpha) with z uniform on
(0, 1], so the mean volume is mu_bar and the support minimum is
mu_bar * (1 - alpha).

Each request is routed to one of L local caches, either uniformly
(uncorrelated mode) or proportionally to a torus kernel evaluated between
the content feature X_m and the cache features Y_l (correlated mode).

Traces include shots born in [-T, 0) so the alive catalog is stationary at
time 0; measurement windows downstream start at 0 or later.

All randomness is drawn from counter-based Philox streams keyed by
(seed, shot_id, stream tag), so a shot's volume, feature, and request
process are reproducible independently of how many other shots exist.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .estimator import ParetoPrior
from .kernels import KernelSpec

__all__ = [
    "SnmConfig",
    "Shot",
    "Topology",
    "RequestEvent",
    "RequestTrace",
    "generate_catalog",
    "generate_requests",
    "local_popularity",
]

# stream tags for the keyed Philox generators
_S_ARRIVALS = 0
_S_VOLUME = 1
_S_FEATURE = 2
_S_TIMES = 3
_S_ROUTING = 4
_S_CACHE_FEATURES = 5


def _rng(seed: int, stream: int, shot_id: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed=(seed, shot_id, stream)))


@dataclass(frozen=True)
class SnmConfig:
    """Shot Noise Model parameters.

    Parameters
    ----------
    lam : float
        Content birth rate (shots per second).
    shot_duration : float
        Content lifetime T in seconds.
    mu_bar : float
        Mean request volume (requests per second per content).
    alpha : float
        Pareto tail exponent of volumes, in [0, 1).
    horizon : float
        Length of the stationary window [0, horizon) in seconds.
    seed : int
        Base RNG seed; all streams are keyed off it.
    """

    lam: float
    shot_duration: float
    mu_bar: float
    alpha: float
    horizon: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.lam > 0 and self.shot_duration > 0 and self.mu_bar > 0
                and self.horizon > 0):
            raise ValueError("lam, shot_duration, mu_bar, horizon must be positive")
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError("alpha must lie in [0, 1)")

    @property
    def prior(self) -> ParetoPrior:
        return ParetoPrior(mu_bar=self.mu_bar, alpha=self.alpha)

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "shot_duration": self.shot_duration,
            "mu_bar": self.mu_bar,
            "alpha": self.alpha,
            "horizon": self.horizon,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Shot:
    """One content lifetime.

    ``volume`` is the global request rate; ``z`` is the uniform seed that
    generated it; ``feature`` is the torus coordinate used for correlated
    routing (sampled for every shot, consulted only in correlated mode).
    """

    id: int
    arrival_time: float
    volume: float
    z: float
    feature: float

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "arrival_time": self.arrival_time,
            "volume": self.volume,
            "z": self.z,
            "feature": self.feature,
        }


@dataclass(frozen=True)
class Topology:
    """Set of L local caches, optionally with torus features and a kernel."""

    num_caches: int
    cache_features: Optional[tuple[float, ...]] = None
    kernel: Optional[KernelSpec] = None

    def __post_init__(self) -> None:
        if not (isinstance(self.num_caches, int) and self.num_caches >= 1):
            raise ValueError("num_caches must be a positive integer")
        if self.kernel is not None:
            if self.cache_features is None:
                raise ValueError("correlated mode requires cache_features")
            if len(self.cache_features) != self.num_caches:
                raise ValueError("need one cache feature per cache")
            object.__setattr__(self, "cache_features", tuple(float(y) for y in self.cache_features))
        elif self.cache_features is not None:
            raise ValueError("cache_features given without a kernel")

    @property
    def correlated(self) -> bool:
        return self.kernel is not None

    @staticmethod
    def uniform(num_caches: int) -> "Topology":
        return Topology(num_caches=num_caches)

    @staticmethod
    def correlated_uniform(num_caches: int, kernel: KernelSpec, seed: int) -> "Topology":
        """Caches with i.i.d. uniform torus features drawn from the keyed stream."""
        feats = _rng(seed, _S_CACHE_FEATURES).random(num_caches)
        return Topology(num_caches=num_caches, cache_features=tuple(float(y) for y in feats),
                        kernel=kernel)

    def to_dict(self) -> dict:
        return {
            "num_caches": self.num_caches,
            "cache_features": list(self.cache_features) if self.cache_features else None,
            "kernel": {"family": self.kernel.family, "params": list(self.kernel.params)}
            if self.kernel else None,
        }

    @staticmethod
    def from_dict(d: dict) -> "Topology":
        kernel = None
        if d.get("kernel"):
            kernel = KernelSpec(d["kernel"]["family"], tuple(d["kernel"].get("params", ())))
        feats = d.get("cache_features")
        return Topology(num_caches=int(d["num_caches"]),
                        cache_features=tuple(feats) if feats else None,
                        kernel=kernel)


class RequestEvent(NamedTuple):
    time: float
    content_id: int
    cache_id: int


def generate_catalog(config: SnmConfig) -> list[Shot]:
    """Draw the shot catalog: Poisson arrivals on [-T, horizon) plus marks.

    Shot ids are dense integers in arrival order.  Volume, z, and feature
    are drawn from per-shot keyed streams.
    """
    rng = _rng(config.seed, _S_ARRIVALS)
    arrivals: list[np.ndarray] = []
    t = -config.shot_duration
    block = max(64, int(config.lam * (config.horizon + config.shot_duration) * 1.1) + 64)
    while t < config.horizon:
        gaps = rng.exponential(1.0 / config.lam, size=block)
        ts = t + np.cumsum(gaps)
        arrivals.append(ts[ts < config.horizon])
        t = float(ts[-1])
    times = np.concatenate(arrivals) if arrivals else np.empty(0)
    prior = config.prior
    shots = []
    for i, at in enumerate(times):
        z = 1.0 - float(_rng(config.seed, _S_VOLUME, i).random())
        feature = float(_rng(config.seed, _S_FEATURE, i).random())
        shots.append(Shot(id=i, arrival_time=float(at), volume=prior.volume(z),
                          z=z, feature=feature))
    return shots


def _routing_weights(shot: Shot, topology: Topology) -> np.ndarray:
    feats = np.asarray(topology.cache_features, dtype=float)
    w = np.asarray(topology.kernel(shot.feature, feats), dtype=float)
    total = float(w.sum())
    if total <= 0.0:
        # kernel vanished at every cache; route uniformly
        return np.full(topology.num_caches, 1.0 / topology.num_caches)
    return w / total


def local_popularity(shot: Shot, cache: int, topology: Topology) -> float:
    """Finite-L local request rate: volume * K(X, Y_cache) / sum_l K(X, Y_l)."""
    if not topology.correlated:
        raise ValueError("local_popularity requires a kernel and cache features")
    if not (0 <= cache < topology.num_caches):
        raise IndexError("cache index out of range")
    return shot.volume * float(_routing_weights(shot, topology)[cache])


def generate_requests(catalog: Sequence[Shot], config: SnmConfig,
                      topology: Topology) -> "RequestTrace":
    """Draw the request trace for a catalog.

    Each shot produces a Poisson(volume * T) number of requests uniform on
    its lifetime window; each request is routed to a cache uniformly, or
    with probability proportional to the kernel in correlated mode.  Events
    are sorted by (time, content_id, cache_id).
    """
    T = config.shot_duration
    L = topology.num_caches
    chunks_t, chunks_c, chunks_l = [], [], []
    for shot in catalog:
        gen_t = _rng(config.seed, _S_TIMES, shot.id)
        n = int(gen_t.poisson(shot.volume * T))
        if n == 0:
            continue
        times = shot.arrival_time + gen_t.random(n) * T
        gen_r = _rng(config.seed, _S_ROUTING, shot.id)
        if topology.correlated:
            caches = gen_r.choice(L, size=n, p=_routing_weights(shot, topology))
        elif L == 1:
            caches = np.zeros(n, dtype=np.int64)
        else:
            caches = gen_r.integers(0, L, size=n)
        chunks_t.append(times)
        chunks_c.append(np.full(n, shot.id, dtype=np.int64))
        chunks_l.append(caches.astype(np.int64))
    if chunks_t:
        times = np.concatenate(chunks_t)
        cids = np.concatenate(chunks_c)
        lids = np.concatenate(chunks_l)
        order = np.lexsort((lids, cids, times))
        times, cids, lids = times[order], cids[order], lids[order]
    else:
        times = np.empty(0)
        cids = np.empty(0, dtype=np.int64)
        lids = np.empty(0, dtype=np.int64)
    return RequestTrace(times=times, content_ids=cids, cache_ids=lids,
                        catalog=tuple(catalog), config=config, topology=topology)


@dataclass(frozen=True)
class RequestTrace:
    """Time-ordered request events plus the catalog that generated them."""

    times: np.ndarray
    content_ids: np.ndarray
    cache_ids: np.ndarray
    catalog: tuple[Shot, ...]
    config: SnmConfig
    topology: Topology
    _arrival_times: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_arrival_times",
                           np.array([s.arrival_time for s in self.catalog]))

    def __len__(self) -> int:
        return int(self.times.size)

    def events(self) -> Iterator[RequestEvent]:
        for t, c, l in zip(self.times, self.content_ids, self.cache_ids):
            yield RequestEvent(float(t), int(c), int(l))

    def arrival_time_of(self, content_id: int) -> float:
        return float(self._arrival_times[content_id])

    # serialization: CSV event log + JSON shot catalog sidecar

    def save(self, trace_path: str, catalog_path: str) -> None:
        with open(trace_path, "w") as f:
            f.write("time,content_id,cache_id\n")
            for t, c, l in zip(self.times, self.content_ids, self.cache_ids):
                f.write(f"{float(t)!r},{int(c)},{int(l)}\n")
        sidecar = {
            "config": self.config.to_dict(),
            "topology": self.topology.to_dict(),
            "shots": [s.to_dict() for s in self.catalog],
        }
        with open(catalog_path, "w") as f:
            json.dump(sidecar, f, indent=1)
            f.write("\n")

    @staticmethod
    def load(trace_path: str, catalog_path: str) -> "RequestTrace":
        with open(catalog_path) as f:
            sidecar = json.load(f)
        config = SnmConfig(**sidecar["config"])
        topology = Topology.from_dict(sidecar["topology"])
        catalog = tuple(Shot(**d) for d in sidecar["shots"])
        times, cids, lids = [], [], []
        with open(trace_path) as f:
            header = f.readline().strip()
            if header != "time,content_id,cache_id":
                raise ValueError(f"unexpected trace header: {header!r}")
            for line in f:
                t, c, l = line.rstrip("\n").split(",")
                times.append(float(t))
                cids.append(int(c))
                lids.append(int(l))
        return RequestTrace(times=np.array(times, dtype=float),
                            content_ids=np.array(cids, dtype=np.int64),
                            cache_ids=np.array(lids, dtype=np.int64),
                            catalog=catalog, config=config, topology=topology)
