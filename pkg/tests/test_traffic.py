import numpy as np
import pytest

from snmcache.kernels import KernelSpec
from snmcache.traffic import (
    RequestTrace,
    Shot,
    SnmConfig,
    Topology,
    generate_catalog,
    generate_requests,
    local_popularity,
)


def small_config(**kw):
    base = dict(lam=50.0, shot_duration=1.0, mu_bar=20.0, alpha=0.8,
                horizon=2.0, seed=7)
    base.update(kw)
    return SnmConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(alpha=1.0)
    with pytest.raises(ValueError):
        small_config(alpha=-0.1)
    with pytest.raises(ValueError):
        small_config(lam=0.0)
    with pytest.raises(ValueError):
        small_config(horizon=-1.0)


def test_volume_formula_at_unit_z():
    prior = small_config().prior
    assert prior.volume(1.0) == pytest.approx(4.0)


def test_alpha_zero_volumes_degenerate():
    cfg = small_config(alpha=0.0)
    catalog = generate_catalog(cfg)
    assert len(catalog) > 0
    for shot in catalog:
        assert shot.volume == pytest.approx(cfg.mu_bar)


def test_catalog_shape_and_invariants():
    cfg = small_config()
    catalog = generate_catalog(cfg)
    times = np.array([s.arrival_time for s in catalog])
    assert np.all(np.diff(times) > 0)
    assert times[0] >= -cfg.shot_duration and times[-1] < cfg.horizon
    assert [s.id for s in catalog] == list(range(len(catalog)))
    support_min = cfg.mu_bar * (1 - cfg.alpha)
    for s in catalog:
        assert s.volume >= support_min - 1e-12
        assert 0.0 < s.z <= 1.0
        assert 0.0 <= s.feature < 1.0
    # count covers [-T, horizon): lam * (horizon + T) expected = 150
    assert 80 <= len(catalog) <= 240


def test_volume_mean_monte_carlo():
    # E[volume] = mu_bar
    cfg = small_config(lam=10 ** 6 / 3.0, mu_bar=20.0, alpha=0.8,
                       horizon=2.0, seed=23)
    catalog = generate_catalog(cfg)
    vols = np.array([s.volume for s in catalog])
    assert vols.size > 9 * 10 ** 5
    se = vols.std() / np.sqrt(vols.size)
    assert abs(vols.mean() - 20.0) <= 3 * se


def test_volume_tail_is_pareto():
    # P(volume > v) = (v / support_min)^(-1/alpha); KS distance < 0.01 at 1e5
    cfg = small_config(lam=10 ** 5 / 3.0, seed=3)
    catalog = generate_catalog(cfg)
    vols = np.sort(np.array([s.volume for s in catalog]))
    support_min = cfg.mu_bar * (1 - cfg.alpha)
    cdf = 1.0 - (vols / support_min) ** (-1.0 / cfg.alpha)
    n = vols.size
    emp_hi = np.arange(1, n + 1) / n
    emp_lo = np.arange(0, n) / n
    ks = max(np.max(np.abs(emp_hi - cdf)), np.max(np.abs(emp_lo - cdf)))
    assert n > 9 * 10 ** 4
    assert ks < 0.01


def test_requests_single_cache_and_alive_window():
    cfg = small_config()
    catalog = generate_catalog(cfg)
    trace = generate_requests(catalog, cfg, Topology.uniform(1))
    assert np.all(trace.cache_ids == 0)
    assert np.all(np.diff(trace.times) >= 0)
    for t, c in zip(trace.times, trace.content_ids):
        born = catalog[c].arrival_time
        assert born <= t <= born + cfg.shot_duration + 1e-12


def test_request_count_is_poisson_mean():
    # single shot, volume 4, T = 1, many replications via fresh seeds
    reps = 10 ** 5
    counts = np.empty(reps)
    shot = Shot(id=0, arrival_time=0.0, volume=4.0, z=1.0, feature=0.5)
    topo = Topology.uniform(1)
    for r in range(reps):
        cfg = SnmConfig(lam=1.0, shot_duration=1.0, mu_bar=20.0, alpha=0.8,
                        horizon=1.0, seed=r)
        counts[r] = len(generate_requests([shot], cfg, topo))
    assert counts.mean() == pytest.approx(4.0, abs=0.02)


def test_uniform_thinning_counts():
    cfg = small_config(lam=3000.0, seed=5)
    catalog = generate_catalog(cfg)
    trace = generate_requests(catalog, cfg, Topology.uniform(4))
    n = len(trace)
    assert n > 10 ** 5
    counts = np.bincount(trace.cache_ids, minlength=4)
    assert counts.sum() == n
    sigma = np.sqrt(n * 0.25 * 0.75)
    for c in counts:
        assert abs(c - n / 4) <= 3 * sigma


def test_local_popularity_conservation_and_flat():
    kernel = KernelSpec("quartic")
    topo = Topology.correlated_uniform(8, kernel, seed=13)
    shot = Shot(id=0, arrival_time=0.0, volume=12.0, z=0.3, feature=0.2)
    locals_ = [local_popularity(shot, l, topo) for l in range(8)]
    assert sum(locals_) == pytest.approx(12.0, rel=1e-12)
    flat_topo = Topology.correlated_uniform(8, KernelSpec("flat"), seed=13)
    for l in range(8):
        assert local_popularity(shot, l, flat_topo) == pytest.approx(12.0 / 8)
    with pytest.raises(ValueError):
        local_popularity(shot, 0, Topology.uniform(8))


def test_local_popularity_large_l_limit():
    # L * mu^l / mu -> g(d(X, Y_l)) as L grows; relative error < 5% at L = 1e4
    kernel = KernelSpec("quartic")
    topo = Topology.correlated_uniform(10 ** 4, kernel, seed=29)
    shot = Shot(id=0, arrival_time=0.0, volume=5.0, z=0.5, feature=0.37)
    for l in (0, 17, 4242):
        g = float(kernel(shot.feature, topo.cache_features[l]))
        if g < 0.05:
            continue
        approx = 10 ** 4 * local_popularity(shot, l, topo) / shot.volume
        assert approx == pytest.approx(g, rel=0.05)


def test_correlated_routing_frequencies():
    kernel = KernelSpec("quartic")
    topo = Topology.correlated_uniform(4, kernel, seed=1)
    shot = Shot(id=0, arrival_time=0.0, volume=30000.0, z=0.5, feature=0.6)
    cfg = SnmConfig(lam=1.0, shot_duration=1.0, mu_bar=20.0, alpha=0.8,
                    horizon=1.0, seed=99)
    trace = generate_requests([shot], cfg, topo)
    n = len(trace)
    counts = np.bincount(trace.cache_ids, minlength=4)
    for l in range(4):
        p = local_popularity(shot, l, topo) / shot.volume
        se = np.sqrt(n * p * (1 - p))
        assert abs(counts[l] - n * p) <= 4 * se + 1


def test_topology_validation():
    with pytest.raises(ValueError):
        Topology(num_caches=0)
    with pytest.raises(ValueError):
        Topology(num_caches=2, kernel=KernelSpec("quartic"))
    with pytest.raises(ValueError):
        Topology(num_caches=2, cache_features=(0.1,), kernel=KernelSpec("quartic"))
    with pytest.raises(ValueError):
        Topology(num_caches=2, cache_features=(0.1, 0.2))


def test_determinism_and_roundtrip(tmp_path):
    cfg = small_config(seed=21)
    topo = Topology.correlated_uniform(3, KernelSpec("quartic"), seed=21)
    t1 = generate_requests(generate_catalog(cfg), cfg, topo)
    t2 = generate_requests(generate_catalog(cfg), cfg, topo)
    np.testing.assert_array_equal(t1.times, t2.times)
    np.testing.assert_array_equal(t1.content_ids, t2.content_ids)
    np.testing.assert_array_equal(t1.cache_ids, t2.cache_ids)

    p_trace = tmp_path / "trace.csv"
    p_cat = tmp_path / "catalog.json"
    t1.save(str(p_trace), str(p_cat))
    t3 = RequestTrace.load(str(p_trace), str(p_cat))
    np.testing.assert_array_equal(t1.times, t3.times)
    np.testing.assert_array_equal(t1.content_ids, t3.content_ids)
    np.testing.assert_array_equal(t1.cache_ids, t3.cache_ids)
    assert t3.config == cfg
    assert t3.topology.cache_features == topo.cache_features
    assert t3.catalog == t1.catalog
    # byte-identical on re-save
    t3.save(str(tmp_path / "trace2.csv"), str(tmp_path / "catalog2.json"))
    assert (tmp_path / "trace2.csv").read_bytes() == p_trace.read_bytes()
    assert (tmp_path / "catalog2.json").read_bytes() == p_cat.read_bytes()
    assert p_trace.read_text().splitlines()[0] == "time,content_id,cache_id"


def test_different_seeds_differ():
    cfg_a = small_config(seed=1)
    cfg_b = small_config(seed=2)
    ta = generate_requests(generate_catalog(cfg_a), cfg_a, Topology.uniform(2))
    tb = generate_requests(generate_catalog(cfg_b), cfg_b, Topology.uniform(2))
    assert len(ta) != len(tb) or not np.array_equal(ta.times, tb.times)
