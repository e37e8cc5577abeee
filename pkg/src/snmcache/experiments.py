"""Declarative experiment runner: JSON configs in, CSV/JSON artifacts out.

An experiment is one JSON file with a ``mode`` plus the model parameters and
grids that mode needs.  Configs are schema-validated before execution and
unknown keys are rejected, so the files double as exact records of what ran.
Every run writes its artifacts atomically and finishes with a manifest
(config hash, seed, tool version, wall time, per-file content hashes);
re-running an identical config reproduces identical hashes.

Modes
-----
trace
    Draw a request trace and its shot catalog.
thresholds
    Build one threshold table, optionally for a cluster of caches.
curve-hit, curve-gain
    Asymptotic hit probability / aggregation gain over a mu_bar * T grid.
curve-cluster
    Clustered hit probability over a lifetime grid, one curve per omega.
curve-local-known
    Known-popularity local hit rate for kernel-correlated demand.
simulate
    Replicated cache simulations for a list of policies.

The ``reproduce`` entry point bundles the canonical parameter sets of the
standard experiment figures (fig3 through fig6) at desk or paper scale.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import metadata
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from jsonschema import Draft202012Validator

from .analytics import (
    GainCurve,
    HitCurve,
    _atomic_write,
    aggregation_gain,
    asymptotic_hit,
    clustered_hit,
    local_hit_known_popularity,
    save_curves,
)
from .estimator import ParetoPrior
from .kernels import KernelSpec
from .policy import (
    ScoreSpec,
    ThresholdTable,
    build_cluster_threshold_table,
    build_threshold_table,
)
from .simulator import POLICY_KINDS, SimConfig, save_metrics, sweep
from .traffic import SnmConfig, Topology, generate_catalog, generate_requests

__all__ = [
    "MODES",
    "FIGURES",
    "SCALES",
    "TOOL_NAME",
    "tool_version",
    "ConfigError",
    "ExperimentConfig",
    "validate_config",
    "run_experiment",
    "reproduce_figure",
]

MODES = ("trace", "thresholds", "curve-hit", "curve-gain", "curve-cluster",
         "curve-local-known", "simulate")
FIGURES = ("fig3", "fig4", "fig5", "fig6")
SCALES = ("desk", "paper")
TOOL_NAME = "snmcache"


def tool_version() -> str:
    try:
        return metadata.version(TOOL_NAME)
    except metadata.PackageNotFoundError:
        return "0+unknown"


# ---- config schema ----------------------------------------------------------

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_OPEN_UNIT = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_HALF_OPEN_UNIT = {"type": "number", "exclusiveMinimum": 0, "maximum": 1}

_KERNEL = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "family": {"type": "string"},
        "params": {"type": "array", "items": {"type": "number"}},
    },
    "required": ["family"],
}

_TOPOLOGY = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "num_caches": {"type": "integer", "minimum": 1},
        "correlated": {"type": "boolean"},
        "kernel": _KERNEL,
    },
    "required": ["num_caches"],
}

_POLICY = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(POLICY_KINDS)},
        "capacity_fraction": _OPEN_UNIT,
        "beta1": _HALF_OPEN_UNIT,
        "beta2": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "xi": {"type": "number", "minimum": 1},
        "prefetch_period": _POSITIVE,
    },
    "required": ["kind", "capacity_fraction"],
}

_SIM = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "replications": {"type": "integer", "minimum": 1},
        "t_start": {"type": "number", "minimum": 0},
        "t_end": _POSITIVE,
    },
    "required": ["replications"],
}


def _grid(items: Mapping[str, dict], required: Sequence[str]) -> dict:
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            name: {"type": "array", "items": schema, "minItems": 1}
            for name, schema in items.items()
        },
        "required": list(required),
    }


def _model(required: Sequence[str]) -> dict:
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "mu_bar": _POSITIVE,
            "alpha": _OPEN_UNIT,
            "gamma_c": _OPEN_UNIT,
            "shot_duration": _POSITIVE,
            "lam": _POSITIVE,
            "horizon": _POSITIVE,
        },
        "required": list(required),
    }


def _mode_schema(model: dict, **sections: dict) -> dict:
    properties = {
        "mode": {"enum": list(MODES)},
        "seed": {"type": "integer", "minimum": 0},
        "out_dir": {"type": "string", "minLength": 1},
        "model": model,
    }
    properties.update(sections)
    required = ["mode", "model"] + [
        name for name in sections if name in ("grid", "policies", "sim")]
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": properties,
        "required": required,
    }


_MODE_SCHEMAS = {
    "trace": _mode_schema(
        _model(["mu_bar", "alpha", "lam", "shot_duration", "horizon"]),
        topology=_TOPOLOGY),
    "thresholds": _mode_schema(
        _model(["mu_bar", "alpha", "gamma_c", "shot_duration"]),
        cluster={
            "type": "object",
            "additionalProperties": False,
            "properties": {"omega": _HALF_OPEN_UNIT, "kernel": _KERNEL},
            "required": ["omega"],
        }),
    "curve-hit": _mode_schema(
        _model(["mu_bar", "alpha", "gamma_c"]),
        grid=_grid({"mu_bar_T": _POSITIVE}, ["mu_bar_T"])),
    "curve-gain": _mode_schema(
        _model(["mu_bar", "alpha", "gamma_c"]),
        grid=_grid({"mu_bar_T": _POSITIVE}, ["mu_bar_T"]),
        topology=_TOPOLOGY),
    "curve-cluster": _mode_schema(
        _model(["mu_bar", "alpha", "gamma_c"]),
        grid=_grid({"shot_duration": _POSITIVE, "omegas": _HALF_OPEN_UNIT},
                   ["shot_duration", "omegas"]),
        kernel=_KERNEL),
    "curve-local-known": _mode_schema(
        _model(["mu_bar", "alpha"]),
        grid=_grid({"gamma_c": _OPEN_UNIT}, ["gamma_c"]),
        kernel=_KERNEL),
    "simulate": _mode_schema(
        _model(["mu_bar", "alpha", "lam", "shot_duration", "horizon"]),
        topology=_TOPOLOGY,
        policies={"type": "array", "items": _POLICY, "minItems": 1},
        sim=_SIM),
}

_SCORED_KINDS = ("gated_lru", "lru_prefetch")


def validate_config(raw: object) -> list[str]:
    """Schema plus numeric-feasibility checks; returns every violation."""
    if not isinstance(raw, dict):
        return ["config must be a JSON object"]
    mode = raw.get("mode")
    if mode not in MODES:
        return [f"mode: must be one of {', '.join(MODES)}"]
    validator = Draft202012Validator(_MODE_SCHEMAS[mode])
    violations = []
    for err in sorted(validator.iter_errors(raw),
                      key=lambda e: list(map(str, e.absolute_path))):
        where = "/".join(str(p) for p in err.absolute_path) or "config"
        violations.append(f"{where}: {err.message}")
    if violations:
        return violations
    return _feasibility(mode, raw)


def _check_kernel(section: Optional[Mapping], where: str,
                  violations: list[str]) -> None:
    if not section:
        return
    try:
        KernelSpec(section["family"], tuple(section.get("params", ())))
    except (ValueError, TypeError) as err:
        violations.append(f"{where}: {err}")


def _feasibility(mode: str, raw: Mapping) -> list[str]:
    violations: list[str] = []
    topology = raw.get("topology")
    if topology:
        _check_kernel(topology.get("kernel"), "topology/kernel", violations)
        if topology.get("correlated") and not topology.get("kernel"):
            violations.append("topology: correlated routing requires a kernel")
    _check_kernel(raw.get("kernel"), "kernel", violations)
    cluster = raw.get("cluster")
    if cluster:
        _check_kernel(cluster.get("kernel"), "cluster/kernel", violations)
    if mode == "simulate":
        model = raw["model"]
        sim = raw.get("sim", {})
        horizon = model["horizon"]
        t_start = sim.get("t_start", 0.0)
        t_end = sim.get("t_end", horizon)
        if not (t_start < t_end <= horizon):
            violations.append("sim: need t_start < t_end <= model/horizon")
        for i, policy in enumerate(raw["policies"]):
            where = f"policies/{i}"
            scored = policy["kind"] in _SCORED_KINDS
            has_scores = "beta1" in policy or "beta2" in policy
            if scored:
                if not ("beta1" in policy and "beta2" in policy):
                    violations.append(
                        f"{where}: {policy['kind']} requires beta1 and beta2")
                else:
                    chain = (1.0 >= policy["beta1"]
                             > policy["capacity_fraction"]
                             > policy["beta2"] >= 0.0)
                    if not chain:
                        violations.append(
                            f"{where}: require 1 >= beta1 > capacity_fraction"
                            " > beta2 >= 0")
            elif has_scores:
                violations.append(
                    f"{where}: beta levels only apply to "
                    f"{' and '.join(_SCORED_KINDS)}")
    return violations


class ConfigError(ValueError):
    """Invalid experiment config; ``violations`` lists every problem."""

    def __init__(self, violations: Sequence[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class ExperimentConfig:
    """One validated experiment: mode, seed, output directory and parameters."""

    mode: str
    seed: int
    out_dir: str
    spec: Mapping

    @staticmethod
    def from_dict(raw: Mapping, out_dir: Optional[str] = None,
                  seed: Optional[int] = None) -> "ExperimentConfig":
        spec = json.loads(json.dumps(raw))  # deep copy, JSON types only
        if out_dir is not None:
            spec["out_dir"] = out_dir
        if seed is not None:
            spec["seed"] = seed
        violations = validate_config(spec)
        if violations:
            raise ConfigError(violations)
        return ExperimentConfig(mode=spec["mode"], seed=spec.get("seed", 0),
                                out_dir=spec.get("out_dir", "out"), spec=spec)

    @staticmethod
    def load(path: str, out_dir: Optional[str] = None,
             seed: Optional[int] = None) -> "ExperimentConfig":
        with open(path) as f:
            try:
                raw = json.load(f)
            except json.JSONDecodeError as err:
                raise ConfigError([f"{path}: not valid JSON ({err})"])
        return ExperimentConfig.from_dict(raw, out_dir=out_dir, seed=seed)

    @property
    def prior(self) -> ParetoPrior:
        model = self.spec["model"]
        return ParetoPrior(mu_bar=model["mu_bar"], alpha=model["alpha"])

    def sha256(self) -> str:
        return _dict_sha256(self.spec)


def _dict_sha256(doc: Mapping) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _map(jobs: int, fn: Callable, items: Sequence) -> list:
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# ---- mode executors ----------------------------------------------------------
# Each returns {artifact name: path}; files are already written atomically.


def _kernel_from(section: Optional[Mapping], default: str = "quartic") -> KernelSpec:
    if not section:
        return KernelSpec(default)
    return KernelSpec(section["family"], tuple(section.get("params", ())))


def _topology_from(config: ExperimentConfig) -> Topology:
    section = config.spec.get("topology")
    if not section:
        return Topology.uniform(1)
    if section.get("correlated"):
        return Topology.correlated_uniform(
            section["num_caches"], _kernel_from(section["kernel"]), config.seed)
    return Topology.uniform(section["num_caches"])


def _snm_from(config: ExperimentConfig) -> SnmConfig:
    model = config.spec["model"]
    return SnmConfig(lam=model["lam"], shot_duration=model["shot_duration"],
                     mu_bar=model["mu_bar"], alpha=model["alpha"],
                     horizon=model["horizon"], seed=config.seed)


def _run_trace(config: ExperimentConfig, jobs: int, prefix: str) -> dict:
    snm = _snm_from(config)
    topology = _topology_from(config)
    trace = generate_requests(generate_catalog(snm), snm, topology)
    trace_path = os.path.join(config.out_dir, f"{prefix}trace.csv")
    catalog_path = os.path.join(config.out_dir, f"{prefix}catalog.json")
    tmp_trace, tmp_catalog = trace_path + ".tmp", catalog_path + ".tmp"
    try:
        trace.save(tmp_trace, tmp_catalog)
        os.replace(tmp_trace, trace_path)
        os.replace(tmp_catalog, catalog_path)
    finally:
        for tmp in (tmp_trace, tmp_catalog):
            if os.path.exists(tmp):
                os.unlink(tmp)
    return {f"{prefix}trace.csv": trace_path,
            f"{prefix}catalog.json": catalog_path}


def _threshold_csv(tables: Sequence[tuple[str, ThresholdTable]]) -> str:
    lines = ["label,tau,threshold"]
    for label, table in tables:
        for tau, level in table.breakpoints:
            lines.append(f"{label},{float(tau)!r},{int(level)}")
    return "\n".join(lines) + "\n"


def _run_thresholds(config: ExperimentConfig, jobs: int, prefix: str) -> dict:
    model = config.spec["model"]
    cluster = config.spec.get("cluster")
    if cluster:
        table = build_cluster_threshold_table(
            model["gamma_c"], cluster["omega"],
            _kernel_from(cluster.get("kernel")), config.prior,
            model["shot_duration"])
    else:
        table = build_threshold_table(model["gamma_c"], config.prior,
                                      model["shot_duration"])
    json_path = os.path.join(config.out_dir, f"{prefix}thresholds.json")
    csv_path = os.path.join(config.out_dir, f"{prefix}thresholds.csv")
    _atomic_write(json_path, table.to_json())
    _atomic_write(csv_path, _threshold_csv([(f"gamma={table.gamma:g}", table)]))
    return {f"{prefix}thresholds.json": json_path,
            f"{prefix}thresholds.csv": csv_path}


def _write_curves(config: ExperimentConfig, prefix: str, curves) -> dict:
    csv_path = os.path.join(config.out_dir, f"{prefix}curves.csv")
    meta_path = os.path.join(config.out_dir, f"{prefix}curves.json")
    save_curves(curves, csv_path, meta_path)
    return {f"{prefix}curves.csv": csv_path, f"{prefix}curves.json": meta_path}


def _run_curve_hit(config: ExperimentConfig, jobs: int, prefix: str) -> dict:
    model = config.spec["model"]
    prior, gamma_c = config.prior, model["gamma_c"]
    xs = tuple(config.spec["grid"]["mu_bar_T"])
    values = _map(jobs, lambda x: asymptotic_hit(prior, x / prior.mu_bar, gamma_c), xs)
    curve = HitCurve(parameter_grid=xs, values=tuple(values), mode="hit",
                     gamma_c=gamma_c, prior=prior, abscissa="mu_bar_T")
    return _write_curves(config, prefix, [curve])


def _run_curve_gain(config: ExperimentConfig, jobs: int, prefix: str) -> dict:
    model = config.spec["model"]
    prior, gamma_c = config.prior, model["gamma_c"]
    topology = config.spec.get("topology", {"num_caches": 1})
    num_caches = topology["num_caches"]
    xs = tuple(config.spec["grid"]["mu_bar_T"])
    values = _map(jobs, lambda x: aggregation_gain(
        prior, x / prior.mu_bar, num_caches, gamma_c), xs)
    curve = GainCurve(parameter_grid=xs, values=tuple(values),
                      gamma_c=gamma_c, prior=prior, num_caches=num_caches,
                      abscissa="mu_bar_T")
    return _write_curves(config, prefix, [curve])


def _run_curve_cluster(config: ExperimentConfig, jobs: int, prefix: str) -> dict:
    model = config.spec["model"]
    prior, gamma_c = config.prior, model["gamma_c"]
    kernel = _kernel_from(config.spec.get("kernel"))
    grid = config.spec["grid"]
    ts = tuple(grid["shot_duration"])
    omegas = tuple(grid["omegas"])
    points = [(omega, T) for omega in omegas for T in ts]
    values = _map(jobs, lambda p: clustered_hit(prior, kernel, p[0], p[1], gamma_c),
                  points)
    curves = []
    for i, omega in enumerate(omegas):
        vals = tuple(values[i * len(ts):(i + 1) * len(ts)])
        curves.append(HitCurve(parameter_grid=ts, values=vals,
                               mode=f"cluster:omega={omega:g}",
                               gamma_c=gamma_c, prior=prior, abscissa="T"))
    return _write_curves(config, prefix, curves)


def _run_curve_local_known(config: ExperimentConfig, jobs: int, prefix: str) -> dict:
    prior = config.prior
    kernel = _kernel_from(config.spec.get("kernel"))
    gammas = tuple(config.spec["grid"]["gamma_c"])
    values = _map(jobs, lambda g: local_hit_known_popularity(prior, kernel, g),
                  gammas)
    curves = [HitCurve(parameter_grid=(g,), values=(v,), mode="local-known",
                       gamma_c=g, prior=prior, abscissa="gamma_c")
              for g, v in zip(gammas, values)]
    return _write_curves(config, prefix, curves)


def _sim_configs(config: ExperimentConfig) -> list[SimConfig]:
    snm = _snm_from(config)
    topology = _topology_from(config)
    sim = config.spec.get("sim", {})
    configs = []
    for policy in config.spec["policies"]:
        scores = None
        if policy["kind"] in _SCORED_KINDS:
            scores = ScoreSpec(beta1=policy["beta1"], beta2=policy["beta2"],
                               gamma_c=policy["capacity_fraction"])
        configs.append(SimConfig(
            snm=snm, topology=topology, policy_kind=policy["kind"],
            capacity_fraction=policy["capacity_fraction"], scores=scores,
            xi=policy.get("xi", 1.0),
            prefetch_period=policy.get("prefetch_period"),
            t_start=sim.get("t_start", 0.0), t_end=sim.get("t_end")))
    return configs


def _run_simulate(config: ExperimentConfig, jobs: int, prefix: str) -> dict:
    replications = config.spec["sim"]["replications"]
    results = sweep(_sim_configs(config), replications=replications, jobs=jobs)
    entries = []
    for result in results:
        for seed, metrics in zip(result.seeds, result.runs):
            cfg = replace(result.config, snm=replace(result.config.snm, seed=seed))
            entries.append((cfg, metrics))
    csv_path = os.path.join(config.out_dir, f"{prefix}metrics.csv")
    summary_path = os.path.join(config.out_dir, f"{prefix}summary.json")
    save_metrics(entries, csv_path)
    summary = {"results": [r.to_dict() for r in results]}
    _atomic_write(summary_path, json.dumps(summary, indent=1) + "\n")
    return {f"{prefix}metrics.csv": csv_path,
            f"{prefix}summary.json": summary_path}


_DISPATCH = {
    "trace": _run_trace,
    "thresholds": _run_thresholds,
    "curve-hit": _run_curve_hit,
    "curve-gain": _run_curve_gain,
    "curve-cluster": _run_curve_cluster,
    "curve-local-known": _run_curve_local_known,
    "simulate": _run_simulate,
}


def _write_manifest(out_dir: str, mode: str, seed: int, config_sha: str,
                    wall: float, outputs: Mapping[str, str]) -> str:
    manifest = {
        "tool": {"name": TOOL_NAME, "version": tool_version()},
        "mode": mode,
        "seed": seed,
        "config_sha256": config_sha,
        "wall_time_seconds": round(wall, 3),
        "outputs": {name: _file_sha256(path)
                    for name, path in sorted(outputs.items())},
    }
    path = os.path.join(out_dir, "manifest.json")
    _atomic_write(path, json.dumps(manifest, indent=1) + "\n")
    return path


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> list[str]:
    """Execute one experiment; returns the written paths (manifest last)."""
    os.makedirs(config.out_dir, exist_ok=True)
    start = time.perf_counter()
    outputs = _DISPATCH[config.mode](config, jobs, "")
    manifest = _write_manifest(config.out_dir, config.mode, config.seed,
                               config.sha256(), time.perf_counter() - start,
                               outputs)
    return list(outputs.values()) + [manifest]


# ---- figure bundles ------------------------------------------------------------

_FIG4_DESK_GRID = tuple(float(x) for x in np.logspace(-3.0, 0.0, 10))
_FIG4_PAPER_GRID = tuple(float(x) for x in np.logspace(-3.0, 3.0, 13))
_FIG5_OMEGAS = (1.0, 0.5, 0.1, 0.01, 0.001)
_FIG6_T_GRID = (0.25, 1.0, 4.0, 16.0)
_FIG6_BETA2_GRID = (0.01, 0.02, 0.05, 0.08)


def _figure_parts(figure_id: str, scale: str, seed: int) -> list[tuple[str, dict]]:
    paper = scale == "paper"
    if figure_id == "fig3":
        return [("fig3_", {
            "mode": "thresholds", "seed": seed,
            "model": {"mu_bar": 20.0, "alpha": 0.8, "gamma_c": 0.1,
                      "shot_duration": 1.0},
        })]
    if figure_id == "fig4":
        grid = list(_FIG4_PAPER_GRID if paper else _FIG4_DESK_GRID)
        model = {"mu_bar": 20.0, "alpha": 0.8, "gamma_c": 0.1}
        return [
            ("fig4_hit_", {"mode": "curve-hit", "seed": seed, "model": model,
                           "grid": {"mu_bar_T": grid}}),
            ("fig4_gain_", {"mode": "curve-gain", "seed": seed, "model": model,
                            "grid": {"mu_bar_T": grid},
                            "topology": {"num_caches": 1000 if paper else 100}}),
        ]
    if figure_id == "fig5":
        ts = ([0.01, 0.1, 1.0, 10.0, 100.0, 1000.0] if paper
              else [0.01, 1.0, 1000.0])
        return [("fig5_", {
            "mode": "curve-cluster", "seed": seed,
            "model": {"mu_bar": 1.0, "alpha": 0.8, "gamma_c": 0.1},
            "grid": {"shot_duration": ts, "omegas": list(_FIG5_OMEGAS)},
            "kernel": {"family": "quartic"},
        })]
    if figure_id == "fig6":
        return [(f"fig6_T{T:g}_", _fig6_simulate(T, scale, seed))
                for T in _FIG6_T_GRID]
    raise ValueError(f"unknown figure id {figure_id!r}")


def _fig6_simulate(T: float, scale: str, seed: int,
                   beta2: float = 0.05) -> dict:
    paper = scale == "paper"
    lam_T = 1e4 if paper else 1e3
    scale_l = 1000 if paper else 100
    policies = [
        {"kind": "lru", "capacity_fraction": 0.1, "xi": float(scale_l)},
        {"kind": "gated_lru", "capacity_fraction": 0.1, "beta1": 0.5,
         "beta2": beta2, "xi": float(scale_l)},
        {"kind": "lru_prefetch", "capacity_fraction": 0.1, "beta1": 0.5,
         "beta2": beta2, "xi": float(scale_l)},
    ]
    return {
        "mode": "simulate", "seed": seed,
        "model": {"mu_bar": 10.0, "alpha": 0.8, "lam": lam_T / T,
                  "shot_duration": T, "horizon": 3.0 * T},
        "topology": {"num_caches": scale_l},
        "policies": policies,
        "sim": {"replications": 10 if paper else 5, "t_start": T,
                "t_end": 3.0 * T},
    }


def _reproduce_fig6(scale: str, out_dir: str, seed: int, jobs: int,
                    outputs: dict, parts: list) -> None:
    prior = ParetoPrior(mu_bar=10.0, alpha=0.8)
    tables = [(f"beta={beta:g}",
               build_threshold_table(beta, prior, 1.0))
              for beta in (0.5, 0.1, 0.05)]
    thresholds_path = os.path.join(out_dir, "fig6_thresholds.csv")
    _atomic_write(thresholds_path, _threshold_csv(tables))
    outputs["fig6_thresholds.csv"] = thresholds_path

    hit_lines = ["policy,T,hit_mean,hit_halfwidth"]
    tx_lines = ["policy,T,tx_mean,tx_halfwidth,overhead_mean"]
    for T in _FIG6_T_GRID:
        raw = _fig6_simulate(T, scale, seed)
        config = ExperimentConfig.from_dict(raw, out_dir=out_dir)
        parts.append(raw)
        results = sweep(_sim_configs(config),
                        replications=raw["sim"]["replications"], jobs=jobs)
        for result in results:
            kind = result.config.policy_kind
            xi = result.config.xi
            hit_lines.append(f"{kind},{T!r},{result.hit_mean!r},"
                             f"{result.hit_halfwidth!r}")
            tx_lines.append(f"{kind},{T!r},{result.tx_mean!r},"
                            f"{result.tx_halfwidth!r},{result.tx_mean / xi!r}")
    hit_path = os.path.join(out_dir, "fig6_hit.csv")
    tx_path = os.path.join(out_dir, "fig6_tx.csv")
    _atomic_write(hit_path, "\n".join(hit_lines) + "\n")
    _atomic_write(tx_path, "\n".join(tx_lines) + "\n")
    outputs["fig6_hit.csv"] = hit_path
    outputs["fig6_tx.csv"] = tx_path

    beta2_lines = ["beta2,tx_mean,tx_halfwidth,overhead_mean"]
    T = _FIG6_T_GRID[0]  # the most dynamic lifetime
    for beta2 in _FIG6_BETA2_GRID:
        raw = _fig6_simulate(T, scale, seed, beta2=beta2)
        raw["policies"] = [p for p in raw["policies"]
                           if p["kind"] == "lru_prefetch"]
        config = ExperimentConfig.from_dict(raw, out_dir=out_dir)
        parts.append(raw)
        result = sweep(_sim_configs(config),
                       replications=raw["sim"]["replications"], jobs=jobs)[0]
        xi = result.config.xi
        beta2_lines.append(f"{beta2!r},{result.tx_mean!r},"
                           f"{result.tx_halfwidth!r},{result.tx_mean / xi!r}")
    beta2_path = os.path.join(out_dir, "fig6_beta2.csv")
    _atomic_write(beta2_path, "\n".join(beta2_lines) + "\n")
    outputs["fig6_beta2.csv"] = beta2_path


def reproduce_figure(figure_id: str, scale: str = "desk",
                     out_dir: Optional[str] = None, seed: int = 0,
                     jobs: int = 1) -> list[str]:
    """Run the canonical experiment bundle for one figure.

    Desk scale shrinks the catalog size (lam * T) and cache count while
    preserving every dimensionless parameter; fig3 is purely analytic, so
    both scales coincide.
    """
    if figure_id not in FIGURES:
        raise ValueError(f"unknown figure id {figure_id!r}")
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    out_dir = out_dir or os.path.join("out", f"{figure_id}_{scale}")
    os.makedirs(out_dir, exist_ok=True)
    start = time.perf_counter()
    outputs: dict[str, str] = {}
    parts: list[dict] = []
    if figure_id == "fig6":
        _reproduce_fig6(scale, out_dir, seed, jobs, outputs, parts)
    else:
        for prefix, raw in _figure_parts(figure_id, scale, seed):
            config = ExperimentConfig.from_dict(raw, out_dir=out_dir)
            parts.append(raw)
            outputs.update(_DISPATCH[config.mode](config, jobs, prefix))
    bundle = {"figure": figure_id, "scale": scale, "parts": parts}
    manifest = _write_manifest(out_dir, f"reproduce:{figure_id}:{scale}",
                               seed, _dict_sha256(bundle),
                               time.perf_counter() - start, outputs)
    return list(outputs.values()) + [manifest]
