"""Age-based threshold caching under shot-noise traffic.

Submodules
----------
traffic
    Shot-noise catalog and request-trace generation.
estimator
    Bayesian popularity estimation under a Pareto volume prior.
policy
    Age-based threshold tables, capacity selection, and score levels.
analytics
    Asymptotic hit probabilities, aggregation gains, and cluster curves.
simulator
    Deterministic LRU / gated / prefetching / threshold-oracle simulation.
experiments, cli
    Declarative experiment runner and its command-line interface.
"""

from .analytics import (
    aggregation_gain,
    asymptotic_hit,
    clustered_hit,
    known_popularity_hit,
    local_hit_known_popularity,
    whole_file_baseline,
)
from .estimator import ParetoPrior, PosteriorQuery, posterior_mean
from .experiments import ExperimentConfig, reproduce_figure, run_experiment
from .kernels import KernelSpec
from .policy import (
    ScoreSpec,
    ThresholdTable,
    build_cluster_threshold_table,
    build_threshold_table,
    decide,
    score,
)
from .simulator import SimConfig, SimMetrics, run, sweep
from .traffic import (
    RequestTrace,
    Shot,
    SnmConfig,
    Topology,
    generate_catalog,
    generate_requests,
)

__all__ = [
    "ParetoPrior",
    "PosteriorQuery",
    "posterior_mean",
    "KernelSpec",
    "SnmConfig",
    "Shot",
    "Topology",
    "RequestTrace",
    "generate_catalog",
    "generate_requests",
    "ThresholdTable",
    "ScoreSpec",
    "build_threshold_table",
    "build_cluster_threshold_table",
    "decide",
    "score",
    "known_popularity_hit",
    "asymptotic_hit",
    "aggregation_gain",
    "clustered_hit",
    "local_hit_known_popularity",
    "whole_file_baseline",
    "SimConfig",
    "SimMetrics",
    "run",
    "sweep",
    "ExperimentConfig",
    "run_experiment",
    "reproduce_figure",
]
