"""Scheduling of transmission directions for interfering two-way TDD links.

The package models networks of two-way links whose per-frame transmission
order ("spin") determines which nodes interfere with which, and provides
exact and heuristic optimizers for the spin configuration plus a seeded
Monte-Carlo harness for rate statistics.
"""

from .channel import (
    ASYMMETRIC,
    DEFAULT_INR_EDGE_THRESHOLD,
    SYMMETRIC,
    FadingDraw,
    LinkInstance,
    ScenarioConfig,
    draw_fading,
    generate_instance,
)
from .evaluation import (
    ALGORITHMS,
    AlgorithmStats,
    EvalReport,
    ExperimentConfig,
    percentile,
    run_experiment,
    sweep,
)
from .optimizer import (
    DpMessage,
    OptimizationResult,
    exhaustive_search,
    mst_dp,
    random_spins,
    tree_brute_force,
)
from .sinr import (
    LinkSinr,
    UtilityKind,
    approx_network_utility,
    approx_sinr,
    exact_sinr,
    link_utility,
    network_utility,
    two_way_rate,
    two_way_rates,
)
from .topology import (
    RelativeSpins,
    RootedTree,
    TopologyGraph,
    build_graph,
    complete_relative_spins,
    edge_weight,
    maximum_spanning_tree,
    relative_from_spins,
    spins_from_relative,
)

__all__ = [
    "ALGORITHMS",
    "ASYMMETRIC",
    "DEFAULT_INR_EDGE_THRESHOLD",
    "SYMMETRIC",
    "AlgorithmStats",
    "DpMessage",
    "EvalReport",
    "ExperimentConfig",
    "FadingDraw",
    "LinkInstance",
    "LinkSinr",
    "OptimizationResult",
    "RelativeSpins",
    "RootedTree",
    "ScenarioConfig",
    "TopologyGraph",
    "UtilityKind",
    "approx_network_utility",
    "approx_sinr",
    "build_graph",
    "complete_relative_spins",
    "draw_fading",
    "edge_weight",
    "exact_sinr",
    "exhaustive_search",
    "generate_instance",
    "link_utility",
    "maximum_spanning_tree",
    "mst_dp",
    "network_utility",
    "percentile",
    "random_spins",
    "relative_from_spins",
    "run_experiment",
    "spins_from_relative",
    "sweep",
    "tree_brute_force",
    "two_way_rate",
    "two_way_rates",
]

__version__ = "0.1.0"
