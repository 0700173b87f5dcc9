"""Gossip averaging on sensor-network graphs: nearest-neighbor and geographic."""

from .engine import (
    CostLedger,
    GossipState,
    SimConfig,
    Trajectory,
    estimate_averaging_time,
    run,
    run_trials,
    simulate,
)
from .errors import GossipError, NotConvergedError
from .fields import FieldSpec, diffusion_field, linear_field, spike_field
from .routing import Route, greedy_route, hop_bound
from .sampling import (
    InducedDistribution,
    RejectionPolicy,
    induced_distribution,
    policy_always,
    policy_fixed_tau,
    policy_quantile,
)
from .spectral import build_W, lambda2, predicted_rounds
from .topology import (
    Topology,
    VoronoiTessellation,
    build,
    build_cycle,
    build_grid,
    build_rgg,
    default_radius,
    is_connected,
    voronoi_areas,
)

__version__ = "0.1.0"

__all__ = [
    "CostLedger",
    "GossipState",
    "SimConfig",
    "Trajectory",
    "estimate_averaging_time",
    "run",
    "run_trials",
    "simulate",
    "GossipError",
    "NotConvergedError",
    "FieldSpec",
    "diffusion_field",
    "linear_field",
    "spike_field",
    "Route",
    "greedy_route",
    "hop_bound",
    "build_W",
    "lambda2",
    "predicted_rounds",
    "InducedDistribution",
    "RejectionPolicy",
    "induced_distribution",
    "policy_always",
    "policy_fixed_tau",
    "policy_quantile",
    "Topology",
    "VoronoiTessellation",
    "build",
    "build_cycle",
    "build_grid",
    "build_rgg",
    "default_radius",
    "is_connected",
    "voronoi_areas",
]
