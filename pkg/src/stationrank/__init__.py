"""Daily Markov-chain analysis of railway traffic.

Pipeline: trip ingestion -> minute discretization into dwell/running
states -> transition counting and strongly connected restriction ->
row-stochastic chain (stationary vector, spectrum, group inverse, mean
first passage times, Kemeny constant) -> node-disruption sensitivity ->
systemic risk measures -> time-series aggregation.
"""

from .errors import StationRankError
from .graph import TransitionGraph, build_transition_graph, strongly_connected_restrict
from .ingest import (
    StationDirectory,
    StopEvent,
    Trip,
    group_by_operation_day,
    load_station_directory,
    parse_actual_data,
)
from .markov import MarkovModel, build_markov, kemeny_constant, stationary_distribution
from .perturb import PerturbedResult, disrupt_node, perturb_all_nodes
from .risk import compute_risk, remoteness, systemic_fragility, systemic_influence
from .trajectory import State, StateSequence, discretize_day, discretize_trip

__version__ = "0.1.0"

__all__ = [
    "StationRankError",
    "TransitionGraph",
    "build_transition_graph",
    "strongly_connected_restrict",
    "StationDirectory",
    "StopEvent",
    "Trip",
    "group_by_operation_day",
    "load_station_directory",
    "parse_actual_data",
    "MarkovModel",
    "build_markov",
    "kemeny_constant",
    "stationary_distribution",
    "PerturbedResult",
    "disrupt_node",
    "perturb_all_nodes",
    "compute_risk",
    "remoteness",
    "systemic_fragility",
    "systemic_influence",
    "State",
    "StateSequence",
    "discretize_day",
    "discretize_trip",
]
