"""Deterministic simulator of zone-partitioned swarm coordination on a grid."""

from .engine import Metrics, Simulation, run_scenario
from .scenario import ConfigError, ScenarioConfig, load_scenario, random_scenario, scenario_from_dict
from .trace import parse_trace, trace_digest, verify_trace
from .world import Cell, GridMap, Zone, ZonePartition, build_partition

__all__ = [
    "Cell", "ConfigError", "GridMap", "Metrics", "ScenarioConfig", "Simulation",
    "Zone", "ZonePartition", "build_partition", "load_scenario", "parse_trace",
    "random_scenario", "run_scenario", "scenario_from_dict", "trace_digest",
    "verify_trace",
]
