"""Discrete-event simulation of the vacation and cyclic polling models."""
from .engine import (
    Replication,
    SimConfig,
    SimulationEstimate,
    aggregate,
    available_backends,
    check_gating,
    default_backend,
    estimates_by_name,
    replication_values,
    retrial_gaps,
    run_replication,
    run_replications,
    simulate,
    time_average_tracker,
    write_estimates,
    write_event_log,
)

__all__ = [
    "Replication", "SimConfig", "SimulationEstimate", "aggregate", "available_backends",
    "check_gating", "default_backend", "estimates_by_name", "replication_values", "retrial_gaps",
    "run_replication", "run_replications", "simulate", "time_average_tracker", "write_estimates",
    "write_event_log",
]
