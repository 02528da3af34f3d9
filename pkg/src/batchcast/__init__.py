"""Batched client/server Byzantine reliable broadcast, simulated and measured."""

from .procs import Id, ProcessId, ProcessKind, broker, client, server
from .simnet import (ADVERSARIAL, GOOD_CASE, DelayPolicy, Scenario,
                     Simulation)
from .scenarios import build_simulation, run_scenario, CORPUS

__all__ = [
    "Id", "ProcessId", "ProcessKind", "broker", "client", "server",
    "ADVERSARIAL", "GOOD_CASE", "DelayPolicy", "Scenario", "Simulation",
    "build_simulation", "run_scenario", "CORPUS",
]

__version__ = "0.1.0"
