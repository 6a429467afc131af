"""
FL Simulation Module

In-process federated averaging over client datasets:
- fedavg.py: communication rounds, early stopping, per-round update trace,
  coalition model reconstruction from that trace
- trace_io.py: versioned joblib persistence of traces
"""

from fedsim.fedavg import (
    ClientUpdate,
    CoalitionError,
    FLRunConfig,
    FLTrace,
    RunError,
    aggregate,
    client_round_seed,
    coalition_members,
    reconstruct_coalition_model,
    run_fedavg,
)
from fedsim.trace_io import load_trace, save_trace

__version__ = "1.0.0"

__all__ = [
    "ClientUpdate",
    "CoalitionError",
    "FLRunConfig",
    "FLTrace",
    "RunError",
    "aggregate",
    "client_round_seed",
    "coalition_members",
    "load_trace",
    "reconstruct_coalition_model",
    "run_fedavg",
    "save_trace",
]
