"""Connectivity-oriented scheduling, beamforming and power control for
multi-antenna multihop networks, with analytic bounds and a Monte Carlo
harness."""

from .harness import (MetricRecord, Network, SimulationConfig, aggregate,
                      run_realization, run_sweep, sinr_threshold)

__all__ = ["MetricRecord", "Network", "SimulationConfig", "aggregate",
           "run_realization", "run_sweep", "sinr_threshold"]
__version__ = "0.1.0"
