"""SDN-coordinated millimeter-wave downlink simulator.

The package models a row of mmWave cells with a single mobile UE. A
central Soft-gNB keeps a serving cluster of gNBs around the UE, and its
success rate is compared with a single-link hard-handover baseline.
"""

from .engine import Metrics, run_scenario
from .scenario import Scenario, load_scenario, parse_scenario

__all__ = ["Metrics", "Scenario", "load_scenario", "parse_scenario", "run_scenario"]
__version__ = "0.1.0"
