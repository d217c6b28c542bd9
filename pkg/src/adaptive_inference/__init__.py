"""Estimation and inference for arm values from adaptively collected bandit data."""
from .confseq import ConfSeqParams, confseq_interval, confseq_process
from .designs import DesignConfig, parse_design
from .environment import ArmOutcomeModel, make_setting
from .estimators import ESTIMATORS, EstimateReport, estimate
from .harness import AggregateStats, SimulationConfig, aggregate, run_replication, run_simulation
from .history import BanditHistory, read_log, write_log

__all__ = [
    "AggregateStats", "ArmOutcomeModel", "BanditHistory", "ConfSeqParams", "DesignConfig",
    "ESTIMATORS", "EstimateReport", "SimulationConfig", "aggregate", "confseq_interval",
    "confseq_process", "estimate", "make_setting", "parse_design", "read_log",
    "run_replication", "run_simulation", "write_log",
]
__version__ = "0.1.0"
