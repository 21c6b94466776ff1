from .config import (
    AdamasPolicy,
    Gaussian,
    GaussianWithOutliers,
    OraclePolicy,
    PlantedNeedle,
    QuestPolicy,
    SweepConfig,
    WindowPolicySpec,
    WorkloadSpec,
    load_config,
    parse_config,
)
from .report import emit, needle_report, rows_to_csv, rows_to_json
from .sweep import ResultRow, run_sweep, run_sweeps
from .workload import Workload, generate_workload

__all__ = [
    "AdamasPolicy",
    "Gaussian",
    "GaussianWithOutliers",
    "OraclePolicy",
    "PlantedNeedle",
    "QuestPolicy",
    "ResultRow",
    "SweepConfig",
    "WindowPolicySpec",
    "Workload",
    "WorkloadSpec",
    "emit",
    "generate_workload",
    "load_config",
    "needle_report",
    "parse_config",
    "rows_to_csv",
    "rows_to_json",
    "run_sweep",
    "run_sweeps",
]
