"""Monte-Carlo simulation of interbank contagion under CDS risk transfer.

The package measures the distribution of bank bankruptcies P(F) in a
scale-free interbank network hit by heavy-tailed market shocks, with and
without credit-default-swap risk transfer, and summarizes the system's
effective loss absorbency as the systemic capital buffer ratio gamma_s.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("cdscascade")
except PackageNotFoundError:
    __version__ = "0.0.0+local"

from .balance import (
    BalanceSheetSet,
    TransferredSystem,
    apply_risk_transfer,
    build_balance_sheets,
    core_tier1_ratio,
    leverage_ratio,
)
from .cascade import CascadeResult, run_cascade
from .cds import ProtectionPattern, assign_protection, select_sellers
from .errors import (
    CalibrationDiverged,
    CdsCascadeError,
    ConfigError,
    DimensionMismatch,
    InfeasibleSheet,
    NoEligibleSeller,
    NonInvertible,
    SampleExhausted,
    Unreachable,
)
from .harness import (
    SystemConfig,
    build_scenario,
    calibrated_amplitude,
    load_config,
    run_cells,
    run_curve,
    run_sample,
    run_sweep,
    validate_config,
)
from .market import (
    Portfolio,
    ShockVector,
    calibrate_amplitude,
    draw_portfolio,
    draw_shocks,
    initial_distress,
    solo_failure_probability,
)
from .metrics import (
    BufferCurve,
    DistributionSummary,
    SeverityCurve,
    isotonic_non_increasing,
    severity_curve,
    summarize,
    systemic_buffer_ratio,
)
from .netgen import (
    Topology,
    WeightedNetwork,
    assign_loan_weights,
    generate_topology,
    measure_concentration,
    measure_denseness,
    tune_concentration,
)

__all__ = [
    "__version__",
    "BalanceSheetSet",
    "BufferCurve",
    "CalibrationDiverged",
    "CascadeResult",
    "CdsCascadeError",
    "ConfigError",
    "DimensionMismatch",
    "DistributionSummary",
    "InfeasibleSheet",
    "NoEligibleSeller",
    "NonInvertible",
    "Portfolio",
    "ProtectionPattern",
    "SampleExhausted",
    "SeverityCurve",
    "ShockVector",
    "SystemConfig",
    "Topology",
    "TransferredSystem",
    "Unreachable",
    "WeightedNetwork",
    "apply_risk_transfer",
    "assign_loan_weights",
    "assign_protection",
    "build_balance_sheets",
    "build_scenario",
    "calibrate_amplitude",
    "calibrated_amplitude",
    "core_tier1_ratio",
    "draw_portfolio",
    "draw_shocks",
    "generate_topology",
    "initial_distress",
    "isotonic_non_increasing",
    "leverage_ratio",
    "load_config",
    "measure_concentration",
    "measure_denseness",
    "run_cascade",
    "run_cells",
    "run_curve",
    "run_sample",
    "run_sweep",
    "select_sellers",
    "severity_curve",
    "solo_failure_probability",
    "summarize",
    "systemic_buffer_ratio",
    "tune_concentration",
    "validate_config",
]
