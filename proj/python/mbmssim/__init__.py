"""Python interface to the MBMS system-level simulator."""

from ._core import (
    ConfigError,
    InvariantViolation,
    RunResult,
    aggregate_cqi,
    attach_baseline,
    config,
    default_config,
    export_csv,
    path_loss_db,
    power_gain,
    run,
)

MODES = ("ptp", "ptm-fixed", "ptm-adaptive", "ptm-adaptive-mincqi", "ptm-nack-oriented")

__all__ = [
    "MODES",
    "ConfigError",
    "InvariantViolation",
    "RunResult",
    "aggregate_cqi",
    "attach_baseline",
    "config",
    "default_config",
    "export_csv",
    "path_loss_db",
    "power_gain",
    "run",
]
