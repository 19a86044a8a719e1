"""Multi-target tracking experiments: filters, GNN tracking and metrics."""

from ._skytrack import (
    ConfigError,
    FormatError,
    InvalidArgument,
    NumericalError,
    assign_2d,
    geodetic_to_local,
    ospa,
    run,
    simulate,
    validate,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "InvalidArgument",
    "NumericalError",
    "assign_2d",
    "geodetic_to_local",
    "ospa",
    "run",
    "simulate",
    "validate",
]
