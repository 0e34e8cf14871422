"""Bootstrap inference on the distribution of individual treatment effects."""

from ._itedist import (
    Bootstrap,
    Comparison,
    ConfigError,
    EstimabilityError,
    Error,
    IngestError,
    ReplicationError,
    Sample,
    is_estimable,
    main,
    pseudo_ites,
    read_csv,
    simulate,
    truth,
)

__all__ = [
    "Bootstrap",
    "Comparison",
    "ConfigError",
    "EstimabilityError",
    "Error",
    "IngestError",
    "ReplicationError",
    "Sample",
    "is_estimable",
    "main",
    "pseudo_ites",
    "read_csv",
    "simulate",
    "truth",
]
