"""Energy-efficiency analysis and optimization of PPP cellular networks."""

from .errors import (
    BracketFailure,
    ConfigError,
    DegenerateNetwork,
    DomainError,
    EmptyRealization,
    InsufficientSamples,
    MaxIterations,
    NonConvergent,
)
from .netmodel import LoadModel, PowerProfile, SystemParams

__all__ = [
    "BracketFailure",
    "ConfigError",
    "DegenerateNetwork",
    "DomainError",
    "EmptyRealization",
    "InsufficientSamples",
    "LoadModel",
    "MaxIterations",
    "NonConvergent",
    "PowerProfile",
    "SystemParams",
]
