"""Monte-Carlo option pricing core.

Thin wrapper over the C++ extension. The numbers produced here are
bit-identical to what the pricing service returns for the same
(option, paths, seed) triple, which is the point: python scripts can
cross-check any service response offline.
"""

from mcesvc._core import (
    NormalStream,
    OptionKind,
    OptionSpec,
    PriceEstimate,
    SimParams,
    ValidationError,
    norm_cdf,
    normal_at,
    price_bs,
    price_mc,
    simulate_terminal,
)

__all__ = [
    "NormalStream",
    "OptionKind",
    "OptionSpec",
    "PriceEstimate",
    "SimParams",
    "ValidationError",
    "norm_cdf",
    "normal_at",
    "price_bs",
    "price_mc",
    "simulate_terminal",
]
