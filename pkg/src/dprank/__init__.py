"""Differentially private rank aggregation with positional voting rules."""

__version__ = "0.1.0"

from .errors import DPRankError  # noqa: E402
from .privacy import PrivacyParams, add_noise, add_noise_normalized  # noqa: E402
from .ranking import (  # noqa: E402
    Histogram,
    Permutation,
    PositionalRule,
    Ranking,
    VoteDistribution,
    aggregate,
    normalize,
)

__all__ = [
    "DPRankError",
    "Histogram",
    "Permutation",
    "PositionalRule",
    "PrivacyParams",
    "Ranking",
    "VoteDistribution",
    "add_noise",
    "add_noise_normalized",
    "aggregate",
    "normalize",
]
