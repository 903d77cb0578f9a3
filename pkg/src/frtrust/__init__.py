"""Fuzzy reputation-based trust management for semantic P2P grids."""

__version__ = "0.1.0"

from .fuzzy import (  # noqa: E402
    FuzzyEngine,
    FuzzyPartition,
    Label,
    MembershipFunction,
    RuleBase,
    TrustValue,
)
from .trust import FeedbackLedger, FeedbackScore, ThresholdPolicy, TrustAgent  # noqa: E402

__all__ = [
    "FuzzyEngine",
    "FuzzyPartition",
    "Label",
    "MembershipFunction",
    "RuleBase",
    "TrustValue",
    "FeedbackLedger",
    "FeedbackScore",
    "ThresholdPolicy",
    "TrustAgent",
]
