"""Differentially private distinct counting in the turnstile model."""

from .errors import ModelViolationError, ParameterError, StreamFormatError
from .noise import RandomSource, child_seed
from .stream import (
    CounterState,
    FlippancySummary,
    Stream,
    apply_batch,
    diff_sequence,
    distinct_count,
    distinct_counts,
    total_flippancy,
    validate,
)

__all__ = [
    "CounterState",
    "FlippancySummary",
    "ModelViolationError",
    "ParameterError",
    "RandomSource",
    "Stream",
    "StreamFormatError",
    "apply_batch",
    "child_seed",
    "diff_sequence",
    "distinct_count",
    "distinct_counts",
    "total_flippancy",
    "validate",
]
