"""Python bindings for the aerovio constrained solver and flight simulator."""

from ._aerovio import (
    RankDeficientError,
    build_projector,
    minimize_qp,
    minimize_range,
    reduce,
    simulate,
)

__all__ = [
    "RankDeficientError",
    "build_projector",
    "minimize_qp",
    "minimize_range",
    "reduce",
    "simulate",
]
