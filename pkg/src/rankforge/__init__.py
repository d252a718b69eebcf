"""rankforge: hunt for elliptic curves over Q with many small integral points,
then pin down conductors, integral point counts, rank lower bounds and records."""

from rankforge.curves import (
    WeierstrassCurve,
    TwoTorsionModel,
    SingularCurve,
    minimal_model,
    curve_from_b,
)
from rankforge.conductor import conductor

__all__ = [
    "WeierstrassCurve",
    "TwoTorsionModel",
    "SingularCurve",
    "minimal_model",
    "curve_from_b",
    "conductor",
]
