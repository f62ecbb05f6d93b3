"""Small numerical helpers shared by the analytic modules."""
from __future__ import annotations

import math
from typing import Callable

# relative gap below which a divided difference is replaced by a central derivative
_MERGE = 1e-6


def log_divided_difference(log_y: Callable[[float], float], ux: float, ub: float, at_one: float) -> float:
    """(Y(1 - ux) - Y(1 - ub)) / (ub - ux) for a PGF Y given as ``log_y(u) = log Y(1 - u)``.

    Working with u = 1 - z and differences of logs keeps the quotient accurate
    when both points approach z = 1, where ``Y(x) - Y(b)`` would cancel.  Nearly
    coincident points fall back to a central derivative at their midpoint, and
    ``at_one`` (Y'(1), the mean) is returned when both points are z = 1.
    """
    scale = max(ux, ub)
    if scale == 0.0:
        return at_one
    gap = ub - ux
    if abs(gap) > _MERGE * scale:
        a = log_y(ux)
        return -math.exp(a) * math.expm1(log_y(ub) - a) / gap
    mid = 0.5 * (ux + ub)
    lo, hi = max(mid * (1 - _MERGE), 0.0), min(mid * (1 + _MERGE), 1.0)
    a = log_y(lo)
    return -math.exp(a) * math.expm1(log_y(hi) - a) / (hi - lo)
