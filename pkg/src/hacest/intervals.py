"""Parameter intervals with open or closed endpoints."""

from __future__ import annotations

import math
from dataclasses import dataclass

INF = math.inf


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    lower_open: bool = False
    upper_open: bool = False

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValueError("interval bounds must not be NaN")
        if math.isinf(self.upper) and not self.upper_open:
            object.__setattr__(self, "upper_open", True)

    @property
    def empty(self) -> bool:
        if self.lower > self.upper:
            return True
        if self.lower == self.upper:
            return self.lower_open or self.upper_open
        return False

    def __contains__(self, x: float) -> bool:
        if x != x:
            return False
        if x < self.lower or (x == self.lower and self.lower_open):
            return False
        if x > self.upper or (x == self.upper and self.upper_open):
            return False
        return True

    def intersect(self, other: Interval) -> Interval:
        if self.lower > other.lower:
            lo, lo_open = self.lower, self.lower_open
        elif self.lower < other.lower:
            lo, lo_open = other.lower, other.lower_open
        else:
            lo, lo_open = self.lower, self.lower_open or other.lower_open
        if self.upper < other.upper:
            hi, hi_open = self.upper, self.upper_open
        elif self.upper > other.upper:
            hi, hi_open = other.upper, other.upper_open
        else:
            hi, hi_open = self.upper, self.upper_open or other.upper_open
        return Interval(lo, hi, lo_open, hi_open)

    def closed_bounds(self) -> tuple[float, float]:
        """Smallest and largest representable members.

        Open endpoints are replaced by the neighbouring float, an infinite
        upper end by the largest finite float.
        """
        lo = math.nextafter(self.lower, INF) if self.lower_open else self.lower
        if math.isinf(self.upper):
            hi = 1.7976931348623157e308
        elif self.upper_open:
            hi = math.nextafter(self.upper, -INF)
        else:
            hi = self.upper
        return lo, hi

    def clamp(self, x: float) -> float:
        lo, hi = self.closed_bounds()
        return max(min(x, hi), lo)

    def __str__(self) -> str:
        left = "(" if self.lower_open else "["
        right = ")" if self.upper_open else "]"
        hi = "+inf" if math.isinf(self.upper) else f"{self.upper:g}"
        return f"{left}{self.lower:g}, {hi}{right}"

    def to_list(self) -> list:
        return [self.lower, None if math.isinf(self.upper) else self.upper,
                self.lower_open, self.upper_open]

    @classmethod
    def from_list(cls, item) -> Interval:
        lo, hi, lo_open, hi_open = item
        return cls(float(lo), INF if hi is None else float(hi), bool(lo_open), bool(hi_open))
