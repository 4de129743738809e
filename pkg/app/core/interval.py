"""
Closed real intervals with outward rounding.

Endpoints may be infinite. Every operation widens its result by one ulp on
each side so the true value set stays enclosed despite round-to-nearest.
"""

import math
from dataclasses import dataclass
from typing import Iterable

from app.core.errors import EnclosureError

INF = math.inf
TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


def _down(x: float) -> float:
    if math.isinf(x):
        return x
    return math.nextafter(x, -INF)


def _up(x: float) -> float:
    if math.isinf(x):
        return x
    return math.nextafter(x, INF)


def _mul(a: float, b: float) -> float:
    # 0 * inf contributes 0 to an enclosure
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


def _pow(x: float, n: int) -> float:
    try:
        return x ** n
    except OverflowError:
        return INF if (x > 0 or n % 2 == 0) else -INF


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoints must not be NaN")
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @classmethod
    def hull(cls, values: Iterable[float]) -> "Interval":
        values = list(values)
        return cls(_down(min(values)), _up(max(values)))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        if math.isinf(self.lo) or math.isinf(self.hi):
            if math.isinf(self.lo) and math.isinf(self.hi):
                return 0.0
            return self.hi if math.isinf(self.lo) else self.lo
        return self.lo + 0.5 * (self.hi - self.lo)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def within(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def split(self) -> "tuple[Interval, Interval]":
        m = self.mid
        return Interval(self.lo, m), Interval(m, self.hi)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __add__(self, other: "Interval") -> "Interval":
        lo = self.lo + other.lo
        hi = self.hi + other.hi
        return Interval(-INF if math.isnan(lo) else _down(lo), INF if math.isnan(hi) else _up(hi))

    def __sub__(self, other: "Interval") -> "Interval":
        return self + (-other)

    def __mul__(self, other: "Interval") -> "Interval":
        products = [
            _mul(self.lo, other.lo),
            _mul(self.lo, other.hi),
            _mul(self.hi, other.lo),
            _mul(self.hi, other.hi),
        ]
        return Interval.hull(products)

    def __truediv__(self, other: "Interval") -> "Interval":
        if other.contains_zero():
            raise EnclosureError(
                f"denominator enclosure [{other.lo!r}, {other.hi!r}] contains zero"
            )
        return self * other.reciprocal()

    def reciprocal(self) -> "Interval":
        if self.contains_zero():
            raise EnclosureError(
                f"denominator enclosure [{self.lo!r}, {self.hi!r}] contains zero"
            )
        lo = 0.0 if math.isinf(self.hi) else 1.0 / self.hi
        hi = 0.0 if math.isinf(self.lo) else 1.0 / self.lo
        return Interval(_down(lo), _up(hi))

    def __pow__(self, n: int) -> "Interval":
        if n == 0:
            return Interval(1.0, 1.0)
        if n < 0:
            return (self ** (-n)).reciprocal()
        a, b = _pow(self.lo, n), _pow(self.hi, n)
        if n % 2 == 1:
            return Interval(_down(a), _up(b))
        if self.lo >= 0.0:
            return Interval(_down(a), _up(b))
        if self.hi <= 0.0:
            return Interval(_down(b), _up(a))
        return Interval(0.0, _up(max(a, b)))

    def exp(self) -> "Interval":
        lo = 0.0 if self.lo == -INF else _exp(self.lo)
        hi = _exp(self.hi)
        return Interval(max(0.0, _down(lo)), _up(hi))

    def sin(self) -> "Interval":
        return _periodic_enclosure(self, math.sin, HALF_PI, -HALF_PI)

    def cos(self) -> "Interval":
        return _periodic_enclosure(self, math.cos, 0.0, math.pi)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return INF


def _hits(lo: float, hi: float, phase: float) -> bool:
    """Whether [lo, hi] (slightly widened) contains phase + 2*pi*k for some k."""
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    k = math.ceil((lo - slack - phase) / TWO_PI)
    return phase + TWO_PI * k <= hi + slack


def _periodic_enclosure(x: Interval, fn, max_phase: float, min_phase: float) -> Interval:
    if not x.is_finite or x.width >= TWO_PI:
        return Interval(-1.0, 1.0)
    a, b = fn(x.lo), fn(x.hi)
    lo, hi = _down(min(a, b)), _up(max(a, b))
    if _hits(x.lo, x.hi, max_phase):
        hi = 1.0
    if _hits(x.lo, x.hi, min_phase):
        lo = -1.0
    return Interval(max(-1.0, lo), min(1.0, hi))
