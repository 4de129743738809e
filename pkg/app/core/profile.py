"""
Critical structure of the boundary functions.

Critical points are isolated by sign-change bisection of the symbolic
derivative on a dense seed grid. Tail behaviour outside the window is never
inferred: it is declared by `TailDescriptor` and only probed for
plausibility.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from app.core.errors import CriticalPointError, EnclosureError, TrustRegionError
from app.core.expr import (
    Expr,
    Sub,
    depends_on_x,
    differentiate,
    eval_array,
    eval_interval,
    literal_value,
    seed_density,
    trust_window,
)
from app.core.interval import Interval


class End(str, Enum):
    NEG_INF = "neg_inf"
    POS_INF = "pos_inf"

    @property
    def sign(self) -> int:
        return -1 if self is End.NEG_INF else 1


class Side(str, Enum):
    BELOW = "below"
    ABOVE = "above"


class LimitKind(str, Enum):
    CONVERGE = "converge"
    DIVERGE_MINUS = "diverge_minus"
    DIVERGE_PLUS = "diverge_plus"


class CriticalTail(str, Enum):
    FINITE = "finite"
    ACCUMULATING_FROM_ABOVE = "accumulating_from_above"
    ACCUMULATING_FROM_BELOW = "accumulating_from_below"
    ACCUMULATING_BOTH_SIDES = "accumulating_both_sides"


class Approach(str, Enum):
    ABOVE = "above"
    BELOW = "below"
    EXACT = "exact"


class CriticalKind(str, Enum):
    LOCAL_MIN = "local_min"
    LOCAL_MAX = "local_max"
    DEGENERATE = "degenerate"


_CLUSTERING_SIDES = {
    CriticalTail.FINITE: frozenset(),
    CriticalTail.ACCUMULATING_FROM_ABOVE: frozenset({Side.ABOVE}),
    CriticalTail.ACCUMULATING_FROM_BELOW: frozenset({Side.BELOW}),
    CriticalTail.ACCUMULATING_BOTH_SIDES: frozenset({Side.BELOW, Side.ABOVE}),
}


@dataclass(frozen=True)
class TailDescriptor:
    """Declared behaviour of one function toward one end of the real line."""

    end: End
    limit: LimitKind
    value: Optional[float] = None
    critical_tail: CriticalTail = CriticalTail.FINITE
    approach: Optional[Approach] = None

    def __post_init__(self):
        if self.limit is LimitKind.CONVERGE:
            if self.value is None or not math.isfinite(self.value):
                raise ValueError("a converging tail needs a finite limit value")
        elif self.critical_tail is not CriticalTail.FINITE:
            raise ValueError("accumulating critical values require a converging tail")

    @property
    def converges(self) -> bool:
        return self.limit is LimitKind.CONVERGE

    @property
    def is_accumulating(self) -> bool:
        return self.critical_tail is not CriticalTail.FINITE

    @property
    def clustering_sides(self) -> FrozenSet[Side]:
        return _CLUSTERING_SIDES[self.critical_tail]

    def converges_to(self, value: float) -> bool:
        return self.converges and self.value == value


Tails = Dict[End, TailDescriptor]


@dataclass(frozen=True)
class CriticalPoint:
    x: float
    value: float
    kind: CriticalKind
    bracket: Tuple[float, float]


@dataclass(frozen=True)
class CriticalProfile:
    """Critical points of one boundary function over a window."""

    name: str
    function: Expr
    window: Interval
    critical_points: Tuple[CriticalPoint, ...]
    tails: Tuple[TailDescriptor, TailDescriptor]
    is_constant: bool = False
    constant_value: Optional[float] = None
    wall_values: Tuple[float, float] = (math.nan, math.nan)

    def tail(self, end: End) -> TailDescriptor:
        return self.tails[0] if end is End.NEG_INF else self.tails[1]

    def wall_value(self, end: End) -> float:
        return self.wall_values[0] if end is End.NEG_INF else self.wall_values[1]

    def wall_x(self, end: End) -> float:
        return self.window.lo if end is End.NEG_INF else self.window.hi

    @property
    def critical_values(self) -> Tuple[float, ...]:
        return tuple(cp.value for cp in self.critical_points)

    def approach(self, end: End) -> Optional[Approach]:
        """Side from which the function eventually sits relative to its limit.

        None means it keeps crossing the limit value.
        """
        d = self.tail(end)
        if not d.converges:
            return None
        if d.approach is not None:
            return d.approach
        if self.is_constant:
            return Approach.EXACT
        if d.critical_tail is CriticalTail.ACCUMULATING_FROM_ABOVE:
            return Approach.ABOVE
        if d.critical_tail is CriticalTail.ACCUMULATING_FROM_BELOW:
            return Approach.BELOW
        if d.critical_tail is CriticalTail.ACCUMULATING_BOTH_SIDES:
            return None
        wall = self.wall_value(end)
        if wall > d.value:
            return Approach.ABOVE
        if wall < d.value:
            return Approach.BELOW
        return Approach.EXACT

    def eventually_at_most(self, end: End, t: float) -> bool:
        """Whether f(x) <= t for all x far enough toward `end`."""
        d = self.tail(end)
        if d.limit is LimitKind.DIVERGE_MINUS:
            return True
        if d.limit is LimitKind.DIVERGE_PLUS:
            return False
        if self.is_constant:
            return self.constant_value <= t
        if d.value != t:
            return d.value < t
        return self.approach(end) in (Approach.BELOW, Approach.EXACT)

    def eventually_at_least(self, end: End, t: float) -> bool:
        """Whether f(x) >= t for all x far enough toward `end`."""
        d = self.tail(end)
        if d.limit is LimitKind.DIVERGE_PLUS:
            return True
        if d.limit is LimitKind.DIVERGE_MINUS:
            return False
        if self.is_constant:
            return self.constant_value >= t
        if d.value != t:
            return d.value > t
        return self.approach(end) in (Approach.ABOVE, Approach.EXACT)


def default_tails() -> Tuple[TailDescriptor, TailDescriptor]:
    return (
        TailDescriptor(End.NEG_INF, LimitKind.CONVERGE, 0.0),
        TailDescriptor(End.POS_INF, LimitKind.CONVERGE, 0.0),
    )


def find_critical_points(
    f: Expr,
    window: Interval,
    tol: float = 1e-10,
    tails: Optional[Tuple[TailDescriptor, TailDescriptor]] = None,
    name: str = "f",
) -> CriticalProfile:
    """Isolate every simple zero of f' inside the window.

    Args:
        f: Boundary function.
        window: Finite window, inside the oscillation trust window of f.
        tol: Bisection tolerance on x.
        tails: Declared tail descriptors carried on the profile.
        name: Function id used in events and logs ("c1", "c2").

    Returns:
        CriticalProfile with points sorted by x.

    Raises:
        TrustRegionError: If the window leaves the trust window.
        CriticalPointError: If the derivative sign pattern is inconsistent.
    """
    tails = tails or default_tails()
    ends = np.array([window.lo, window.hi])

    if not depends_on_x(f):
        value = float(eval_array(f, ends)[0])
        return CriticalProfile(name, f, window, (), tails, True, value, (value, value))

    fp = differentiate(f)
    if not depends_on_x(fp) and literal_value(fp) == 0.0:
        value = float(eval_array(f, np.array([window.mid]))[0])
        return CriticalProfile(name, f, window, (), tails, True, value, (value, value))

    trusted = trust_window([f], window)
    if trusted != window:
        raise TrustRegionError(
            f"window [{window.lo!r}, {window.hi!r}] exceeds the trust window of {name} "
            f"[{trusted.lo!r}, {trusted.hi!r}]"
        )

    density = seed_density(f)
    count = max(int(math.ceil(window.width * density)), 16) + 1
    seeds = np.linspace(window.lo, window.hi, count)
    slopes = eval_array(fp, seeds)
    if not np.all(np.isfinite(slopes)):
        bad = float(seeds[np.flatnonzero(~np.isfinite(slopes))[0]])
        raise CriticalPointError(f"derivative of {name} is not finite at x={bad!r}")

    signs = np.sign(slopes)
    if not np.any(signs):
        value = float(eval_array(f, np.array([window.mid]))[0])
        return CriticalProfile(
            name, f, window, (), tails, True, value, tuple(float(v) for v in eval_array(f, ends))
        )

    points: List[CriticalPoint] = []
    points.extend(_zero_seeds(f, seeds, signs))
    points.extend(_bisect_sign_changes(f, fp, seeds, signs, tol))
    points.sort(key=lambda cp: cp.x)
    _check_isolation(name, points)

    wall_values = tuple(float(v) for v in eval_array(f, ends))
    return CriticalProfile(name, f, window, tuple(points), tails, False, None, wall_values)


def _zero_seeds(f: Expr, seeds: np.ndarray, signs: np.ndarray) -> List[CriticalPoint]:
    """Seeds where f' evaluates to exactly zero."""
    points = []
    nonzero = np.flatnonzero(signs)
    for i in np.flatnonzero(signs == 0):
        left = nonzero[nonzero < i]
        right = nonzero[nonzero > i]
        if left.size == 0 or right.size == 0:
            continue
        before, after = signs[left[-1]], signs[right[0]]
        if before < 0 < after:
            kind = CriticalKind.LOCAL_MIN
        elif before > 0 > after:
            kind = CriticalKind.LOCAL_MAX
        else:
            kind = CriticalKind.DEGENERATE
        x = float(seeds[i])
        value = float(eval_array(f, np.array([x]))[0])
        points.append(CriticalPoint(x, value, kind, (float(seeds[left[-1]]), float(seeds[right[0]]))))
    return points


def _bisect_sign_changes(
    f: Expr, fp: Expr, seeds: np.ndarray, signs: np.ndarray, tol: float
) -> List[CriticalPoint]:
    idx = np.flatnonzero(signs[:-1] * signs[1:] < 0)
    if idx.size == 0:
        return []
    a = seeds[idx].copy()
    b = seeds[idx + 1].copy()
    sign_a = signs[idx]
    for _ in range(200):
        if np.all(b - a <= tol):
            break
        m = 0.5 * (a + b)
        sm = np.sign(eval_array(fp, m))
        exact = sm == 0
        left = (sm == sign_a) & ~exact
        a = np.where(left | exact, m, a)
        b = np.where(~left | exact, m, b)
    xs = 0.5 * (a + b)
    values = eval_array(f, xs)
    bracket_values = eval_array(f, np.concatenate([seeds[idx], seeds[idx + 1]]))
    lo_vals, hi_vals = np.split(bracket_values, 2)

    points = []
    for j, x in enumerate(xs):
        kind = CriticalKind.LOCAL_MIN if sign_a[j] < 0 else CriticalKind.LOCAL_MAX
        value = float(values[j])
        slack = 1e-9 * (1.0 + abs(value))
        if kind is CriticalKind.LOCAL_MIN and value > min(lo_vals[j], hi_vals[j]) + slack:
            raise CriticalPointError(f"local minimum at x={float(x)!r} exceeds its bracket values")
        if kind is CriticalKind.LOCAL_MAX and value < max(lo_vals[j], hi_vals[j]) - slack:
            raise CriticalPointError(f"local maximum at x={float(x)!r} is below its bracket values")
        points.append(
            CriticalPoint(float(x), value, kind, (float(seeds[idx[j]]), float(seeds[idx[j] + 1])))
        )
    return points


def _check_isolation(name: str, points: List[CriticalPoint]) -> None:
    previous = None
    for cp in points:
        if previous is not None and cp.x <= previous.x:
            raise CriticalPointError(f"critical points of {name} are not isolated near x={cp.x!r}")
        if cp.kind is not CriticalKind.DEGENERATE:
            if previous is not None and previous.kind is cp.kind:
                raise CriticalPointError(
                    f"consecutive {cp.kind.value} points of {name} at x={previous.x!r} and x={cp.x!r}"
                )
            previous = cp


def verify_monotone(profile: CriticalProfile, budget: int = 2048) -> None:
    """Check with interval enclosures of f' that f is monotone between
    consecutive critical points and the walls.

    Pieces whose enclosure keeps the segment's sign are settled; the rest
    are bisected down to 1e-6 of the segment, with the derivative sampled
    at every midpoint. A segment that spends its enclosure budget, or
    meets a denominator enclosure holding zero, is finished by a dense
    derivative sample.

    Raises:
        CriticalPointError: If f' takes the opposite sign inside a segment.
    """
    if profile.is_constant:
        return
    fp = differentiate(profile.function)
    window = profile.window
    xs = [window.lo] + [cp.x for cp in profile.critical_points if window.lo < cp.x < window.hi] + [window.hi]
    values = eval_array(profile.function, np.array(xs))
    for a, b, fa, fb in zip(xs, xs[1:], values, values[1:]):
        direction = np.sign(fb - fa)
        if not np.isfinite(direction) or direction == 0:
            continue
        edge = min(max(1e-6 * (b - a), 1e-8), 0.25 * (b - a))
        stack = [(a, b)]
        spent = 0
        while stack:
            if spent >= budget:
                _check_sampled_sign(profile.name, fp, a, b, direction)
                break
            spent += 1
            lo, hi = stack.pop()
            try:
                enclosure = eval_interval(fp, Interval(lo, hi))
            except EnclosureError:
                _check_sampled_sign(profile.name, fp, a, b, direction)
                break
            if (direction > 0 and enclosure.lo > 0) or (direction < 0 and enclosure.hi < 0):
                continue
            mid = 0.5 * (lo + hi)
            slope = float(eval_array(fp, np.array([mid]))[0])
            if np.sign(slope) == -direction:
                raise _not_monotone(profile.name, a, b, mid, slope)
            if hi - lo <= edge:
                continue
            stack.append((mid, hi))
            stack.append((lo, mid))


def _check_sampled_sign(name: str, fp: Expr, a: float, b: float, direction: float, samples: int = 4097) -> None:
    xs = np.linspace(a, b, samples)[1:-1]
    slopes = eval_array(fp, xs)
    wrong = np.flatnonzero(np.sign(slopes) == -direction)
    if wrong.size:
        raise _not_monotone(name, a, b, float(xs[wrong[0]]), float(slopes[wrong[0]]))


def _not_monotone(name: str, a: float, b: float, x: float, slope: float) -> CriticalPointError:
    return CriticalPointError(
        f"{name} is not monotone between x={a!r} and x={b!r}: derivative {slope:.3g} at x={x!r} points the wrong way"
    )


# ---------------------------------------------------------------------------
# Separation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparationResult:
    verified: bool
    witness: Optional[float] = None
    c1_value: Optional[float] = None
    c2_value: Optional[float] = None
    sampled_only: bool = False
    leaves: int = 0

    @property
    def status(self) -> str:
        return "verified" if self.verified else "violation"


def verify_separation(
    c1: Expr,
    c2: Expr,
    window: Interval,
    max_depth: int = 30,
    samples: int = 100_001,
) -> SeparationResult:
    """Prove c2 - c1 > 0 on the window by adaptive interval bisection.

    Leaves that cannot be separated at max_depth fall back to a dense
    sampling check and the result is marked sampled_only. A violation
    reports the sampled x where c1 - c2 is largest.

    Raises:
        EnclosureError: If a denominator enclosure contains zero.
    """
    gap = Sub(c2, c1)

    def violation(found: float) -> SeparationResult:
        xs = np.append(np.linspace(window.lo, window.hi, samples), [window.mid, found])
        gaps = eval_array(gap, xs)
        x = float(xs[int(np.argmin(np.where(np.isfinite(gaps), gaps, np.inf)))])
        v1 = float(eval_array(c1, np.array([x]))[0])
        v2 = float(eval_array(c2, np.array([x]))[0])
        return SeparationResult(False, x, v1, v2)

    probes = np.array([window.lo, window.mid, window.hi])
    probe_gaps = eval_array(gap, probes)
    for x, g in zip(probes, probe_gaps):
        if math.isfinite(g) and g <= 0:
            return violation(float(x))

    stack = [(window, 0)]
    undecided = 0
    leaves = 0
    while stack:
        interval, depth = stack.pop()
        enclosure = eval_interval(gap, interval)
        if enclosure.lo > 0:
            leaves += 1
            continue
        centre = interval.mid
        g = float(eval_array(gap, np.array([centre]))[0])
        if math.isfinite(g) and g <= 0:
            return violation(centre)
        if depth >= max_depth:
            undecided += 1
            continue
        left, right = interval.split()
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))

    if not undecided:
        return SeparationResult(True, leaves=leaves)

    xs = np.linspace(window.lo, window.hi, samples)
    gaps = eval_array(gap, xs)
    finite = np.isfinite(gaps)
    if np.any(finite & (gaps <= 0)):
        return violation(float(xs[int(np.argmax(finite & (gaps <= 0)))]))
    return SeparationResult(True, sampled_only=True, leaves=leaves)


# ---------------------------------------------------------------------------
# Same asymptotic behaviour
# ---------------------------------------------------------------------------

class EndAgreement(str, Enum):
    SAME_LIMIT = "same_limit"
    BOTH_DIVERGE_MINUS = "both_diverge_minus"
    BOTH_DIVERGE_PLUS = "both_diverge_plus"
    MISMATCH = "mismatch"


@dataclass(frozen=True)
class EndStatus:
    kind: EndAgreement
    value: Optional[float] = None


@dataclass(frozen=True)
class SabStatus:
    neg_inf: EndStatus
    pos_inf: EndStatus

    def at(self, end: End) -> EndStatus:
        return self.neg_inf if end is End.NEG_INF else self.pos_inf

    @property
    def is_sab(self) -> bool:
        return EndAgreement.MISMATCH not in (self.neg_inf.kind, self.pos_inf.kind)

    @property
    def converges(self) -> bool:
        return self.neg_inf.kind is EndAgreement.SAME_LIMIT and self.pos_inf.kind is EndAgreement.SAME_LIMIT


def _end_status(d1: TailDescriptor, d2: TailDescriptor) -> EndStatus:
    if d1.converges and d2.converges:
        if d1.value == d2.value:
            return EndStatus(EndAgreement.SAME_LIMIT, d1.value)
        return EndStatus(EndAgreement.MISMATCH)
    if d1.limit is d2.limit is LimitKind.DIVERGE_MINUS:
        return EndStatus(EndAgreement.BOTH_DIVERGE_MINUS)
    if d1.limit is d2.limit is LimitKind.DIVERGE_PLUS:
        return EndStatus(EndAgreement.BOTH_DIVERGE_PLUS)
    return EndStatus(EndAgreement.MISMATCH)


def sab_classify(
    tails_c1: Tuple[TailDescriptor, TailDescriptor],
    tails_c2: Tuple[TailDescriptor, TailDescriptor],
) -> SabStatus:
    """Per-end agreement of the declared limits of c1 and c2."""
    return SabStatus(
        neg_inf=_end_status(tails_c1[0], tails_c2[0]),
        pos_inf=_end_status(tails_c1[1], tails_c2[1]),
    )


# ---------------------------------------------------------------------------
# Tail probes
# ---------------------------------------------------------------------------

PROBE_ANNULI = 8
PROBE_SAMPLES = 64


@dataclass(frozen=True)
class ProbeResult:
    end: End
    consistent: bool
    reason: str = ""
    sign_changes: Tuple[int, ...] = field(default=())

    @property
    def status(self) -> str:
        return "consistent" if self.consistent else "suspect"


def _annuli(window: Interval, end: End) -> List[np.ndarray]:
    """Geometrically spaced annuli between half-way and the wall toward `end`."""
    centre = window.mid
    half = 0.5 * window.width
    radii = half * np.geomspace(0.5, 1.0, PROBE_ANNULI + 1)
    return [centre + end.sign * np.linspace(r0, r1, PROBE_SAMPLES) for r0, r1 in zip(radii[:-1], radii[1:])]


def probe_tail(f: Expr, d: TailDescriptor, window: Interval) -> ProbeResult:
    """Plausibility check of a declared tail inside the (trusted) window.

    Suspect results annotate output; they never stop a run.
    """
    annuli = _annuli(window, d.end)
    values = [eval_array(f, xs) for xs in annuli]
    if any(not np.all(np.isfinite(v)) for v in values):
        return ProbeResult(d.end, False, "non-finite values toward the end")

    if not depends_on_x(f):
        constant = float(values[0][0])
        if d.converges and constant != d.value:
            return ProbeResult(d.end, False, f"limit trend {constant:g} ≠ {d.value:g}")
        if not d.converges:
            return ProbeResult(d.end, False, f"constant {constant:g} does not diverge")
        if d.is_accumulating:
            return ProbeResult(d.end, False, "constant function has no accumulating critical values")
        return ProbeResult(d.end, True)

    radii = np.array([abs(xs[-1] - window.mid) for xs in annuli])
    if d.converges:
        distances = [np.maximum(np.abs(v - d.value), 1e-300) for v in values]
        trend = np.array([float(np.mean(np.log(dist))) for dist in distances])
        slope = float(np.polyfit(np.log(radii), trend, 1)[0])
        if not (slope < 0 and trend[-1] < trend[0]):
            estimate = float(values[-1][-1])
            return ProbeResult(d.end, False, f"limit trend {estimate:.3g} ≠ {d.value:g}")
    else:
        means = np.array([float(np.mean(v)) for v in values])
        rising = d.limit is LimitKind.DIVERGE_PLUS
        ok = means[-1] > means[0] if rising else means[-1] < means[0]
        if not ok:
            direction = "+inf" if rising else "-inf"
            return ProbeResult(d.end, False, f"values do not trend toward {direction}")

    if not d.is_accumulating:
        return ProbeResult(d.end, True)

    fp = differentiate(f)
    counts = []
    for xs in annuli:
        dense = np.linspace(xs[0], xs[-1], max(int(abs(xs[-1] - xs[0]) * seed_density(f)), PROBE_SAMPLES))
        signs = np.sign(eval_array(fp, dense))
        signs = signs[signs != 0]
        counts.append(int(np.count_nonzero(signs[:-1] != signs[1:])))
    counts_t = tuple(counts)
    if counts[-1] == 0:
        return ProbeResult(d.end, False, "no derivative sign changes in the outermost annulus", counts_t)
    if any(later < earlier for earlier, later in zip(counts, counts[1:])):
        return ProbeResult(d.end, False, f"derivative sign changes decrease toward the end {counts_t}", counts_t)
    return ProbeResult(d.end, True, "", counts_t)

