"""
Brute-force slice connectivity oracle.

Slices are sampled on a fixed x grid; maximal runs of member samples are
the components. The only code shared with the sweep is expression
evaluation.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.expr import Expr, eval_array
from app.core.interval import Interval
from app.core.predigraph import WindowedPreDigraph

DEFAULT_SAMPLES = 100_000
MIN_SAMPLES = 10_000
DEFAULT_LEVELS = 64
REFINE_STEPS = 48


@dataclass(frozen=True)
class RasterLevel:
    t: float
    intervals: Tuple[Tuple[float, float], ...]

    @property
    def count(self) -> int:
        return len(self.intervals)


@dataclass(frozen=True)
class Incidence:
    """Overlapping component pairs (lower index, upper index) between two levels."""

    t_lower: float
    t_upper: float
    pairs: Tuple[Tuple[int, int], ...]

    def merges(self) -> bool:
        uppers = [j for _, j in self.pairs]
        return any(uppers.count(j) > 1 for j in set(uppers))

    def splits(self) -> bool:
        lowers = [i for i, _ in self.pairs]
        return any(lowers.count(i) > 1 for i in set(lowers))


@dataclass(frozen=True)
class RasterReport:
    window: Interval
    x_samples: int
    levels: Tuple[RasterLevel, ...]
    incidence: Tuple[Incidence, ...]

    def counts(self) -> List[int]:
        return [level.count for level in self.levels]


def _membership(c1: Expr, c2: Expr, t: float, xs: np.ndarray) -> np.ndarray:
    v1 = eval_array(c1, xs)
    v2 = eval_array(c2, xs)
    with np.errstate(all="ignore"):
        return (t - v1) * (v2 - t) >= 0


def _refine(c1: Expr, c2: Expr, t: float, outside: np.ndarray, inside: np.ndarray) -> np.ndarray:
    """Bisect each (outside, inside) bracket toward the membership boundary."""
    outside = outside.astype(float).copy()
    inside = inside.astype(float).copy()
    for _ in range(REFINE_STEPS):
        mid = 0.5 * (outside + inside)
        member = _membership(c1, c2, t, mid)
        inside = np.where(member, mid, inside)
        outside = np.where(member, outside, mid)
    return inside


def _runs(mask: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    steps = np.diff(padded)
    starts = np.flatnonzero(steps == 1)
    stops = np.flatnonzero(steps == -1) - 1
    return starts, stops


def _slice(c1: Expr, c2: Expr, t: float, xs: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> RasterLevel:
    with np.errstate(all="ignore"):
        mask = (t - v1) * (v2 - t) >= 0
    starts, stops = _runs(mask)
    lefts = xs[starts].astype(float)
    rights = xs[stops].astype(float)

    inner_left = starts > 0
    if np.any(inner_left):
        lefts[inner_left] = _refine(c1, c2, t, xs[starts[inner_left] - 1], xs[starts[inner_left]])
    inner_right = stops < len(xs) - 1
    if np.any(inner_right):
        rights[inner_right] = _refine(c1, c2, t, xs[stops[inner_right] + 1], xs[stops[inner_right]])
    return RasterLevel(float(t), tuple((float(a), float(b)) for a, b in zip(lefts, rights)))


def _incidence(lower: RasterLevel, upper: RasterLevel) -> Incidence:
    pairs = []
    for i, (a0, a1) in enumerate(lower.intervals):
        for j, (b0, b1) in enumerate(upper.intervals):
            if a0 <= b1 and b0 <= a1:
                pairs.append((i, j))
    return Incidence(lower.t, upper.t, tuple(pairs))


def raster_slice_counts(
    c1: Expr,
    c2: Expr,
    window: Interval,
    t_values: Sequence[float],
    x_samples: int = DEFAULT_SAMPLES,
) -> RasterReport:
    """Component counts and endpoints of the slices at each t.

    Endpoints strictly inside the window are refined by bisection between
    adjacent grid samples; endpoints on a wall stay on the wall.
    """
    if x_samples < MIN_SAMPLES:
        raise ValueError(f"x_samples must be at least {MIN_SAMPLES}")
    xs = np.linspace(window.lo, window.hi, x_samples)
    v1 = eval_array(c1, xs)
    v2 = eval_array(c2, xs)
    levels = tuple(_slice(c1, c2, float(t), xs, v1, v2) for t in sorted(t_values))
    incidence = tuple(_incidence(a, b) for a, b in zip(levels, levels[1:]))
    return RasterReport(window, x_samples, levels, incidence)


def sample_levels(
    event_values: Sequence[float],
    count: int = DEFAULT_LEVELS,
    margin: Optional[float] = None,
    outside: bool = True,
) -> List[float]:
    """Regular levels spread evenly over the gaps between event values.

    Every level keeps at least `margin` from every event value; the default
    margin is 1e-3 of the value range, never below 1e-6. With `outside` and
    at least three levels, the first and last levels sit below and above
    every event value, 5% of the range away.
    """
    values = sorted(set(float(v) for v in event_values if np.isfinite(v)))
    if len(values) < 2 or count <= 0:
        return []
    if margin is None:
        margin = max(1e-3 * (values[-1] - values[0]), 1e-6)
    gaps = [(a + margin, b - margin) for a, b in zip(values, values[1:]) if b - a > 2 * margin]
    total = sum(b - a for a, b in gaps)
    if total <= 0:
        return []

    beyond = None
    if outside and count >= 3:
        beyond = max(0.05 * (values[-1] - values[0]), 2 * margin)
        count -= 2

    levels = []
    offsets = (np.arange(count) + 0.5) * total / count
    cursor = 0.0
    gap_iter = iter(gaps)
    a, b = next(gap_iter)
    for offset in offsets:
        while offset > cursor + (b - a):
            cursor += b - a
            a, b = next(gap_iter)
        levels.append(a + (offset - cursor))
    if beyond is not None:
        levels = [values[0] - beyond] + levels + [values[-1] + beyond]
    return levels


@dataclass(frozen=True)
class LevelAgreement:
    t: float
    sweep: int
    oracle: int

    @property
    def agree(self) -> bool:
        return self.sweep == self.oracle


@dataclass(frozen=True)
class AgreementReport:
    levels: Tuple[LevelAgreement, ...]
    incidence_issues: Tuple[str, ...]

    @property
    def agree(self) -> bool:
        return not self.incidence_issues and all(level.agree for level in self.levels)

    @property
    def disagreements(self) -> List[LevelAgreement]:
        return [level for level in self.levels if not level.agree]


def compare(g: WindowedPreDigraph, report: RasterReport) -> AgreementReport:
    """Check the pre-digraph against the oracle.

    Counts must match at every sampled level. An oracle merge (split)
    between adjacent levels requires a vertex in between with at least two
    incoming (outgoing) edges; the converse is not checked because overlap
    is only a sufficient condition for continuation.
    """
    if g.window != report.window:
        raise ValueError("oracle report and pre-digraph cover different windows")
    levels = tuple(LevelAgreement(lvl.t, g.edges_crossing(lvl.t), lvl.count) for lvl in report.levels)

    issues = []
    for inc in report.incidence:
        between = [v for v in g.vertices if inc.t_lower < v.value < inc.t_upper]
        if inc.merges() and not any(len(g.in_edges(v.id)) >= 2 for v in between):
            issues.append(f"oracle merge between t={inc.t_lower!r} and t={inc.t_upper!r} has no merge vertex")
        if inc.splits() and not any(len(g.out_edges(v.id)) >= 2 for v in between):
            issues.append(f"oracle split between t={inc.t_lower!r} and t={inc.t_upper!r} has no split vertex")
    return AgreementReport(levels, tuple(issues))
