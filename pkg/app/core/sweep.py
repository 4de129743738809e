"""
Sweep of the strip region c1(x) <= t <= c2(x) across values t.

Slices are unions of closed x-intervals. Between consecutive event levels the
combinatorics of a slice cannot change, so each band between levels is
sampled at three values and linked to the event slices on either side by
interval overlap. The resulting continuation graph is contracted to the
windowed pre-digraph.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import DegenerateSliceError, OverlapAmbiguityError
from app.core.expr import Expr, eval_array
from app.core.interval import Interval
from app.core.predigraph import (
    Edge,
    NfAnnotation,
    Vertex,
    VertexKind,
    WindowedPreDigraph,
)
from app.core.profile import (
    CriticalKind,
    CriticalProfile,
    EndAgreement,
    End,
    SabStatus,
    Side,
    TailDescriptor,
    default_tails,
    find_critical_points,
    verify_monotone,
)
from app.observability.logging import get_logger

logger = get_logger(__name__)

ROOT_TOL = 1e-13
OVERLAP_EPS = 1e-9


class EndKind(str, Enum):
    ROOT_OF_C1 = "root_of_c1"
    ROOT_OF_C2 = "root_of_c2"
    UNBOUNDED = "unbounded"
    TRUNCATED = "truncated"


_WALL_KINDS = (EndKind.UNBOUNDED, EndKind.TRUNCATED)


@dataclass(frozen=True)
class SliceComponent:
    """One closed interval of a slice.

    `left`/`right` are window coordinates; an end of kind Unbounded continues
    to infinity, Truncated stops somewhere beyond the wall.
    """

    t: float
    left: float
    right: float
    left_kind: EndKind
    right_kind: EndKind

    @property
    def interval(self) -> Tuple[float, float]:
        lo = -math.inf if self.left_kind is EndKind.UNBOUNDED else self.left
        hi = math.inf if self.right_kind is EndKind.UNBOUNDED else self.right
        return lo, hi

    def kind_at(self, end: End) -> EndKind:
        return self.left_kind if end is End.NEG_INF else self.right_kind

    def touches(self, end: End) -> bool:
        return self.kind_at(end) in _WALL_KINDS

    @property
    def walls(self) -> FrozenSet[End]:
        return frozenset(end for end in End if self.touches(end))

    @property
    def unbounded_ends(self) -> FrozenSet[End]:
        return frozenset(end for end in End if self.kind_at(end) is EndKind.UNBOUNDED)

    def overlaps(self, other: "SliceComponent", eps: float = 0.0) -> bool:
        return self.left <= other.right + eps and other.left <= self.right + eps

    def contains(self, x: float, eps: float = 0.0) -> bool:
        return self.left - eps <= x <= self.right + eps


class Membership(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def region_membership(c1: Expr, c2: Expr, x1: float, x2: float, tol: float = 1e-12) -> Membership:
    """Position of the point (value x1, coordinate x2) relative to the region.

    The sign of (x1 - c1(x2)) * (c2(x2) - x1) is the squared fibre radius.
    """
    v1 = float(eval_array(c1, np.array([x2]))[0])
    v2 = float(eval_array(c2, np.array([x2]))[0])
    product = (x1 - v1) * (v2 - x1)
    scale = max(1.0, abs(x1), abs(v1), abs(v2)) ** 2
    if abs(product) <= tol * scale:
        return Membership.BOUNDARY
    return Membership.INTERIOR if product > 0 else Membership.OUTSIDE


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------

class EventKind(str, Enum):
    BIRTH = "birth"
    DEATH = "death"
    MERGE = "merge"
    SPLIT = "split"
    NONCOMPACT_CONTOUR = "noncompact_contour"
    WINDOW_ARTIFACT = "window_artifact"


_KIND_ORDER = {kind: i for i, kind in enumerate(EventKind)}

_C1_KINDS = {CriticalKind.LOCAL_MIN: EventKind.BIRTH, CriticalKind.LOCAL_MAX: EventKind.MERGE}
_C2_KINDS = {CriticalKind.LOCAL_MIN: EventKind.SPLIT, CriticalKind.LOCAL_MAX: EventKind.DEATH}


@dataclass(frozen=True)
class Event:
    value: float
    kind: EventKind
    function: Optional[str] = None
    x: Optional[float] = None
    end: Optional[End] = None

    @property
    def is_critical(self) -> bool:
        return self.kind not in (EventKind.NONCOMPACT_CONTOUR, EventKind.WINDOW_ARTIFACT)

    def sort_key(self):
        return (
            self.value,
            _KIND_ORDER[self.kind],
            self.x if self.x is not None else math.inf,
            self.end.value if self.end is not None else "",
        )


@dataclass(frozen=True)
class EventLevel:
    """Coalesced events processed at one representative value."""

    index: int
    value: float
    lo: float
    hi: float
    events: Tuple[Event, ...]

    def of_kind(self, kind: EventKind) -> List[Event]:
        return [e for e in self.events if e.kind is kind]

    @property
    def noncompact_ends(self) -> FrozenSet[End]:
        return frozenset(e.end for e in self.of_kind(EventKind.NONCOMPACT_CONTOUR))


def unbounded_at(p1: CriticalProfile, p2: CriticalProfile, end: End, t: float) -> bool:
    """Whether a slice component reaching the wall continues to infinity."""
    return p1.eventually_at_most(end, t) and p2.eventually_at_least(end, t)


def event_schedule(p1: CriticalProfile, p2: CriticalProfile) -> List[Event]:
    """Value-sorted topology-change candidates of the pair.

    Constant functions contribute no events. Window walls of non-constant
    functions contribute WindowArtifact events.
    """
    events: List[Event] = []
    for profile, table in ((p1, _C1_KINDS), (p2, _C2_KINDS)):
        if profile.is_constant:
            continue
        for cp in profile.critical_points:
            if cp.kind is CriticalKind.DEGENERATE:
                continue
            events.append(Event(cp.value, table[cp.kind], profile.name, cp.x))

    for end in End:
        limits = sorted({p.tail(end).value for p in (p1, p2) if p.tail(end).converges})
        for value in limits:
            if unbounded_at(p1, p2, end, value):
                events.append(Event(value, EventKind.NONCOMPACT_CONTOUR, end=end))

    for profile in (p1, p2):
        if profile.is_constant:
            continue
        for end in End:
            events.append(
                Event(profile.wall_value(end), EventKind.WINDOW_ARTIFACT, profile.name, profile.wall_x(end), end)
            )
    events.sort(key=Event.sort_key)
    return events


def event_levels(events: Sequence[Event], tol: float = 1e-8) -> List[EventLevel]:
    """Group events whose values lie within `tol` of the group's first value."""
    groups: List[List[Event]] = []
    for event in sorted(events, key=Event.sort_key):
        if groups and event.value - groups[-1][0].value <= tol:
            groups[-1].append(event)
        else:
            groups.append([event])

    levels = []
    for index, group in enumerate(groups):
        limits = [e.value for e in group if e.kind is EventKind.NONCOMPACT_CONTOUR]
        value = limits[0] if limits else group[0].value
        values = [e.value for e in group]
        levels.append(EventLevel(index, value, min(values), max(values), tuple(group)))
    return levels


# ---------------------------------------------------------------------------
# Slices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Breaks:
    xs: np.ndarray
    values: np.ndarray


class SliceEngine:
    """Batched slice computation for one pair over one window."""

    def __init__(self, p1: CriticalProfile, p2: CriticalProfile, window: Interval, root_tol: float = ROOT_TOL):
        self.p1 = p1
        self.p2 = p2
        self.window = window
        self.root_tol = root_tol
        self._breaks = {p.name: self._breakpoints(p) for p in (p1, p2) if not p.is_constant}

    def _breakpoints(self, p: CriticalProfile) -> _Breaks:
        lo, hi = self.window.lo, self.window.hi
        inner = [cp for cp in p.critical_points if lo < cp.x < hi]
        xs = np.array([lo] + [cp.x for cp in inner] + [hi])
        values = np.array([p.wall_values[0]] + [cp.value for cp in inner] + [p.wall_values[1]])
        return _Breaks(xs, values)

    def _roots(
        self, p: CriticalProfile, levels: np.ndarray, snap_lo: np.ndarray, snap_hi: np.ndarray
    ) -> Tuple[List[List[float]], np.ndarray]:
        """Roots of p(x) = t per level, plus the sign of p - t at both walls."""
        breaks = self._breaks[p.name]
        diff = breaks.values[None, :] - levels[:, None]
        with np.errstate(invalid="ignore"):
            snapped = (breaks.values[None, :] >= snap_lo[:, None]) & (breaks.values[None, :] <= snap_hi[:, None])
        diff = np.where(snapped, 0.0, diff)
        signs = np.sign(diff)

        roots: List[List[float]] = [[] for _ in range(len(levels))]
        for level, b in zip(*np.nonzero(signs == 0)):
            roots[level].append(float(breaks.xs[b]))

        level_idx, seg = np.nonzero(signs[:, :-1] * signs[:, 1:] < 0)
        if level_idx.size:
            a = breaks.xs[seg].copy()
            b = breaks.xs[seg + 1].copy()
            sign_a = signs[level_idx, seg]
            target = levels[level_idx]
            for _ in range(200):
                if np.all(b - a <= self.root_tol * np.maximum(1.0, np.abs(a))):
                    break
                mid = 0.5 * (a + b)
                sm = np.sign(eval_array(p.function, mid) - target)
                exact = sm == 0
                left = (sm == sign_a) & ~exact
                a = np.where(left | exact, mid, a)
                b = np.where(~left | exact, mid, b)
            for level, x in zip(level_idx, 0.5 * (a + b)):
                roots[level].append(float(x))
        return roots, signs[:, [0, -1]]

    def _constant_signs(self, p: CriticalProfile, levels, snap_lo, snap_hi) -> np.ndarray:
        value = p.constant_value
        diff = value - levels
        with np.errstate(invalid="ignore"):
            snapped = (value >= snap_lo) & (value <= snap_hi)
        signs = np.sign(np.where(snapped, 0.0, diff))
        return np.stack([signs, signs], axis=1)

    def components(
        self, levels: Sequence[float], snaps: Optional[Sequence[Optional[Tuple[float, float]]]] = None
    ) -> List[List[SliceComponent]]:
        """Slice components for every level, left to right.

        Args:
            levels: Values t.
            snaps: Per level, an optional value range whose breakpoint values
                are treated as exactly t (coalesced event levels).
        """
        levels_arr = np.asarray(levels, dtype=float)
        n = len(levels_arr)
        snaps = snaps or [None] * n
        snap_lo = np.array([s[0] if s else np.nan for s in snaps], dtype=float)
        snap_hi = np.array([s[1] if s else np.nan for s in snaps], dtype=float)

        roots: List[List[Tuple[float, EndKind]]] = [[] for _ in range(n)]
        wall_signs = {}
        for p, kind in ((self.p1, EndKind.ROOT_OF_C1), (self.p2, EndKind.ROOT_OF_C2)):
            if p.is_constant:
                wall_signs[p.name] = self._constant_signs(p, levels_arr, snap_lo, snap_hi)
                continue
            per_level, signs = self._roots(p, levels_arr, snap_lo, snap_hi)
            wall_signs[p.name] = signs
            for i, xs in enumerate(per_level):
                roots[i].extend((x, kind) for x in xs)

        lo, hi = self.window.lo, self.window.hi
        plans = []
        mids = []
        for i in range(n):
            points = sorted(set(roots[i]))
            bounds = [lo] + [x for x, _ in points if lo < x < hi] + [hi]
            cells = list(zip(bounds[:-1], bounds[1:]))
            plans.append((points, cells, len(mids)))
            mids.extend(0.5 * (a + b) for a, b in cells)

        mids_arr = np.array(mids, dtype=float)
        c1_mid = eval_array(self.p1.function, mids_arr)
        c2_mid = eval_array(self.p2.function, mids_arr)

        result = []
        for i in range(n):
            points, cells, offset = plans[i]
            t = float(levels_arr[i])
            s1 = wall_signs[self.p1.name][i]
            s2 = wall_signs[self.p2.name][i]
            members = []
            for j, (a, b) in enumerate(cells):
                v1, v2 = c1_mid[offset + j], c2_mid[offset + j]
                if not (math.isfinite(v1) and math.isfinite(v2)):
                    raise DegenerateSliceError("non-finite boundary value inside a slice cell", t, (a, b))
                if snaps[i] is None and (v1 == t or v2 == t):
                    members.append(self._touching_member(t, a, b, v1, v2))
                else:
                    members.append(v1 <= t <= v2)
            walls = (s1[0] <= 0 and s2[0] >= 0, s1[1] <= 0 and s2[1] >= 0)
            result.append(self._assemble(t, points, cells, members, walls))
        return result

    def _touching_member(self, t: float, a: float, b: float, v1: float, v2: float) -> bool:
        """Membership of a cell whose midpoint lies on the level.

        A constant boundary equal to t is part of the closed region. A
        non-constant one keeps one sign of f - t inside the cell, so the
        quarter points decide.

        Raises:
            DegenerateSliceError: If a non-constant boundary stays on the
                level at the quarter points too.
        """
        quarters = np.array([a + 0.25 * (b - a), a + 0.75 * (b - a)])
        q1 = self._values(self.p1, quarters, v1)
        q2 = self._values(self.p2, quarters, v2)
        for p, q in ((self.p1, q1), (self.p2, q2)):
            if not p.is_constant and np.any(q == t):
                raise DegenerateSliceError("boundary stays on the level inside a cell", t, (a, b))
        return bool(np.all((q1 <= t) & (t <= q2)))

    @staticmethod
    def _values(p: CriticalProfile, xs: np.ndarray, mid_value: float) -> np.ndarray:
        if p.is_constant:
            return np.full_like(xs, mid_value)
        return eval_array(p.function, xs)

    def _assemble(self, t, points, cells, members, walls) -> List[SliceComponent]:
        lo, hi = self.window.lo, self.window.hi
        # items along x: (left, right, member, kind at a point or None for cells)
        items = []
        root_at = {x: kind for x, kind in points}
        items.append((lo, lo, lo in root_at or walls[0], root_at.get(lo)))
        inner = [(x, kind) for x, kind in points if lo < x < hi]
        for j, (a, b) in enumerate(cells):
            items.append((a, b, members[j], None))
            if j < len(inner):
                x, kind = inner[j]
                items.append((x, x, True, kind))
        items.append((hi, hi, hi in root_at or walls[1], root_at.get(hi)))

        components = []
        run_start = None
        for idx, item in enumerate(items + [(hi, hi, False, None)]):
            member = item[2] and idx < len(items)
            if member and run_start is None:
                run_start = idx
            elif not member and run_start is not None:
                first, last = items[run_start], items[idx - 1]
                left_kind = first[3] if first[3] is not None else self._wall_kind(End.NEG_INF, t)
                right_kind = last[3] if last[3] is not None else self._wall_kind(End.POS_INF, t)
                components.append(SliceComponent(t, first[0], last[1], left_kind, right_kind))
                run_start = None
        return components

    def _wall_kind(self, end: End, t: float) -> EndKind:
        if unbounded_at(self.p1, self.p2, end, t):
            return EndKind.UNBOUNDED
        return EndKind.TRUNCATED


def slice_components(
    c1: Expr,
    c2: Expr,
    t: float,
    window: Interval,
    tails_c1: Optional[Tuple[TailDescriptor, TailDescriptor]] = None,
    tails_c2: Optional[Tuple[TailDescriptor, TailDescriptor]] = None,
) -> List[SliceComponent]:
    """Components of the slice at value t, left to right."""
    p1 = find_critical_points(c1, window, tails=tails_c1 or default_tails(), name="c1")
    p2 = find_critical_points(c2, window, tails=tails_c2 or default_tails(), name="c2")
    return SliceEngine(p1, p2, window).components([t])[0]


# ---------------------------------------------------------------------------
# Reeb pre-digraph
# ---------------------------------------------------------------------------

@dataclass
class _Node:
    level: int
    component: SliceComponent
    below: int = 0
    above: int = 0
    is_vertex: bool = False
    vertex_id: Optional[str] = None


@dataclass
class _Segment:
    band: int
    lower: SliceComponent
    middle: SliceComponent
    upper: SliceComponent
    below: Optional[int] = None
    above: Optional[int] = None


def _probe_offset(width: float) -> float:
    return min(1e-3 * width, 1e-6)


def _link(
    probe: SliceComponent, level: int, nodes: List[_Node], by_level: Dict[int, List[int]], eps: float
) -> int:
    hits = [n for n in by_level[level] if nodes[n].component.overlaps(probe, eps)]
    if len(hits) > 1:
        raise OverlapAmbiguityError(
            f"slice component [{probe.left!r}, {probe.right!r}] at t={probe.t!r} overlaps "
            f"{len(hits)} components at level {nodes[hits[0]].component.t!r}"
        )
    if not hits:
        raise OverlapAmbiguityError(
            f"slice component [{probe.left!r}, {probe.right!r}] at t={probe.t!r} continues no component "
            f"of event level {level}; a critical point is missing from the profiles"
        )
    return hits[0]


def _family(profiles: Sequence[CriticalProfile], walls: FrozenSet[End], value: float, side: Side) -> bool:
    for end in walls:
        for p in profiles:
            d = p.tail(end)
            if d.converges_to(value) and side in d.clustering_sides:
                return True
    return False


def build_reeb(
    c1: Expr,
    c2: Expr,
    p1: CriticalProfile,
    p2: CriticalProfile,
    sab: SabStatus,
    window: Interval,
    m: int = 2,
    coalesce_tol: float = 1e-8,
) -> WindowedPreDigraph:
    """Sweep the strip and contract the continuation graph to a pre-digraph.

    Args:
        c1, c2: Boundary functions (the profiles' functions).
        p1, p2: Critical profiles over `window`, with tail descriptors.
        sab: Limit agreement of the pair; converged limits are recorded.
        window: Sweep window, inside the trust window.
        m: Fibre dimension parameter, carried as metadata only.
        coalesce_tol: Events closer than this share one level.

    Raises:
        OverlapAmbiguityError: If band components cannot be continued uniquely.
        CriticalPointError: If a profile misses a critical point.
        DegenerateSliceError: If a slice membership cannot be decided.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    if p1.function != c1 or p2.function != c2:
        raise ValueError("profiles do not belong to the given functions")
    for profile in (p1, p2):
        verify_monotone(profile)

    engine = SliceEngine(p1, p2, window)
    levels = event_levels(event_schedule(p1, p2), coalesce_tol)
    if not levels:
        raise ValueError("no event levels: both boundary functions are constant")

    span = max(levels[-1].hi - levels[0].lo, 1.0)
    outer = max(1e-3 * span, 1e-6)
    probe_values: List[float] = []
    bands: List[Tuple[Optional[int], Optional[int]]] = []

    def add_band(lower: Optional[int], upper: Optional[int], a: float, b: float):
        delta = _probe_offset(b - a)
        probe_values.extend([a + delta, 0.5 * (a + b), b - delta])
        bands.append((lower, upper))

    add_band(None, 0, levels[0].lo - 2 * outer, levels[0].lo)
    for i in range(len(levels) - 1):
        add_band(i, i + 1, levels[i].hi, levels[i + 1].lo)
    add_band(len(levels) - 1, None, levels[-1].hi, levels[-1].hi + 2 * outer)

    all_values = [lvl.value for lvl in levels] + probe_values
    snaps = [(lvl.lo, lvl.hi) for lvl in levels] + [None] * len(probe_values)
    slices = engine.components(all_values, snaps)
    event_slices = slices[: len(levels)]
    probe_slices = slices[len(levels):]

    nodes: List[_Node] = []
    by_level: Dict[int, List[int]] = {}
    for i, comps in enumerate(event_slices):
        by_level[i] = []
        for comp in comps:
            nodes.append(_Node(i, comp))
            by_level[i].append(len(nodes) - 1)

    eps = OVERLAP_EPS * max(1.0, window.width)
    segments: List[_Segment] = []
    for band, (lower, upper) in enumerate(bands):
        low, mid, up = probe_slices[3 * band: 3 * band + 3]
        if not (len(low) == len(mid) == len(up)):
            raise OverlapAmbiguityError(
                f"component count changes between t={probe_values[3 * band]!r} and "
                f"t={probe_values[3 * band + 2]!r} without an event"
            )
        for k in range(len(mid)):
            seg = _Segment(band, low[k], mid[k], up[k])
            if lower is not None:
                seg.below = _link(low[k], lower, nodes, by_level, eps)
                nodes[seg.below].above += 1
            if upper is not None:
                seg.above = _link(up[k], upper, nodes, by_level, eps)
                nodes[seg.above].below += 1
            segments.append(seg)

    for node in nodes:
        level = levels[node.level]
        noncompact = bool(node.component.unbounded_ends & level.noncompact_ends)
        node.is_vertex = (node.below, node.above) != (1, 1) or noncompact

    vertices = _make_vertices(nodes, levels, eps)
    edges = _make_edges(nodes, segments, vertices, (p1, p2))
    nf = _nf_annotations(vertices, (p1, p2))
    limits = tuple(
        sab.at(end).value if sab.at(end).kind is EndAgreement.SAME_LIMIT else None for end in End
    )
    logger.debug(
        "Pre-digraph assembled",
        extra={"event": "predigraph_assembled", "levels": len(levels), "nodes": len(nodes)},
    )
    return WindowedPreDigraph(tuple(vertices), tuple(edges), tuple(nf), m, window, limits)


def _confirm(kinds: Sequence[EventKind], below: int, above: int) -> bool:
    checks = {
        EventKind.BIRTH: below == 0,
        EventKind.DEATH: above == 0,
        EventKind.MERGE: below >= 2,
        EventKind.SPLIT: above >= 2,
    }
    return any(checks[k] for k in kinds if k in checks) if kinds else True


def _make_vertices(nodes: List[_Node], levels: List[EventLevel], eps: float) -> List[Vertex]:
    drafts = []
    for index, node in enumerate(nodes):
        if not node.is_vertex:
            continue
        level = levels[node.level]
        comp = node.component
        critical = [e for e in level.events if e.is_critical and comp.contains(e.x, eps)]
        noncompact = comp.unbounded_ends & level.noncompact_ends
        if noncompact:
            kind = VertexKind.NONCOMPACT_CONTOUR
        elif critical:
            kind = VertexKind.CRITICAL
        else:
            kind = VertexKind.WINDOW_BOUNDARY
        critical_kinds = sorted({e.kind for e in critical}, key=lambda k: _KIND_ORDER[k])
        if critical and kind is VertexKind.CRITICAL and not _confirm(critical_kinds, node.below, node.above):
            logger.warning(
                "Event kind not confirmed by slice incidence",
                extra={
                    "event": "event_kind_unconfirmed",
                    "t": level.value,
                    "kinds": [k.value for k in critical_kinds],
                    "incidence": [node.below, node.above],
                },
            )
        event_kinds = [k.value for k in critical_kinds]
        if noncompact:
            event_kinds.append(EventKind.NONCOMPACT_CONTOUR.value)
        if kind is VertexKind.WINDOW_BOUNDARY:
            event_kinds.append(EventKind.WINDOW_ARTIFACT.value)
        x = critical[0].x if critical else 0.5 * (comp.left + comp.right)
        drafts.append((level.value, comp.left, index, kind, x, tuple(event_kinds)))

    drafts.sort(key=lambda d: (d[0], d[1], d[2]))
    vertices = []
    for n, (value, _, index, kind, x, event_kinds) in enumerate(drafts):
        node = nodes[index]
        node.vertex_id = f"v{n}"
        comp = node.component
        vertices.append(
            Vertex(
                id=node.vertex_id,
                value=value,
                kind=kind,
                level=node.level,
                x=float(x),
                x_range=(comp.left, comp.right),
                unbounded_ends=comp.unbounded_ends,
                walls=comp.walls,
                event_kinds=event_kinds,
            )
        )
    return vertices


def _make_edges(
    nodes: List[_Node],
    segments: List[_Segment],
    vertices: List[Vertex],
    profiles: Sequence[CriticalProfile],
) -> List[Edge]:
    values = {v.id: v.value for v in vertices}
    order = {v.id: i for i, v in enumerate(vertices)}
    upward: Dict[int, List[_Segment]] = {}
    for seg in segments:
        if seg.below is not None:
            upward.setdefault(seg.below, []).append(seg)

    starts = [seg for seg in segments if seg.below is None]
    for index, node in enumerate(nodes):
        if node.is_vertex:
            starts.extend(upward.get(index, []))

    drafts = []
    for start in starts:
        seg = start
        lo, hi = math.inf, -math.inf
        while True:
            for comp in (seg.lower, seg.middle, seg.upper):
                lo, hi = min(lo, comp.left), max(hi, comp.right)
            if seg.above is None:
                head = None
                break
            node = nodes[seg.above]
            lo, hi = min(lo, node.component.left), max(hi, node.component.right)
            if node.is_vertex:
                head = node.vertex_id
                break
            seg = upward[seg.above][0]
        tail = nodes[start.below].vertex_id if start.below is not None else None
        tail_walls = start.lower.walls
        head_walls = seg.upper.walls
        tail_family = tail is not None and _family(profiles, tail_walls, values[tail], Side.ABOVE)
        head_family = head is not None and _family(profiles, head_walls, values[head], Side.BELOW)
        drafts.append((tail, head, (lo, hi), tail_walls, head_walls, tail_family, head_family))

    drafts.sort(
        key=lambda d: (
            order[d[0]] if d[0] is not None else -1,
            order[d[1]] if d[1] is not None else len(order),
            d[2],
        )
    )
    return [
        Edge(f"e{n}", tail, head, witness, tw, hw, tf, hf)
        for n, (tail, head, witness, tw, hw, tf, hf) in enumerate(drafts)
    ]


def _nf_annotations(vertices: List[Vertex], profiles: Sequence[CriticalProfile]) -> List[NfAnnotation]:
    annotations = []
    for v in vertices:
        if v.kind is not VertexKind.NONCOMPACT_CONTOUR:
            continue
        ends = set()
        sides = set()
        for end in v.unbounded_ends:
            for p in profiles:
                d = p.tail(end)
                if d.converges_to(v.value) and d.is_accumulating:
                    ends.add(end)
                    sides |= d.clustering_sides
        if sides:
            annotations.append(NfAnnotation(v.id, v.value, frozenset(ends), frozenset(sides)))
    return annotations
