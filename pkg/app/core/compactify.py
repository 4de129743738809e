"""
Compactification of the strip to the sphere and the GDNF invariance check.

Both ends of the strip close up at the common limit values a1 (at -inf)
and a2 (at +inf). A pole is absorbed into the noncompact contour vertex at
its limit value when one reaches that end; otherwise a Pole vertex is
appended and joined to the nearest non-NF vertex touching that wall.
"""

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

from app.core.errors import CompactificationError, CompactificationPreconditionError, InvarianceError
from app.core.gdnf import INVARIANT_PATTERNS, Gdnf, PatternLabel, classify_pattern
from app.core.predigraph import (
    Edge,
    IsomorphismMapping,
    Vertex,
    VertexKind,
    WindowedPreDigraph,
    isomorphic,
)
from app.core.profile import End, LimitKind


@dataclass(frozen=True)
class PoleRecord:
    end: End
    value: float
    vertex_id: str
    absorbed: bool


@dataclass(frozen=True)
class CompactifiedGraph:
    graph: WindowedPreDigraph
    limits: Tuple[float, float]
    poles: Tuple[PoleRecord, ...]


def _limits(descriptors) -> Tuple[float, float]:
    tails_c1, tails_c2 = descriptors
    limits = []
    for d1, d2 in zip(tails_c1, tails_c2):
        for d in (d1, d2):
            if d.limit is not LimitKind.CONVERGE:
                raise CompactificationPreconditionError(
                    f"the {d.end.value} end diverges ({d.limit.value}); compactification needs "
                    "convergent tails, a diverging end would call for a circle-valued map instead"
                )
        if d1.value != d2.value:
            raise CompactificationPreconditionError(
                f"c1 and c2 converge to different limits at the {d1.end.value} end "
                f"({d1.value!r} vs {d2.value!r})"
            )
        limits.append(float(d1.value))
    return limits[0], limits[1]


def _existing_pole(g: WindowedPreDigraph, end: End) -> Optional[PoleRecord]:
    for v in g.vertices:
        if end in v.poles:
            return PoleRecord(end, v.value, v.id, v.kind is not VertexKind.POLE)
    return None


def _absorbing_vertex(g: WindowedPreDigraph, end: End, value: float) -> Optional[Vertex]:
    for v in g.vertices:
        if v.kind is VertexKind.NONCOMPACT_CONTOUR and v.value == value and end in v.unbounded_ends:
            return v
    return None


def _attachment(g: WindowedPreDigraph, end: End, value: float) -> Optional[Vertex]:
    candidates = [
        v for v in g.vertices
        if end in v.walls and v.id not in g.nf_ids and v.kind is not VertexKind.POLE and v.value != value
    ]
    if not candidates:
        return None
    return min(candidates, key=lambda v: (abs(v.value - value), v.id))


def compactify(g: WindowedPreDigraph, descriptors) -> CompactifiedGraph:
    """Close both ends of the strip with poles at the declared limits.

    Args:
        g: Windowed pre-digraph of the strip.
        descriptors: (tails_c1, tails_c2), each ordered (-inf, +inf).

    Raises:
        CompactificationPreconditionError: If an end diverges or the limits differ.
        CompactificationError: If a1 == a2 and no noncompact contour sits at that value.
    """
    limits = _limits(descriptors)
    if limits[0] == limits[1] and not any(
        v.kind is VertexKind.NONCOMPACT_CONTOUR and v.value == limits[0] for v in g.vertices
    ):
        raise CompactificationError(
            f"both ends converge to {limits[0]!r} but no noncompact contour carries that value"
        )

    vertices: Dict[str, Vertex] = {v.id: v for v in g.vertices}
    order: List[str] = [v.id for v in g.vertices]
    edges: List[Edge] = list(g.edges)
    records: List[PoleRecord] = []

    for end, value in zip(End, limits):
        current = replace(g, vertices=tuple(vertices[i] for i in order), edges=tuple(edges))
        existing = _existing_pole(current, end)
        if existing is not None:
            records.append(existing)
            continue

        target = _absorbing_vertex(current, end, value)
        if target is not None:
            vertices[target.id] = replace(
                target,
                pole_closed=target.id in g.nf_ids or target.pole_closed,
                poles=target.poles | {end},
            )
            records.append(PoleRecord(end, value, target.id, True))
            continue

        pole_id = f"pole{'-' if end is End.NEG_INF else '+'}"
        x = math.copysign(math.inf, end.sign)
        vertices[pole_id] = Vertex(
            id=pole_id,
            value=value,
            kind=VertexKind.POLE,
            level=-1,
            x=x,
            x_range=(x, x),
            event_kinds=("pole",),
            poles=frozenset({end}),
        )
        order.append(pole_id)
        anchor = _attachment(current, end, value)
        if anchor is not None:
            tail, head = (anchor.id, pole_id) if anchor.value < value else (pole_id, anchor.id)
            edges.append(Edge(f"e{len(edges)}", tail, head, (x, x)))
        records.append(PoleRecord(end, value, pole_id, False))

    ordered = sorted((vertices[i] for i in order), key=lambda v: v.value)
    graph = replace(g, vertices=tuple(ordered), edges=tuple(edges), limits=limits)
    return CompactifiedGraph(graph, limits, tuple(records))


@dataclass(frozen=True)
class InvarianceResult:
    isomorphic: bool
    pattern: PatternLabel
    asserted: bool
    mapping: Optional[IsomorphismMapping] = None

    @property
    def verdict(self) -> str:
        return "Isomorphic" if self.isomorphic else "Different"


def check_invariance(before: Gdnf, after: Gdnf) -> InvarianceResult:
    """Compare GDNFs before and after compactification.

    Only the patterns with two edges are required to be invariant; for the
    others the outcome is reported as observed.

    Raises:
        InvarianceError: If a required pattern is not preserved.
    """
    if before.policy is not after.policy:
        raise ValueError("GDNFs were built under different policies")
    pattern = classify_pattern(before)
    mapping = isomorphic(before, after)
    asserted = pattern in INVARIANT_PATTERNS
    if asserted and mapping is None:
        raise InvarianceError(f"{pattern.value} GDNF changed under compactification")
    return InvarianceResult(mapping is not None, pattern, asserted, mapping)
