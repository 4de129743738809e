"""
Windowed pre-digraph model, NF points, isomorphism and complex classes.

Isomorphism preserves incidence, edge orientation, NF flags and the strict
order of vertex values. Only the order matters, never the values, so each
vertex is labelled with the dense rank of its value and matching is done on
ranks with networkx's VF2 matcher.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
from networkx.algorithms.isomorphism import (
    MultiDiGraphMatcher,
    categorical_multiedge_match,
    categorical_node_match,
)

from app.core.errors import DescriptorError
from app.core.interval import Interval
from app.core.profile import End, Side

VALUE_SEPARATION = 1e-12


class VertexKind(str, Enum):
    CRITICAL = "critical"
    NONCOMPACT_CONTOUR = "noncompact_contour"
    WINDOW_BOUNDARY = "window_boundary"
    POLE = "pole"


class ComplexClass(str, Enum):
    GRAPH = "graph"
    # only arises for infinite complexes; finite inputs never produce it
    WEAKLY_ALMOST_GRAPH = "weakly_almost_graph"
    WITH_ENDS = "with_ends"
    WITH_ENDS_AND_LOOPS = "with_ends_and_loops"


@dataclass(frozen=True)
class Vertex:
    id: str
    value: float
    kind: VertexKind
    level: int
    x: float
    x_range: Tuple[float, float]
    unbounded_ends: FrozenSet[End] = frozenset()
    walls: FrozenSet[End] = frozenset()
    event_kinds: Tuple[str, ...] = ()
    pole_closed: bool = False
    poles: FrozenSet[End] = frozenset()


@dataclass(frozen=True)
class Edge:
    """Oriented edge from the lower-valued tail to the higher-valued head.

    A missing tail or head is an open stub: the component leaves the sampled
    value range.
    """

    id: str
    tail: Optional[str]
    head: Optional[str]
    witness: Tuple[float, float]
    tail_walls: FrozenSet[End] = frozenset()
    head_walls: FrozenSet[End] = frozenset()
    tail_family: bool = False
    head_family: bool = False

    @property
    def is_stub(self) -> bool:
        return self.tail is None or self.head is None


@dataclass(frozen=True)
class NfAnnotation:
    vertex_id: str
    value: float
    ends: FrozenSet[End]
    clustering_sides: FrozenSet[Side]


@dataclass(frozen=True)
class WindowedPreDigraph:
    vertices: Tuple[Vertex, ...]
    edges: Tuple[Edge, ...]
    nf: Tuple[NfAnnotation, ...]
    m: int
    window: Interval
    limits: Tuple[Optional[float], Optional[float]] = (None, None)

    @cached_property
    def vertex_map(self) -> Dict[str, Vertex]:
        return {v.id: v for v in self.vertices}

    def vertex(self, vertex_id: str) -> Vertex:
        return self.vertex_map[vertex_id]

    @cached_property
    def nf_ids(self) -> FrozenSet[str]:
        return frozenset(a.vertex_id for a in self.nf)

    def annotation(self, vertex_id: str) -> Optional[NfAnnotation]:
        for a in self.nf:
            if a.vertex_id == vertex_id:
                return a
        return None

    def in_edges(self, vertex_id: str) -> List[Edge]:
        return [e for e in self.edges if e.head == vertex_id]

    def out_edges(self, vertex_id: str) -> List[Edge]:
        return [e for e in self.edges if e.tail == vertex_id]

    def value_span(self, edge: Edge) -> Tuple[float, float]:
        lo = -math.inf if edge.tail is None else self.vertex(edge.tail).value
        hi = math.inf if edge.head is None else self.vertex(edge.head).value
        return lo, hi

    def edges_crossing(self, t: float) -> int:
        count = 0
        for e in self.edges:
            lo, hi = self.value_span(e)
            if lo < t < hi:
                count += 1
        return count

    def with_values(self, transform: Callable[[float], float]) -> "WindowedPreDigraph":
        """Same graph with every vertex value passed through `transform`."""
        vertices = tuple(replace(v, value=transform(v.value)) for v in self.vertices)
        nf = tuple(replace(a, value=transform(a.value)) for a in self.nf)
        return replace(self, vertices=vertices, nf=nf)

    def without_edge(self, edge_id: str) -> "WindowedPreDigraph":
        return replace(self, edges=tuple(e for e in self.edges if e.id != edge_id))

    def labeled_graph(self) -> nx.MultiDiGraph:
        ranks = dense_ranks([v.value for v in self.vertices])
        graph = nx.MultiDiGraph()
        for v in self.vertices:
            graph.add_node(v.id, role="vertex", rank=ranks[v.value], nf=v.id in self.nf_ids)
        for e in self.edges:
            tail = e.tail if e.tail is not None else f"~{e.id}"
            head = e.head if e.head is not None else f"~{e.id}"
            for node in (tail, head):
                if node not in graph:
                    graph.add_node(node, role="stub", rank=None, nf=False)
            graph.add_edge(tail, head, key=e.id, rank=None)
        return graph


def dense_ranks(values: Sequence[float]) -> Dict[float, int]:
    return {value: rank for rank, value in enumerate(sorted(set(values)))}


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(g: WindowedPreDigraph) -> List[str]:
    """Violations of the pre-digraph contract; empty means valid."""
    violations: List[str] = []
    ids = g.vertex_map

    for e in g.edges:
        missing = [end for end in (e.tail, e.head) if end is not None and end not in ids]
        if missing:
            violations.append(f"edge {e.id} references unknown vertex {missing[0]}")
            continue
        if e.tail is None or e.head is None:
            continue
        lo, hi = ids[e.tail].value, ids[e.head].value
        if lo == hi:
            violations.append(f"non-injective edge {e.id}: both ends at value {lo!r}")
        elif lo > hi:
            violations.append(f"edge {e.id} runs from {lo!r} down to {hi!r}")

    ordered = sorted(g.vertices, key=lambda v: v.value)
    for a, b in zip(ordered, ordered[1:]):
        if b.value - a.value < VALUE_SEPARATION and a.level != b.level:
            violations.append(f"vertices {a.id} and {b.id} are not separated in value")

    for annotation in g.nf:
        vertex = ids.get(annotation.vertex_id)
        if vertex is None:
            violations.append(f"NF annotation references unknown vertex {annotation.vertex_id}")
            continue
        if vertex.kind is not VertexKind.NONCOMPACT_CONTOUR:
            violations.append(f"NF annotation on {vertex.kind.value} vertex {vertex.id}")
        if not annotation.clustering_sides:
            violations.append(f"NF annotation on {vertex.id} has no clustering side")
        if annotation.value != vertex.value:
            violations.append(f"NF annotation value differs from vertex {vertex.id}")
    return violations


# ---------------------------------------------------------------------------
# NF points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NfObservation:
    vertex_id: str
    flagged: FrozenSet[Side]
    observed: FrozenSet[Side]
    counts: Dict[str, Tuple[int, int]] = field(default_factory=dict, compare=False)

    @property
    def consistent(self) -> bool:
        return self.flagged == self.observed


def _side_counts(g: WindowedPreDigraph, vertex: Vertex, side: Side, end: End) -> Tuple[int, int]:
    centre = g.window.mid
    width = g.window.width
    full = half = 0
    for w in g.vertices:
        if w.kind is not VertexKind.CRITICAL:
            continue
        if side is Side.ABOVE and not w.value > vertex.value:
            continue
        if side is Side.BELOW and not w.value < vertex.value:
            continue
        offset = (w.x - centre) * end.sign
        if offset <= 1e-9 * width:
            continue
        full += 1
        if offset <= 0.25 * width:
            half += 1
    return full, half


def observe_nf(g: WindowedPreDigraph) -> List[NfObservation]:
    """Re-derive, from in-window vertices, which noncompact contours are NF.

    A side accumulates toward an end when at least three critical vertices lie
    strictly on that side of the value on the end's half of the window, and
    more of them than on the inner half of that half.
    """
    observations = []
    for vertex in g.vertices:
        if vertex.kind is not VertexKind.NONCOMPACT_CONTOUR:
            continue
        annotation = g.annotation(vertex.id)
        flagged = annotation.clustering_sides if annotation else frozenset()
        observed = set()
        counts = {}
        for end in sorted(vertex.unbounded_ends, key=lambda e: e.value):
            for side in Side:
                full, half = _side_counts(g, vertex, side, end)
                counts[f"{end.value}:{side.value}"] = (full, half)
                if full >= 3 and full > half:
                    observed.add(side)
        observations.append(NfObservation(vertex.id, flagged, frozenset(observed), counts))
    return observations


def nf_mismatches(g: WindowedPreDigraph) -> List[str]:
    messages = []
    for obs in observe_nf(g):
        if obs.consistent:
            continue
        flagged = ",".join(sorted(s.value for s in obs.flagged)) or "none"
        observed = ",".join(sorted(s.value for s in obs.observed)) or "none"
        messages.append(
            f"vertex {obs.vertex_id}: declared clustering sides {flagged}, observed {observed}"
        )
    return messages


def nf_points(g: WindowedPreDigraph) -> FrozenSet[NfAnnotation]:
    """NF annotations, checked against the accumulation seen in the window.

    Raises:
        DescriptorError: If a flag disagrees with the observed accumulation.
    """
    mismatches = nf_mismatches(g)
    if mismatches:
        raise DescriptorError("NF flag inconsistent with observed accumulation: " + "; ".join(mismatches))
    return frozenset(g.nf)


# ---------------------------------------------------------------------------
# Isomorphism
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsomorphismMapping:
    vertices: Dict[str, str]
    edges: Dict[str, str]


_node_match = categorical_node_match(["role", "rank", "nf"], [None, None, False])
_edge_match = categorical_multiedge_match("rank", None)


def _edge_mapping(g1: nx.MultiDiGraph, g2: nx.MultiDiGraph, nodes: Dict[str, str]) -> Dict[str, str]:
    mapping = {}
    for u, v in set(g1.edges()):
        keys1 = sorted(g1[u][v], key=lambda k: (str(g1[u][v][k].get("rank")), k))
        edges2 = g2[nodes[u]][nodes[v]]
        keys2 = sorted(edges2, key=lambda k: (str(edges2[k].get("rank")), k))
        mapping.update(zip(keys1, keys2))
    return mapping


def isomorphic(g1, g2) -> Optional[IsomorphismMapping]:
    """Order- and orientation-preserving isomorphism between two graphs.

    Accepts anything with a `labeled_graph()` method (pre-digraphs and
    GDNFs). Returns the identity when the graphs are equal.
    """
    a, b = g1.labeled_graph(), g2.labeled_graph()
    if nx.utils.graphs_equal(a, b):
        nodes = {n: n for n in a.nodes}
    else:
        matcher = MultiDiGraphMatcher(a, b, node_match=_node_match, edge_match=_edge_match)
        if not matcher.is_isomorphic():
            return None
        nodes = dict(matcher.mapping)
    edges = _edge_mapping(a, b, nodes)
    real = {k: v for k, v in nodes.items() if a.nodes[k]["role"] not in ("stub", "end")}
    return IsomorphismMapping(vertices=real, edges=edges)


def complex_class(g) -> ComplexClass:
    graph = g.labeled_graph()
    if any(u == v for u, v in graph.edges()):
        return ComplexClass.WITH_ENDS_AND_LOOPS
    if any(data["role"] in ("stub", "end") for _, data in graph.nodes(data=True)):
        return ComplexClass.WITH_ENDS
    return ComplexClass.GRAPH
