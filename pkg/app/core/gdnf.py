"""
Graph diagrams for the NF case (GDNF).

The pre-digraph minus its NF vertices falls apart into components. Each
edge germ at a deleted NF vertex is recorded with the side it approaches
from; components are then related per policy and the classes become the
GDNF's vertices, joined across every NF point from below-attached classes
to above-attached classes.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx
from networkx.utils import UnionFind

from app.core.errors import GdnfError
from app.core.interval import Interval
from app.core.predigraph import WindowedPreDigraph, dense_ranks, isomorphic
from app.core.profile import Side


class Policy(str, Enum):
    CLUSTER_RESTRICTED = "cluster_restricted"
    LITERAL_DEF4 = "literal_def4"


class Multiplicity(str, Enum):
    SINGLE = "single"
    CLUSTER_FAMILY = "cluster_family"


class PatternLabel(str, Enum):
    P1_2_1 = "P1_2_1"
    P1_2_2 = "P1_2_2"
    P1_2_3 = "P1_2_3"
    P1_2_4 = "P1_2_4"
    P1_2_5 = "P1_2_5"
    P1_2_6 = "P1_2_6"
    OTHER = "Other"


INVARIANT_PATTERNS = frozenset({PatternLabel.P1_2_4, PatternLabel.P1_2_5, PatternLabel.P1_2_6})


@dataclass(frozen=True)
class GermRow:
    component: str
    nf_vertex: str
    nf_value: float
    side: Side
    multiplicity: Multiplicity
    edge: str


@dataclass(frozen=True)
class GermTable:
    rows: Tuple[GermRow, ...]
    components: Tuple[str, ...]
    members: Tuple[Tuple[str, ...], ...] = ()

    def rows_at(self, nf_vertex: str) -> List[GermRow]:
        return [r for r in self.rows if r.nf_vertex == nf_vertex]


@dataclass(frozen=True)
class EquivalenceClass:
    id: str
    members: Tuple[str, ...]


@dataclass(frozen=True)
class GdnfEdge:
    """Edge at one NF point; a missing source or target is a dangling end."""

    id: str
    nf_vertex: str
    nf_value: float
    source: Optional[str]
    target: Optional[str]

    @property
    def is_dangling(self) -> bool:
        return self.source is None or self.target is None

    @property
    def is_loop(self) -> bool:
        return self.source is not None and self.source == self.target


@dataclass(frozen=True)
class Gdnf:
    classes: Tuple[EquivalenceClass, ...]
    edges: Tuple[GdnfEdge, ...]
    policy: Policy = Policy.CLUSTER_RESTRICTED
    table: Optional[GermTable] = field(default=None, compare=False)

    @property
    def nf_values(self) -> Tuple[float, ...]:
        return tuple(sorted({e.nf_value for e in self.edges}))

    def labeled_graph(self) -> nx.MultiDiGraph:
        ranks = dense_ranks([e.nf_value for e in self.edges])
        graph = nx.MultiDiGraph()
        for cls in self.classes:
            graph.add_node(cls.id, role="class", rank=None, nf=False)
        for e in self.edges:
            source = e.source if e.source is not None else f"~{e.id}"
            target = e.target if e.target is not None else f"~{e.id}"
            for node in (source, target):
                if node not in graph:
                    graph.add_node(node, role="end", rank=None, nf=False)
            graph.add_edge(source, target, key=e.id, rank=ranks[e.nf_value])
        return graph

    def reversed(self) -> "Gdnf":
        """Orientation reverse: values negated, sources and targets swapped."""
        edges = tuple(
            replace(e, nf_value=-e.nf_value, source=e.target, target=e.source) for e in self.edges
        )
        return replace(self, edges=edges)


# ---------------------------------------------------------------------------
# Components and germs
# ---------------------------------------------------------------------------

def _member_value(g: WindowedPreDigraph, member: str) -> float:
    if member in g.vertex_map:
        return g.vertex_map[member].value
    edge = next(e for e in g.edges if e.id == member)
    lo, hi = g.value_span(edge)
    if edge.tail is None:
        return hi
    if edge.head is None:
        return lo
    return 0.5 * (lo + hi)


def components_minus_nf(g: WindowedPreDigraph) -> Tuple[Dict[str, str], GermTable]:
    """Components of the graph with NF vertices deleted, and their germs.

    Returns:
        Mapping from vertex/edge id to component id, and the germ table.
    """
    nf = g.nf_ids
    uf = UnionFind()
    for v in g.vertices:
        if v.id not in nf:
            uf[v.id]
    for e in g.edges:
        uf[e.id]
        for end in (e.tail, e.head):
            if end is not None and end not in nf:
                uf.union(e.id, end)

    groups = [sorted(s) for s in uf.to_sets()]
    groups.sort(key=lambda members: (min(_member_value(g, m) for m in members), members[0]))
    labeling = {}
    for n, members in enumerate(groups):
        for member in members:
            labeling[member] = f"K{n}"
    components = tuple(f"K{n}" for n in range(len(groups)))

    rows = []
    for e in g.edges:
        if e.head in nf:
            multiplicity = Multiplicity.CLUSTER_FAMILY if e.head_family else Multiplicity.SINGLE
            value = g.vertex(e.head).value
            rows.append(GermRow(labeling[e.id], e.head, value, Side.BELOW, multiplicity, e.id))
        if e.tail in nf:
            multiplicity = Multiplicity.CLUSTER_FAMILY if e.tail_family else Multiplicity.SINGLE
            value = g.vertex(e.tail).value
            rows.append(GermRow(labeling[e.id], e.tail, value, Side.ABOVE, multiplicity, e.id))
    order = {c: i for i, c in enumerate(components)}
    rows.sort(key=lambda r: (r.nf_value, r.side.value, order[r.component], r.edge))
    members = tuple(tuple(m) for m in groups)
    return labeling, GermTable(tuple(rows), components, members)


def equivalence_classes(table: GermTable, policy: Policy = Policy.CLUSTER_RESTRICTED) -> Tuple[EquivalenceClass, ...]:
    """Classes of components related through shared (NF point, side) germs.

    ClusterRestricted relates only ClusterFamily germs; LiteralDef4 relates
    every germ on the same side of the same NF point.
    """
    uf = UnionFind(table.components)
    groups: Dict[Tuple[str, Side], List[str]] = {}
    for row in table.rows:
        if policy is Policy.LITERAL_DEF4 or row.multiplicity is Multiplicity.CLUSTER_FAMILY:
            groups.setdefault((row.nf_vertex, row.side), []).append(row.component)
    for related in groups.values():
        if len(related) > 1:
            uf.union(*related)

    order = {c: i for i, c in enumerate(table.components)}
    sets = [sorted(s, key=order.__getitem__) for s in uf.to_sets()]
    sets.sort(key=lambda members: order[members[0]])
    return tuple(EquivalenceClass(f"C{n}", tuple(members)) for n, members in enumerate(sets))


def build_gdnf(g: WindowedPreDigraph, policy: Policy = Policy.CLUSTER_RESTRICTED) -> Gdnf:
    """GDNF of a pre-digraph.

    Raises:
        GdnfError: If an NF vertex has no attached germs.
    """
    _, table = components_minus_nf(g)
    classes = equivalence_classes(table, policy)
    class_of = {member: cls.id for cls in classes for member in cls.members}

    drafts = []
    for annotation in sorted(g.nf, key=lambda a: (a.value, a.vertex_id)):
        rows = table.rows_at(annotation.vertex_id)
        below = _unique(class_of[r.component] for r in rows if r.side is Side.BELOW)
        above = _unique(class_of[r.component] for r in rows if r.side is Side.ABOVE)
        if not below and not above:
            raise GdnfError(f"NF vertex {annotation.vertex_id} at {annotation.value!r} has no attached germs")
        if below and above:
            pairs = [(b, a) for b in below for a in above]
        elif above:
            pairs = [(None, a) for a in above]
        else:
            pairs = [(b, None) for b in below]
        for source, target in pairs:
            drafts.append((annotation.vertex_id, annotation.value, source, target))

    edges = tuple(
        GdnfEdge(f"d{n}", vertex_id, value, source, target)
        for n, (vertex_id, value, source, target) in enumerate(drafts)
    )
    return Gdnf(classes, edges, policy, table)


def _unique(items) -> List[str]:
    seen: List[str] = []
    for item in items:
        if item not in seen:
            seen.append(item)
    return seen


def both_policy_counts(g: WindowedPreDigraph) -> Dict[str, int]:
    _, table = components_minus_nf(g)
    return {policy.value: len(equivalence_classes(table, policy)) for policy in Policy}


# ---------------------------------------------------------------------------
# Pattern templates
# ---------------------------------------------------------------------------

def _template(class_count: int, edges: Sequence[Tuple[float, Optional[int], Optional[int]]]) -> Gdnf:
    classes = tuple(EquivalenceClass(f"C{i}", (f"K{i}",)) for i in range(class_count))
    gdnf_edges = tuple(
        GdnfEdge(
            f"d{n}",
            f"nf{value}",
            value,
            None if source is None else f"C{source}",
            None if target is None else f"C{target}",
        )
        for n, (value, source, target) in enumerate(edges)
    )
    return Gdnf(classes, gdnf_edges)


TEMPLATES: Dict[PatternLabel, Tuple[Gdnf, ...]] = {
    PatternLabel.P1_2_1: (_template(1, []),),
    PatternLabel.P1_2_2: (_template(1, [(0.0, None, 0)]), _template(1, [(0.0, 0, None)])),
    PatternLabel.P1_2_3: (_template(2, [(0.0, 0, 1)]),),
    PatternLabel.P1_2_4: (
        _template(3, [(0.0, 0, 1), (0.0, 0, 2)]),
        _template(3, [(0.0, 0, 1), (1.0, 0, 2)]),
    ),
    PatternLabel.P1_2_5: (
        _template(3, [(0.0, 1, 0), (0.0, 2, 0)]),
        _template(3, [(0.0, 1, 0), (1.0, 2, 0)]),
    ),
    PatternLabel.P1_2_6: (_template(3, [(0.0, 0, 1), (1.0, 1, 2)]),),
}


def classify_pattern(d: Gdnf) -> PatternLabel:
    """Match a GDNF against the six fixed patterns."""
    for label, variants in TEMPLATES.items():
        if any(isomorphic(d, template) is not None for template in variants):
            return label
    return PatternLabel.OTHER


# ---------------------------------------------------------------------------
# Window stabilization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityCertificate:
    requested: Tuple[Interval, ...]
    scheduled: Tuple[Interval, ...]
    effective: Tuple[Interval, ...]
    patterns: Tuple[PatternLabel, ...]
    first_difference: Optional[int] = None
    collapsed: Optional[int] = None

    @property
    def stable(self) -> bool:
        return self.first_difference is None and self.collapsed is None


WindowRunner = Callable[[Interval], Tuple[Interval, Gdnf]]


def fit_schedule(windows: Sequence[Interval], trusted: Interval) -> Tuple[Interval, ...]:
    """Scale a nested schedule about the outer window's centre until the
    outer window fits inside `trusted`. Inner windows keep their ratios."""
    outer = windows[-1]
    if outer.within(trusted):
        return tuple(windows)
    centre = outer.mid
    scale = min(trusted.hi - centre, centre - trusted.lo) / (0.5 * outer.width)
    if scale <= 0:
        raise ValueError("trusted interval does not contain the schedule centre")
    return tuple(Interval(centre + (w.lo - centre) * scale, centre + (w.hi - centre) * scale) for w in windows)


def stabilized_gdnf(
    windows: Sequence[Interval],
    runner: WindowRunner,
    trusted: Optional[Interval] = None,
) -> Tuple[Gdnf, StabilityCertificate]:
    """GDNF of the last window, certified against the previous windows.

    With `trusted`, the schedule is first fitted inside it. Stable means the
    effective windows are pairwise distinct and every consecutive pair of
    window GDNFs is isomorphic. An unstable result is returned, not raised.
    """
    if not windows:
        raise ValueError("at least one window is required")
    for inner, outer in zip(windows, windows[1:]):
        if not inner.within(outer):
            raise ValueError("stabilization windows must be nested and increasing")
    scheduled = fit_schedule(windows, trusted) if trusted is not None else tuple(windows)

    effective = []
    gdnfs = []
    for window in scheduled:
        clipped, d = runner(window)
        effective.append(clipped)
        gdnfs.append(d)

    collapsed = next((i for i, (a, b) in enumerate(zip(effective, effective[1:])) if a == b), None)
    first_difference = next(
        (i for i, (a, b) in enumerate(zip(gdnfs, gdnfs[1:])) if isomorphic(a, b) is None), None
    )
    certificate = StabilityCertificate(
        requested=tuple(windows),
        scheduled=scheduled,
        effective=tuple(effective),
        patterns=tuple(classify_pattern(d) for d in gdnfs),
        first_difference=first_difference,
        collapsed=collapsed,
    )
    return gdnfs[-1], certificate
