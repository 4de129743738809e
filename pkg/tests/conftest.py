"""
Shared fixtures for reeb-strip tests.
"""

import tempfile
from pathlib import Path
from typing import Dict, FrozenSet, Optional, Sequence, Tuple

import pytest

from app.core.fixtures import load_fixture
from app.core.interval import Interval
from app.core.pipeline import AnalysisPipeline, WindowResult
from app.core.predigraph import Edge, NfAnnotation, Vertex, VertexKind, WindowedPreDigraph
from app.core.profile import End, Side


@pytest.fixture
def temp_dir():
    """Create temporary directory for testing."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


@pytest.fixture(scope="session")
def window_result():
    """Single-window analysis of a bundled fixture, computed once per session."""
    cache: Dict[str, WindowResult] = {}

    def get(name: str) -> WindowResult:
        if name not in cache:
            cache[name] = AnalysisPipeline(load_fixture(name)).run_window()
        return cache[name]

    return get


BOTH_ENDS = frozenset({End.NEG_INF, End.POS_INF})


def vertex(
    vid: str,
    value: float,
    kind: VertexKind = VertexKind.CRITICAL,
    x: float = 0.0,
    level: Optional[int] = None,
    unbounded: FrozenSet[End] = frozenset(),
    walls: FrozenSet[End] = frozenset(),
) -> Vertex:
    return Vertex(
        id=vid,
        value=value,
        kind=kind,
        level=level if level is not None else int(value * 1000),
        x=x,
        x_range=(x, x),
        unbounded_ends=unbounded,
        walls=walls,
    )


def edge(eid: str, tail: Optional[str], head: Optional[str], tail_family: bool = False, head_family: bool = False) -> Edge:
    return Edge(eid, tail, head, (0.0, 0.0), tail_family=tail_family, head_family=head_family)


def nf(vid: str, value: float, sides: Sequence[Side], ends: FrozenSet[End] = BOTH_ENDS) -> NfAnnotation:
    return NfAnnotation(vid, value, ends, frozenset(sides))


def graph(
    vertices: Sequence[Vertex],
    edges: Sequence[Edge],
    annotations: Sequence[NfAnnotation] = (),
    window: Tuple[float, float] = (-5.0, 5.0),
) -> WindowedPreDigraph:
    return WindowedPreDigraph(tuple(vertices), tuple(edges), tuple(annotations), 2, Interval(*window))


@pytest.fixture
def two_lobe_graph() -> WindowedPreDigraph:
    """One clustering family below an NF contour at 0 feeding two lobes above it."""
    return graph(
        [
            vertex("v0", -1.0),
            vertex("n0", 0.0, VertexKind.NONCOMPACT_CONTOUR, unbounded=BOTH_ENDS, walls=BOTH_ENDS),
            vertex("v1", 0.25, x=-1.0),
            vertex("v2", 0.25, x=1.0),
        ],
        [
            edge("e0", "v0", "n0", head_family=True),
            edge("e1", "n0", "v1"),
            edge("e2", "n0", "v2"),
        ],
        [nf("n0", 0.0, [Side.BELOW])],
    )
