"""
Tests for pre-digraph validation, NF observation, isomorphism and complex
classes.
"""

import pytest
from hypothesis import given, settings, strategies as st

from app.core.errors import DescriptorError
from app.core.predigraph import (
    ComplexClass,
    VertexKind,
    complex_class,
    dense_ranks,
    isomorphic,
    nf_mismatches,
    nf_points,
    validate,
)
from app.core.profile import Side
from tests.conftest import BOTH_ENDS, edge, graph, nf, vertex


@st.composite
def small_graphs(draw):
    """Upward graphs on up to six vertices with distinct integer values."""
    n = draw(st.integers(min_value=2, max_value=6))
    values = sorted(draw(st.lists(st.integers(min_value=-20, max_value=20), min_size=n, max_size=n, unique=True)))
    vertices = [vertex(f"v{i}", float(v), x=float(i)) for i, v in enumerate(values)]
    index = st.integers(min_value=0, max_value=n - 1)
    pairs = draw(st.lists(st.tuples(index, index).filter(lambda p: p[0] != p[1]).map(sorted), max_size=8))
    edges = [edge(f"e{k}", f"v{a}", f"v{b}") for k, (a, b) in enumerate(pairs)]
    return graph(vertices, edges)


class TestValidate:
    """Test the pre-digraph contract."""

    def test_valid_graph(self, two_lobe_graph):
        """Test that the two-lobe graph validates."""
        assert validate(two_lobe_graph) == []

    def test_downward_edge(self):
        """Test that an edge must run to a higher value."""
        g = graph([vertex("a", 1.0), vertex("b", 0.0)], [edge("e0", "a", "b")])
        assert any("runs from" in v for v in validate(g))

    def test_non_injective_edge(self):
        """Test that both ends of an edge cannot share a value."""
        g = graph([vertex("a", 1.0, x=-1.0), vertex("b", 1.0, x=1.0)], [edge("e0", "a", "b")])
        assert any("non-injective" in v for v in validate(g))

    def test_unknown_vertex(self):
        """Test dangling references."""
        g = graph([vertex("a", 0.0)], [edge("e0", "a", "zz")])
        assert validate(g) == ["edge e0 references unknown vertex zz"]

    def test_nf_on_critical_vertex(self):
        """Test that NF annotations need a noncompact contour."""
        g = graph([vertex("a", 0.0)], [], [nf("a", 0.0, [Side.BELOW])])
        assert any("NF annotation on critical vertex a" in v for v in validate(g))


class TestQueries:
    """Test graph queries."""

    def test_edges_crossing(self, two_lobe_graph):
        """Test edge counts at regular values."""
        assert two_lobe_graph.edges_crossing(-0.5) == 1
        assert two_lobe_graph.edges_crossing(0.1) == 2
        assert two_lobe_graph.edges_crossing(1.0) == 0

    def test_stub_spans_are_unbounded(self):
        """Test that open stubs reach infinity."""
        g = graph([vertex("a", 0.0)], [edge("e0", "a", None)])
        assert g.value_span(g.edges[0]) == (0.0, float("inf"))
        assert g.edges_crossing(1e9) == 1

    def test_dense_ranks(self):
        """Test that equal values share a rank."""
        assert dense_ranks([0.3, -1.0, 0.3, 2.0]) == {-1.0: 0, 0.3: 1, 2.0: 2}


class TestIsomorphism:
    """Test order- and orientation-preserving isomorphism."""

    def test_identity(self, two_lobe_graph):
        """Test that a graph maps to itself by the identity."""
        mapping = isomorphic(two_lobe_graph, two_lobe_graph)
        assert mapping is not None
        assert mapping.vertices == {"v0": "v0", "n0": "n0", "v1": "v1", "v2": "v2"}

    def test_monotone_relabelling(self, two_lobe_graph):
        """Test that only the order of values matters."""
        stretched = two_lobe_graph.with_values(lambda t: 3.0 * t + 7.0)
        assert isomorphic(two_lobe_graph, stretched) is not None

    def test_order_change_breaks_isomorphism(self):
        """Test that swapping the order of two values is detected."""
        a = graph(
            [vertex("p", 0.0), vertex("q", 1.0), vertex("r", 2.0)],
            [edge("e0", "p", "r"), edge("e1", "q", "r")],
        )
        b = graph(
            [vertex("p", 0.0), vertex("q", 1.0), vertex("r", 2.0)],
            [edge("e0", "p", "q"), edge("e1", "p", "r")],
        )
        assert isomorphic(a, b) is None

    def test_nf_flag_matters(self, two_lobe_graph):
        """Test that NF vertices only map to NF vertices."""
        plain = graph(list(two_lobe_graph.vertices), list(two_lobe_graph.edges))
        assert isomorphic(two_lobe_graph, plain) is None

    def test_edge_removal(self, two_lobe_graph):
        """Test that dropping an edge changes the class."""
        assert isomorphic(two_lobe_graph, two_lobe_graph.without_edge("e2")) is None

    @settings(max_examples=50)
    @given(st.data())
    def test_reflexive_and_symmetric(self, data):
        """Test reflexivity and symmetry on generated graphs."""
        g = data.draw(small_graphs())
        h = data.draw(small_graphs())
        assert isomorphic(g, g) is not None
        assert (isomorphic(g, h) is None) == (isomorphic(h, g) is None)
        stretched = g.with_values(lambda t: 2.0 * t - 1.0)
        assert isomorphic(g, stretched) is not None
        assert isomorphic(stretched, g) is not None


class TestComplexClass:
    """Test complex classification."""

    def test_graph(self, two_lobe_graph):
        """Test a graph without stubs or loops."""
        assert complex_class(two_lobe_graph) is ComplexClass.GRAPH

    def test_with_ends(self):
        """Test that stubs make a complex with ends."""
        g = graph([vertex("a", 0.0)], [edge("e0", None, "a")])
        assert complex_class(g) is ComplexClass.WITH_ENDS


class TestNfObservation:
    """Test that NF flags are checked against in-window accumulation."""

    def _accumulating(self, sides):
        critical = [
            vertex(f"c{i}", -0.5 / (i + 1), x=x)
            for i, x in enumerate([1.5, 2.5, 3.5, 4.0, 4.5])
        ]
        contour = vertex("n0", 0.0, VertexKind.NONCOMPACT_CONTOUR, unbounded=BOTH_ENDS, walls=BOTH_ENDS)
        return graph(critical + [contour], [], [nf("n0", 0.0, sides)] if sides else [])

    def test_declared_and_observed(self):
        """Test that an NF flag backed by accumulation passes."""
        g = self._accumulating([Side.BELOW])
        assert nf_mismatches(g) == []
        assert {a.vertex_id for a in nf_points(g)} == {"n0"}

    def test_missing_flag(self):
        """Test that observed accumulation without a flag is reported."""
        g = self._accumulating([])
        mismatches = nf_mismatches(g)
        assert mismatches == ["vertex n0: declared clustering sides none, observed below"]
        with pytest.raises(DescriptorError):
            nf_points(g)
