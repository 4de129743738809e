"""
Tests for DOT and SVG emitters.
"""

from app.core.expr import parse
from app.core.gdnf import TEMPLATES, PatternLabel, build_gdnf
from app.core.interval import Interval
from app.render import gdnf_dot, predigraph_dot, region_svg


class TestDot:
    """Test DOT text."""

    def test_predigraph(self, two_lobe_graph):
        """Test that vertices, edges and the NF colour appear."""
        text = predigraph_dot(two_lobe_graph, title="two lobes")
        assert text.startswith("// two lobes\ndigraph predigraph {")
        assert "n0 -> v1" in text and "n0 -> v2" in text and "v0 -> n0" in text
        assert "doublecircle" in text
        assert "color=red" in text

    def test_gdnf(self, two_lobe_graph):
        """Test class nodes and NF provenance labels."""
        text = gdnf_dot(build_gdnf(two_lobe_graph))
        assert "C0 -> C1" in text and "C0 -> C2" in text
        assert "d0: n0@0" in text

    def test_dangling_edge_end(self):
        """Test that a dangling GDNF edge ends on a point node."""
        template = TEMPLATES[PatternLabel.P1_2_2][0]
        text = gdnf_dot(template)
        assert "shape=point" in text

    def test_deterministic(self, two_lobe_graph):
        """Test that repeated emission is identical."""
        assert predigraph_dot(two_lobe_graph) == predigraph_dot(two_lobe_graph)


class TestSvg:
    """Test the region figure."""

    def test_byte_identical(self):
        """Test that two renders of the same strip match exactly."""
        c1, c2 = parse("-1/(x^2+1)"), parse("1/(x^2+1) - 1/(x^2+1)^2")
        window = Interval(-5.0, 5.0)
        first = region_svg(c1, c2, window, [-1.0, 0.0, 0.25], [0.0], title="smooth")
        second = region_svg(c1, c2, window, [-1.0, 0.0, 0.25], [0.0], title="smooth")
        assert first == second
        assert first.lstrip().startswith("<?xml")
        assert "<dc:date>" not in first
