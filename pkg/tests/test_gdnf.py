"""
Tests for germ tables, equivalence policies, GDNF construction, pattern
classification and window stabilization.
"""

from dataclasses import replace

import pytest

from app.core.errors import GdnfError
from app.core.gdnf import (
    TEMPLATES,
    Gdnf,
    Multiplicity,
    PatternLabel,
    Policy,
    both_policy_counts,
    build_gdnf,
    classify_pattern,
    components_minus_nf,
    equivalence_classes,
    fit_schedule,
    stabilized_gdnf,
)
from app.core.interval import Interval
from app.core.predigraph import VertexKind, isomorphic
from app.core.profile import Side
from tests.conftest import BOTH_ENDS, edge, graph, nf, vertex


class TestGermTable:
    """Test components of the graph minus its NF vertices."""

    def test_components_and_rows(self, two_lobe_graph):
        """Test component labels and germ sides."""
        labeling, table = components_minus_nf(two_lobe_graph)
        assert table.components == ("K0", "K1", "K2")
        assert labeling["v0"] == labeling["e0"] == "K0"
        assert labeling["e1"] == labeling["v1"] == "K1"
        assert labeling["e2"] == labeling["v2"] == "K2"
        assert "n0" not in labeling

        rows = [(r.component, r.side, r.multiplicity, r.edge) for r in table.rows]
        assert rows == [
            ("K1", Side.ABOVE, Multiplicity.SINGLE, "e1"),
            ("K2", Side.ABOVE, Multiplicity.SINGLE, "e2"),
            ("K0", Side.BELOW, Multiplicity.CLUSTER_FAMILY, "e0"),
        ]
        assert [r.edge for r in table.rows_at("n0")] == ["e1", "e2", "e0"]


class TestPolicies:
    """Test the two equivalence policies."""

    def test_cluster_restricted_keeps_lobes_apart(self, two_lobe_graph):
        """Test that single germs are never merged."""
        _, table = components_minus_nf(two_lobe_graph)
        classes = equivalence_classes(table, Policy.CLUSTER_RESTRICTED)
        assert [c.members for c in classes] == [("K0",), ("K1",), ("K2",)]

    def test_literal_def4_merges_same_side(self, two_lobe_graph):
        """Test that every germ on one side of one NF point is related."""
        _, table = components_minus_nf(two_lobe_graph)
        classes = equivalence_classes(table, Policy.LITERAL_DEF4)
        assert [c.members for c in classes] == [("K0",), ("K1", "K2")]

    def test_policy_counts(self, two_lobe_graph):
        """Test the class counts reported for both policies."""
        assert both_policy_counts(two_lobe_graph) == {"cluster_restricted": 3, "literal_def4": 2}

    def test_family_germs_merge(self):
        """Test that two family germs above one NF point share a class."""
        g = graph(
            [
                vertex("n0", 0.0, VertexKind.NONCOMPACT_CONTOUR, unbounded=BOTH_ENDS),
                vertex("a", 1.0, x=-1.0),
                vertex("b", 1.0, x=1.0),
            ],
            [edge("e0", "n0", "a", tail_family=True), edge("e1", "n0", "b", tail_family=True)],
            [nf("n0", 0.0, [Side.ABOVE])],
        )
        d = build_gdnf(g, Policy.CLUSTER_RESTRICTED)
        assert len(d.classes) == 1
        assert [(e.source, e.target) for e in d.edges] == [(None, "C0")]
        assert classify_pattern(d) is PatternLabel.P1_2_2


class TestBuildGdnf:
    """Test GDNF edges across NF points."""

    def test_two_edges_from_one_class(self, two_lobe_graph):
        """Test below x above pairing at a single NF point."""
        d = build_gdnf(two_lobe_graph)
        assert [(e.id, e.nf_vertex, e.source, e.target) for e in d.edges] == [
            ("d0", "n0", "C0", "C1"),
            ("d1", "n0", "C0", "C2"),
        ]
        assert not any(e.is_loop for e in d.edges)
        assert d.nf_values == (0.0,)
        assert classify_pattern(d) is PatternLabel.P1_2_4

    def test_literal_def4_changes_pattern(self, two_lobe_graph):
        """Test that merging the lobes leaves a single edge."""
        d = build_gdnf(two_lobe_graph, Policy.LITERAL_DEF4)
        assert len(d.edges) == 1
        assert classify_pattern(d) is PatternLabel.P1_2_3

    def test_no_nf(self):
        """Test the one-point GDNF of a graph without NF points."""
        g = graph([vertex("a", 0.0), vertex("b", 1.0)], [edge("e0", "a", "b")])
        d = build_gdnf(g)
        assert len(d.classes) == 1 and d.edges == ()
        assert classify_pattern(d) is PatternLabel.P1_2_1

    def test_isolated_nf_vertex(self):
        """Test that an NF vertex without germs is rejected."""
        g = graph(
            [vertex("n0", 0.0, VertexKind.NONCOMPACT_CONTOUR, unbounded=BOTH_ENDS)],
            [],
            [nf("n0", 0.0, [Side.BELOW])],
        )
        with pytest.raises(GdnfError):
            build_gdnf(g)

    def test_dangling_edge(self):
        """Test that germs on one side only give a dangling edge."""
        g = graph(
            [vertex("a", -1.0), vertex("n0", 0.0, VertexKind.NONCOMPACT_CONTOUR, unbounded=BOTH_ENDS)],
            [edge("e0", "a", "n0", head_family=True)],
            [nf("n0", 0.0, [Side.BELOW])],
        )
        d = build_gdnf(g)
        assert d.edges[0].is_dangling
        assert d.edges[0].target is None
        assert classify_pattern(d) is PatternLabel.P1_2_2


class TestPatterns:
    """Test pattern templates and their orientation reverses."""

    def test_templates_classify_to_themselves(self):
        """Test every template variant."""
        for label, variants in TEMPLATES.items():
            for template in variants:
                assert classify_pattern(template) is label

    @pytest.mark.parametrize(
        "label,reverse",
        [
            (PatternLabel.P1_2_1, PatternLabel.P1_2_1),
            (PatternLabel.P1_2_2, PatternLabel.P1_2_2),
            (PatternLabel.P1_2_3, PatternLabel.P1_2_3),
            (PatternLabel.P1_2_4, PatternLabel.P1_2_5),
            (PatternLabel.P1_2_5, PatternLabel.P1_2_4),
            (PatternLabel.P1_2_6, PatternLabel.P1_2_6),
        ],
    )
    def test_reversal(self, label, reverse):
        """Test that orientation reversal maps patterns onto each other."""
        for template in TEMPLATES[label]:
            assert classify_pattern(template.reversed()) is reverse

    def test_other(self):
        """Test that unmatched shapes are Other."""
        d = TEMPLATES[PatternLabel.P1_2_4][0]
        doubled = Gdnf(d.classes, d.edges + tuple(replace(e, id=f"x{e.id}") for e in d.edges))
        assert classify_pattern(doubled) is PatternLabel.OTHER

    def test_isomorphism_ignores_nf_values(self):
        """Test that GDNF isomorphism uses only the order of NF values."""
        a = TEMPLATES[PatternLabel.P1_2_6][0]
        b = Gdnf(a.classes, tuple(replace(e, nf_value=10.0 * e.nf_value - 3.0) for e in a.edges))
        assert isomorphic(a, b) is not None


class TestStabilization:
    """Test the window stabilization certificate."""

    WINDOWS = [Interval(-3.0, 3.0), Interval(-5.0, 5.0)]

    def test_stable(self):
        """Test identical GDNFs across windows."""
        template = TEMPLATES[PatternLabel.P1_2_3][0]
        last, certificate = stabilized_gdnf(self.WINDOWS, lambda w: (w, template))
        assert certificate.stable
        assert certificate.first_difference is None
        assert certificate.collapsed is None
        assert certificate.patterns == (PatternLabel.P1_2_3, PatternLabel.P1_2_3)
        assert certificate.scheduled == tuple(self.WINDOWS)
        assert last is template

    def test_unstable_is_returned(self):
        """Test that a change between windows is certified, not raised."""
        sequence = iter([TEMPLATES[PatternLabel.P1_2_3][0], TEMPLATES[PatternLabel.P1_2_4][0]])
        _, certificate = stabilized_gdnf(self.WINDOWS, lambda w: (w, next(sequence)))
        assert not certificate.stable
        assert certificate.first_difference == 0
        assert certificate.patterns == (PatternLabel.P1_2_3, PatternLabel.P1_2_4)

    def test_windows_must_nest(self):
        """Test that non-nested schedules are rejected."""
        template = TEMPLATES[PatternLabel.P1_2_1][0]
        with pytest.raises(ValueError):
            stabilized_gdnf(list(reversed(self.WINDOWS)), lambda w: (w, template))
        with pytest.raises(ValueError):
            stabilized_gdnf([], lambda w: (w, template))

    def test_fit_schedule(self):
        """Test that a schedule is scaled about its centre into the trusted interval."""
        fitted = fit_schedule(self.WINDOWS, Interval(-2.5, 2.5))
        assert fitted[0].lo == pytest.approx(-1.5) and fitted[0].hi == pytest.approx(1.5)
        assert fitted[1].lo == pytest.approx(-2.5) and fitted[1].hi == pytest.approx(2.5)
        assert fit_schedule(self.WINDOWS, Interval(-6.0, 6.0)) == tuple(self.WINDOWS)

    def test_fit_schedule_uses_nearest_wall(self):
        """Test that an off-centre trusted interval limits the scale by its nearer wall."""
        fitted = fit_schedule(self.WINDOWS, Interval(-1.0, 4.0))
        assert fitted[1].lo == pytest.approx(-1.0) and fitted[1].hi == pytest.approx(1.0)
        assert fitted[0].lo == pytest.approx(-0.6) and fitted[0].hi == pytest.approx(0.6)

    def test_trusted_schedule_stays_nested(self):
        """Test that the runner sees the fitted windows and they remain distinct."""
        template = TEMPLATES[PatternLabel.P1_2_2][0]
        seen = []

        def runner(window):
            seen.append(window)
            return window, template

        _, certificate = stabilized_gdnf(self.WINDOWS, runner, trusted=Interval(-2.5, 2.5))
        assert tuple(seen) == certificate.scheduled == certificate.effective
        assert certificate.requested == tuple(self.WINDOWS)
        assert certificate.effective[0].within(certificate.effective[1])
        assert certificate.effective[0] != certificate.effective[1]
        assert certificate.stable

    def test_collapsed_windows_are_not_certified(self):
        """Test that windows clipped to one interval never count as stable."""
        template = TEMPLATES[PatternLabel.P1_2_1][0]
        clipped = Interval(-2.0, 2.0)
        _, certificate = stabilized_gdnf(self.WINDOWS, lambda w: (clipped, template))
        assert certificate.first_difference is None
        assert certificate.collapsed == 0
        assert not certificate.stable
