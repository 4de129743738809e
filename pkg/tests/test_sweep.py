"""
Tests for slices, the event schedule and the Reeb sweep.
"""

from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from app.core.errors import CriticalPointError, OverlapAmbiguityError
from app.core.expr import differentiate, eval_point, parse
from app.core.interval import Interval
from app.core.predigraph import VertexKind, validate
from app.core.profile import End, find_critical_points, sab_classify
from app.core.sweep import (
    EndKind,
    Event,
    EventKind,
    Membership,
    SliceComponent,
    _link,
    _Node,
    build_reeb,
    event_levels,
    event_schedule,
    region_membership,
    slice_components,
)

WINDOW = Interval(-5.0, 5.0)
C1 = parse("-1/(x^2+1)")
C2 = parse("1/(x^2+1) - 1/(x^2+1)^2")


class TestMembership:
    """Test the point-in-region predicate."""

    def test_interior_boundary_outside(self):
        """Test the three outcomes at x=1, where c1=-0.5 and c2=0.25."""
        assert region_membership(C1, C2, 0.1, 1.0) is Membership.INTERIOR
        assert region_membership(C1, C2, 0.25, 1.0) is Membership.BOUNDARY
        assert region_membership(C1, C2, 0.3, 1.0) is Membership.OUTSIDE
        assert region_membership(C1, C2, -0.6, 1.0) is Membership.OUTSIDE


class TestSlices:
    """Test slice components of a smooth pair."""

    def test_two_lobes_above_zero(self):
        """Test that t=0.1 cuts the two lobes of c2."""
        components = slice_components(C1, C2, 0.1, WINDOW)
        assert len(components) == 2
        left, right = components
        assert left.left == pytest.approx(-2.805884, abs=1e-5)
        assert left.right == pytest.approx(-0.356394, abs=1e-5)
        assert right.left == pytest.approx(0.356394, abs=1e-5)
        assert right.right == pytest.approx(2.805884, abs=1e-5)
        assert left.left_kind is EndKind.ROOT_OF_C2
        assert right.right_kind is EndKind.ROOT_OF_C2

    def test_single_component_below_zero(self):
        """Test that t=-0.2 is bounded by c1 at x=+-2."""
        components = slice_components(C1, C2, -0.2, WINDOW)
        assert len(components) == 1
        only = components[0]
        assert only.left == pytest.approx(-2.0, abs=1e-8)
        assert only.right == pytest.approx(2.0, abs=1e-8)
        assert only.left_kind is EndKind.ROOT_OF_C1
        assert only.right_kind is EndKind.ROOT_OF_C1

    def test_empty_slice(self):
        """Test a value above the maximum of c2."""
        assert slice_components(C1, C2, 0.3, WINDOW) == []

    def test_constant_boundary_on_level(self):
        """Test that a constant c1 equal to t belongs to the closed region."""
        components = slice_components(parse("0"), parse("1/(x^2+1)"), 0.0, WINDOW)
        assert len(components) == 1
        assert (components[0].left, components[0].right) == (WINDOW.lo, WINDOW.hi)

    def test_level_at_lobe_maxima(self):
        """Test that the maximum value of c2 cuts two single points."""
        p2 = find_critical_points(C2, WINDOW, name="c2")
        top = max(cp.value for cp in p2.critical_points)
        components = slice_components(C1, C2, top, WINDOW)
        assert len(components) == 2
        for component, x in zip(components, (-1.0, 1.0)):
            assert component.left == component.right
            assert component.left == pytest.approx(x, abs=1e-6)

    def test_level_at_split_value(self):
        """Test that the minimum value of c2 leaves one component across the window."""
        p2 = find_critical_points(C2, WINDOW, name="c2")
        bottom = min(cp.value for cp in p2.critical_points)
        components = slice_components(C1, C2, bottom, WINDOW)
        assert len(components) == 1
        assert (components[0].left, components[0].right) == (WINDOW.lo, WINDOW.hi)

    def test_levels_through_every_breakpoint(self):
        """Test slices at every critical and wall value of both boundaries."""
        p1 = find_critical_points(C1, WINDOW, name="c1")
        p2 = find_critical_points(C2, WINDOW, name="c2")
        values = [cp.value for p in (p1, p2) for cp in p.critical_points] + list(p1.wall_values + p2.wall_values)
        for t in values:
            _assert_slice_sound(slice_components(C1, C2, t, WINDOW), t)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=-1.1, max_value=0.3))
    def test_random_levels(self, t):
        """Test that components are ordered, disjoint and inside the region."""
        _assert_slice_sound(slice_components(C1, C2, t, WINDOW), t)


def _assert_slice_sound(components, t):
    for component in components:
        assert WINDOW.lo <= component.left <= component.right <= WINDOW.hi
        mid = 0.5 * (component.left + component.right)
        assert region_membership(C1, C2, t, mid) is not Membership.OUTSIDE
    for left, right in zip(components, components[1:]):
        assert left.right < right.left


class TestEvents:
    """Test event scheduling and coalescing."""

    def test_schedule_kinds(self):
        """Test that extrema map to birth/merge/split/death and limits to NC events."""
        p1 = find_critical_points(C1, WINDOW, name="c1")
        p2 = find_critical_points(C2, WINDOW, name="c2")
        events = event_schedule(p1, p2)
        kinds = [e.kind for e in events if e.is_critical]
        assert kinds.count(EventKind.BIRTH) == 1
        assert kinds.count(EventKind.SPLIT) == 1
        assert kinds.count(EventKind.DEATH) == 2
        noncompact = [e for e in events if e.kind is EventKind.NONCOMPACT_CONTOUR]
        assert {e.end for e in noncompact} == {End.NEG_INF, End.POS_INF}
        assert all(e.value == 0.0 for e in noncompact)
        assert [e.value for e in events] == sorted(e.value for e in events)

    def test_coalescing_prefers_limit_value(self):
        """Test that a level holding an NC event takes the limit as its value."""
        events = [
            Event(-1e-9, EventKind.BIRTH, "c1", 0.0),
            Event(0.0, EventKind.NONCOMPACT_CONTOUR, end=End.NEG_INF),
            Event(0.5, EventKind.DEATH, "c2", 1.0),
        ]
        levels = event_levels(events, tol=1e-8)
        assert len(levels) == 2
        assert levels[0].value == 0.0
        assert levels[0].lo == -1e-9
        assert levels[0].noncompact_ends == frozenset({End.NEG_INF})


class TestBuildReeb:
    """Test the sweep on a smooth pair."""

    @pytest.fixture
    def reeb(self):
        p1 = find_critical_points(C1, WINDOW, name="c1")
        p2 = find_critical_points(C2, WINDOW, name="c2")
        sab = sab_classify(p1.tails, p2.tails)
        return build_reeb(C1, C2, p1, p2, sab, WINDOW)

    def test_valid_and_oriented(self, reeb):
        """Test that the result validates and edges run upward."""
        assert validate(reeb) == []
        for e in reeb.edges:
            lo, hi = reeb.value_span(e)
            assert lo < hi

    def test_split_feeds_two_deaths(self, reeb):
        """Test that the c2 minimum at 0 splits into the two lobes."""
        noncompact = [v for v in reeb.vertices if v.kind is VertexKind.NONCOMPACT_CONTOUR]
        assert [v.value for v in noncompact] == [0.0]
        deaths = [v for v in reeb.vertices if v.value == pytest.approx(0.25) and v.kind is VertexKind.CRITICAL]
        assert len(deaths) == 2
        split = noncompact[0]
        assert len(reeb.out_edges(split.id)) == 2

    def test_no_nf_without_accumulation(self, reeb):
        """Test that finite critical tails produce no NF annotations."""
        assert reeb.nf == ()

    def test_m_is_metadata(self):
        """Test that m only changes the recorded metadata."""
        p1 = find_critical_points(C1, WINDOW, name="c1")
        p2 = find_critical_points(C2, WINDOW, name="c2")
        sab = sab_classify(p1.tails, p2.tails)
        g2 = build_reeb(C1, C2, p1, p2, sab, WINDOW, m=2)
        g5 = build_reeb(C1, C2, p1, p2, sab, WINDOW, m=5)
        assert g5.m == 5
        assert g2.vertices == g5.vertices
        assert g2.edges == g5.edges
        with pytest.raises(ValueError):
            build_reeb(C1, C2, p1, p2, sab, WINDOW, m=1)

    def test_missing_critical_point_is_reported(self):
        """Test that a profile missing the maximum of c2 at x=1 is refused."""
        p1 = find_critical_points(C1, WINDOW, name="c1")
        p2 = find_critical_points(C2, WINDOW, name="c2")
        tampered = replace(p2, critical_points=tuple(cp for cp in p2.critical_points if cp.x < 0.5))
        with pytest.raises(CriticalPointError):
            build_reeb(C1, C2, p1, tampered, sab_classify(p1.tails, tampered.tails), WINDOW)

    def test_critical_vertices_sit_on_derivative_roots(self, reeb):
        """Test that every interior event vertex carries the value of a critical point."""
        p1 = find_critical_points(C1, WINDOW, name="c1")
        p2 = find_critical_points(C2, WINDOW, name="c2")
        points = list(p1.critical_points) + list(p2.critical_points)
        events = [v for v in reeb.vertices if v.kind in (VertexKind.CRITICAL, VertexKind.NONCOMPACT_CONTOUR)]
        assert len(events) == len(points) == 4
        for v in events:
            assert any(abs(cp.value - v.value) <= 1e-9 for cp in points)
        for cp, f in [(cp, C1) for cp in p1.critical_points] + [(cp, C2) for cp in p2.critical_points]:
            lo, hi = cp.bracket
            fp = differentiate(f)
            assert eval_point(fp, lo) * eval_point(fp, hi) <= 0.0

    def test_no_loop_edges(self, reeb):
        """Test that no edge starts and ends at one vertex."""
        assert all(e.tail is None or e.tail != e.head for e in reeb.edges)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["P1", "P2", "P3", "P4", "P5", "P6", "adversarial"])
    def test_fixture_sweeps_have_no_loops(self, window_result, name):
        """Test every bundled fixture for loop edges and event values off the critical points."""
        result = window_result(name)
        assert all(e.tail is None or e.tail != e.head for e in result.graph.edges)
        values = [cp.value for p in (result.p1, result.p2) for cp in p.critical_points]
        for v in result.graph.vertices:
            if v.kind is VertexKind.CRITICAL:
                assert any(abs(value - v.value) <= 1e-8 for value in values)

    def test_component_without_continuation(self):
        """Test that a band component overlapping nothing at its event level raises."""
        at_level = SliceComponent(0.0, -1.0, 1.0, EndKind.ROOT_OF_C1, EndKind.ROOT_OF_C1)
        elsewhere = SliceComponent(0.1, 2.0, 3.0, EndKind.ROOT_OF_C2, EndKind.ROOT_OF_C2)
        with pytest.raises(OverlapAmbiguityError) as exc_info:
            _link(elsewhere, 0, [_Node(0, at_level)], {0: [0]}, 1e-9)
        assert "continues no component" in str(exc_info.value)
