"""
Tests for the raster slice oracle and its comparison with the sweep.
"""

import pytest

from app.core.expr import parse
from app.core.fixtures import load_fixture
from app.core.interval import Interval
from app.core.oracle import compare, raster_slice_counts, sample_levels
from app.core.profile import find_critical_points, sab_classify
from app.core.sweep import build_reeb

WINDOW = Interval(-5.0, 5.0)
C1 = parse("-1/(x^2+1)")
C2 = parse("1/(x^2+1) - 1/(x^2+1)^2")


@pytest.fixture(scope="module")
def reeb():
    p1 = find_critical_points(C1, WINDOW, name="c1")
    p2 = find_critical_points(C2, WINDOW, name="c2")
    return build_reeb(C1, C2, p1, p2, sab_classify(p1.tails, p2.tails), WINDOW)


class TestRaster:
    """Test raster slice counts."""

    def test_counts_and_endpoints(self):
        """Test one component below 0 and two lobes above it."""
        report = raster_slice_counts(C1, C2, WINDOW, [0.1, -0.2, 0.3], x_samples=20_000)
        assert [lvl.t for lvl in report.levels] == [-0.2, 0.1, 0.3]
        assert report.counts() == [1, 2, 0]

        below, lobes, _ = report.levels
        assert below.intervals[0][0] == pytest.approx(-2.0, abs=1e-6)
        assert below.intervals[0][1] == pytest.approx(2.0, abs=1e-6)
        assert lobes.intervals[1][0] == pytest.approx(0.356394, abs=1e-5)
        assert lobes.intervals[1][1] == pytest.approx(2.805884, abs=1e-5)

    def test_incidence_records_split(self):
        """Test that overlap between adjacent levels exposes the split."""
        report = raster_slice_counts(C1, C2, WINDOW, [-0.2, 0.1], x_samples=20_000)
        (incidence,) = report.incidence
        assert incidence.pairs == ((0, 0), (0, 1))
        assert incidence.splits()
        assert not incidence.merges()

    def test_minimum_samples(self):
        """Test that coarse grids are rejected."""
        with pytest.raises(ValueError):
            raster_slice_counts(C1, C2, WINDOW, [0.1], x_samples=9_999)

    def test_slice_touching_wall(self):
        """Test that a component reaching the wall ends on the wall."""
        report = raster_slice_counts(parse("-1"), parse("1"), Interval(-2.0, 2.0), [0.0], x_samples=10_000)
        assert report.levels[0].intervals == ((-2.0, 2.0),)


class TestSampleLevels:
    """Test regular level placement."""

    def test_levels_avoid_events(self):
        """Test that levels keep the margin from every event value."""
        events = [-1.0, 0.0, 0.25]
        levels = sample_levels(events, count=16)
        assert len(levels) == 16
        assert levels == sorted(levels)
        margin = 1e-3 * 1.25
        for t in levels:
            assert all(abs(t - e) >= margin - 1e-12 for e in events)
        assert all(-1.0 < t < 0.25 for t in levels[1:-1])

    def test_levels_beyond_event_range(self):
        """Test one level below the lowest and one above the highest event value."""
        levels = sample_levels([-1.0, 0.0, 0.25], count=16)
        assert levels[0] == pytest.approx(-1.0 - 0.05 * 1.25)
        assert levels[-1] == pytest.approx(0.25 + 0.05 * 1.25)

    def test_levels_inside_only(self):
        """Test that outside levels can be turned off."""
        levels = sample_levels([-1.0, 0.0, 0.25], count=16, outside=False)
        assert len(levels) == 16
        assert all(-1.0 < t < 0.25 for t in levels)

    def test_outside_levels_see_empty_slices(self, reeb):
        """Test that the outer levels of the smooth pair cross no edge and no raster component."""
        ts = sample_levels([v.value for v in reeb.vertices], 8)
        report = raster_slice_counts(C1, C2, WINDOW, [ts[0], ts[-1]], x_samples=10_000)
        assert report.counts() == [0, 0]
        assert reeb.edges_crossing(ts[0]) == reeb.edges_crossing(ts[-1]) == 0

    def test_degenerate_inputs(self):
        """Test that fewer than two distinct values give no levels."""
        assert sample_levels([0.5, 0.5]) == []
        assert sample_levels([0.0, 1.0], count=0) == []
        assert sample_levels([float("inf"), 0.0]) == []


class TestCompare:
    """Test sweep and oracle agreement."""

    def test_smooth_pair_agrees(self, reeb):
        """Test that the sweep of the smooth pair matches the raster."""
        ts = sample_levels([v.value for v in reeb.vertices], 32)
        report = compare(reeb, raster_slice_counts(C1, C2, WINDOW, ts, x_samples=20_000))
        assert report.agree
        assert report.disagreements == []

    def test_missing_edge_disagrees(self, reeb):
        """Test that dropping a lobe edge is caught."""
        lobe = next(e for e in reeb.edges if reeb.value_span(e)[0] == 0.0)
        broken = reeb.without_edge(lobe.id)
        ts = sample_levels([v.value for v in reeb.vertices], 32)
        report = compare(broken, raster_slice_counts(C1, C2, WINDOW, ts, x_samples=20_000))
        assert not report.agree
        assert all(0.0 < d.t < 0.25 for d in report.disagreements)
        assert all((d.sweep, d.oracle) == (1, 2) for d in report.disagreements)

    def test_window_mismatch(self, reeb):
        """Test that reports for another window are refused."""
        raster = raster_slice_counts(C1, C2, Interval(-4.0, 4.0), [0.1], x_samples=10_000)
        with pytest.raises(ValueError):
            compare(reeb, raster)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["P1", "P3", "P4"])
    def test_fixtures_agree(self, window_result, name):
        """Test the oracle against bundled fixtures."""
        result = window_result(name)
        ts = sample_levels([v.value for v in result.graph.vertices], 16)
        spec = load_fixture(name)
        report = compare(
            result.graph,
            raster_slice_counts(spec.expression("c1"), spec.expression("c2"), result.window, ts, x_samples=20_000),
        )
        assert report.agree, report.disagreements
