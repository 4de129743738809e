"""
Integration tests for the analysis pipeline on the bundled fixtures.
"""

import pytest

from app.core.config import parse_spec
from app.core.errors import DescriptorError, SeparationError, UnstableGdnfError
from app.core.fixtures import PATTERN_FIXTURES, exchange_signs, load_fixture
from app.core.gdnf import PatternLabel, Policy
from app.core.interval import Interval
from app.core.pipeline import AnalysisPipeline, trust_window
from app.core.predigraph import isomorphic, validate
from app.observability.metrics import MetricsCollector

EXPECTED = {
    "P1": PatternLabel.P1_2_1,
    "P2": PatternLabel.P1_2_2,
    "P3": PatternLabel.P1_2_3,
    "P4": PatternLabel.P1_2_4,
    "P5": PatternLabel.P1_2_5,
    "P6": PatternLabel.P1_2_6,
}


def smooth_spec(**overrides):
    data = {
        "name": "smooth",
        "c1": {
            "expr": "-1/(x^2+1)",
            "tails": {"neg_inf": {"value": 0}, "pos_inf": {"value": 0}},
        },
        "c2": {
            "expr": "1/(x^2+1) - 1/(x^2+1)^2",
            "tails": {"neg_inf": {"value": 0, "approach": "above"}, "pos_inf": {"value": 0, "approach": "above"}},
        },
    }
    data.update(overrides)
    return parse_spec(data)


ACCUMULATING_C1 = {
    "expr": "-1/(x^2+1)",
    "tails": {
        "neg_inf": {"value": 0, "critical_tail": "accumulating_from_below"},
        "pos_inf": {"value": 0, "critical_tail": "accumulating_from_below"},
    },
}


@pytest.mark.integration
@pytest.mark.slow
class TestFixturePatterns:
    """Test that every bundled pair lands on its pattern."""

    @pytest.mark.parametrize("name", PATTERN_FIXTURES)
    def test_single_window(self, window_result, name):
        """Test the pattern in the spec window."""
        result = window_result(name)
        assert result.pattern is EXPECTED[name]
        assert result.separation.verified
        assert validate(result.graph) == []

    @pytest.mark.parametrize("name", PATTERN_FIXTURES)
    def test_stable_across_schedule(self, name):
        """Test that the stabilization windows agree."""
        result, certificate = AnalysisPipeline(load_fixture(name)).stabilize()
        assert certificate.stable
        assert set(certificate.patterns) == {EXPECTED[name]}
        assert result.pattern is EXPECTED[name]

    def test_schedule_fitted_into_trust_window(self):
        """Test that P2 runs two distinct nested windows inside its trust window."""
        _, certificate = AnalysisPipeline(load_fixture("P2")).stabilize()
        inner, outer = certificate.effective
        assert certificate.requested == (Interval(-3.0, 3.0), Interval(-5.0, 5.0))
        assert certificate.effective == certificate.scheduled
        assert inner != outer and inner.within(outer)
        assert 2.26 < outer.hi < 2.28
        assert inner.hi == pytest.approx(0.6 * outer.hi)
        assert certificate.collapsed is None

    def test_policy_counts(self, window_result):
        """Test the class counts of both policies on P4."""
        assert window_result("P4").policy_counts == {"cluster_restricted": 3, "literal_def4": 2}

    def test_literal_policy_override(self):
        """Test that the policy argument overrides the spec."""
        result = AnalysisPipeline(load_fixture("P4"), policy=Policy.LITERAL_DEF4).run_window()
        assert result.gdnf.policy is Policy.LITERAL_DEF4
        assert len(result.gdnf.classes) == 2

    def test_trust_window_clips_p2(self, window_result):
        """Test that the fast oscillation of P2 shrinks the window."""
        result = window_result("P2")
        assert result.requested == Interval(-5.0, 5.0)
        assert 2.26 < result.window.hi < 2.28
        assert result.window.lo == -result.window.hi

    def test_exchange_signs_reverses(self):
        """Test that reflecting P4 in t = 0 gives the reversed pattern."""
        result = AnalysisPipeline(exchange_signs(load_fixture("P4"))).run_window()
        assert result.pattern is PatternLabel.P1_2_5


@pytest.mark.integration
@pytest.mark.slow
class TestCompactifyFixtures:
    """Test GDNF invariance under compactification."""

    @pytest.mark.parametrize("name", ["P4", "P5", "P6"])
    def test_invariant(self, window_result, name):
        """Test that two-edge patterns survive compactification."""
        pipeline = AnalysisPipeline(load_fixture(name))
        compact, after, verdict = pipeline.compactify(window_result(name))
        assert verdict.isomorphic and verdict.asserted
        assert verdict.pattern is EXPECTED[name]
        assert compact.limits == (0.0, 0.0)
        assert validate(compact.graph) == []


@pytest.mark.integration
class TestAdversarial:
    """Test the pair built to defeat the short window."""

    def test_unstable_raises(self):
        """Test that classification fails with exit code 4."""
        with pytest.raises(UnstableGdnfError) as exc_info:
            AnalysisPipeline(load_fixture("adversarial")).stabilize()
        assert exc_info.value.exit_code == 4
        assert not exc_info.value.certificate.stable

    def test_unstable_certificate_returned(self):
        """Test that the certificate is available without raising."""
        _, certificate = AnalysisPipeline(load_fixture("adversarial")).stabilize(raise_unstable=False)
        assert not certificate.stable
        assert certificate.first_difference == 0

    def test_strict_rejects_false_accumulation(self):
        """Test that strict mode refuses the undeclared-oscillation tails."""
        with pytest.raises(DescriptorError) as exc_info:
            AnalysisPipeline(load_fixture("adversarial"), strict=True).run_window()
        assert exc_info.value.exit_code == 3

    def test_lenient_annotates(self):
        """Test that the suspect tails are reported, not raised."""
        result = AnalysisPipeline(load_fixture("adversarial")).run_window()
        suspect_c1 = [r.end.value for name, r in result.suspect_probes if name == "c1"]
        assert sorted(suspect_c1) == ["neg_inf", "pos_inf"]


class TestSmoothPair:
    """Test the pipeline on a pair without oscillation."""

    def test_run_window(self):
        """Test a full window run."""
        result = AnalysisPipeline(smooth_spec()).run_window()
        assert result.window == Interval(-5.0, 5.0)
        assert result.sab.is_sab
        assert result.suspect_probes == []
        assert result.nf_mismatches == ()
        assert result.pattern is PatternLabel.P1_2_1

    def test_lenient_run_reports_nf_mismatch(self):
        """Test that a declared accumulation the window does not show is carried, not raised."""
        result = AnalysisPipeline(smooth_spec(c1=ACCUMULATING_C1)).run_window()
        assert len(result.nf_mismatches) == 1
        assert "declared clustering sides below, observed none" in result.nf_mismatches[0]
        assert sorted(r.end.value for name, r in result.suspect_probes if name == "c1") == ["neg_inf", "pos_inf"]

    def test_strict_run_rejects_nf_mismatch(self):
        """Test that strict mode stops on the same pair with exit code 3."""
        with pytest.raises(DescriptorError) as exc_info:
            AnalysisPipeline(smooth_spec(c1=ACCUMULATING_C1), strict=True).run_window()
        assert exc_info.value.exit_code == 3

    def test_separation_failure(self):
        """Test that c1 touching c2 raises with a witness."""
        spec = smooth_spec(c1={"expr": "0", "tails": {"neg_inf": {"value": 0}, "pos_inf": {"value": 0}}})
        with pytest.raises(SeparationError) as exc_info:
            AnalysisPipeline(spec).run_window()
        assert exc_info.value.exit_code == 2
        assert exc_info.value.witness == pytest.approx(0.0, abs=1e-6)

    def test_m_changes_only_metadata(self):
        """Test that m is carried without changing the graph."""
        g2 = AnalysisPipeline(smooth_spec(m=2)).run_window().graph
        g5 = AnalysisPipeline(smooth_spec(m=5)).run_window().graph
        assert g5.m == 5
        assert g2.vertices == g5.vertices and g2.edges == g5.edges
        assert isomorphic(g2, g5) is not None

    def test_check_agrees(self):
        """Test the oracle check on the smooth pair."""
        pipeline = AnalysisPipeline(smooth_spec())
        report = pipeline.check(pipeline.run_window(), x_samples=20_000, levels=16)
        assert report.agree
        assert len(report.levels) == 16

    def test_metrics_recorded(self):
        """Test that stage metrics land in the collector."""
        metrics = MetricsCollector()
        AnalysisPipeline(smooth_spec(), metrics=metrics).run_window()
        text = metrics.get_metrics()
        assert 'reeb_stage_duration_seconds_count{stage="sweep"} 1.0' in text
        assert "reeb_predigraph_vertices " in text

    def test_trust_window_untouched(self):
        """Test that a tame pair keeps the requested window."""
        spec = smooth_spec()
        window = trust_window(spec.expression("c1"), spec.expression("c2"), Interval(-5.0, 5.0))
        assert window == Interval(-5.0, 5.0)
