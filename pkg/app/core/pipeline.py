"""
Analysis pipeline: profile, separation, sweep, GDNF, compactification and
the oracle check for one spec, plus the window stabilization schedule.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from app.core.compactify import CompactifiedGraph, InvarianceResult, check_invariance, compactify
from app.core.errors import DescriptorError, ReebError, SeparationError, UnstableGdnfError
from app.core.expr import Expr, differentiate
from app.core.expr import trust_window as _trust_window
from app.core.gdnf import (
    Gdnf,
    PatternLabel,
    Policy,
    StabilityCertificate,
    both_policy_counts,
    build_gdnf,
    classify_pattern,
    stabilized_gdnf,
)
from app.core.interval import Interval
from app.core.oracle import AgreementReport, compare, raster_slice_counts, sample_levels
from app.core.predigraph import WindowedPreDigraph, nf_mismatches, nf_points, validate
from app.core.profile import (
    CriticalProfile,
    ProbeResult,
    SabStatus,
    SeparationResult,
    find_critical_points,
    probe_tail,
    sab_classify,
    verify_separation,
)
from app.core.sweep import build_reeb, event_levels, event_schedule
from app.models.schemas import AnalysisSpec
from app.observability.logging import PipelineLogger
from app.observability.metrics import MetricsCollector, StageTimer


def trust_window(c1: Expr, c2: Expr, requested: Interval) -> Interval:
    """Largest centred sub-window where the pair and its derivatives evaluate reliably."""
    return _trust_window([c1, c2, differentiate(c1), differentiate(c2)], requested)


@dataclass(frozen=True)
class WindowResult:
    requested: Interval
    window: Interval
    p1: CriticalProfile
    p2: CriticalProfile
    separation: SeparationResult
    sab: SabStatus
    probes: Tuple[Tuple[str, ProbeResult], ...]
    graph: WindowedPreDigraph
    nf_mismatches: Tuple[str, ...]
    gdnf: Gdnf
    pattern: PatternLabel
    policy_counts: Dict[str, int]

    @property
    def suspect_probes(self) -> List[Tuple[str, ProbeResult]]:
        return [(name, r) for name, r in self.probes if not r.consistent]


class AnalysisPipeline:
    """Runs the stages for one spec.

    With `strict`, suspect tail probes and NF flag mismatches raise
    DescriptorError instead of annotating the output.
    """

    def __init__(
        self,
        spec: AnalysisSpec,
        strict: bool = False,
        policy: Optional[Policy] = None,
        metrics: Optional[MetricsCollector] = None,
    ):
        self.spec = spec
        self.strict = strict
        self.policy = policy or spec.policy
        self.metrics = metrics
        self.log = PipelineLogger(spec.name)
        self.c1 = spec.expression("c1")
        self.c2 = spec.expression("c2")
        self.descriptors = spec.descriptors()

    def _stage(self, name: str) -> StageTimer:
        return StageTimer(name, self.log, self.metrics)

    def clip(self, requested: Interval) -> Interval:
        window = trust_window(self.c1, self.c2, requested)
        if window != requested:
            self.log.window_clipped((requested.lo, requested.hi), (window.lo, window.hi))
        return window

    def run_window(self, requested: Optional[Interval] = None) -> WindowResult:
        """Full analysis of one window.

        Raises:
            SeparationError: If c1 < c2 fails inside the window.
            DescriptorError: Under strict mode, for suspect descriptors.
            ReebError: If the pre-digraph fails validation.
        """
        requested = requested or self.spec.window_interval()
        window = self.clip(requested)
        tails_c1, tails_c2 = self.descriptors
        tol = self.spec.tolerances.root

        with self._stage("profile"):
            p1 = find_critical_points(self.c1, window, tol, tails_c1, "c1")
            p2 = find_critical_points(self.c2, window, tol, tails_c2, "c2")

        with self._stage("separation"):
            separation = verify_separation(self.c1, self.c2, window)
        self.log.separation_result(
            separation.verified, separation.witness, separation.sampled_only, separation.leaves
        )
        if not separation.verified:
            raise SeparationError(separation.witness, separation.c1_value, separation.c2_value)

        sab = sab_classify(tails_c1, tails_c2)

        with self._stage("probe"):
            probes = []
            for name, f, tails in (("c1", self.c1, tails_c1), ("c2", self.c2, tails_c2)):
                for d in tails:
                    probes.append((name, probe_tail(f, d, window)))
        for name, result in probes:
            if not result.consistent:
                self.log.probe_suspect(name, result.end.value, result.reason)
                if self.strict:
                    raise DescriptorError(f"{name} tail at {result.end.value} looks suspect: {result.reason}")

        events = event_schedule(p1, p2)
        self.log.events_scheduled(len(events), len(event_levels(events, self.spec.tolerances.coalesce)))
        with self._stage("sweep"):
            graph = build_reeb(
                self.c1, self.c2, p1, p2, sab, window, m=self.spec.m, coalesce_tol=self.spec.tolerances.coalesce
            )
        violations = validate(graph)
        self.log.graph_built(len(graph.vertices), len(graph.edges), len(graph.nf), len(violations))
        if self.metrics is not None:
            self.metrics.set_graph_size(len(graph.vertices), len(graph.edges))
            for event in events:
                self.metrics.record_event(event.kind.value)
        if violations:
            raise ReebError(f"pre-digraph failed validation: {violations[0]}")

        mismatches = tuple(nf_mismatches(graph))
        for message in mismatches:
            self.log.nf_mismatch(message)
        if self.strict:
            nf_points(graph)

        with self._stage("gdnf"):
            gdnf = build_gdnf(graph, self.policy)
            pattern = classify_pattern(gdnf)
            counts = both_policy_counts(graph)
        self.log.gdnf_built(self.policy.value, len(gdnf.classes), len(gdnf.edges), pattern.value)
        if self.metrics is not None:
            for policy, count in counts.items():
                self.metrics.set_gdnf_classes(policy, count)

        return WindowResult(
            requested=requested,
            window=window,
            p1=p1,
            p2=p2,
            separation=separation,
            sab=sab,
            probes=tuple(probes),
            graph=graph,
            nf_mismatches=mismatches,
            gdnf=gdnf,
            pattern=pattern,
            policy_counts=counts,
        )

    def stabilize(self, raise_unstable: bool = True) -> Tuple[WindowResult, StabilityCertificate]:
        """Run every stabilization window and certify the GDNFs agree.

        Raises:
            UnstableGdnfError: If consecutive GDNFs differ, or two windows clip
                to the same interval, and `raise_unstable`.
        """
        results: List[WindowResult] = []

        def runner(window: Interval) -> Tuple[Interval, Gdnf]:
            result = self.run_window(window)
            results.append(result)
            return result.window, result.gdnf

        windows = self.spec.stabilization_intervals()
        trusted = trust_window(self.c1, self.c2, windows[-1])
        with self._stage("stabilize"):
            _, certificate = stabilized_gdnf(windows, runner, trusted=trusted)
        if certificate.scheduled != certificate.requested:
            self.log.schedule_fitted(
                [(w.lo, w.hi) for w in certificate.requested], [(w.lo, w.hi) for w in certificate.scheduled]
            )
        self.log.stability_result(certificate.stable, [p.value for p in certificate.patterns])
        if certificate.collapsed is not None and raise_unstable:
            i = certificate.collapsed
            raise UnstableGdnfError(
                f"windows {_fmt(certificate.scheduled[i])} and {_fmt(certificate.scheduled[i + 1])} "
                f"clip to the same interval {_fmt(certificate.effective[i])}; stability is not certified",
                certificate,
            )
        if not certificate.stable and raise_unstable:
            i = certificate.first_difference
            raise UnstableGdnfError(
                f"GDNF differs between windows {_fmt(certificate.effective[i])} "
                f"({certificate.patterns[i].value}) and {_fmt(certificate.effective[i + 1])} "
                f"({certificate.patterns[i + 1].value})",
                certificate,
            )
        return results[-1], certificate

    def compactify(self, result: WindowResult) -> Tuple[CompactifiedGraph, Gdnf, InvarianceResult]:
        with self._stage("compactify"):
            compact = compactify(result.graph, self.descriptors)
            after = build_gdnf(compact.graph, self.policy)
            verdict = check_invariance(result.gdnf, after)
        return compact, after, verdict

    def check(self, result: WindowResult, x_samples: int = 100_000, levels: int = 64) -> AgreementReport:
        with self._stage("oracle"):
            ts = sample_levels([v.value for v in result.graph.vertices], levels)
            raster = raster_slice_counts(self.c1, self.c2, result.window, ts, x_samples)
            report = compare(result.graph, raster)
        self.log.oracle_result(report.agree, len(report.levels), len(report.disagreements))
        if self.metrics is not None:
            self.metrics.record_oracle_disagreements(len(report.disagreements) + len(report.incidence_issues))
        return report


def _fmt(window: Interval) -> str:
    return f"[{window.lo:g}, {window.hi:g}]"
