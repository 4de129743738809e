"""
Prometheus metrics collection for reeb-strip.

Each collector owns a private registry so repeated runs in one process
(tests, stabilization schedules) never collide on metric names.
"""

import time
from pathlib import Path
from typing import Optional, Union

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, generate_latest, write_to_textfile


class MetricsCollector:
    """Centralized metrics collection."""

    def __init__(self, registry: Optional[CollectorRegistry] = None):
        self.registry = registry or CollectorRegistry()

        self.stage_duration = Histogram(
            'reeb_stage_duration_seconds',
            'Pipeline stage duration in seconds',
            ['stage'],
            buckets=(0.001, 0.005, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0),
            registry=self.registry,
        )

        self.events_total = Counter(
            'reeb_events_total',
            'Scheduled sweep events',
            ['kind'],
            registry=self.registry,
        )

        self.vertices = Gauge(
            'reeb_predigraph_vertices',
            'Vertices of the last windowed pre-digraph',
            registry=self.registry,
        )

        self.edges = Gauge(
            'reeb_predigraph_edges',
            'Edges of the last windowed pre-digraph',
            registry=self.registry,
        )

        self.gdnf_classes = Gauge(
            'reeb_gdnf_classes',
            'Classes of the last GDNF',
            ['policy'],
            registry=self.registry,
        )

        self.oracle_disagreements = Counter(
            'reeb_oracle_disagreements_total',
            'Levels where the oracle and the sweep disagree',
            registry=self.registry,
        )

        self.runs_total = Counter(
            'reeb_runs_total',
            'Completed command runs',
            ['command', 'exit_code'],
            registry=self.registry,
        )

    def record_event(self, kind: str, count: int = 1):
        """Record scheduled events of one kind."""
        self.events_total.labels(kind=kind).inc(count)

    def set_graph_size(self, vertices: int, edges: int):
        """Set the size of the last pre-digraph."""
        self.vertices.set(vertices)
        self.edges.set(edges)

    def set_gdnf_classes(self, policy: str, classes: int):
        """Set the class count of the last GDNF."""
        self.gdnf_classes.labels(policy=policy).set(classes)

    def record_oracle_disagreements(self, count: int):
        """Record oracle disagreements."""
        if count:
            self.oracle_disagreements.inc(count)

    def record_run(self, command: str, exit_code: int):
        """Record a finished command."""
        self.runs_total.labels(command=command, exit_code=str(exit_code)).inc()

    def get_metrics(self) -> str:
        """Get metrics in Prometheus format."""
        return generate_latest(self.registry).decode('utf-8')

    def write_textfile(self, path: Union[str, Path]) -> None:
        """Write the registry in Prometheus text format."""
        write_to_textfile(str(path), self.registry)


class StageTimer:
    """Context manager timing one stage into metrics and the pipeline log."""

    def __init__(self, stage: str, pipeline_logger=None, metrics: Optional[MetricsCollector] = None):
        self.stage = stage
        self.pipeline_logger = pipeline_logger
        self.metrics = metrics
        self.start_time = None
        self.duration_ms = 0.0

    def __enter__(self):
        self.start_time = time.perf_counter()
        if self.pipeline_logger is not None:
            self.pipeline_logger.stage_start(self.stage)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        elapsed = time.perf_counter() - self.start_time
        self.duration_ms = elapsed * 1000.0
        if self.metrics is not None:
            self.metrics.stage_duration.labels(stage=self.stage).observe(elapsed)
        if self.pipeline_logger is not None and exc_type is None:
            self.pipeline_logger.stage_end(self.stage, round(self.duration_ms, 3))
