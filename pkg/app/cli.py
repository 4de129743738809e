"""
reeb-strip CLI: analyze strip regions between two curves.
"""

import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from app import __version__
from app.adapters.artifacts import ArtifactSink
from app.adapters.impl.localfs_artifacts import LocalFSArtifactSink
from app.core.config import Settings, load_merged_config, load_spec, parse_spec
from app.core.errors import ReebError, SeparationError
from app.core.fixtures import FIXTURE_NAMES, bundled_fixtures, fixture_text, load_fixture
from app.core.gdnf import Policy
from app.core.pipeline import AnalysisPipeline, WindowResult
from app.models.schemas import (
    AnalysisSpec,
    AnalyzeDocument,
    CheckDocument,
    ClassifyDocument,
    CompactifyDocument,
    GdnfDoc,
    LevelDoc,
    PoleDoc,
    PreDigraphDoc,
    ProbeDoc,
    ProfileDoc,
    SabDoc,
    SeparationDoc,
    StabilityDoc,
    canonical_json,
)
from app.observability.logging import get_logger, setup_logging
from app.observability.metrics import MetricsCollector
from app.render import gdnf_dot, predigraph_dot, region_svg

app = typer.Typer(
    name="reeb-strip",
    help="Reeb pre-digraphs and GDNFs of strip regions between two curves",
    add_completion=False
)

console = Console()
err_console = Console(stderr=True)
logger = get_logger("reeb.cli")

SPEC_HELP = "Spec file (YAML) or bundled fixture name"


class _Run:
    """State shared by one command invocation."""

    def __init__(self, command: str, settings: Settings):
        self.command = command
        self.settings = settings
        self.sink: Optional[ArtifactSink] = None
        self.spec: Optional[AnalysisSpec] = None
        self.metrics = MetricsCollector() if settings.enable_metrics else None

    def open_sink(self) -> ArtifactSink:
        if self.sink is None:
            self.sink = LocalFSArtifactSink(self.settings.output_dir)
        return self.sink

    def finish(self, exit_code: int) -> None:
        if self.metrics is not None:
            self.metrics.record_run(self.command, exit_code)
        if self.spec is None:
            return
        sink = self.open_sink()
        if self.metrics is not None:
            self.metrics.write_textfile(Path(self.settings.output_dir) / "metrics.prom")
        sink.write_manifest(self.command, self.spec.name, exit_code)


def _settings(
    output_dir: Optional[str],
    log_level: Optional[str],
    log_format: Optional[str],
    config: Optional[str],
) -> Settings:
    try:
        settings = load_merged_config(
            config,
            output_dir=output_dir,
            log_level=log_level.upper() if log_level else None,
            log_format=log_format,
        )
    except ValidationError as e:
        err_console.print(f"[red]✗[/red] Invalid settings: {e.errors()[0]['msg']}")
        sys.exit(1)
    setup_logging(settings.log_level, settings.log_format, settings.log_file)
    return settings


def _load(spec: str) -> AnalysisSpec:
    path = Path(spec)
    if not path.exists() and spec in FIXTURE_NAMES:
        return load_fixture(spec)
    return load_spec(path)


def _with_window(spec: AnalysisSpec, window: Tuple[Optional[float], Optional[float]]) -> AnalysisSpec:
    if None in window:
        return spec
    return parse_spec({**spec.model_dump(), "window": window}, "--window")


@contextmanager
def _guard(run: _Run) -> Iterator[None]:
    """Map library errors to `✗ message` on stderr and their exit codes."""
    try:
        yield
    except ReebError as e:
        err_console.print(f"[red]✗[/red] {e.message}")
        if isinstance(e, SeparationError):
            err_console.print(f"  witness x = {e.witness!r}")
        run.finish(e.exit_code)
        sys.exit(e.exit_code)
    except Exception as e:
        logger.exception("Unexpected failure", extra={"event": "internal_error", "command": run.command})
        err_console.print(f"[red]✗[/red] Internal error: {e}")
        run.finish(5)
        sys.exit(5)
    run.finish(0)


def _pipeline(run: _Run, spec: AnalysisSpec, strict: bool, policy: Optional[Policy]) -> AnalysisPipeline:
    run.spec = spec
    return AnalysisPipeline(spec, strict=strict, policy=policy, metrics=run.metrics)


def _probe_docs(result: WindowResult) -> List[ProbeDoc]:
    return [ProbeDoc.from_result(name, r) for name, r in result.probes]


def _warn_annotations(result: WindowResult) -> None:
    """Print descriptor doubts that lenient runs carry into the output."""
    for name, r in result.suspect_probes:
        err_console.print(f"[yellow]⚠[/yellow] {name} tail at {r.end.value} looks suspect: {r.reason}")
    for message in result.nf_mismatches:
        err_console.print(f"[yellow]⚠[/yellow] NF flag mismatch: {message}")


def _analyze_document(spec: AnalysisSpec, result: WindowResult) -> AnalyzeDocument:
    return AnalyzeDocument(
        spec=spec.name,
        requested_window=(result.requested.lo, result.requested.hi),
        effective_window=(result.window.lo, result.window.hi),
        separation=SeparationDoc.from_result(result.separation),
        sab=SabDoc.from_status(result.sab),
        probes=_probe_docs(result),
        profiles=[ProfileDoc.from_profile(result.p1), ProfileDoc.from_profile(result.p2)],
        nf_mismatches=list(result.nf_mismatches),
        graph=PreDigraphDoc.from_graph(result.graph),
    )


def _window_summary(result: WindowResult) -> Table:
    table = Table(title="Windowed pre-digraph")
    table.add_column("Item", style="cyan", no_wrap=True)
    table.add_column("Value", style="green")
    table.add_row("Window", f"[{result.window.lo:g}, {result.window.hi:g}]")
    table.add_row("Separation", result.separation.status + (" (sampled only)" if result.separation.sampled_only else ""))
    table.add_row("SAB", "yes" if result.sab.is_sab else "no")
    table.add_row("Vertices", str(len(result.graph.vertices)))
    table.add_row("Edges", str(len(result.graph.edges)))
    table.add_row("NF points", ", ".join(f"{a.value:g}" for a in result.graph.nf) or "none")
    suspect = result.suspect_probes
    table.add_row("Suspect tails", ", ".join(f"{n}@{r.end.value}" for n, r in suspect) or "none")
    return table


# Common options
OutputDir = typer.Option(None, "--output-dir", "-o", envvar="REEB_OUTPUT_DIR", help="Artifact directory")
PolicyOpt = typer.Option(None, "--policy", help="Equivalence policy: cluster_restricted, literal_def4")
StrictOpt = typer.Option(False, "--strict", help="Escalate suspect descriptors to exit code 3")
WindowOpt = typer.Option((None, None), "--window", help="Analysis window LO HI")
LogLevelOpt = typer.Option(None, "--log-level", help="Log level: DEBUG, INFO, WARNING, ERROR")
LogFormatOpt = typer.Option(None, "--log-format", help="Log format: json, text")
ConfigOpt = typer.Option(None, "--config", help="Config file path")


@app.command()
def analyze(
    spec: str = typer.Argument(..., help=SPEC_HELP),
    output_dir: Optional[str] = OutputDir,
    policy: Optional[Policy] = PolicyOpt,
    strict: bool = StrictOpt,
    window: Tuple[float, float] = WindowOpt,
    log_level: Optional[str] = LogLevelOpt,
    log_format: Optional[str] = LogFormatOpt,
    config: Optional[str] = ConfigOpt,
):
    """Build the windowed pre-digraph."""
    run = _Run("analyze", _settings(output_dir, log_level, log_format, config))
    with _guard(run):
        analysis = _with_window(_load(spec), window)
        pipeline = _pipeline(run, analysis, strict, policy)
        result = pipeline.run_window()
        _warn_annotations(result)
        sink = run.open_sink()
        sink.put(f"{analysis.name}.predigraph.json", canonical_json(_analyze_document(analysis, result)))
        if "dot" in analysis.outputs:
            sink.put(f"{analysis.name}.predigraph.dot", predigraph_dot(result.graph, analysis.name))
        if "svg" in analysis.outputs:
            sink.put(f"{analysis.name}.region.svg", _region(pipeline, result, analysis.name))
        console.print(_window_summary(result))
        console.print(f"[green]✓[/green] Pre-digraph written to {run.settings.output_dir}")


@app.command()
def classify(
    spec: str = typer.Argument(..., help=SPEC_HELP),
    output_dir: Optional[str] = OutputDir,
    policy: Optional[Policy] = PolicyOpt,
    strict: bool = StrictOpt,
    log_level: Optional[str] = LogLevelOpt,
    log_format: Optional[str] = LogFormatOpt,
    config: Optional[str] = ConfigOpt,
):
    """Build the GDNF over the stabilization windows and classify it."""
    run = _Run("classify", _settings(output_dir, log_level, log_format, config))
    with _guard(run):
        analysis = _load(spec)
        pipeline = _pipeline(run, analysis, strict, policy)
        result, certificate = pipeline.stabilize()
        _warn_annotations(result)
        document = ClassifyDocument(
            spec=analysis.name,
            pattern=result.pattern.value,
            sab=SabDoc.from_status(result.sab),
            policy_counts=result.policy_counts,
            stability=StabilityDoc.from_certificate(certificate),
            probes=_probe_docs(result),
            nf_mismatches=list(result.nf_mismatches),
            gdnf=GdnfDoc.from_gdnf(result.gdnf),
        )
        sink = run.open_sink()
        sink.put(f"{analysis.name}.gdnf.json", canonical_json(document))
        if "dot" in analysis.outputs:
            sink.put(f"{analysis.name}.gdnf.dot", gdnf_dot(result.gdnf, analysis.name))

        panel = Panel.fit(
            f"[cyan]Pattern:[/cyan] {result.pattern.value}\n"
            f"[cyan]Classes:[/cyan] {len(result.gdnf.classes)}  [cyan]Edges:[/cyan] {len(result.gdnf.edges)}\n"
            f"[cyan]Policy counts:[/cyan] "
            + ", ".join(f"{k}={v}" for k, v in sorted(result.policy_counts.items()))
            + f"\n[cyan]SAB:[/cyan] {'yes' if result.sab.is_sab else 'no'}",
            title=f"GDNF of {analysis.name}",
        )
        console.print(panel)


@app.command()
def compactify(
    spec: str = typer.Argument(..., help=SPEC_HELP),
    output_dir: Optional[str] = OutputDir,
    policy: Optional[Policy] = PolicyOpt,
    strict: bool = StrictOpt,
    window: Tuple[float, float] = WindowOpt,
    log_level: Optional[str] = LogLevelOpt,
    log_format: Optional[str] = LogFormatOpt,
    config: Optional[str] = ConfigOpt,
):
    """Compactify to the sphere and check GDNF invariance."""
    run = _Run("compactify", _settings(output_dir, log_level, log_format, config))
    with _guard(run):
        analysis = _with_window(_load(spec), window)
        pipeline = _pipeline(run, analysis, strict, policy)
        result = pipeline.run_window()
        _warn_annotations(result)
        compact, after, verdict = pipeline.compactify(result)
        document = CompactifyDocument(
            spec=analysis.name,
            limits=compact.limits,
            poles=[PoleDoc(end=p.end.value, value=p.value, vertex=p.vertex_id, absorbed=p.absorbed) for p in compact.poles],
            pattern=verdict.pattern.value,
            invariance=verdict.verdict,
            asserted=verdict.asserted,
            probes=_probe_docs(result),
            nf_mismatches=list(result.nf_mismatches),
            graph=PreDigraphDoc.from_graph(compact.graph),
            gdnf_before=GdnfDoc.from_gdnf(result.gdnf),
            gdnf_after=GdnfDoc.from_gdnf(after),
        )
        run.open_sink().put(f"{analysis.name}.compactified.json", canonical_json(document))
        note = "" if verdict.asserted else " (reported, not required)"
        console.print(f"[green]✓[/green] {verdict.pattern.value}: {verdict.verdict}{note}")


@app.command()
def check(
    spec: str = typer.Argument(..., help=SPEC_HELP),
    output_dir: Optional[str] = OutputDir,
    strict: bool = StrictOpt,
    window: Tuple[float, float] = WindowOpt,
    samples: Optional[int] = typer.Option(None, "--samples", help="Oracle x samples"),
    levels: Optional[int] = typer.Option(None, "--levels", help="Sampled regular levels"),
    log_level: Optional[str] = LogLevelOpt,
    log_format: Optional[str] = LogFormatOpt,
    config: Optional[str] = ConfigOpt,
):
    """Compare the sweep with the brute-force oracle."""
    run = _Run("check", _settings(output_dir, log_level, log_format, config))
    with _guard(run):
        analysis = _with_window(_load(spec), window)
        pipeline = _pipeline(run, analysis, strict, None)
        result = pipeline.run_window()
        _warn_annotations(result)
        x_samples = samples or run.settings.oracle_samples
        report = pipeline.check(result, x_samples, levels or run.settings.oracle_levels)
        document = CheckDocument(
            spec=analysis.name,
            agree=report.agree,
            x_samples=x_samples,
            levels=[LevelDoc(t=lvl.t, sweep=lvl.sweep, oracle=lvl.oracle, agree=lvl.agree) for lvl in report.levels],
            incidence_issues=list(report.incidence_issues),
            probes=_probe_docs(result),
            nf_mismatches=list(result.nf_mismatches),
        )
        run.open_sink().put(f"{analysis.name}.check.json", canonical_json(document))
        if not report.agree:
            raise ReebError(
                f"oracle disagrees at {len(report.disagreements)} of {len(report.levels)} levels"
                + (f"; {report.incidence_issues[0]}" if report.incidence_issues else "")
            )
        console.print(f"[green]✓[/green] Oracle agrees at all {len(report.levels)} sampled levels")


def _region(pipeline: AnalysisPipeline, result: WindowResult, title: str) -> str:
    return region_svg(
        pipeline.c1,
        pipeline.c2,
        result.window,
        [v.value for v in result.graph.vertices],
        [a.value for a in result.graph.nf],
        title,
    )


@app.command()
def render(
    spec: str = typer.Argument(..., help=SPEC_HELP),
    output_dir: Optional[str] = OutputDir,
    window: Tuple[float, float] = WindowOpt,
    log_level: Optional[str] = LogLevelOpt,
    log_format: Optional[str] = LogFormatOpt,
    config: Optional[str] = ConfigOpt,
):
    """Render the region with critical and NF levels as SVG."""
    run = _Run("render", _settings(output_dir, log_level, log_format, config))
    with _guard(run):
        analysis = _with_window(_load(spec), window)
        pipeline = _pipeline(run, analysis, False, None)
        result = pipeline.run_window()
        _warn_annotations(result)
        run.open_sink().put(f"{analysis.name}.region.svg", _region(pipeline, result, analysis.name))
        console.print(f"[green]✓[/green] Figure written to {run.settings.output_dir}")


@app.command()
def fixtures(
    action: str = typer.Argument("list", help="Action: list, export"),
    name: Optional[str] = typer.Argument(None, help="Fixture to export (all when omitted)"),
    output_dir: str = typer.Option(".", "--output-dir", "-o", help="Export directory"),
):
    """List or export the bundled fixture spec files."""
    if action == "list":
        table = Table(title="Bundled fixtures")
        table.add_column("Name", style="cyan", no_wrap=True)
        table.add_column("Description", style="green")
        for fixture, bundled in bundled_fixtures().items():
            table.add_row(fixture, bundled.description or "")
        console.print(table)

    elif action == "export":
        names = [name] if name else list(FIXTURE_NAMES)
        if name and name not in FIXTURE_NAMES:
            err_console.print(f"[red]✗[/red] Unknown fixture: {name}")
            sys.exit(1)
        target = Path(output_dir)
        target.mkdir(parents=True, exist_ok=True)
        for fixture in names:
            (target / f"{fixture}.yaml").write_text(fixture_text(fixture))
        console.print(f"[green]✓[/green] Exported {len(names)} fixture(s) to {target}")

    else:
        err_console.print(f"[red]✗[/red] Unknown action: {action}")
        sys.exit(1)


@app.command()
def version():
    """Show the version."""
    console.print(f"reeb-strip {__version__}")


def main():
    """Main entry point for CLI."""
    app()


if __name__ == "__main__":
    main()
