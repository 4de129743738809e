"""
Pydantic models for reeb-strip: the analysis spec file and every JSON
document the CLI emits.
"""

import json
import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core.errors import ExpressionSyntaxError
from app.core.expr import Expr, parse, substitute_k
from app.core.gdnf import Gdnf, GermTable, Policy, StabilityCertificate
from app.core.interval import Interval
from app.core.predigraph import WindowedPreDigraph, complex_class, validate
from app.core.profile import (
    Approach,
    CriticalProfile,
    CriticalTail,
    End,
    LimitKind,
    ProbeResult,
    SabStatus,
    SeparationResult,
    TailDescriptor,
)

SCHEMA_VERSION = 1

OutputFormat = Literal["json", "dot", "svg"]


# ---------------------------------------------------------------------------
# Spec file
# ---------------------------------------------------------------------------

class TailSpec(BaseModel):
    """Declared behaviour of one function toward one end."""
    limit: LimitKind = LimitKind.CONVERGE
    value: Optional[float] = None
    critical_tail: CriticalTail = CriticalTail.FINITE
    approach: Optional[Approach] = None

    @model_validator(mode="after")
    def check_descriptor(self):
        self.to_descriptor(End.POS_INF)
        return self

    def to_descriptor(self, end: End) -> TailDescriptor:
        return TailDescriptor(end, self.limit, self.value, self.critical_tail, self.approach)


class TailsSpec(BaseModel):
    neg_inf: TailSpec
    pos_inf: TailSpec

    def descriptors(self) -> Tuple[TailDescriptor, TailDescriptor]:
        return self.neg_inf.to_descriptor(End.NEG_INF), self.pos_inf.to_descriptor(End.POS_INF)


class FunctionSpec(BaseModel):
    """One boundary function: expression text with `{k}` placeholders."""
    expr: str = Field(..., min_length=1)
    tails: TailsSpec


class Tolerances(BaseModel):
    root: float = Field(default=1e-10, gt=0)
    coalesce: float = Field(default=1e-8, gt=0)


class AnalysisSpec(BaseModel):
    """Complete analysis spec."""
    name: str = Field(default="spec", pattern=r'^[A-Za-z0-9_.-]+$')
    description: Optional[str] = None
    m: int = Field(default=2, ge=2)
    k: int = Field(default=4, ge=1)
    c1: FunctionSpec
    c2: FunctionSpec
    window: Tuple[float, float] = (-5.0, 5.0)
    stabilization_windows: List[Tuple[float, float]] = Field(
        default_factory=lambda: [(-3.0, 3.0), (-5.0, 5.0)], min_length=1
    )
    policy: Policy = Policy.CLUSTER_RESTRICTED
    tolerances: Tolerances = Field(default_factory=Tolerances)
    outputs: List[OutputFormat] = Field(default_factory=lambda: ["json", "dot"])

    @field_validator('window')
    def validate_window(cls, v):
        lo, hi = v
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError('window must be a finite interval with lo < hi')
        return v

    @field_validator('stabilization_windows')
    def validate_schedule(cls, v):
        for lo, hi in v:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError('stabilization windows must be finite intervals with lo < hi')
        for (lo0, hi0), (lo1, hi1) in zip(v, v[1:]):
            if not (lo1 <= lo0 and hi0 <= hi1):
                raise ValueError('stabilization windows must be nested and increasing')
        return v

    @model_validator(mode="after")
    def validate_expressions(self):
        for label in ("c1", "c2"):
            try:
                self.expression(label)
            except ExpressionSyntaxError as e:
                raise ValueError(f"{label}.expr: {e.message}") from e
        return self

    def expression(self, which: str) -> Expr:
        function = self.c1 if which == "c1" else self.c2
        return parse(substitute_k(function.expr, self.k))

    def descriptors(self) -> Tuple[Tuple[TailDescriptor, TailDescriptor], Tuple[TailDescriptor, TailDescriptor]]:
        return self.c1.tails.descriptors(), self.c2.tails.descriptors()

    def window_interval(self) -> Interval:
        return Interval(*self.window)

    def stabilization_intervals(self) -> List[Interval]:
        return [Interval(lo, hi) for lo, hi in self.stabilization_windows]


# ---------------------------------------------------------------------------
# Documents
# ---------------------------------------------------------------------------

class VertexDoc(BaseModel):
    id: str
    value: float
    kind: str
    x: float
    x_range: Tuple[float, float]
    nf: bool
    unbounded_ends: List[str]
    walls: List[str]
    event_kinds: List[str]
    pole_closed: bool = False
    poles: List[str] = Field(default_factory=list)


class EdgeDoc(BaseModel):
    id: str
    tail: Optional[str]
    head: Optional[str]
    witness: Tuple[float, float]
    tail_family: bool
    head_family: bool


class NfDoc(BaseModel):
    vertex: str
    value: float
    ends: List[str]
    clustering_sides: List[str]


class PreDigraphDoc(BaseModel):
    m: int
    window: Tuple[float, float]
    limits: Tuple[Optional[float], Optional[float]]
    complex_class: str
    vertices: List[VertexDoc]
    edges: List[EdgeDoc]
    nf: List[NfDoc]
    violations: List[str]

    @classmethod
    def from_graph(cls, g: WindowedPreDigraph) -> "PreDigraphDoc":
        return cls(
            m=g.m,
            window=(g.window.lo, g.window.hi),
            limits=g.limits,
            complex_class=complex_class(g).value,
            vertices=[
                VertexDoc(
                    id=v.id,
                    value=v.value,
                    kind=v.kind.value,
                    x=v.x,
                    x_range=v.x_range,
                    nf=v.id in g.nf_ids,
                    unbounded_ends=sorted(e.value for e in v.unbounded_ends),
                    walls=sorted(e.value for e in v.walls),
                    event_kinds=list(v.event_kinds),
                    pole_closed=v.pole_closed,
                    poles=sorted(e.value for e in v.poles),
                )
                for v in g.vertices
            ],
            edges=[
                EdgeDoc(
                    id=e.id,
                    tail=e.tail,
                    head=e.head,
                    witness=e.witness,
                    tail_family=e.tail_family,
                    head_family=e.head_family,
                )
                for e in g.edges
            ],
            nf=[
                NfDoc(
                    vertex=a.vertex_id,
                    value=a.value,
                    ends=sorted(e.value for e in a.ends),
                    clustering_sides=sorted(s.value for s in a.clustering_sides),
                )
                for a in g.nf
            ],
            violations=validate(g),
        )


class GermDoc(BaseModel):
    component: str
    nf_vertex: str
    side: str
    multiplicity: str
    edge: str


class ClassDoc(BaseModel):
    id: str
    members: List[str]


class GdnfEdgeDoc(BaseModel):
    id: str
    nf_vertex: str
    nf_value: float
    source: Optional[str]
    target: Optional[str]


class GdnfDoc(BaseModel):
    policy: str
    classes: List[ClassDoc]
    edges: List[GdnfEdgeDoc]
    germs: List[GermDoc]
    components: Dict[str, List[str]]

    @classmethod
    def from_gdnf(cls, d: Gdnf) -> "GdnfDoc":
        table = d.table or GermTable((), ())
        return cls(
            policy=d.policy.value,
            classes=[ClassDoc(id=c.id, members=list(c.members)) for c in d.classes],
            edges=[
                GdnfEdgeDoc(id=e.id, nf_vertex=e.nf_vertex, nf_value=e.nf_value, source=e.source, target=e.target)
                for e in d.edges
            ],
            germs=[
                GermDoc(
                    component=r.component,
                    nf_vertex=r.nf_vertex,
                    side=r.side.value,
                    multiplicity=r.multiplicity.value,
                    edge=r.edge,
                )
                for r in table.rows
            ],
            components={c: list(m) for c, m in zip(table.components, table.members)},
        )


class EndStatusDoc(BaseModel):
    kind: str
    value: Optional[float] = None


class SabDoc(BaseModel):
    sab: bool
    neg_inf: EndStatusDoc
    pos_inf: EndStatusDoc

    @classmethod
    def from_status(cls, s: SabStatus) -> "SabDoc":
        return cls(
            sab=s.is_sab,
            neg_inf=EndStatusDoc(kind=s.neg_inf.kind.value, value=s.neg_inf.value),
            pos_inf=EndStatusDoc(kind=s.pos_inf.kind.value, value=s.pos_inf.value),
        )


class SeparationDoc(BaseModel):
    status: str
    witness: Optional[float] = None
    sampled_only: bool = False
    leaves: int = 0

    @classmethod
    def from_result(cls, r: SeparationResult) -> "SeparationDoc":
        return cls(status=r.status, witness=r.witness, sampled_only=r.sampled_only, leaves=r.leaves)


class ProbeDoc(BaseModel):
    function: str
    end: str
    status: str
    reason: str = ""

    @classmethod
    def from_result(cls, function: str, r: ProbeResult) -> "ProbeDoc":
        return cls(function=function, end=r.end.value, status=r.status, reason=r.reason)


class CriticalPointDoc(BaseModel):
    x: float
    value: float
    kind: str


class ProfileDoc(BaseModel):
    function: str
    expr: str
    is_constant: bool
    constant_value: Optional[float] = None
    critical_points: List[CriticalPointDoc]

    @classmethod
    def from_profile(cls, p: CriticalProfile) -> "ProfileDoc":
        return cls(
            function=p.name,
            expr=str(p.function),
            is_constant=p.is_constant,
            constant_value=p.constant_value,
            critical_points=[CriticalPointDoc(x=cp.x, value=cp.value, kind=cp.kind.value) for cp in p.critical_points],
        )


class StabilityDoc(BaseModel):
    stable: bool
    requested: List[Tuple[float, float]]
    scheduled: List[Tuple[float, float]]
    effective: List[Tuple[float, float]]
    patterns: List[str]
    first_difference: Optional[int] = None
    collapsed: Optional[int] = None

    @classmethod
    def from_certificate(cls, c: StabilityCertificate) -> "StabilityDoc":
        return cls(
            stable=c.stable,
            requested=[(w.lo, w.hi) for w in c.requested],
            scheduled=[(w.lo, w.hi) for w in c.scheduled],
            effective=[(w.lo, w.hi) for w in c.effective],
            patterns=[p.value for p in c.patterns],
            first_difference=c.first_difference,
            collapsed=c.collapsed,
        )


class AnalyzeDocument(BaseModel):
    schema_: int = Field(default=SCHEMA_VERSION, alias="schema")
    command: Literal["analyze"] = "analyze"
    spec: str
    requested_window: Tuple[float, float]
    effective_window: Tuple[float, float]
    separation: SeparationDoc
    sab: SabDoc
    probes: List[ProbeDoc]
    profiles: List[ProfileDoc]
    nf_mismatches: List[str]
    graph: PreDigraphDoc


class ClassifyDocument(BaseModel):
    schema_: int = Field(default=SCHEMA_VERSION, alias="schema")
    command: Literal["classify"] = "classify"
    spec: str
    pattern: str
    sab: SabDoc
    policy_counts: Dict[str, int]
    stability: StabilityDoc
    probes: List[ProbeDoc]
    nf_mismatches: List[str]
    gdnf: GdnfDoc


class PoleDoc(BaseModel):
    end: str
    value: float
    vertex: str
    absorbed: bool


class CompactifyDocument(BaseModel):
    schema_: int = Field(default=SCHEMA_VERSION, alias="schema")
    command: Literal["compactify"] = "compactify"
    spec: str
    limits: Tuple[float, float]
    poles: List[PoleDoc]
    pattern: str
    invariance: str
    asserted: bool
    probes: List[ProbeDoc]
    nf_mismatches: List[str]
    graph: PreDigraphDoc
    gdnf_before: GdnfDoc
    gdnf_after: GdnfDoc


class LevelDoc(BaseModel):
    t: float
    sweep: int
    oracle: int
    agree: bool


class CheckDocument(BaseModel):
    schema_: int = Field(default=SCHEMA_VERSION, alias="schema")
    command: Literal["check"] = "check"
    spec: str
    agree: bool
    x_samples: int
    levels: List[LevelDoc]
    incidence_issues: List[str]
    probes: List[ProbeDoc]
    nf_mismatches: List[str]


class ArtifactDoc(BaseModel):
    name: str
    sha256: str
    size: int
    media_type: str


class ManifestDocument(BaseModel):
    schema_: int = Field(default=SCHEMA_VERSION, alias="schema")
    command: str
    spec: str
    exit_code: int
    artifacts: List[ArtifactDoc]


# ---------------------------------------------------------------------------
# Canonical JSON
# ---------------------------------------------------------------------------

def _number(value: float) -> str:
    if math.isnan(value):
        return '"nan"'
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    return "%.17g" % value


def _render(value: Any, indent: int) -> str:
    pad = "  " * (indent + 1)
    close = "  " * indent
    if isinstance(value, BaseModel):
        value = value.model_dump(mode="python", by_alias=True)
    if value is None or isinstance(value, bool):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _number(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return json.dumps(value.value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_render(v, indent + 1)}" for k, v in sorted(value.items())]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{pad}{_render(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def canonical_json(document: Any) -> str:
    """Deterministic JSON: sorted keys, 17 significant digits, non-finite
    numbers as strings."""
    return _render(document, 0) + "\n"
