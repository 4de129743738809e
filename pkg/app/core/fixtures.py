"""
Bundled analysis specs: the six pattern pairs P1..P6 and an adversarial pair
that is unstable across the default window schedule.
"""

from pathlib import Path
from typing import Dict

from app.core.config import load_spec
from app.core.errors import SpecError
from app.core.profile import Approach, CriticalTail, LimitKind
from app.models.schemas import AnalysisSpec, FunctionSpec, TailSpec, TailsSpec

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"

PATTERN_FIXTURES = ("P1", "P2", "P3", "P4", "P5", "P6")
FIXTURE_NAMES = PATTERN_FIXTURES + ("adversarial",)


def fixture_path(name: str) -> Path:
    if name not in FIXTURE_NAMES:
        raise SpecError(f"unknown fixture '{name}' (available: {', '.join(FIXTURE_NAMES)})")
    return FIXTURE_DIR / f"{name}.yaml"


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text()


def load_fixture(name: str) -> AnalysisSpec:
    return load_spec(fixture_path(name))


def bundled_fixtures() -> Dict[str, AnalysisSpec]:
    """Every bundled spec by name, in P1..P6 order, adversarial last."""
    return {name: load_fixture(name) for name in FIXTURE_NAMES}


_SWAP_TAIL = {
    CriticalTail.FINITE: CriticalTail.FINITE,
    CriticalTail.ACCUMULATING_FROM_ABOVE: CriticalTail.ACCUMULATING_FROM_BELOW,
    CriticalTail.ACCUMULATING_FROM_BELOW: CriticalTail.ACCUMULATING_FROM_ABOVE,
    CriticalTail.ACCUMULATING_BOTH_SIDES: CriticalTail.ACCUMULATING_BOTH_SIDES,
}

_SWAP_LIMIT = {
    LimitKind.CONVERGE: LimitKind.CONVERGE,
    LimitKind.DIVERGE_MINUS: LimitKind.DIVERGE_PLUS,
    LimitKind.DIVERGE_PLUS: LimitKind.DIVERGE_MINUS,
}

_SWAP_APPROACH = {
    None: None,
    Approach.ABOVE: Approach.BELOW,
    Approach.BELOW: Approach.ABOVE,
    Approach.EXACT: Approach.EXACT,
}


def _negated_tail(tail: TailSpec) -> TailSpec:
    return TailSpec(
        limit=_SWAP_LIMIT[tail.limit],
        value=None if tail.value is None else (-tail.value or 0.0),
        critical_tail=_SWAP_TAIL[tail.critical_tail],
        approach=_SWAP_APPROACH[tail.approach],
    )


def _negated(function: FunctionSpec) -> FunctionSpec:
    return FunctionSpec(
        expr=f"-({function.expr})",
        tails=TailsSpec(neg_inf=_negated_tail(function.tails.neg_inf), pos_inf=_negated_tail(function.tails.pos_inf)),
    )


def exchange_signs(spec: AnalysisSpec) -> AnalysisSpec:
    """The pair (-c2, -c1): the same strip reflected in t = 0."""
    return spec.model_copy(
        update={
            "name": f"{spec.name}-exchanged",
            "c1": _negated(spec.c2),
            "c2": _negated(spec.c1),
        }
    )
