"""
Exception hierarchy for reeb-strip.

Every error carries the process exit code the CLI maps it to.
"""

from typing import Any, Optional, Tuple


class ReebError(Exception):
    """Base class for every fault raised by the library."""

    exit_code: int = 5

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ExpressionSyntaxError(ReebError):
    """Expression text does not conform to the grammar."""

    exit_code = 1

    def __init__(self, message: str, position: int, source: str = ""):
        super().__init__(f"{message} at position {position}")
        self.reason = message
        self.position = position
        self.source = source


class EvaluationError(ReebError):
    """Point evaluation hit a division by zero or an overflow."""

    def __init__(self, message: str, x: Optional[float] = None):
        super().__init__(message)
        self.x = x


class EnclosureError(ReebError):
    """Interval enclosure of a denominator contains zero."""


class SpecError(ReebError):
    """Spec file is missing or invalid."""

    exit_code = 1


class TrustRegionError(ReebError):
    """A window leaves the region where oscillatory terms evaluate reliably."""


class CriticalPointError(ReebError):
    """Derivative sign pattern is inconsistent with isolation."""


class SeparationError(ReebError):
    """The strict separation c1 < c2 fails at a witness point."""

    exit_code = 2

    def __init__(self, witness: float, c1_value: float, c2_value: float):
        super().__init__(
            f"separation violated at x={witness!r}: c1={c1_value!r} >= c2={c2_value!r}"
        )
        self.witness = witness
        self.c1_value = c1_value
        self.c2_value = c2_value


class DescriptorError(ReebError):
    """Declared tail descriptors disagree with what the data shows."""

    exit_code = 3


class DegenerateSliceError(ReebError):
    """Slice membership cannot be decided at a tangency."""

    def __init__(self, message: str, t: float, bracket: Tuple[float, float]):
        super().__init__(f"{message} (t={t!r}, bracket=[{bracket[0]!r}, {bracket[1]!r}])")
        self.t = t
        self.bracket = bracket


class OverlapAmbiguityError(ReebError):
    """Component continuation between sampled levels is ambiguous."""


class GdnfError(ReebError):
    """GDNF construction met an NF vertex with no attached germs."""


class UnstableGdnfError(ReebError):
    """GDNFs of consecutive windows are not isomorphic."""

    exit_code = 4

    def __init__(self, message: str, certificate: Any = None):
        super().__init__(message)
        self.certificate = certificate


class CompactificationPreconditionError(ReebError):
    """Compactification requested for a pair whose tails do not converge."""

    exit_code = 1


class CompactificationError(ReebError):
    """Compactification produced an inconsistent graph."""


class InvarianceError(ReebError):
    """GDNF changed under compactification for a pattern that must be invariant."""
