"""
Expression trees over one real variable x.

Grammar (precedence high to low): power, unary minus, mul/div, add/sub.
Exponents are integer literals. Functions: sin, cos, exp.

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'x' | FUNC '(' expr ')' | '(' expr ')'

Evaluation, differentiation, printing and interval enclosure are
single-dispatch functions over the node types.
"""

import math
import re
from dataclasses import dataclass
from functools import singledispatch
from typing import Callable, Iterator, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from app.core.errors import EvaluationError, ExpressionSyntaxError, TrustRegionError
from app.core.interval import Interval

FUNCTIONS = ("sin", "cos", "exp")
OSCILLATORY = ("sin", "cos")

# seeds per unit length on grids covering oscillatory functions
OSCILLATORY_DENSITY = 4096
SMOOTH_DENSITY = 64
TRUST_ULP = 1e-3
TRUST_STEP = 1e-3


class Expr:
    """Base node."""

    __slots__ = ()

    def __str__(self) -> str:
        return format_expr(self)


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"constant must be finite and non-negative, got {self.value!r}")


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")


X = Var()
BinaryNode = Union[Add, Sub, Mul, Div]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

class Token(NamedTuple):
    kind: str
    text: str
    position: int


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            offset = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {text[offset]!r}", offset, text)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def error(self, message: str, token: Optional[Token] = None) -> ExpressionSyntaxError:
        token = token or self.current
        return ExpressionSyntaxError(message, token.position, self.text)

    def expect(self, text: str) -> Token:
        if self.current.text != text:
            found = self.current.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def parse(self) -> Expr:
        if self.current.kind == "end":
            raise self.error("empty expression")
        node = self.expression()
        if self.current.kind != "end":
            raise self.error(f"unexpected token {self.current.text!r}")
        return node

    def expression(self) -> Expr:
        node = self.term()
        while self.current.text in ("+", "-"):
            op = self.advance().text
            right = self.term()
            node = Add(node, right) if op == "+" else Sub(node, right)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.current.text in ("*", "/"):
            op = self.advance().text
            right = self.unary()
            node = Mul(node, right) if op == "*" else Div(node, right)
        return node

    def unary(self) -> Expr:
        if self.current.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.current.text != "^":
            return base
        caret = self.advance()
        start = self.current
        exponent = self.unary()
        value = _integer_literal(exponent)
        if value is None:
            raise self.error("exponent must be an integer literal", start if start.kind != "end" else caret)
        return Pow(base, value)

    def atom(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Const(float(token.text))
        if token.kind == "ident":
            self.advance()
            if token.text == "x":
                return X
            if token.text not in FUNCTIONS:
                raise self.error(f"unknown identifier {token.text!r}", token)
            self.expect("(")
            arg = self.expression()
            self.expect(")")
            return Func(token.text, arg)
        if token.text == "(":
            self.advance()
            node = self.expression()
            self.expect(")")
            return node
        if token.kind == "end":
            raise self.error("unexpected end of input", token)
        raise self.error(f"unexpected token {token.text!r}", token)


def _integer_literal(node: Expr) -> Optional[int]:
    sign = 1
    while isinstance(node, Neg):
        sign = -sign
        node = node.operand
    if isinstance(node, Const) and node.value == int(node.value):
        return sign * int(node.value)
    return None


def parse(text: str) -> Expr:
    """Parse expression text into a tree.

    Raises:
        ExpressionSyntaxError: With the 0-based position of the offending token.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PRECEDENCE = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_SYMBOL = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}


def _precedence(node: Expr) -> int:
    return _PRECEDENCE.get(type(node), 5)


def format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _wrap(node: Expr, parens: bool) -> str:
    text = format_expr(node)
    return f"({text})" if parens else text


@singledispatch
def format_expr(node: Expr) -> str:
    """Canonical text such that parse(format_expr(f)) == f."""
    raise TypeError(f"unsupported node {node!r}")


@format_expr.register
def _(node: Var) -> str:
    return "x"


@format_expr.register
def _(node: Const) -> str:
    return format_number(node.value)


@format_expr.register
def _(node: Func) -> str:
    return f"{node.name}({format_expr(node.arg)})"


@format_expr.register
def _(node: Neg) -> str:
    return "-" + _wrap(node.operand, _precedence(node.operand) < 3)


@format_expr.register
def _(node: Pow) -> str:
    return f"{_wrap(node.base, _precedence(node.base) < 5)}^{node.exponent}"


def _format_binary(node: BinaryNode) -> str:
    prec = _precedence(node)
    left = _wrap(node.left, _precedence(node.left) < prec)
    right = _wrap(node.right, _precedence(node.right) <= prec)
    return f"{left}{_SYMBOL[type(node)]}{right}"


for _cls in (Add, Sub, Mul, Div):
    format_expr.register(_cls, _format_binary)


# ---------------------------------------------------------------------------
# Point evaluation
# ---------------------------------------------------------------------------

def _checked(value: float, what: str, x: float) -> float:
    if not math.isfinite(value):
        raise EvaluationError(f"overflow in {what} at x={x!r}", x)
    return value


@singledispatch
def _eval(node: Expr, x: float) -> float:
    raise TypeError(f"unsupported node {node!r}")


@_eval.register
def _(node: Var, x: float) -> float:
    return x


@_eval.register
def _(node: Const, x: float) -> float:
    return node.value


@_eval.register
def _(node: Neg, x: float) -> float:
    return -_eval(node.operand, x)


@_eval.register
def _(node: Add, x: float) -> float:
    return _checked(_eval(node.left, x) + _eval(node.right, x), "addition", x)


@_eval.register
def _(node: Sub, x: float) -> float:
    return _checked(_eval(node.left, x) - _eval(node.right, x), "subtraction", x)


@_eval.register
def _(node: Mul, x: float) -> float:
    return _checked(_eval(node.left, x) * _eval(node.right, x), "multiplication", x)


@_eval.register
def _(node: Div, x: float) -> float:
    denominator = _eval(node.right, x)
    if denominator == 0.0:
        raise EvaluationError(f"division by zero at x={x!r}", x)
    return _checked(_eval(node.left, x) / denominator, "division", x)


@_eval.register
def _(node: Pow, x: float) -> float:
    base = _eval(node.base, x)
    if base == 0.0 and node.exponent < 0:
        raise EvaluationError(f"division by zero at x={x!r}", x)
    try:
        return _checked(base ** node.exponent, "power", x)
    except OverflowError:
        raise EvaluationError(f"overflow in power at x={x!r}", x)


@_eval.register
def _(node: Func, x: float) -> float:
    arg = _eval(node.arg, x)
    if node.name == "exp":
        try:
            return math.exp(arg)
        except OverflowError:
            raise EvaluationError(f"overflow in exp at x={x!r}", x)
    return math.sin(arg) if node.name == "sin" else math.cos(arg)


def eval_point(f: Expr, x: float) -> float:
    """Evaluate f at x in binary64.

    Raises:
        EvaluationError: On division by zero or overflow.
    """
    return _eval(f, float(x))


# ---------------------------------------------------------------------------
# Array evaluation
# ---------------------------------------------------------------------------

_UFUNC = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


@singledispatch
def _eval_array(node: Expr, xs: np.ndarray) -> np.ndarray:
    raise TypeError(f"unsupported node {node!r}")


@_eval_array.register
def _(node: Var, xs: np.ndarray) -> np.ndarray:
    return xs


@_eval_array.register
def _(node: Const, xs: np.ndarray) -> np.ndarray:
    return np.full_like(xs, node.value)


@_eval_array.register
def _(node: Neg, xs: np.ndarray) -> np.ndarray:
    return -_eval_array(node.operand, xs)


@_eval_array.register
def _(node: Add, xs: np.ndarray) -> np.ndarray:
    return _eval_array(node.left, xs) + _eval_array(node.right, xs)


@_eval_array.register
def _(node: Sub, xs: np.ndarray) -> np.ndarray:
    return _eval_array(node.left, xs) - _eval_array(node.right, xs)


@_eval_array.register
def _(node: Mul, xs: np.ndarray) -> np.ndarray:
    return _eval_array(node.left, xs) * _eval_array(node.right, xs)


@_eval_array.register
def _(node: Div, xs: np.ndarray) -> np.ndarray:
    return _eval_array(node.left, xs) / _eval_array(node.right, xs)


@_eval_array.register
def _(node: Pow, xs: np.ndarray) -> np.ndarray:
    base = _eval_array(node.base, xs)
    if node.exponent < 0:
        return 1.0 / np.power(base, -node.exponent)
    return np.power(base, node.exponent)


@_eval_array.register
def _(node: Func, xs: np.ndarray) -> np.ndarray:
    return _UFUNC[node.name](_eval_array(node.arg, xs))


def eval_array(f: Expr, xs: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    """Vectorized evaluation; overflow and division by zero produce inf/nan."""
    xs = np.asarray(xs, dtype=float)
    with np.errstate(all="ignore"):
        return np.asarray(_eval_array(f, xs), dtype=float) + np.zeros_like(xs)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

def literal_value(node: Expr) -> Optional[float]:
    """Value of a literal-only node (a constant under any number of negations)."""
    sign = 1.0
    while isinstance(node, Neg):
        sign = -sign
        node = node.operand
    if isinstance(node, Const):
        return sign * node.value
    return None


def const(value: float) -> Expr:
    return Neg(Const(-value)) if value < 0 else Const(abs(value))


def _fold(a: Expr, b: Expr, op: Callable[[float, float], float]) -> Optional[Expr]:
    va, vb = literal_value(a), literal_value(b)
    if va is None or vb is None:
        return None
    value = op(va, vb)
    return const(value) if math.isfinite(value) else None


def neg(a: Expr) -> Expr:
    value = literal_value(a)
    if value is not None:
        return const(-value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    folded = _fold(a, b, lambda u, v: u + v)
    if folded is not None:
        return folded
    if literal_value(a) == 0.0:
        return b
    if literal_value(b) == 0.0:
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    folded = _fold(a, b, lambda u, v: u - v)
    if folded is not None:
        return folded
    if literal_value(b) == 0.0:
        return a
    if literal_value(a) == 0.0:
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    folded = _fold(a, b, lambda u, v: u * v)
    if folded is not None:
        return folded
    if literal_value(a) == 0.0 or literal_value(b) == 0.0:
        return Const(0.0)
    if literal_value(a) == 1.0:
        return b
    if literal_value(b) == 1.0:
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if literal_value(b) not in (None, 0.0):
        folded = _fold(a, b, lambda u, v: u / v)
        if folded is not None:
            return folded
    if literal_value(a) == 0.0:
        return Const(0.0)
    if literal_value(b) == 1.0:
        return a
    return Div(a, b)


def power(a: Expr, n: int) -> Expr:
    if n == 0:
        return Const(1.0)
    if n == 1:
        return a
    return Pow(a, n)


@singledispatch
def differentiate(node: Expr) -> Expr:
    """Symbolic derivative d/dx with light simplification."""
    raise TypeError(f"unsupported node {node!r}")


@differentiate.register
def _(node: Var) -> Expr:
    return Const(1.0)


@differentiate.register
def _(node: Const) -> Expr:
    return Const(0.0)


@differentiate.register
def _(node: Neg) -> Expr:
    return neg(differentiate(node.operand))


@differentiate.register
def _(node: Add) -> Expr:
    return add(differentiate(node.left), differentiate(node.right))


@differentiate.register
def _(node: Sub) -> Expr:
    return sub(differentiate(node.left), differentiate(node.right))


@differentiate.register
def _(node: Mul) -> Expr:
    u, v = node.left, node.right
    return add(mul(differentiate(u), v), mul(u, differentiate(v)))


@differentiate.register
def _(node: Div) -> Expr:
    u, v = node.left, node.right
    numerator = sub(mul(differentiate(u), v), mul(u, differentiate(v)))
    return div(numerator, power(v, 2))


@differentiate.register
def _(node: Pow) -> Expr:
    n = node.exponent
    if n == 0:
        return Const(0.0)
    return mul(mul(const(float(n)), power(node.base, n - 1)), differentiate(node.base))


@differentiate.register
def _(node: Func) -> Expr:
    inner = differentiate(node.arg)
    if node.name == "sin":
        return mul(Func("cos", node.arg), inner)
    if node.name == "cos":
        return neg(mul(Func("sin", node.arg), inner))
    return mul(Func("exp", node.arg), inner)


# ---------------------------------------------------------------------------
# Interval enclosure
# ---------------------------------------------------------------------------

@singledispatch
def eval_interval(node: Expr, x: Interval) -> Interval:
    """Enclosure of f over an interval.

    Raises:
        EnclosureError: If a denominator enclosure contains 0.
    """
    raise TypeError(f"unsupported node {node!r}")


@eval_interval.register
def _(node: Var, x: Interval) -> Interval:
    return x


@eval_interval.register
def _(node: Const, x: Interval) -> Interval:
    return Interval.point(node.value)


@eval_interval.register
def _(node: Neg, x: Interval) -> Interval:
    return -eval_interval(node.operand, x)


@eval_interval.register
def _(node: Add, x: Interval) -> Interval:
    return eval_interval(node.left, x) + eval_interval(node.right, x)


@eval_interval.register
def _(node: Sub, x: Interval) -> Interval:
    return eval_interval(node.left, x) - eval_interval(node.right, x)


@eval_interval.register
def _(node: Mul, x: Interval) -> Interval:
    return eval_interval(node.left, x) * eval_interval(node.right, x)


@eval_interval.register
def _(node: Div, x: Interval) -> Interval:
    return eval_interval(node.left, x) / eval_interval(node.right, x)


@eval_interval.register
def _(node: Pow, x: Interval) -> Interval:
    return eval_interval(node.base, x) ** node.exponent


@eval_interval.register
def _(node: Func, x: Interval) -> Interval:
    arg = eval_interval(node.arg, x)
    return getattr(arg, node.name)()


# ---------------------------------------------------------------------------
# Structure queries
# ---------------------------------------------------------------------------

def walk(node: Expr) -> Iterator[Expr]:
    yield node
    if isinstance(node, Neg):
        yield from walk(node.operand)
    elif isinstance(node, (Add, Sub, Mul, Div)):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Pow):
        yield from walk(node.base)
    elif isinstance(node, Func):
        yield from walk(node.arg)


def depends_on_x(node: Expr) -> bool:
    return any(isinstance(n, Var) for n in walk(node))


def oscillatory_arguments(node: Expr) -> List[Expr]:
    """Arguments of every sin/cos node, outermost first, without duplicates."""
    found: List[Expr] = []
    for n in walk(node):
        if isinstance(n, Func) and n.name in OSCILLATORY and n.arg not in found:
            found.append(n.arg)
    return found


def is_oscillatory(node: Expr) -> bool:
    return bool(oscillatory_arguments(node))


def seed_density(node: Expr) -> int:
    return OSCILLATORY_DENSITY if is_oscillatory(node) else SMOOTH_DENSITY


def substitute_k(text: str, k: int) -> str:
    return text.replace("{k}", str(k))


# ---------------------------------------------------------------------------
# Trust window
# ---------------------------------------------------------------------------

def trusted_mask(functions: Sequence[Expr], xs: np.ndarray) -> np.ndarray:
    """Grid points where every sin/cos argument g has ulp(g) <= 1e-3 and a
    derivative small enough for the oscillatory seed grid to resolve."""
    mask = np.ones_like(xs, dtype=bool)
    slope_bound = math.pi * OSCILLATORY_DENSITY / 16.0
    for f in functions:
        for g in oscillatory_arguments(f):
            values = eval_array(g, xs)
            slopes = eval_array(differentiate(g), xs)
            with np.errstate(all="ignore"):
                ok = (
                    np.isfinite(values)
                    & np.isfinite(slopes)
                    & (np.spacing(np.abs(values)) <= TRUST_ULP)
                    & (np.abs(slopes) <= slope_bound)
                )
            mask &= ok
    return mask


def trust_window(functions: Sequence[Expr], requested: Interval) -> Interval:
    """Largest window symmetric about the requested centre, inside the
    requested window, on which every oscillatory argument is trusted.

    Raises:
        TrustRegionError: If the centre itself is untrusted.
    """
    if not any(is_oscillatory(f) for f in functions):
        return requested
    centre = requested.mid
    half = 0.5 * requested.width
    steps = int(math.floor(half / TRUST_STEP))
    offsets = np.arange(steps + 1, dtype=float) * TRUST_STEP
    right = trusted_mask(functions, centre + offsets)
    left = trusted_mask(functions, centre - offsets)
    ok = right & left
    if not ok[0]:
        raise TrustRegionError(f"oscillatory terms are untrusted at the window centre x={centre!r}")
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return requested
    radius = float(offsets[bad[0] - 1])
    if radius <= 0:
        raise TrustRegionError(f"trust window around x={centre!r} is empty")
    return Interval(centre - radius, centre + radius)
