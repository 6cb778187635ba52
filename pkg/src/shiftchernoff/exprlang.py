"""Small arithmetic expression language for coefficients and initial data.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | 'x' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'

The exponent of ``^`` is parsed as a unary expression, so ``2^-1`` is 0.5 and
``-2^2`` is -4.  Trees are immutable and evaluation is pure.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ExpressionError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "ExprDomainError",
    "Num",
    "Var",
    "Const",
    "Neg",
    "BinOp",
    "Call",
    "Expression",
    "parse",
    "evaluate",
    "evaluate_array",
    "to_source",
    "to_source_full",
    "depends_on_x",
    "FUNCTIONS",
    "CONSTANTS",
]


class ExpressionError(ValueError):
    """Base class for every error raised by this module."""


class ExprSyntaxError(ExpressionError):
    def __init__(self, offset: int, expected: str, found: str = ""):
        self.offset = offset
        self.expected = expected
        self.found = found
        msg = f"syntax error at offset {offset}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class UnknownIdentifierError(ExpressionError):
    def __init__(self, offset: int, name: str):
        self.offset = offset
        self.name = name
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class ExprDomainError(ExpressionError):
    """Evaluation produced a non-finite or non-real value.

    ``subexpr`` is the source text of the innermost failing sub-expression.
    """

    def __init__(self, subexpr: str, reason: str, x=None):
        self.subexpr = subexpr
        self.reason = reason
        self.x = x
        where = "" if x is None else f" at x={x!r}"
        super().__init__(f"domain error in '{subexpr}'{where}: {reason}")


# --- tree ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


Expression = Union[Num, Var, Const, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}

FUNCTIONS = {
    "sin": (math.sin, np.sin),
    "cos": (math.cos, np.cos),
    "exp": (math.exp, np.exp),
    "tanh": (math.tanh, np.tanh),
    "sqrt": (math.sqrt, np.sqrt),
    "abs": (abs, np.abs),
}


# --- lexer --------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num', 'ident', 'op', 'end'
    text: str
    offset: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(len(source[:pos].encode("utf-8")),
                                  "number, identifier, operator or parenthesis", source[pos])
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(source.encode("utf-8"))))
    return tokens


# --- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def _offset(self, tok: _Token) -> int:
        # byte offset, so that non-ASCII text before the error is counted right
        return len(self.source[: tok.offset].encode("utf-8")) if tok.kind != "end" else tok.offset

    def _fail(self, expected: str):
        tok = self.tok
        found = tok.text if tok.kind != "end" else "end of input"
        raise ExprSyntaxError(self._offset(tok), expected, found)

    def _advance(self) -> _Token:
        tok = self.tok
        self.pos += 1
        return tok

    def _expect(self, text: str):
        if self.tok.kind == "op" and self.tok.text == text:
            return self._advance()
        self._fail(repr(text))

    def parse(self) -> Expression:
        node = self.expr()
        if self.tok.kind != "end":
            self._fail("operator or end of input")
        return node

    def expr(self) -> Expression:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self._advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self._advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        if self.tok.kind == "op" and self.tok.text == "-":
            self._advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self._advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        tok = self.tok
        if tok.kind == "num":
            self._advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self._advance()
            name = tok.text
            if name == "x":
                return Var()
            if name in CONSTANTS:
                return Const(name)
            if name in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(name, arg)
            raise UnknownIdentifierError(self._offset(tok), name)
        if tok.kind == "op" and tok.text == "(":
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        self._fail("number, 'x', constant, function call or '('")


def parse(source: str) -> Expression:
    """Parse ``source`` into an expression tree.

    Raises
    ------
    ExprSyntaxError
        With the byte offset of the offending token and a description of what
        was expected there.
    UnknownIdentifierError
        For names other than ``x``, the constants and the known functions.
    """
    if not source or not source.strip():
        raise ExprSyntaxError(0, "an expression", "empty input")
    return _Parser(source).parse()


# --- printing -----------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node: Expression) -> int:
    if isinstance(node, BinOp):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL}.get(
            node.op, _PREC_POW)
    if isinstance(node, Neg):
        return _PREC_UNARY
    return _PREC_ATOM


def _num_text(value: float) -> str:
    text = repr(float(value))
    if text.endswith(".0"):
        text = text[:-2]
    return text


def to_source(node: Expression) -> str:
    """Render ``node`` with the minimal parentheses needed to re-parse it."""
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        if _prec(node.operand) < _PREC_UNARY:
            inner = f"({inner})"
        return f"-{inner}"
    p = _prec(node)
    left, right = to_source(node.left), to_source(node.right)
    if node.op == "^":
        if _prec(node.left) <= _PREC_POW:
            left = f"({left})"
        if _prec(node.right) < _PREC_UNARY:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def to_source_full(node: Expression) -> str:
    """Render ``node`` with every operator application parenthesized."""
    if isinstance(node, (Num, Var, Const)):
        return to_source(node)
    if isinstance(node, Call):
        return f"{node.func}({to_source_full(node.arg)})"
    if isinstance(node, Neg):
        return f"(-{to_source_full(node.operand)})"
    return f"({to_source_full(node.left)}{node.op}{to_source_full(node.right)})"


def depends_on_x(node: Expression) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, Neg):
        return depends_on_x(node.operand)
    if isinstance(node, Call):
        return depends_on_x(node.arg)
    return depends_on_x(node.left) or depends_on_x(node.right)


# --- evaluation ---------------------------------------------------------------


def _is_integral(value: float) -> bool:
    return math.isfinite(value) and value == math.floor(value)


def evaluate(node: Expression, x: float) -> float:
    """Evaluate ``node`` at the scalar ``x`` in double precision.

    Raises :class:`ExprDomainError` naming the innermost sub-expression whose
    value is non-finite or not real.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ExprDomainError("x", "non-finite argument", x)
    return _eval(node, x)


def _eval(node: Expression, x: float) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, Call):
        arg = _eval(node.arg, x)
        if node.func == "sqrt" and arg < 0.0:
            raise ExprDomainError(to_source(node), "square root of a negative number", x)
        try:
            value = FUNCTIONS[node.func][0](arg)
        except OverflowError:
            raise ExprDomainError(to_source(node), "overflow", x) from None
        return _check(value, node, x)
    left = _eval(node.left, x)
    right = _eval(node.right, x)
    op = node.op
    if op == "+":
        value = left + right
    elif op == "-":
        value = left - right
    elif op == "*":
        value = left * right
    elif op == "/":
        if right == 0.0:
            raise ExprDomainError(to_source(node), "division by zero", x)
        value = left / right
    else:
        if left < 0.0 and not _is_integral(right):
            raise ExprDomainError(to_source(node), "negative base with non-integer exponent", x)
        if left == 0.0 and right < 0.0:
            raise ExprDomainError(to_source(node), "zero raised to a negative power", x)
        try:
            value = left**right
        except OverflowError:
            raise ExprDomainError(to_source(node), "overflow", x) from None
    return _check(value, node, x)


def _check(value: float, node: Expression, x: float) -> float:
    if not math.isfinite(value):
        raise ExprDomainError(to_source(node), "non-finite result", x)
    return value


def evaluate_array(node: Expression, xs) -> np.ndarray:
    """Vectorized evaluation over an array of points.

    Same semantics and errors as :func:`evaluate`; the reported ``x`` is the
    first offending point.  Results may differ from the scalar path in the
    last bit, since numpy's transcendental kernels are not libm's.
    """
    xs = np.asarray(xs, dtype=float)
    if not np.all(np.isfinite(xs)):
        raise ExprDomainError("x", "non-finite argument", float(xs[~np.isfinite(xs)][0]))
    with np.errstate(all="ignore"):
        out = _eval_arr(node, xs)
    return np.broadcast_to(out, xs.shape).astype(float, copy=True)


def _first_bad(mask: np.ndarray, xs: np.ndarray):
    mask = np.broadcast_to(mask, xs.shape)
    return float(xs[mask][0]) if xs.ndim else float(xs)


def _eval_arr(node: Expression, xs: np.ndarray):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        return xs
    if isinstance(node, Const):
        return np.float64(CONSTANTS[node.name])
    if isinstance(node, Neg):
        return -_eval_arr(node.operand, xs)
    if isinstance(node, Call):
        arg = _eval_arr(node.arg, xs)
        if node.func == "sqrt":
            bad = np.asarray(arg) < 0.0
            if np.any(bad):
                raise ExprDomainError(to_source(node), "square root of a negative number",
                                      _first_bad(bad, xs))
        return _check_arr(FUNCTIONS[node.func][1](arg), node, xs)
    left = _eval_arr(node.left, xs)
    right = _eval_arr(node.right, xs)
    op = node.op
    if op == "+":
        value = left + right
    elif op == "-":
        value = left - right
    elif op == "*":
        value = left * right
    elif op == "/":
        bad = np.asarray(right) == 0.0
        if np.any(bad):
            raise ExprDomainError(to_source(node), "division by zero", _first_bad(bad, xs))
        value = left / right
    else:
        left_a, right_a = np.broadcast_arrays(left, right)
        bad = (left_a < 0.0) & (right_a != np.floor(right_a))
        if np.any(bad):
            raise ExprDomainError(to_source(node), "negative base with non-integer exponent",
                                  _first_bad(bad, xs))
        bad = (left_a == 0.0) & (right_a < 0.0)
        if np.any(bad):
            raise ExprDomainError(to_source(node), "zero raised to a negative power",
                                  _first_bad(bad, xs))
        value = np.power(left, right)
    return _check_arr(value, node, xs)


def _check_arr(value, node: Expression, xs: np.ndarray):
    bad = ~np.isfinite(value)
    if np.any(bad):
        raise ExprDomainError(to_source(node), "non-finite result", _first_bad(bad, xs))
    return value
