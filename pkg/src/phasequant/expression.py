"""
Potential expressions: tokenizer, recursive-descent parser, canonical
printer and evaluators.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'

An expression has at most one free variable, spelled ``x`` or ``r``.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, NamedTuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DomainViolationError,
    ExpressionSyntaxError,
    MultipleVariablesError,
    UnknownIdentifierError,
)

logger = logging.getLogger(__name__)

VARIABLES = ("x", "r")
CONSTANTS: Dict[str, float] = {"pi": math.pi}

SCALAR_FUNCTIONS: Dict[str, Callable[[float], float]] = {
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
    "sin": math.sin,
    "cos": math.cos,
}

ARRAY_FUNCTIONS: Dict[str, Callable[[NDArray], NDArray]] = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sin": np.sin,
    "cos": np.cos,
}


# AST nodes

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Call]


class EvaluationResult(NamedTuple):
    """Vectorized evaluation: values plus a mask of points where every step stayed finite."""
    values: NDArray[np.float64]
    valid: NDArray[np.bool_]


@dataclass(frozen=True)
class ExprAst:
    """Parsed expression with its single free variable."""
    root: Node
    variable: str = "x"

    def __str__(self) -> str:
        return to_canonical(self.root)

    def evaluate(self, point: float) -> float:
        return evaluate(self, point)

    def evaluate_many(self, points: ArrayLike) -> EvaluationResult:
        return evaluate_many(self, points)


# Tokenizer

class _Token(NamedTuple):
    kind: str  # "num", "ident", "op", "end"
    text: str
    offset: int  # byte offset into the UTF-8 source


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def _tokenize(source: str) -> List[_Token]:
    tokens: List[_Token] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        start = i
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            while i < n and (source[i].isdigit() or source[i] == "."):
                i += 1
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    i = j
                    while i < n and source[i].isdigit():
                        i += 1
            text = source[start:i]
            try:
                value = float(text)
            except ValueError:
                raise ExpressionSyntaxError(f"malformed number '{text}'", _byte_offset(source, start))
            if not math.isfinite(value):
                raise ExpressionSyntaxError(f"numeric literal '{text}' out of range", _byte_offset(source, start))
            tokens.append(_Token("num", text, _byte_offset(source, start)))
        elif ch.isalpha() or ch == "_":
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            tokens.append(_Token("ident", source[start:i], _byte_offset(source, start)))
        elif ch in "+-*/^()":
            i += 1
            tokens.append(_Token("op", ch, _byte_offset(source, start)))
        else:
            raise ExpressionSyntaxError(f"unexpected character '{ch}'", _byte_offset(source, start))
    tokens.append(_Token("end", "", len(source.encode("utf-8"))))
    return tokens


# Parser

class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0
        self.variables: Dict[str, int] = {}

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, text: str) -> _Token:
        token = self.peek()
        if token.kind != "op" or token.text != text:
            found = token.text or "end of input"
            raise ExpressionSyntaxError(f"expected '{text}', found '{found}'", token.offset)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        token = self.peek()
        if token.kind != "end":
            raise ExpressionSyntaxError(f"unexpected '{token.text}'", token.offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        token = self.peek()
        if token.kind == "op" and token.text == "-":
            self.advance()
            return Neg(self.unary())
        if token.kind == "op" and token.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        token = self.advance()
        if token.kind == "num":
            return Const(float(token.text))
        if token.kind == "op" and token.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if token.kind == "ident":
            name = token.text
            if name in SCALAR_FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            if name in CONSTANTS:
                return Const(CONSTANTS[name])
            if len(name) == 1:
                self.variables.setdefault(name, token.offset)
                return Var(name)
            raise UnknownIdentifierError(
                f"unknown identifier '{name}' at byte offset {token.offset}",
                {"identifier": name, "offset": token.offset},
            )
        found = token.text or "end of input"
        raise ExpressionSyntaxError(f"unexpected '{found}'", token.offset)


def parse(source: str) -> ExprAst:
    """
    Parse a potential expression.

    Args:
        source: Expression text such as ``"-0.5/r + 0.2*r"``

    Returns:
        ExprAst whose canonical form re-parses to an equal AST
    """
    if not source or not source.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    parser = _Parser(source)
    root = parser.parse()
    names = sorted(parser.variables)
    if len(names) > 1:
        raise MultipleVariablesError(
            f"expression has more than one free variable: {', '.join(names)}",
            {"variables": names},
        )
    if names and names[0] not in VARIABLES:
        name = names[0]
        raise UnknownIdentifierError(
            f"unknown identifier '{name}' at byte offset {parser.variables[name]} "
            f"(the variable must be one of {', '.join(VARIABLES)})",
            {"identifier": name, "offset": parser.variables[name]},
        )
    ast = ExprAst(root=root, variable=names[0] if names else "x")
    logger.debug("parsed %r as %s", source, ast)
    return ast


def to_canonical(node: Node) -> str:
    """Fully parenthesized form; constants are printed with repr so they round-trip exactly."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_canonical(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_canonical(node.left)} {node.op} {to_canonical(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_canonical(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# Evaluation

def _scalar(node: Node, x: float) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_scalar(node.operand, x)
    if isinstance(node, Call):
        value = SCALAR_FUNCTIONS[node.func](_scalar(node.arg, x))
    else:
        a = _scalar(node.left, x)
        b = _scalar(node.right, x)
        if node.op == "+":
            value = a + b
        elif node.op == "-":
            value = a - b
        elif node.op == "*":
            value = a * b
        elif node.op == "/":
            value = a / b
        else:
            value = math.pow(a, b)
    if not math.isfinite(value):
        raise OverflowError("non-finite intermediate value")
    return value


def evaluate(ast: ExprAst, point: float) -> float:
    """
    Evaluate at a single point.

    Raises:
        DomainViolationError: division by zero, log/sqrt of a negative,
            overflow or any other non-finite intermediate
    """
    try:
        return _scalar(ast.root, float(point))
    except (ZeroDivisionError, ValueError, OverflowError) as e:
        raise DomainViolationError(
            f"'{ast}' is not finite at {ast.variable}={point!r}: {e}",
            {"point": float(point) if math.isfinite(point) else None},
        )


def _array(node: Node, x: NDArray[np.float64]) -> NDArray[np.float64]:
    if isinstance(node, Const):
        return np.full_like(x, node.value)
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_array(node.operand, x)
    if isinstance(node, Call):
        return ARRAY_FUNCTIONS[node.func](_array(node.arg, x))
    a = _array(node.left, x)
    b = _array(node.right, x)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    return np.power(a, b)


def evaluate_many(ast: ExprAst, points: ArrayLike) -> EvaluationResult:
    """Evaluate on an array of points; non-finite results are flagged, never raised."""
    x = np.asarray(points, dtype=np.float64)
    with np.errstate(all="ignore"):
        values = _array(ast.root, x)
    valid = np.isfinite(values)
    return EvaluationResult(values=np.where(valid, values, np.nan), valid=valid)

