"""Scalar fields R^d -> R: a small expression language plus a built-in corpus.

Expressions are parsed with a Pratt parser into an immutable tree and
evaluated elementwise over numpy arrays, so a field can be evaluated on a
whole finite-difference stencil or lattice in one call.

Precedence, tightest first: function calls, ``^`` (right-associative),
unary minus, ``* /``, ``+ -``. So ``-x^2`` is ``-(x^2)`` and ``x^2^3`` is
``x^(2^3)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
import math
import re
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, InputError, ParseError

DEFAULT_DELTA = 1e-4


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Const, Var, Neg, BinOp, Call]

FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "tan": (1, np.tan),
    "exp": (1, np.exp),
    "log": (1, np.log),
    "sqrt": (1, np.sqrt),
    "abs": (1, np.abs),
    "min": (2, np.minimum),
    "max": (2, np.maximum),
    "pow": (2, None),
}
CONSTANTS = {"pi": math.pi, "e": math.e}
_XYZ = {"x": 0, "y": 1, "z": 2}
_INDEXED = re.compile(r"x([1-9][0-9]*)\Z")


# --------------------------------------------------------------------------
# tokenizer and parser

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


@dataclass
class _Tok:
    kind: str  # num, name, op, end
    text: str
    offset: int


def _tokenize(source: str):
    pos = 0
    n = len(source)
    toks = []
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            off = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ParseError(f"unexpected character {source[off]!r}", off)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(source)))
    return toks


def _variable_index(name: str) -> Optional[int]:
    if name in _XYZ:
        return _XYZ[name]
    m = _INDEXED.match(name)
    if m:
        return int(m.group(1)) - 1
    return None


_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_PREFIX_BP = 30


class _Parser:
    def __init__(self, source: str, dimension: int):
        self.source = source
        self.dimension = dimension
        self.toks = _tokenize(source)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        tok = self.advance()
        if tok.text != text:
            found = tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", tok.offset)
        return tok

    def parse(self) -> Expr:
        expr = self.expression(0)
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected {tok.text!r}", tok.offset)
        return expr

    def expression(self, rbp: int) -> Expr:
        left = self.nud(self.advance())
        while True:
            tok = self.peek()
            lbp = _INFIX.get(tok.text, 0) if tok.kind == "op" else 0
            if lbp <= rbp:
                return left
            self.advance()
            # ^ is right-associative: parse its right side one notch looser
            right = self.expression(lbp - 1 if tok.text == "^" else lbp)
            left = BinOp(tok.text, left, right)

    def nud(self, tok: _Tok) -> Expr:
        if tok.kind == "num":
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "-":
            return Neg(self.expression(_PREFIX_BP))
        if tok.kind == "op" and tok.text == "+":
            return self.expression(_PREFIX_BP)
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner
        if tok.kind == "name":
            return self.name(tok)
        found = tok.text or "end of input"
        raise ParseError(f"unexpected {found!r}", tok.offset)

    def name(self, tok: _Tok) -> Expr:
        if self.peek().text == "(":
            if tok.text not in FUNCTIONS:
                raise ParseError(f"unknown function {tok.text!r}", tok.offset)
            self.advance()
            args = [self.expression(0)]
            while self.peek().text == ",":
                self.advance()
                args.append(self.expression(0))
            self.expect(")")
            arity = FUNCTIONS[tok.text][0]
            if len(args) != arity:
                raise ParseError(
                    f"{tok.text}() takes {arity} argument(s), got {len(args)}", tok.offset
                )
            return Call(tok.text, tuple(args))
        if tok.text in CONSTANTS:
            return Const(CONSTANTS[tok.text])
        idx = _variable_index(tok.text)
        if idx is None:
            raise ParseError(f"unknown identifier {tok.text!r}", tok.offset)
        if idx >= self.dimension:
            raise ParseError(
                f"variable {tok.text!r} out of range for dimension {self.dimension}", tok.offset
            )
        return Var(idx)


def parse_expression(source: str, dimension: int) -> Expr:
    """Parse ``source`` into an expression tree over ``dimension`` variables.

    Variables are ``x, y, z`` (indices 0..2) or ``x1 .. xd``.

    >>> parse_expression("2+3*4", 1)
    BinOp(op='+', left=Const(value=2.0), right=BinOp(op='*', left=Const(value=3.0), right=Const(value=4.0)))
    """
    if not source or not source.strip():
        raise ParseError("empty expression", 0)
    if dimension < 1:
        raise InputError("dimension must be >= 1")
    return _Parser(source, dimension).parse()


def infer_dimension(source: str) -> int:
    """Smallest dimension that covers every variable named in ``source``."""
    dim = 1
    for tok in _tokenize(source):
        if tok.kind == "name" and tok.text not in FUNCTIONS and tok.text not in CONSTANTS:
            idx = _variable_index(tok.text)
            if idx is not None:
                dim = max(dim, idx + 1)
    return dim


def to_source(expr: Expr) -> str:
    """Fully parenthesized source text; re-parses to an identical tree."""
    if isinstance(expr, Const):
        return repr(float(expr.value))
    if isinstance(expr, Var):
        return f"x{expr.index + 1}"
    if isinstance(expr, Neg):
        return f"(-{to_source(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({to_source(expr.left)} {expr.op} {to_source(expr.right)})"
    if isinstance(expr, Call):
        return f"{expr.name}({', '.join(to_source(a) for a in expr.args)})"
    raise TypeError(f"not an expression node: {expr!r}")


def max_variable(expr: Expr) -> int:
    if isinstance(expr, Var):
        return expr.index
    if isinstance(expr, Neg):
        return max_variable(expr.operand)
    if isinstance(expr, BinOp):
        return max(max_variable(expr.left), max_variable(expr.right))
    if isinstance(expr, Call):
        return max((max_variable(a) for a in expr.args), default=-1)
    return -1


# --------------------------------------------------------------------------
# evaluation


def _domain_fail(node, value, x):
    bad = ~np.isfinite(np.broadcast_to(value, x.shape[:-1]))
    pts = x.reshape(-1, x.shape[-1])
    k = int(np.argmax(bad.ravel())) if bad.ndim else 0
    return DomainError(f"non-finite value in {to_source(node)} at point {pts[k].tolist()}")


def _power(node, base, expo, x):
    fractional = expo != np.round(expo)
    bad = (np.asarray(base) < 0) & fractional
    if np.any(bad):
        raise DomainError(
            f"negative base with non-integer exponent in {to_source(node)}"
        )
    return np.power(base, expo)


def _eval(node, x: np.ndarray):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x[..., node.index]
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, BinOp):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        op = node.op
        if op == "+":
            out = a + b
        elif op == "-":
            out = a - b
        elif op == "*":
            out = a * b
        elif op == "/":
            out = np.divide(a, b)
        else:
            out = _power(node, a, b, x)
    elif isinstance(node, Call):
        args = [_eval(a, x) for a in node.args]
        if node.name == "pow":
            out = _power(node, args[0], args[1], x)
        else:
            out = FUNCTIONS[node.name][1](*args)
    else:
        raise TypeError(f"not an expression node: {node!r}")
    if not np.all(np.isfinite(out)):
        raise _domain_fail(node, out, x)
    return out


def evaluate_expression(expr: Expr, points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval(expr, x)
    return np.broadcast_to(out, x.shape[:-1]).astype(float)


# --------------------------------------------------------------------------
# scalar fields


@dataclass(frozen=True, eq=False)
class ScalarField:
    """An evaluatable function R^d -> R.

    ``fn`` maps an array of shape ``(..., d)`` to shape ``(...)``.
    ``domain_hint`` is an optional ``(lo, hi)`` box on which the field is
    twice continuously differentiable; finite-difference stencils are kept
    inside it.
    """

    dimension: int
    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "expr"
    domain_hint: Optional[tuple] = None
    expression: Optional[Expr] = None
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.dimension < 1:
            raise InputError("field dimension must be >= 1")
        if self.domain_hint is not None:
            lo, hi = (np.asarray(b, dtype=float).reshape(self.dimension) for b in self.domain_hint)
            if not np.all(lo < hi):
                raise InputError("domain hint needs lo < hi on every axis")
            object.__setattr__(self, "domain_hint", (lo, hi))

    def __call__(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if x.shape[-1:] != (self.dimension,):
            raise InputError(
                f"{self.name}: expected points of dimension {self.dimension}, got shape {x.shape}"
            )
        with np.errstate(all="ignore"):
            out = np.asarray(self.fn(x), dtype=float)
        if not np.all(np.isfinite(out)):
            bad = np.flatnonzero(~np.isfinite(np.broadcast_to(out, x.shape[:-1]).ravel()))[0]
            pt = x.reshape(-1, self.dimension)[bad].tolist()
            raise DomainError(f"{self.name}: non-finite value at point {pt}")
        return out

    def scaled(self, alpha: float) -> "ScalarField":
        fn = self.fn
        return ScalarField(
            self.dimension,
            lambda x: alpha * fn(x),
            name=f"{alpha!r}*{self.name}",
            domain_hint=self.domain_hint,
        )

    def __neg__(self) -> "ScalarField":
        fn = self.fn
        return ScalarField(
            self.dimension,
            lambda x: -fn(x),
            name=f"-{self.name}",
            domain_hint=self.domain_hint,
            expression=Neg(self.expression) if self.expression is not None else None,
        )


def from_expression(source: str, dimension: Optional[int] = None, domain_hint=None) -> ScalarField:
    if dimension is None:
        dimension = infer_dimension(source)
    expr = parse_expression(source, dimension)
    return ScalarField(
        dimension,
        lambda x: evaluate_expression(expr, x),
        name=source,
        domain_hint=domain_hint,
        expression=expr,
    )


def evaluate(f: ScalarField, point) -> float:
    x = np.asarray(point, dtype=float).reshape(-1)
    if x.size != f.dimension:
        raise InputError(f"point has length {x.size}, field dimension is {f.dimension}")
    return float(f(x))


# --------------------------------------------------------------------------
# built-in corpus

H_COS_SOURCE = "-cos(x)-cos(y)"


def _h_cos(params):
    return ScalarField(
        2,
        lambda x: -np.cos(x[..., 0]) - np.cos(x[..., 1]),
        name="h_cos",
        expression=parse_expression(H_COS_SOURCE, 2),
    )


def _g_risk(params):
    from . import risk

    p = float(params.get("p", 0.99))
    alpha = float(params.get("alpha", 0.25))
    delta = float(params.get("delta", DEFAULT_DELTA))
    line = risk.LineSpec(risk.UNIFORM01, p=p, alpha=alpha, penalty="power")
    return ScalarField(
        1,
        lambda x: risk.line_total_loss(line, x[..., 0]),
        name="g_risk",
        domain_hint=([delta], [1.0 - delta]),
        params={"p": p, "alpha": alpha, "delta": delta},
    )


def _h_beta(params):
    from . import risk

    spec = risk.two_line_spec(
        beta=float(params.get("beta", 1.0)),
        p=float(params.get("p", 0.99)),
        alpha=float(params.get("alpha", 0.25)),
        weights=params.get("weights", (0.5, 0.5)),
    )
    return risk.aggregate_field(spec, delta=float(params.get("delta", DEFAULT_DELTA)))


def _cubic_1d(params):
    return ScalarField(1, lambda x: x[..., 0] ** 3, name="cubic_1d",
                       expression=parse_expression("x^3", 1))


def _neg_cos_1d(params):
    return ScalarField(1, lambda x: -np.cos(x[..., 0]), name="neg_cos_1d",
                       expression=parse_expression("-cos(x)", 1))


def _quadratic(params):
    # f(x) = x^T A x / 2, Hessian A
    a = np.array(params["matrix"], dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("quadratic needs a square 'matrix' parameter")
    a = 0.5 * (a + a.T)
    a.setflags(write=False)
    return ScalarField(
        a.shape[0],
        lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, a, x),
        name="quadratic",
        params={"matrix": a},
    )


BUILTINS = {
    "h_cos": _h_cos,
    "g_risk": _g_risk,
    "h_beta": _h_beta,
    "cubic_1d": _cubic_1d,
    "neg_cos_1d": _neg_cos_1d,
    "quadratic": _quadratic,
}


def builtin(name: str, params: Optional[dict] = None, **kwargs) -> ScalarField:
    """Construct a corpus field by name.

    ``h_beta`` takes ``beta``, ``p``, ``alpha``, ``weights`` and ``delta``;
    with the defaults it is the two-line capital-allocation surface on
    ``[delta, 1 - delta]^2``.
    """
    if name not in BUILTINS:
        raise InputError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}")
    merged = dict(params or {})
    merged.update(kwargs)
    f = BUILTINS[name](merged)
    if not f.params:
        object.__setattr__(f, "params", merged)
    return f
