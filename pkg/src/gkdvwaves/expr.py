"""Nonlinearity expressions a(u): parser, printer and evaluator.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("-" | "+") unary | power ;
    power   = atom [ "^" unary ] ;            (* right associative *)
    atom    = number | "u" | name | func "(" expr ")" | "(" expr ")" ;
    func    = "sqrt" | "exp" | "ln" | "abs" | "sin" | "cos" ;
    number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
    name    = letter { letter | digit | "_" } ;   (* free parameter *)

Precedence is ``^`` > unary minus > ``*``, ``/`` > ``+``, ``-``, so
``-u^2`` is ``-(u^2)`` and ``u^-1`` is ``u^(-1)``. Parameters are late-bound:
values are supplied at evaluation time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Union

from . import dual as D
from .errors import ExprSyntaxError, UnboundParameterError

FUNCTIONS = ("sqrt", "exp", "ln", "abs", "sin", "cos")
VARIABLE = "u"


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Unary:
    fn: str  # one of FUNCTIONS or "neg"
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^
    left: "Node"
    right: "Node"


Node = Union[Const, Param, Var, Unary, Binary]


def _free_params(node):
    if isinstance(node, Param):
        return frozenset([node.name])
    if isinstance(node, Unary):
        return _free_params(node.arg)
    if isinstance(node, Binary):
        return _free_params(node.left) | _free_params(node.right)
    return frozenset()


@dataclass(frozen=True)
class NonlinearityExpr:
    root: Node
    source: str
    params: frozenset = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "params", _free_params(self.root))

    def __call__(self, u, params: Mapping[str, float] | None = None):
        return evaluate(self, u, params)

    def __str__(self):
        return pretty(self)

    def uses(self, fn):
        """True if the tree applies function ``fn`` anywhere."""

        def walk(n):
            if isinstance(n, Unary):
                return n.fn == fn or walk(n.arg)
            if isinstance(n, Binary):
                return walk(n.left) or walk(n.right)
            return False

        return walk(self.root)


# -- tokenizer ---------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(src):
    pos = 0
    out = []
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        kind, val, pos = self.tok
        if val != text or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {text!r}, found {what}", pos)
        self.take()

    def parse(self):
        node = self.expr()
        kind, val, pos = self.tok
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] in ("-", "+"):
            op = self.take()[1]
            arg = self.unary()
            return Unary("neg", arg) if op == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.tok
        if kind == "num":
            self.take()
            return Const(float(val))
        if kind == "name":
            self.take()
            followed_by_paren = self.tok[1] == "(" and self.tok[0] == "op"
            if val in FUNCTIONS:
                if not followed_by_paren:
                    raise ExprSyntaxError(f"function {val!r} requires parentheses", self.tok[2])
                self.take()
                arg = self.expr()
                self.expect(")")
                return Unary(val, arg)
            if followed_by_paren:
                raise ExprSyntaxError(f"unknown function {val!r}", pos)
            return Var() if val == VARIABLE else Param(val)
        if kind == "op" and val == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ExprSyntaxError("empty operand", pos)
        raise ExprSyntaxError(f"empty operand before {val!r}", pos)


def parse(source: str) -> NonlinearityExpr:
    """Parse ``source`` into an immutable expression tree."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    try:
        source.encode("ascii")
    except UnicodeEncodeError as exc:
        raise ExprSyntaxError("non-ASCII character", exc.start) from None
    return NonlinearityExpr(_Parser(source).parse(), source)


# -- printing ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(node):
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary) and node.fn == "neg":
        return _PREC["neg"]
    return 5


def _fmt_const(v):
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _show(node):
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Var):
        return VARIABLE
    if isinstance(node, Unary):
        if node.fn == "neg":
            inner = _show(node.arg)
            return "-" + (f"({inner})" if _prec(node.arg) < 3 else inner)
        return f"{node.fn}({_show(node.arg)})"
    p = _PREC[node.op]
    left, right = _show(node.left), _show(node.right)
    if node.op == "^":
        # base must be an atom; exponent is parsed as a unary
        if _prec(node.left) <= 4:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left}{node.op}{right}"


def pretty(expr: NonlinearityExpr | Node) -> str:
    """Minimal-parenthesis rendering that parses back to the same tree."""
    return _show(expr.root if isinstance(expr, NonlinearityExpr) else expr)


# -- evaluation --------------------------------------------------------------

_UNARY = {
    "sqrt": D.sqrt,
    "exp": D.exp,
    "ln": D.log,
    "abs": D.fabs,
    "sin": D.sin,
    "cos": D.cos,
}


def _eval(node, u, params):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return u
    if isinstance(node, Param):
        return params[node.name]
    if isinstance(node, Unary):
        x = _eval(node.arg, u, params)
        return -x if node.fn == "neg" else _UNARY[node.fn](x)
    a = _eval(node.left, u, params)
    b = _eval(node.right, u, params)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return D.div(a, b)
    return D.power(a, b)


def check_bindings(expr: NonlinearityExpr, params: Mapping[str, float] | None):
    missing = expr.params - set(params or {})
    if missing:
        raise UnboundParameterError(missing)


def evaluate(expr: NonlinearityExpr, u, params: Mapping[str, float] | None = None):
    """Evaluate ``a(u)``; ``u`` may be a float, an array, or a :class:`Dual`.

    Constant expressions broadcast to the shape of ``u``.
    """
    check_bindings(expr, params)
    out = _eval(expr.root, u, params or {})
    if not isinstance(out, D.Dual) and not isinstance(u, D.Dual):
        shape = getattr(u, "shape", ())
        if shape and getattr(out, "shape", ()) != shape:
            out = out + 0.0 * u
    return out


def evaluate_dual(expr: NonlinearityExpr, u: D.Dual, params: Mapping[str, float] | None = None) -> D.Dual:
    if not isinstance(u, D.Dual):
        u = D.Dual(u, 0.0)
    out = evaluate(expr, u, params)
    if not isinstance(out, D.Dual):
        # constant expression: zero derivative
        out = D.Dual(out + 0.0 * D.real_part(u), 0.0 * D.real_part(u))
    return out


def as_expr(a) -> NonlinearityExpr:
    return a if isinstance(a, NonlinearityExpr) else parse(a)


eval_dual = evaluate_dual
