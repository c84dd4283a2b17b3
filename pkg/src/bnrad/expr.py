"""Expression trees for user-supplied profiles.

Grammar (whitespace ignored)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | base ('^' factor)?
    base   := number | 'x' | func '(' expr ')' | '(' expr ')'

Trees are frozen dataclasses; they evaluate on numpy arrays and differentiate
symbolically with light constant folding.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParseError

FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
}

BINARY_OPS = ("+", "-", "*", "/", "^")
_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    pass


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node


X = Var()

# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or (m.lastgroup is None):
            stripped = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[stripped]!r}", stripped)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.factor())
        node = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            node = BinOp("^", node, self.factor())
        return node

    def base(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val == "x":
                return X
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            raise ParseError(f"unknown identifier {val!r}", pos)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", pos)


def parse(text: str) -> Node:
    """Parse ``text`` into an expression tree; raises ParseError with position."""
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# printing


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PRECEDENCE[node.op]
    if isinstance(node, Neg):
        return _PRECEDENCE["neg"]
    if isinstance(node, Num) and node.value < 0:
        return _PRECEDENCE["neg"]
    return 10


def to_string(node: Node) -> str:
    """Render a tree in the input grammar with minimal parentheses."""
    if isinstance(node, Num):
        if node.value < 0:
            return "-" + _fmt_number(-node.value)
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Call):
        return f"{node.func}({to_string(node.arg)})"
    if isinstance(node, Neg):
        inner = to_string(node.arg)
        if _prec(node.arg) < _PRECEDENCE["^"] or isinstance(node.arg, Neg):
            inner = f"({inner})"
        return "-" + inner
    p = _PRECEDENCE[node.op]
    left, right = to_string(node.left), to_string(node.right)
    if node.op == "^":
        # right-associative; the base needs parens unless atomic
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < p:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p or _prec(node.left) == _PRECEDENCE["neg"]:
        left = f"({left})"
    if _prec(node.right) <= p or _prec(node.right) == _PRECEDENCE["neg"]:
        right = f"({right})"
    sep = " " if p == 1 else ""
    return f"{left}{sep}{node.op}{sep}{right}"


# --------------------------------------------------------------------------
# evaluation


def evaluate(node: Node, x):
    """Evaluate on a scalar or numpy array."""
    if isinstance(node, Num):
        return np.full_like(x, node.value, dtype=float) if np.ndim(x) else node.value
    if isinstance(node, Var):
        return np.asarray(x, dtype=float) if np.ndim(x) else float(x)
    if isinstance(node, Neg):
        return -evaluate(node.arg, x)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](evaluate(node.arg, x))
    a = evaluate(node.left, x)
    b = evaluate(node.right, x)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    return np.power(a, b)


def compile_tree(node: Node) -> Callable:
    def f(x):
        with np.errstate(all="ignore"):
            return evaluate(node, x)

    return f


# --------------------------------------------------------------------------
# differentiation


def _is_num(node, value=None):
    return isinstance(node, Num) and (value is None or node.value == value)


def add(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return BinOp("+", a, b)


def sub(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    if a == b:
        return Num(0.0)
    return BinOp("-", a, b)


def _constant(fn, *values):
    """Num(fn(*values)) when the result is finite, else None (the node is kept)."""
    with np.errstate(all="ignore"):
        v = float(fn(*values))
    return Num(v) if np.isfinite(v) else None


def neg(a):
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a, b):
    if _is_num(a) and _is_num(b) and (c := _constant(np.multiply, a.value, b.value)) is not None:
        return c
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(a, -1.0):
        return neg(b)
    if _is_num(b, -1.0):
        return neg(a)
    if isinstance(a, Neg):
        return neg(mul(a.arg, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.arg))
    if _is_num(b):
        a, b = b, a
    return BinOp("*", a, b)


def div(a, b):
    if _is_num(a) and _is_num(b) and (c := _constant(np.divide, a.value, b.value)) is not None:
        return c
    if _is_num(a, 0.0) and not _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


def power(a, b):
    if _is_num(b, 0.0):
        return Num(1.0)
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b) and (c := _constant(np.power, a.value, b.value)) is not None:
        return c
    return BinOp("^", a, b)


def call(func, arg):
    if _is_num(arg) and (c := _constant(FUNCTIONS[func], arg.value)) is not None:
        return c
    return Call(func, arg)


def _depends_on_x(node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Num):
        return False
    if isinstance(node, (Neg, Call)):
        return _depends_on_x(node.arg)
    return _depends_on_x(node.left) or _depends_on_x(node.right)


def fold(node: Node) -> Node:
    """Rebuild through the simplifying constructors so constant subtrees collapse."""
    if isinstance(node, (Num, Var)):
        return node
    if isinstance(node, Neg):
        return neg(fold(node.arg))
    if isinstance(node, Call):
        return call(node.func, fold(node.arg))
    build = {"+": add, "-": sub, "*": mul, "/": div, "^": power}[node.op]
    return build(fold(node.left), fold(node.right))


def diff(node: Node) -> Node:
    """Symbolic d/dx, constant-folded."""
    return fold(_diff(node))


def _diff(node: Node) -> Node:
    if isinstance(node, Num):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0)
    if isinstance(node, Neg):
        return neg(_diff(node.arg))
    if isinstance(node, Call):
        u = node.arg
        du = _diff(u)
        f = node.func
        if f == "sin":
            outer = call("cos", u)
        elif f == "cos":
            outer = neg(call("sin", u))
        elif f == "sinh":
            outer = call("cosh", u)
        elif f == "cosh":
            outer = call("sinh", u)
        elif f == "tanh":
            outer = sub(Num(1.0), power(call("tanh", u), Num(2.0)))
        elif f == "exp":
            outer = call("exp", u)
        elif f == "log":
            return div(du, u)
        elif f == "sqrt":
            return div(du, mul(Num(2.0), call("sqrt", u)))
        else:  # pragma: no cover - FUNCTIONS is closed
            raise KeyError(f)
        return mul(outer, du)
    a, b = node.left, node.right
    if node.op == "+":
        return add(_diff(a), _diff(b))
    if node.op == "-":
        return sub(_diff(a), _diff(b))
    if node.op == "*":
        return add(mul(_diff(a), b), mul(a, _diff(b)))
    if node.op == "/":
        return div(sub(mul(_diff(a), b), mul(a, _diff(b))), power(b, Num(2.0)))
    # power
    if not _depends_on_x(b):
        return mul(mul(b, power(a, sub(b, Num(1.0)))), _diff(a))
    return mul(node, add(mul(_diff(b), call("log", a)), div(mul(b, _diff(a)), a)))
