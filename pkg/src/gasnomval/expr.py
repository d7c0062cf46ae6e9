"""Algebraic expression trees for model constraints and objectives.

Nodes are immutable.  Sums and products are n-ary with children kept in
canonical (lexicographic) order at construction time, so structurally equal
expressions are identical and serialization is deterministic.  ``abs`` is
supported for evaluation only; it never appears in exported optimization
models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from .errors import ExportError

_COMMUTATIVE = ("+", "*")
_BINARY = ("-", "/", "pow")
_UNARY = ("sqrt", "abs")


def fmt17(x: float) -> str:
    """Render a float with 17 significant digits (lossless round-trip).

    Negative zero is normalized: "-0" would read back as an integer.
    """
    if x == 0.0:
        return "0"
    return "%.17g" % x


@dataclass(frozen=True)
class Expr:
    op: str
    children: tuple["Expr", ...] = ()
    value: float | None = None  # num nodes
    name: str | None = None  # var nodes
    key: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "key", _make_key(self))


def _make_key(e: Expr) -> str:
    if e.op == "num":
        return "n:" + fmt17(e.value)
    if e.op == "var":
        return "v:" + e.name
    return e.op + "(" + ",".join(c.key for c in e.children) + ")"


def num(value: float) -> Expr:
    v = float(value)
    if v == 0.0:
        v = 0.0  # drop the sign of negative zero
    return Expr("num", value=v)


def var(name: str) -> Expr:
    return Expr("var", name=name)


def add(*terms: Expr) -> Expr:
    if not terms:
        return num(0.0)
    if len(terms) == 1:
        return terms[0]
    return Expr("+", children=tuple(sorted(terms, key=lambda t: t.key)))


def mul(*factors: Expr) -> Expr:
    if not factors:
        return num(1.0)
    if len(factors) == 1:
        return factors[0]
    return Expr("*", children=tuple(sorted(factors, key=lambda t: t.key)))


def sub(a: Expr, b: Expr) -> Expr:
    return Expr("-", children=(a, b))


def div(a: Expr, b: Expr) -> Expr:
    return Expr("/", children=(a, b))


def pow_(base: Expr, exponent: Expr) -> Expr:
    return Expr("pow", children=(base, exponent))


def square(base: Expr) -> Expr:
    return pow_(base, num(2.0))


def sqrt_(x: Expr) -> Expr:
    return Expr("sqrt", children=(x,))


def abs_(x: Expr) -> Expr:
    return Expr("abs", children=(x,))


def evaluate(e: Expr, values: dict[str, float]) -> float:
    """Exact interpretation of the tree under a variable assignment.

    May return ``inf``/``nan`` (division blow-up, sqrt of a negative);
    callers decide how to report those.
    """
    if e.op == "num":
        return e.value
    if e.op == "var":
        return values[e.name]
    if e.op == "+":
        return math.fsum(evaluate(c, values) for c in e.children)
    if e.op == "*":
        out = 1.0
        for c in e.children:
            out *= evaluate(c, values)
        return out
    if e.op == "-":
        return evaluate(e.children[0], values) - evaluate(e.children[1], values)
    if e.op == "/":
        denom = evaluate(e.children[1], values)
        if denom == 0.0:
            return math.inf if evaluate(e.children[0], values) >= 0 else -math.inf
        return evaluate(e.children[0], values) / denom
    if e.op == "pow":
        return evaluate(e.children[0], values) ** evaluate(e.children[1], values)
    if e.op == "sqrt":
        inner = evaluate(e.children[0], values)
        return math.sqrt(inner) if inner >= 0.0 else math.nan
    if e.op == "abs":
        return abs(evaluate(e.children[0], values))
    raise ExportError(f"unknown expression node {e.op!r}")


def variables_in(e: Expr) -> set[str]:
    if e.op == "var":
        return {e.name}
    out: set[str] = set()
    for c in e.children:
        out |= variables_in(c)
    return out


def substitute(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Replace variable references by expressions (used for loss placeholders)."""
    if e.op == "var":
        return mapping.get(e.name, e)
    if e.op == "num":
        return e
    new_children = tuple(substitute(c, mapping) for c in e.children)
    if e.op == "+":
        return add(*new_children)
    if e.op == "*":
        return mul(*new_children)
    return Expr(e.op, children=new_children)


def count_nodes(e: Expr, op: str | None = None) -> int:
    own = 1 if (op is None or e.op == op) else 0
    return own + sum(count_nodes(c, op) for c in e.children)


_INF = math.inf


def _imul(a: tuple[float, float], b: tuple[float, float]) -> tuple[float, float]:
    combos = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    return (min(combos), max(combos))


def interval_eval(
    e: Expr, bounds: dict[str, tuple[float, float]]
) -> tuple[float, float]:
    """Conservative interval enclosure of the tree over variable boxes."""
    if e.op == "num":
        return (e.value, e.value)
    if e.op == "var":
        return bounds[e.name]
    child = [interval_eval(c, bounds) for c in e.children]
    if e.op == "+":
        return (sum(c[0] for c in child), sum(c[1] for c in child))
    if e.op == "-":
        return (child[0][0] - child[1][1], child[0][1] - child[1][0])
    if e.op == "*":
        out = child[0]
        for c in child[1:]:
            out = _imul(out, c)
        return out
    if e.op == "/":
        lo, hi = child[1]
        if lo <= 0.0 <= hi:
            return (-_INF, _INF)
        return _imul(child[0], (1.0 / hi, 1.0 / lo))
    if e.op == "pow":
        exp_lo, exp_hi = child[1]
        if exp_lo != exp_hi or exp_lo != round(exp_lo) or exp_lo < 0:
            return (-_INF, _INF)
        n = int(exp_lo)
        lo, hi = child[0]
        if n % 2 == 0:
            candidates = [lo**n, hi**n]
            low = 0.0 if lo <= 0.0 <= hi else min(candidates)
            return (low, max(candidates))
        return (lo**n, hi**n)
    if e.op == "sqrt":
        lo, hi = child[0]
        if hi < 0.0:
            return (math.nan, math.nan)
        return (math.sqrt(max(lo, 0.0)), math.sqrt(hi))
    if e.op == "abs":
        lo, hi = child[0]
        if lo <= 0.0 <= hi:
            return (0.0, max(-lo, hi))
        return (min(abs(lo), abs(hi)), max(abs(lo), abs(hi)))
    raise ExportError(f"unknown expression node {e.op!r}")


def to_prefix(e: Expr):
    """JSON-ready prefix form: ``["num", x]``, ``["var", name]`` or ``[op, ...]``."""
    if e.op == "num":
        return ["num", e.value]
    if e.op == "var":
        return ["var", e.name]
    return [e.op, *(to_prefix(c) for c in e.children)]


def from_prefix(obj) -> Expr:
    if not isinstance(obj, list) or not obj:
        raise ExportError(f"malformed expression node: {obj!r}")
    op = obj[0]
    if op == "num":
        return num(float(obj[1]))
    if op == "var":
        return var(obj[1])
    children = tuple(from_prefix(c) for c in obj[1:])
    if op in _COMMUTATIVE:
        return Expr(op, children=children)  # already canonically ordered on disk
    if op in _BINARY:
        if len(children) != 2:
            raise ExportError(f"{op} expects 2 children")
        return Expr(op, children=children)
    if op in _UNARY:
        if len(children) != 1:
            raise ExportError(f"{op} expects 1 child")
        return Expr(op, children=children)
    raise ExportError(f"unknown expression node {op!r}")


def to_text(e: Expr) -> str:
    """Human-readable infix rendering (fully parenthesized compounds)."""
    if e.op == "num":
        return fmt17(e.value)
    if e.op == "var":
        return e.name
    if e.op == "+":
        return "(" + " + ".join(to_text(c) for c in e.children) + ")"
    if e.op == "-":
        return "(" + to_text(e.children[0]) + " - " + to_text(e.children[1]) + ")"
    if e.op == "*":
        return "(" + " * ".join(to_text(c) for c in e.children) + ")"
    if e.op == "/":
        return "(" + to_text(e.children[0]) + " / " + to_text(e.children[1]) + ")"
    if e.op == "pow":
        return "(" + to_text(e.children[0]) + "^" + to_text(e.children[1]) + ")"
    return e.op + "(" + to_text(e.children[0]) + ")"
