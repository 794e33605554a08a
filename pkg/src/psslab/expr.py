"""Polynomial expressions over GF(p) used to write local update rules.

Concrete syntax::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := INT | 'x' INT | '(' expr ')' | '-' factor

``x1`` .. ``xn`` name the vertex values.  There is no complement operator;
over GF(2) write ``(x3+1)`` for the complement of ``x3``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence, Union

from . import budget
from .field import FieldElement, FieldError, FieldSpec


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.text = text
        self.pos = pos


class ExprRangeError(ValueError):
    pass


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Sum:
    terms: tuple

    def __post_init__(self):
        if len(self.terms) < 2:
            raise ValueError("Sum needs at least two terms")


@dataclass(frozen=True)
class Prod:
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 2:
            raise ValueError("Prod needs at least two factors")


@dataclass(frozen=True)
class Neg:
    child: "Node"


Node = Union[Const, Var, Sum, Prod, Neg]


@dataclass(frozen=True)
class PolyExpr:
    """A parsed expression bound to a field and a vertex count."""

    root: Node
    n: int
    field: FieldSpec

    def __str__(self) -> str:
        return to_text(self.root)

    @cached_property
    def variables(self) -> frozenset[int]:
        return frozenset(_variables(self.root))

    @cached_property
    def compiled(self) -> Callable[[Sequence[int]], int]:
        """Fast evaluator taking a tuple of ints, returning an int in [0, p)."""
        src = f"lambda x: ({_to_python(self.root)}) % {self.field.p}"
        return eval(src, {"__builtins__": {}})  # noqa: S307 - source built from the AST

    def __call__(self, state: Sequence[int]) -> int:
        return self.compiled(state)


# -- parsing ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<var>x\d+)|(?P<op>[-+*()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", text, bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, n: int, field: FieldSpec):
        self.text = text
        self.n = n
        self.field = field
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str):
        raise ExprSyntaxError(message, self.text, self.peek()[2])

    def expr(self) -> Node:
        terms = [self.term()]
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else Neg(t))
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self) -> Node:
        factors = [self.factor()]
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Prod(tuple(factors))

    def factor(self) -> Node:
        kind, value, pos = self.peek()
        if kind == "int":
            self.take()
            return Const(int(value) % self.field.p)
        if kind == "var":
            self.take()
            idx = int(value[1:])
            if idx == 0:
                raise ExprRangeError(f"variable index 0 at position {pos}: vertices are numbered from 1")
            if idx > self.n:
                raise ExprRangeError(f"variable x{idx} at position {pos} exceeds vertex count {self.n}")
            return Var(idx)
        if kind == "op" and value == "(":
            self.take()
            inner = self.expr()
            if self.peek()[1] != ")":
                self.error("expected ')'")
            self.take()
            return inner
        if kind == "op" and value == "-":
            self.take()
            return Neg(self.factor())
        if kind == "end":
            self.error("unexpected end of expression")
        self.error(f"unexpected token {value!r}")


def parse_expr(text: str, n: int, field: FieldSpec) -> PolyExpr:
    parser = _Parser(text, n, field)
    root = parser.expr()
    if parser.peek()[0] != "end":
        parser.error(f"unexpected token {parser.peek()[1]!r}")
    return PolyExpr(root, n, field)


# -- printing / compiling ---------------------------------------------------


def _factor_text(node: Node) -> str:
    if isinstance(node, (Const, Var)):
        return to_text(node)
    if isinstance(node, Neg):
        return "-" + _factor_text(node.child)
    return "(" + to_text(node) + ")"


def _term_text(node: Node) -> str:
    # a term never carries a bare Sum
    if isinstance(node, Sum):
        return "(" + to_text(node) + ")"
    return to_text(node)


def to_text(node: Node) -> str:
    """Canonical text; ``parse_expr(to_text(e))`` gives back the same tree."""
    if isinstance(node, Const):
        return str(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return "-" + _factor_text(node.child)
    if isinstance(node, Prod):
        parts = []
        for f in node.factors:
            parts.append(_factor_text(f) if isinstance(f, (Sum, Prod)) else to_text(f))
        return "*".join(parts)
    if isinstance(node, Sum):
        out = _term_text(node.terms[0])
        for t in node.terms[1:]:
            if isinstance(t, Neg):
                out += " - " + _term_text(t.child)
            else:
                out += " + " + _term_text(t)
        return out
    raise TypeError(f"not an expression node: {node!r}")


def _to_python(node: Node) -> str:
    if isinstance(node, Const):
        return str(node.value)
    if isinstance(node, Var):
        return f"x[{node.index - 1}]"
    if isinstance(node, Neg):
        return f"(-{_to_python(node.child)})"
    if isinstance(node, Sum):
        return "(" + "+".join(_to_python(t) for t in node.terms) + ")"
    if isinstance(node, Prod):
        return "(" + "*".join(_to_python(f) for f in node.factors) + ")"
    raise TypeError(f"not an expression node: {node!r}")


def _variables(node: Node):
    if isinstance(node, Var):
        yield node.index
    elif isinstance(node, Neg):
        yield from _variables(node.child)
    elif isinstance(node, Sum):
        for t in node.terms:
            yield from _variables(t)
    elif isinstance(node, Prod):
        for f in node.factors:
            yield from _variables(f)


# -- semantics --------------------------------------------------------------


def eval_expr(expr: PolyExpr, state: Sequence) -> FieldElement:
    """Value of ``expr`` at ``state``.

    ``state`` may hold ints or FieldElements; FieldElements must belong to the
    expression's field.
    """
    p = expr.field.p
    values = []
    for x in state:
        if isinstance(x, FieldElement):
            if x.field != expr.field:
                raise FieldError(f"state coordinate over GF({x.field.p}), expression over GF({p})")
            values.append(x.value)
        else:
            if not 0 <= int(x) < p:
                raise FieldError(f"coordinate {x} outside GF({p})")
            values.append(int(x))
    if expr.variables and max(expr.variables) > len(values):
        raise FieldError(f"state of length {len(values)} too short for x{max(expr.variables)}")
    return expr.field(expr.compiled(values))


def expr_support(
    expr: PolyExpr,
    n: int | None = None,
    field: FieldSpec | None = None,
    *,
    limit: int | None = None,
    syntactic_fallback: bool = False,
) -> frozenset[int]:
    """Variables the expression actually depends on.

    Exhaustive over the syntactically present variables only, which gives the
    same answer as sweeping all of K^n.
    """
    field = field or expr.field
    n = expr.n if n is None else n
    syn = sorted(expr.variables)
    if limit is None:
        limit = budget.cap(budget.SUPPORT_STATES)
    work = field.p ** len(syn)
    if work > limit:
        if syntactic_fallback:
            return frozenset(syn)
        budget.check(work, limit, "semantic support evaluation")
    p = field.p
    pos = {v: k for k, v in enumerate(syn)}
    full = [0] * n
    table = {}
    for combo in itertools.product(range(p), repeat=len(syn)):
        for v, k in pos.items():
            full[v - 1] = combo[k]
        table[combo] = expr.compiled(full)
    support = set()
    for v, k in pos.items():
        for combo, val in table.items():
            if combo[k] != 0:
                continue
            base = list(combo)
            hit = False
            for a in range(1, p):
                base[k] = a
                if table[tuple(base)] != val:
                    hit = True
                    break
            if hit:
                support.add(v)
                break
    return frozenset(support)
