"""The PSS data model: graph, local functions, schedules, update functions and
selection probabilities.

A PSS is built on a graph with vertices ``1..n``.  Each vertex carries a
nonempty family of local functions; each local function rewrites its own
coordinate with a polynomial in the coordinates of its closed neighbourhood.
An update function picks one schedule and one member of every family and
applies the local functions in schedule order, *last listed vertex first*:
for the schedule ``(3 2 1)`` the composite is ``f3 o f2 o f1`` and ``f1``
acts on the state first.

Probabilities attach to labelled update functions as exact ``Fraction``
values.  The support ``S`` is the set of update functions with positive
probability.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

from . import budget
from .expr import PolyExpr, expr_support, parse_expr
from .field import FieldSpec, State, index_state, state_index


class ModelError(ValueError):
    pass


def to_fraction(value) -> Fraction:
    """Exact probability from a decimal/fraction string, int or Fraction.

    Floats are read through their shortest repr, so ``0.18`` becomes ``9/50``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ModelError(f"not a probability: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ModelError(f"not a probability literal: {value!r}") from None
    raise ModelError(f"not a probability: {value!r}")


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...] = ()

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Sequence[int]]) -> Graph:
        return cls(n, tuple((int(a), int(b)) for a, b in pairs))

    @cached_property
    def edge_set(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(e) for e in self.edges if e[0] != e[1])

    @property
    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted({(min(a, b), max(a, b)) for a, b in self.edges})

    def has_edge(self, a: int, b: int) -> bool:
        return frozenset((a, b)) in self.edge_set

    def neighborhood(self, i: int) -> frozenset[int]:
        """Closed neighbourhood: ``i`` together with its neighbours."""
        out = {i}
        for e in self.edge_set:
            if i in e:
                out |= e
        return frozenset(out)

    def problems(self) -> list[str]:
        out = []
        if self.n < 1:
            out.append(f"graph must have at least one vertex, got n={self.n}")
        seen = set()
        for a, b in self.edges:
            if not (1 <= a <= self.n and 1 <= b <= self.n):
                out.append(f"edge {a}-{b} has an endpoint outside 1..{self.n}")
            if a == b:
                out.append(f"self-loop {a}-{b}")
            key = frozenset((a, b))
            if key in seen and a != b:
                out.append(f"duplicate edge {a}-{b}")
            seen.add(key)
        return out


@dataclass(frozen=True)
class LocalFunction:
    vertex: int
    rule: PolyExpr
    label: str

    def apply(self, x: State) -> State:
        return x[: self.vertex - 1] + (self.rule.compiled(x),) + x[self.vertex :]

    @cached_property
    def table(self) -> tuple[int, ...]:
        n, p = self.rule.n, self.rule.field.p
        return tuple(state_index(self.apply(x), p) for x in itertools.product(range(p), repeat=n))


@dataclass(frozen=True)
class LocalFunctionFamily:
    vertex: int
    members: tuple[LocalFunction, ...]

    def __len__(self):
        return len(self.members)

    def member(self, label: str) -> LocalFunction:
        for f in self.members:
            if f.label == label:
                return f
        raise KeyError(f"vertex {self.vertex} has no local function {label!r}")


@dataclass(frozen=True)
class Schedule:
    label: str
    order: tuple[int, ...]

    def position(self, vertex: int) -> int:
        return self.order.index(vertex)


@dataclass(frozen=True)
class UpdateFunction:
    """One composite ``f_{a(1)k} o ... o f_{a(n)k}``.

    ``selection[i-1]`` is the local function chosen at vertex ``i``.
    """

    label: str
    schedule: Schedule
    selection: tuple[LocalFunction, ...]

    @property
    def key(self) -> tuple[str, tuple[str, ...]]:
        return self.schedule.label, self.selection_labels

    @property
    def selection_labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.selection)

    def local(self, vertex: int) -> LocalFunction:
        return self.selection[vertex - 1]

    def apply(self, x: State) -> State:
        x = tuple(x)
        for v in reversed(self.schedule.order):
            x = self.selection[v - 1].apply(x)
        return x

    def steps(self, x: State) -> list[State]:
        """Intermediate states, one per local step, starting with ``x``."""
        out = [tuple(x)]
        for v in reversed(self.schedule.order):
            out.append(self.selection[v - 1].apply(out[-1]))
        return out

    @cached_property
    def table(self) -> tuple[int, ...]:
        """State-index map of the whole composite, materialized once."""
        first = self.selection[0].rule
        n, p = first.n, first.field.p
        return tuple(state_index(self.apply(x), p) for x in itertools.product(range(p), repeat=n))


@dataclass(frozen=True)
class PSS:
    name: str
    field: FieldSpec
    graph: Graph
    families: tuple[LocalFunctionFamily, ...]
    schedules: tuple[Schedule, ...]
    functions: tuple[UpdateFunction, ...]
    probs: Mapping[str, Fraction] = dc_field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def p(self) -> int:
        return self.field.p

    def prob(self, label: str) -> Fraction:
        return self.probs.get(label, Fraction(0))

    @property
    def support(self) -> tuple[UpdateFunction, ...]:
        return tuple(f for f in self.functions if self.prob(f.label) > 0)

    def function(self, label: str) -> UpdateFunction:
        for f in self.functions:
            if f.label == label:
                return f
        raise KeyError(f"{self.name}: no update function {label!r}")

    def schedule(self, label: str) -> Schedule:
        for s in self.schedules:
            if s.label == label:
                return s
        raise KeyError(f"{self.name}: no schedule {label!r}")

    def family(self, vertex: int) -> LocalFunctionFamily:
        return self.families[vertex - 1]

    def states(self):
        return self.field.states(self.n)

    def index(self, x: State) -> int:
        return state_index(x, self.p)

    def state(self, i: int) -> State:
        return index_state(i, self.n, self.p)


# -- construction helpers ---------------------------------------------------


def make_family(vertex: int, rules: Sequence[tuple[str, str | PolyExpr]], n: int, field: FieldSpec) -> LocalFunctionFamily:
    members = []
    for label, rule in rules:
        if isinstance(rule, str):
            rule = parse_expr(rule, n, field)
        members.append(LocalFunction(vertex, rule, label))
    return LocalFunctionFamily(vertex, tuple(members))


def build_pss(
    name: str,
    p: int,
    n: int,
    edges: Iterable[Sequence[int]],
    local: Mapping[int, Sequence[tuple[str, str]]],
    schedules: Mapping[str, Sequence[int]],
    updates: Sequence[tuple[str, str, Sequence[str], object]] | None = None,
    probs: Mapping[str, object] | None = None,
) -> PSS:
    """Assemble a PSS from plain data.

    ``updates`` lists ``(label, schedule_label, local_labels, prob)``.  When
    omitted the full enumeration is used and ``probs`` (label -> prob) gives
    the probabilities of the enumerated labels.
    """
    field = FieldSpec(p)
    graph = Graph.from_pairs(n, edges)
    families = tuple(make_family(v, local[v], n, field) for v in range(1, n + 1))
    scheds = tuple(Schedule(lbl, tuple(order)) for lbl, order in schedules.items())
    if updates is None:
        functions = tuple(enumerate_update_functions(families, scheds))
        probs = {k: to_fraction(v) for k, v in (probs or {}).items()}
    else:
        by_label = {s.label: s for s in scheds}
        functions = []
        prob_map = {}
        for label, sched, sel, pr in updates:
            chosen = tuple(families[i].member(lbl) for i, lbl in enumerate(sel))
            functions.append(UpdateFunction(label, by_label[sched], chosen))
            prob_map[label] = to_fraction(pr)
        functions = tuple(functions)
        probs = prob_map
    return PSS(name, field, graph, families, scheds, functions, probs)


def default_label(schedule: Schedule, selection: Sequence[LocalFunction]) -> str:
    return "_".join([schedule.label, *(f.label for f in selection)])


def count_update_functions(families: Sequence[LocalFunctionFamily], schedules: Sequence[Schedule]) -> int:
    """m * l(1) * ... * l(n): one composite per schedule per selection.

    A bound of m! * l(1) * ... * l(n) is sometimes quoted for this count;
    it does not match two schedules over families of sizes 2, 1, 2, which
    give 8 functions.
    """
    return len(schedules) * math.prod(len(f) for f in families)


def enumerate_update_functions(
    families: Sequence[LocalFunctionFamily],
    schedules: Sequence[Schedule],
    limit: int | None = None,
) -> list[UpdateFunction]:
    """Every (schedule, selection) composite, one labelled entry each.

    Order: selections lexicographically by member index with vertex 1 most
    significant, schedules innermost.  Extensionally equal composites stay
    separate entries.
    """
    if limit is None:
        limit = budget.cap(budget.UPDATE_FUNCTIONS)
    budget.check(count_update_functions(families, schedules), limit, "update-function enumeration")
    out = []
    for selection in itertools.product(*(fam.members for fam in families)):
        for sched in schedules:
            out.append(UpdateFunction(default_label(sched, selection), sched, tuple(selection)))
    return out


def apply_update(uf: UpdateFunction, x: Sequence[int], pss: PSS | None = None) -> State:
    if pss is not None:
        if len(x) != pss.n:
            raise ModelError(f"state has {len(x)} coordinates, PSS {pss.name!r} has {pss.n} vertices")
        if any(not 0 <= int(v) < pss.p for v in x):
            raise ModelError(f"state {tuple(x)} is not over GF({pss.p})")
    else:
        n = uf.selection[0].rule.n
        if len(x) != n:
            raise ModelError(f"state has {len(x)} coordinates, update function acts on {n}")
    return uf.apply(tuple(int(v) for v in x))


def duplicate_groups(pss: PSS) -> list[list[str]]:
    """Groups (size >= 2) of update functions that agree on every state."""
    groups: dict[tuple[int, ...], list[str]] = {}
    for f in pss.functions:
        groups.setdefault(f.table, []).append(f.label)
    return [g for g in groups.values() if len(g) > 1]


# -- validation -------------------------------------------------------------


class Violation(NamedTuple):
    kind: str
    where: str
    message: str

    def __str__(self):
        return f"[{self.kind}] {self.where}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def validate_pss(pss: PSS) -> ValidationReport:
    out: list[Violation] = []

    def bad(kind, where, message):
        out.append(Violation(kind, str(where), message))

    for msg in pss.graph.problems():
        bad("graph", pss.name, msg)
    n = pss.n

    if len(pss.families) != n:
        bad("family", pss.name, f"{len(pss.families)} local-function families for {n} vertices")
    local_labels: dict[str, int] = {}
    for idx, fam in enumerate(pss.families, start=1):
        if fam.vertex != idx:
            bad("family", f"vertex {idx}", f"family declared for vertex {fam.vertex}")
        if not fam.members:
            bad("family", f"vertex {fam.vertex}", "empty local-function family")
        for f in fam.members:
            if f.label in local_labels:
                bad("label", f.label, "local-function label used more than once")
            local_labels[f.label] = fam.vertex
            if f.vertex != fam.vertex:
                bad("family", f.label, f"targets vertex {f.vertex} but sits in the family of vertex {fam.vertex}")
            if f.rule.field != pss.field or f.rule.n != n:
                bad("field", f.label, "rule is bound to another field or vertex count")
                continue
            try:
                supp = expr_support(f.rule, n, pss.field)
            except budget.BudgetExceeded:
                supp = f.rule.variables
            allowed = pss.graph.neighborhood(f.vertex)
            if not supp <= allowed:
                extra = sorted(supp - allowed)
                bad(
                    "locality",
                    f.label,
                    f"depends on {sorted(supp)} but the closed neighbourhood of vertex {f.vertex} "
                    f"is {sorted(allowed)} (offending: {extra})",
                )

    if not pss.schedules:
        bad("schedule", pss.name, "at least one schedule is required")
    sched_labels = set()
    for s in pss.schedules:
        if s.label in sched_labels:
            bad("label", s.label, "schedule label used more than once")
        sched_labels.add(s.label)
        if sorted(s.order) != list(range(1, n + 1)):
            bad("schedule", s.label, f"{s.order} is not a permutation of 1..{n}")

    fn_labels = set()
    declared = {s.label: s for s in pss.schedules}
    for f in pss.functions:
        if f.label in fn_labels:
            bad("label", f.label, "update-function label used more than once")
        fn_labels.add(f.label)
        if declared.get(f.schedule.label) != f.schedule:
            bad("update", f.label, f"references undeclared schedule {f.schedule.label!r}")
        if len(f.selection) != n:
            bad("update", f.label, f"selects {len(f.selection)} local functions for {n} vertices")
            continue
        for v, lf in enumerate(f.selection, start=1):
            if v <= len(pss.families) and lf not in pss.families[v - 1].members:
                bad("update", f.label, f"{lf.label!r} is not a local function of vertex {v}")

    total = Fraction(0)
    for label, pr in pss.probs.items():
        if label not in fn_labels:
            bad("probability-label", label, "probability assigned to an undeclared update function")
        if not 0 <= pr <= 1:
            bad("probability-range", label, f"probability {pr} outside [0, 1]")
        total += pr
    if total != 1:
        bad("probability-sum", pss.name, f"probabilities sum to {total}, not 1")
    if not any(pr > 0 for pr in pss.probs.values()):
        bad("empty-support", pss.name, "empty support: no update function has positive probability")
    return ValidationReport(out)


def require_valid(pss: PSS) -> PSS:
    report = validate_pss(pss)
    if not report.ok:
        raise ModelError("invalid PSS:\n" + "\n".join(str(v) for v in report.violations))
    return pss


# -- derived systems --------------------------------------------------------


def _check_probs(probs: Mapping[str, Fraction], allowed: set[str], what: str) -> None:
    total = sum(probs.values(), Fraction(0))
    if total != 1:
        raise ModelError(f"{what}: probabilities sum to {total}, not 1")
    for label, pr in probs.items():
        if pr < 0 or pr > 1:
            raise ModelError(f"{what}: probability {pr} of {label!r} outside [0, 1]")
        if pr > 0 and label not in allowed:
            raise ModelError(f"{what}: positive probability on {label!r}, which is not allowed here")


class SubPSS(NamedTuple):
    pss: PSS
    inclusion: object  # morphism.HomCandidate


def sub_pss(pss: PSS, keep: Iterable[str], new_probs: Mapping[str, object], name: str | None = None) -> SubPSS:
    """Restrict to the update functions ``keep`` with fresh probabilities.

    Returns the sub-system and its natural inclusion into ``pss`` (identity
    graph morphism, identity value maps, each function paired with itself).
    """
    from .morphism import inclusion_candidate

    keep = list(dict.fromkeys(keep))
    labels = {f.label for f in pss.functions}
    unknown = [k for k in keep if k not in labels]
    if unknown:
        raise ModelError(f"unknown update functions: {unknown}")
    probs = {k: to_fraction(v) for k, v in new_probs.items()}
    extra = set(probs) - set(keep)
    if extra:
        raise ModelError(f"probabilities given for functions outside the kept set: {sorted(extra)}")
    _check_probs(probs, set(keep), "sub-PSS")
    if {k for k, v in probs.items() if v > 0} != set(keep):
        raise ModelError("sub-PSS probabilities must be positive exactly on the kept functions")
    kept = set(keep)
    functions = tuple(f for f in pss.functions if f.label in kept)
    sub = PSS(name or f"{pss.name}_sub", pss.field, pss.graph, pss.families, pss.schedules, functions, probs)
    return SubPSS(sub, inclusion_candidate(sub, pss))


def full_enumeration(pss: PSS) -> tuple[UpdateFunction, ...]:
    """All update functions of the data, reusing the PSS's own labels."""
    declared = {f.key: f for f in pss.functions}
    return tuple(declared.get(f.key, f) for f in enumerate_update_functions(pss.families, pss.schedules))


def complement(pss: PSS, probs_for_complement: Mapping[str, object], name: str | None = None) -> PSS:
    """The PSS on the update functions outside the support of ``pss``.

    The result carries the full enumeration as its function list; only the
    caller's probabilities (which must live on the complement) differ.
    """
    full = full_enumeration(pss)
    in_support = {f.key for f in pss.support}
    comp = {f.label for f in full if f.key not in in_support}
    if not comp:
        raise ModelError(f"{pss.name}: the support is the full set of update functions; complement is empty")
    probs = {k: to_fraction(v) for k, v in probs_for_complement.items()}
    labels = {f.label for f in full}
    unknown = set(probs) - labels
    if unknown:
        raise ModelError(f"unknown update functions: {sorted(unknown)}")
    _check_probs(probs, comp, "complement")
    probs = {f.label: probs.get(f.label, Fraction(0)) for f in full}
    return PSS(name or f"{pss.name}_complement", pss.field, pss.graph, pss.families, pss.schedules, full, probs)


def sds_to_pss(
    name: str,
    field: FieldSpec,
    graph: Graph,
    local_functions: Sequence[LocalFunction],
    schedule: Schedule,
    label: str = "f",
) -> PSS:
    """Embed an SDS: one local function per vertex, one schedule, probability 1."""
    if len(local_functions) != graph.n:
        raise ModelError(f"an SDS needs exactly one local function per vertex ({graph.n}), got {len(local_functions)}")
    families = []
    for v, lf in enumerate(local_functions, start=1):
        if lf.vertex != v:
            raise ModelError(f"local function {lf.label!r} targets vertex {lf.vertex}, expected {v}")
        families.append(LocalFunctionFamily(v, (lf,)))
    uf = UpdateFunction(label, schedule, tuple(local_functions))
    return PSS(name, field, graph, tuple(families), (schedule,), (uf,), {label: Fraction(1)})


def is_sds(pss: PSS) -> bool:
    return (
        all(len(f) == 1 for f in pss.families)
        and len(pss.schedules) == 1
        and len(pss.support) == 1
    )
