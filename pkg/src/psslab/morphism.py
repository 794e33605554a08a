"""Homomorphisms between PSS.

A homomorphism ``D1 -> D2`` is contravariant on graphs: it carries a vertex
map ``phi`` from the graph of D2 (m vertices) into the graph of D1 (n
vertices) together with value maps ``hat[b]: K -> K``, one per vertex b of
D2.  They induce the adjoint state map ``h: K^n -> K^m`` with
``h(x)[b] = hat[b](x[phi(b)])``.

For every f in the support of D1 some g in the support of D2 must make the
step squares and the global square commute:

* step square at position i of f's schedule, vertex ``a = alpha(i)``:
  ``h o f_a = G_P o h`` where ``P = phi^-1(a)`` and ``G_P`` composes g's
  local functions at the vertices of P, ordered by their position in g's
  schedule (later position acts first).  For empty P, ``G_P`` is the
  identity.
* global square: ``h o f = g o h``.

Arrow probabilities are ``c_f(u, v) = C(f) [f(u) = v]``, so the minimal
epsilon of a witness pairing is ``max_f |C(f) - D(g(f))|``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import budget
from .field import State, format_state, index_state, state_index
from .model import PSS, Graph, UpdateFunction, sub_pss
from .statespace import transition_matrix

CLASS_ORDER = ("isomorphism", "epsilon-equivalence", "injective-monomorphism", "surjective-epimorphism")


class MorphismError(ValueError):
    pass


@dataclass(frozen=True)
class GraphMorphism:
    """Vertex map ``source -> target``; ``mapping[b-1]`` is the image of b."""

    source: Graph
    target: Graph
    mapping: tuple[int, ...]

    def __call__(self, b: int) -> int:
        return self.mapping[b - 1]

    def problems(self) -> list[str]:
        out = []
        if len(self.mapping) != self.source.n:
            return [f"vertex map has {len(self.mapping)} entries for {self.source.n} vertices"]
        for b, a in enumerate(self.mapping, start=1):
            if not 1 <= a <= self.target.n:
                out.append(f"vertex {b} maps to {a}, outside 1..{self.target.n}")
        if out:
            return out
        for a, b in self.source.sorted_edges:
            ia, ib = self(a), self(b)
            if ia != ib and not self.target.has_edge(ia, ib):
                out.append(f"edge {a}-{b} maps to {ia}-{ib}, which is not an edge")
        return out

    def preimage(self, a: int) -> list[int]:
        return [b for b, img in enumerate(self.mapping, start=1) if img == a]

    @property
    def injective(self) -> bool:
        return len(set(self.mapping)) == len(self.mapping)

    @property
    def surjective(self) -> bool:
        return set(self.mapping) == set(range(1, self.target.n + 1))


@dataclass(frozen=True)
class AdjointMap:
    """The induced state map ``h: K^n -> K^m``."""

    phi: GraphMorphism
    value_maps: tuple[tuple[int, ...], ...]
    p: int

    @property
    def n(self) -> int:
        return self.phi.target.n

    @property
    def m(self) -> int:
        return self.phi.source.n

    def __call__(self, x: Sequence[int]) -> State:
        return tuple(self.value_maps[b][x[a - 1]] for b, a in enumerate(self.phi.mapping))

    @cached_property
    def table(self) -> tuple[int, ...]:
        p, n = self.p, self.n
        return tuple(state_index(self(x), p) for x in itertools.product(range(p), repeat=n))

    @property
    def injective(self) -> bool:
        return len(set(self.table)) == len(self.table)

    @property
    def surjective(self) -> bool:
        return len(set(self.table)) == self.p**self.m


def adjoint_map(phi: GraphMorphism, value_maps: Sequence[Sequence[int]], p: int) -> AdjointMap:
    maps = tuple(tuple(int(v) for v in t) for t in value_maps)
    if len(maps) != phi.source.n:
        raise MorphismError(f"{len(maps)} value maps for {phi.source.n} vertices")
    for b, t in enumerate(maps, start=1):
        if len(t) != p or any(not 0 <= v < p for v in t):
            raise MorphismError(f"value map of vertex {b} must list {p} values in 0..{p - 1}, got {list(t)}")
    if len(phi.mapping) != phi.source.n or any(not 1 <= a <= phi.target.n for a in phi.mapping):
        raise MorphismError("vertex map inconsistent with the graphs")
    return AdjointMap(phi, maps, p)


@dataclass
class HomCandidate:
    source: PSS
    target: PSS
    phi: GraphMorphism
    value_maps: tuple[tuple[int, ...], ...]
    pairing: dict[str, str] | None = None

    def check_well_formed(self) -> None:
        if self.source.field != self.target.field:
            raise MorphismError("source and target PSS live over different fields")
        if self.phi.source != self.target.graph or self.phi.target != self.source.graph:
            raise MorphismError("graph morphism must go from the target's graph into the source's graph")
        adjoint_map(self.phi, self.value_maps, self.source.p)
        if self.pairing:
            src = {f.label for f in self.source.functions}
            tgt = {g.label for g in self.target.functions}
            for f, g in self.pairing.items():
                if f not in src:
                    raise MorphismError(f"pairing names unknown source function {f!r}")
                if g not in tgt:
                    raise MorphismError(f"pairing names unknown target function {g!r}")

    @cached_property
    def h(self) -> AdjointMap:
        return adjoint_map(self.phi, self.value_maps, self.source.p)

    def same_as(self, other: HomCandidate) -> bool:
        return (
            self.source == other.source
            and self.target == other.target
            and self.phi.mapping == other.phi.mapping
            and tuple(map(tuple, self.value_maps)) == tuple(map(tuple, other.value_maps))
            and (self.pairing or {}) == (other.pairing or {})
        )


def identity_candidate(pss: PSS) -> HomCandidate:
    ident = tuple(range(pss.p))
    return HomCandidate(
        pss,
        pss,
        GraphMorphism(pss.graph, pss.graph, tuple(range(1, pss.n + 1))),
        tuple(ident for _ in range(pss.n)),
        {f.label: f.label for f in pss.support},
    )


def inclusion_candidate(sub: PSS, full: PSS) -> HomCandidate:
    """Identity maps from a sub-system into the system it was cut from."""
    ident = tuple(range(sub.p))
    return HomCandidate(
        sub,
        full,
        GraphMorphism(full.graph, sub.graph, tuple(range(1, sub.n + 1))),
        tuple(ident for _ in range(sub.n)),
        {f.label: f.label for f in sub.support},
    )


# -- diagram checks ---------------------------------------------------------


class DiagramResult(NamedTuple):
    ok: bool
    position: int | None = None  # 1-based position in f's schedule
    vertex: int | None = None
    counterexamples: tuple[State, ...] = ()
    orders: tuple[tuple[int, ...], ...] = ()  # preimage orders used, per position

    @property
    def counterexample(self) -> State | None:
        return self.counterexamples[0] if self.counterexamples else None

    def __bool__(self):
        return self.ok


def _preimage_order(cand: HomCandidate, g: UpdateFunction, a: int) -> tuple[int, ...]:
    return tuple(sorted(cand.phi.preimage(a), key=g.schedule.position))


def _compose_on(order: Sequence[int], g: UpdateFunction, y: int) -> int:
    for b in reversed(order):
        y = g.local(b).table[y]
    return y


def check_step_diagrams(
    f: UpdateFunction, g: UpdateFunction, cand: HomCandidate, orderings: str = "schedule"
) -> DiagramResult:
    """Per-step squares for the pair (f, g), exhaustively over K^n.

    ``orderings="schedule"`` orders each preimage by g's schedule;
    ``orderings="any"`` accepts a step if some ordering of its preimage
    commutes and records the first such order.
    """
    if orderings not in ("schedule", "any"):
        raise ValueError(f"orderings must be 'schedule' or 'any', got {orderings!r}")
    h = cand.h.table
    size = len(h)
    n, p = cand.source.n, cand.source.p
    used = []
    for pos, a in enumerate(f.schedule.order, start=1):
        fa = f.local(a).table
        lhs = [h[fa[x]] for x in range(size)]
        base = _preimage_order(cand, g, a)
        options = [base] if orderings == "schedule" or len(base) < 2 else [base] + [
            o for o in itertools.permutations(base) if o != base
        ]
        first_bad = None
        for order in options:
            bad = [x for x in range(size) if _compose_on(order, g, h[x]) != lhs[x]]
            if not bad:
                used.append(order)
                break
            if first_bad is None:
                first_bad = bad
        else:
            states = tuple(index_state(x, n, p) for x in first_bad)
            return DiagramResult(False, pos, a, states, tuple(used))
    return DiagramResult(True, orders=tuple(used))


def check_global_diagram(f: UpdateFunction, g: UpdateFunction, cand: HomCandidate) -> DiagramResult:
    """``h o f = g o h`` over all of K^n."""
    h = cand.h.table
    ft, gt = f.table, g.table
    bad = [x for x in range(len(h)) if h[ft[x]] != gt[h[x]]]
    if bad:
        n, p = cand.source.n, cand.source.p
        return DiagramResult(False, counterexamples=tuple(index_state(x, n, p) for x in bad))
    return DiagramResult(True)


# -- full check -------------------------------------------------------------


class Failure(NamedTuple):
    kind: str  # graph | support | missing | step | global
    f: str | None
    g: str | None
    message: str
    counterexamples: tuple[State, ...] = ()


@dataclass
class HomReport:
    candidate: HomCandidate
    valid: bool
    witness: dict[str, str]
    epsilon_min: Fraction | None
    classes: list[str] = dc_field(default_factory=list)
    failures: list[Failure] = dc_field(default_factory=list)

    @property
    def image_labels(self) -> list[str]:
        """S_phi, in the target's declaration order."""
        used = set(self.witness.values())
        return [g.label for g in self.candidate.target.functions if g.label in used]

    def to_json(self) -> dict:
        p = self.candidate.source.p
        return {
            "valid": self.valid,
            "source": self.candidate.source.name,
            "target": self.candidate.target.name,
            "phi": list(self.candidate.phi.mapping),
            "value_maps": [list(t) for t in self.candidate.value_maps],
            "witness": dict(self.witness),
            "image": self.image_labels,
            "epsilon_min": None if self.epsilon_min is None else str(self.epsilon_min),
            "class": list(self.classes),
            "failures": [
                {
                    "kind": fl.kind,
                    "f": fl.f,
                    "g": fl.g,
                    "message": fl.message,
                    "counterexamples": [format_state(x, p) for x in fl.counterexamples],
                }
                for fl in self.failures
            ],
        }


def _pair_failures(f, g, cand, orderings) -> list[Failure]:
    out = []
    step = check_step_diagrams(f, g, cand, orderings)
    if not step:
        out.append(
            Failure(
                "step",
                f.label,
                g.label,
                f"step square at position {step.position} (vertex {step.vertex}) does not commute",
                step.counterexamples,
            )
        )
    glob = check_global_diagram(f, g, cand)
    if not glob:
        out.append(Failure("global", f.label, g.label, "global square does not commute", glob.counterexamples))
    return out


def _pair_ok(f, g, cand, orderings) -> bool:
    return bool(check_global_diagram(f, g, cand)) and bool(check_step_diagrams(f, g, cand, orderings))


def check_pss_hom(
    cand: HomCandidate, orderings: str = "schedule", pair_limit: int | None = None
) -> HomReport:
    """Verify a candidate; find the epsilon-minimal pairing when none is given."""
    cand.check_well_formed()
    src, tgt = cand.source, cand.target
    s1, s2 = src.support, tgt.support
    failures: list[Failure] = []
    for msg in cand.phi.problems():
        failures.append(Failure("graph", None, None, msg))
    if failures:
        return HomReport(cand, False, {}, None, [], failures)

    witness: dict[str, str] = {}
    if cand.pairing is not None:
        s2_labels = {g.label for g in s2}
        for f in s1:
            glabel = cand.pairing.get(f.label)
            if glabel is None:
                failures.append(Failure("missing", f.label, None, "no paired target function"))
                continue
            if glabel not in s2_labels:
                failures.append(
                    Failure("support", f.label, glabel, f"{glabel!r} has zero probability in {tgt.name!r}")
                )
                continue
            found = _pair_failures(f, tgt.function(glabel), cand, orderings)
            if found:
                failures.extend(found)
            else:
                witness[f.label] = glabel
    else:
        if pair_limit is None:
            pair_limit = budget.cap(budget.SEARCH_PAIRS)
        budget.check(len(s1) * len(s2), pair_limit, "pairing search")
        for f in s1:
            c = src.prob(f.label)
            best = None
            for g in s2:
                if _pair_ok(f, g, cand, orderings):
                    gap = abs(c - tgt.prob(g.label))
                    if best is None or gap < best[0]:
                        best = (gap, g.label)
            if best is None:
                failures.append(Failure("missing", f.label, None, "no target function makes the squares commute"))
            else:
                witness[f.label] = best[1]

    if failures:
        return HomReport(cand, False, witness, None, [], failures)
    eps = max((abs(src.prob(f) - tgt.prob(g)) for f, g in witness.items()), default=Fraction(0))
    # valid homomorphisms always admit some epsilon < 1
    assert eps < 1, f"epsilon {eps} >= 1 for a valid homomorphism"
    report = HomReport(cand, True, witness, eps)
    report.classes = classify(report)
    return report


def epsilon_table(report: HomReport) -> list[tuple[str, str, Fraction]]:
    """Per-pair probability gaps ``(f, g, |C(f) - D(g)|)``."""
    src, tgt = report.candidate.source, report.candidate.target
    return [(f, g, abs(src.prob(f) - tgt.prob(g))) for f, g in report.witness.items()]


def classify(report: HomReport) -> list[str]:
    if not report.valid:
        raise MorphismError("classification needs a valid homomorphism")
    cand = report.candidate
    phi, h = cand.phi, cand.h
    src, tgt = cand.source, cand.target
    bijective = phi.injective and phi.surjective and h.injective and h.surjective
    out = []
    if bijective:
        exact = all(src.prob(f) == tgt.prob(g) for f, g in report.witness.items())
        if exact:
            out.append("isomorphism")
        out.append("epsilon-equivalence")
    hats_injective = all(len(set(t)) == len(t) for t in cand.value_maps)
    if phi.surjective and hats_injective:
        # surjective phi with injective value maps forces h injective
        assert h.injective, "surjective vertex map with injective value maps must give an injective h"
        out.append("injective-monomorphism")
    if phi.injective and h.surjective:
        out.append("surjective-epimorphism")
    return out


# -- derived constructions --------------------------------------------------


def image_pss(report: HomReport, name: str | None = None) -> PSS:
    """Target system on S_phi with probabilities renormalized to sum to 1."""
    if not report.valid:
        raise MorphismError("image needs a valid homomorphism")
    tgt = report.candidate.target
    labels = report.image_labels
    mass = sum((tgt.prob(g) for g in labels), Fraction(0))
    if mass == 0:
        raise MorphismError("S_phi carries no probability mass")
    probs = {g: tgt.prob(g) / mass for g in labels}
    return sub_pss(tgt, labels, probs, name=name or f"{tgt.name}_image").pss


def compose_homs(h1: HomReport, h2: HomReport, orderings: str = "schedule") -> HomReport:
    """``h2 o h1`` for ``h1: D1 -> D2`` and ``h2: D2 -> D3``, re-validated."""
    if not (h1.valid and h2.valid):
        raise MorphismError("both homomorphisms must be valid")
    c1, c2 = h1.candidate, h2.candidate
    if c1.target != c2.source:
        raise MorphismError(f"cannot compose: {c1.target.name!r} is not the source of the second map")
    mapping = tuple(c1.phi(c2.phi(c)) for c in range(1, c2.phi.source.n + 1))
    tables = tuple(
        tuple(c2.value_maps[c - 1][c1.value_maps[c2.phi(c) - 1][a]] for a in range(c1.source.p))
        for c in range(1, c2.phi.source.n + 1)
    )
    pairing = {f: h2.witness[g] for f, g in h1.witness.items()}
    cand = HomCandidate(
        c1.source, c2.target, GraphMorphism(c2.target.graph, c1.source.graph, mapping), tables, pairing
    )
    return check_pss_hom(cand, orderings)


# -- search -----------------------------------------------------------------


@dataclass(frozen=True)
class SearchLimits:
    max_vertices: int = budget.SEARCH_VERTICES
    max_p: int = budget.SEARCH_P
    max_pairs: int = budget.SEARCH_PAIRS
    max_candidates: int = budget.SEARCH_CANDIDATES

    @classmethod
    def default(cls) -> SearchLimits:
        s = budget.scale()
        return cls(
            budget.SEARCH_VERTICES * s, budget.SEARCH_P * s, budget.SEARCH_PAIRS * s, budget.SEARCH_CANDIDATES * s
        )


def graph_morphisms(delta: Graph, gamma: Graph) -> Iterable[GraphMorphism]:
    """All vertex maps delta -> gamma respecting edges (collapse allowed)."""
    for mapping in itertools.product(range(1, gamma.n + 1), repeat=delta.n):
        phi = GraphMorphism(delta, gamma, mapping)
        if not phi.problems():
            yield phi


def hom_search(
    d1: PSS, d2: PSS, limits: SearchLimits | None = None, orderings: str = "schedule", want: str | None = None
) -> list[HomReport]:
    """Every valid homomorphism ``d1 -> d2`` (vertex maps and value tables).

    Results follow the lexicographic order of (phi, value tables).  ``want``
    keeps only reports carrying that class flag.
    """
    limits = limits or SearchLimits.default()
    if d1.field != d2.field:
        raise MorphismError("source and target PSS live over different fields")
    m, n, p = d2.n, d1.n, d1.p
    budget.check(m, limits.max_vertices, "target vertex count")
    budget.check(p, limits.max_p, "field size")
    budget.check(len(d1.support) * len(d2.support), limits.max_pairs, "pairing search")
    budget.check(n**m * (p**p) ** m, limits.max_candidates, "homomorphism candidates")
    tables = list(itertools.product(range(p), repeat=p))
    found = []
    for phi in graph_morphisms(d2.graph, d1.graph):
        for hats in itertools.product(tables, repeat=m):
            cand = HomCandidate(d1, d2, phi, hats)
            report = check_pss_hom(cand, orderings, pair_limit=limits.max_pairs)
            if report.valid and (want is None or want in report.classes):
                cand.pairing = dict(report.witness)
                found.append(report)
    return found


class SimulationResult(NamedTuple):
    result: bool | str  # True, False or "unknown"
    monomorphism: HomReport | None  # F -> G injective monomorphism
    epimorphism: HomReport | None  # G -> F surjective epimorphism
    notes: tuple[str, ...] = ()

    @property
    def witness(self) -> HomReport | None:
        return self.monomorphism or self.epimorphism


def is_simulation(F: PSS, G: PSS, limits: SearchLimits | None = None, orderings: str = "schedule") -> SimulationResult:
    """Is G simulated by F?

    True when an injective monomorphism ``F -> G`` or a surjective
    epimorphism ``G -> F`` exists.  Both directions are searched and
    reported.  When a search exceeds its limits and nothing was found the
    result is ``"unknown"``.
    """
    notes = []
    mono = epi = None
    exhausted = True
    try:
        hits = hom_search(F, G, limits, orderings, want="injective-monomorphism")
        mono = hits[0] if hits else None
    except budget.BudgetExceeded as exc:
        exhausted = False
        notes.append(f"{F.name} -> {G.name}: {exc}")
    try:
        hits = hom_search(G, F, limits, orderings, want="surjective-epimorphism")
        epi = hits[0] if hits else None
    except budget.BudgetExceeded as exc:
        exhausted = False
        notes.append(f"{G.name} -> {F.name}: {exc}")
    if mono or epi:
        result: bool | str = True
    else:
        result = False if exhausted else "unknown"
    return SimulationResult(result, mono, epi, tuple(notes))


# -- power diagnostic -------------------------------------------------------


class PowerDiff(NamedTuple):
    d: list[float]
    k: int


def mt_power_diff(report: HomReport, M: int) -> PowerDiff:
    """``d_m = max_{u,v} |T1^m[u,v] - T2^m[h(u),h(v)]|`` for m = 1..M.

    T2 is the full target matrix.  ``k`` is the largest number of support
    functions of the source sending one state to another.  The sequence is
    only reported; it need not decrease.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if not report.valid:
        raise MorphismError("power diagnostic needs a valid homomorphism")
    cand = report.candidate
    T1 = transition_matrix(cand.source).to_numpy()
    T2 = transition_matrix(cand.target).to_numpy()
    h = np.array(cand.h.table)
    P1, P2 = T1.copy(), T2.copy()
    d = []
    for m in range(1, M + 1):
        if m > 1:
            P1 = P1 @ T1
            P2 = P2 @ T2
        d.append(float(np.max(np.abs(P1 - P2[np.ix_(h, h)]))))
    counts: dict[tuple[int, int], int] = {}
    for f in cand.source.support:
        for u, v in enumerate(f.table):
            counts[(u, v)] = counts.get((u, v), 0) + 1
    return PowerDiff(d, max(counts.values(), default=0))


def restricted_target_matrix(report: HomReport) -> list[list[Fraction]]:
    """``T2[h(u), h(v)]`` over source states u, v (exact)."""
    cand = report.candidate
    T2 = transition_matrix(cand.target)
    h = cand.h.table
    return [[T2[h[u], h[v]] for v in range(len(h))] for u in range(len(h))]
