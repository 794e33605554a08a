"""The functor from PSS to finite abelian groups.

A PSS goes to the free Z_p-module on its support S; a homomorphism goes to
the linear map that sends each basis function f to its witness g(f).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .model import PSS, full_enumeration
from .morphism import GraphMorphism, HomCandidate, HomReport, MorphismError, check_pss_hom


class FunctorError(ValueError):
    pass


@dataclass(frozen=True)
class ModuleBasis:
    """Basis descriptor of <S>_p: ordered labels and the modulus."""

    labels: tuple[str, ...]
    p: int

    @property
    def rank(self) -> int:
        return len(self.labels)

    def zero(self) -> "FormalSum":
        return FormalSum({}, self)

    def element(self, coefficients: Mapping[str, int]) -> "FormalSum":
        return FormalSum(coefficients, self)


class FormalSum:
    """Element of a free Z_p-module, stored as label -> nonzero coefficient."""

    __slots__ = ("coefficients", "base")

    def __init__(self, coefficients: Mapping[str, int], base: ModuleBasis):
        known = set(base.labels)
        out = {}
        for label, a in coefficients.items():
            if label not in known:
                raise FunctorError(f"{label!r} is not a basis element")
            a %= base.p
            if a:
                out[label] = a
        self.coefficients = out
        self.base = base

    def _same_base(self, other: FormalSum):
        if other.base != self.base:
            raise FunctorError("formal sums over different bases")

    def __add__(self, other: FormalSum) -> FormalSum:
        self._same_base(other)
        out = dict(self.coefficients)
        for k, a in other.coefficients.items():
            out[k] = out.get(k, 0) + a
        return FormalSum(out, self.base)

    def __rmul__(self, a: int) -> FormalSum:
        return FormalSum({k: a * c for k, c in self.coefficients.items()}, self.base)

    def __neg__(self) -> FormalSum:
        return (-1) * self

    def __sub__(self, other: FormalSum) -> FormalSum:
        return self + (-other)

    def __eq__(self, other):
        if not isinstance(other, FormalSum):
            return NotImplemented
        return self.base == other.base and self.coefficients == other.coefficients

    def __repr__(self):
        if not self.coefficients:
            return "0"
        return " + ".join(f"{a}*{k}" if a != 1 else k for k, a in sorted(self.coefficients.items()))

    def vector(self) -> tuple[int, ...]:
        return tuple(self.coefficients.get(k, 0) for k in self.base.labels)


def functor_object(pss: PSS) -> ModuleBasis:
    return ModuleBasis(tuple(f.label for f in pss.support), pss.p)


@dataclass(frozen=True)
class InducedGroupHom:
    basis_map: Mapping[str, str]
    source: ModuleBasis
    target: ModuleBasis

    def __call__(self, x: FormalSum) -> FormalSum:
        if x.base != self.source:
            raise FunctorError("argument lives in another module")
        out: dict[str, int] = {}
        for f, a in x.coefficients.items():
            g = self.basis_map[f]
            out[g] = out.get(g, 0) + a
        return FormalSum(out, self.target)

    def then(self, other: InducedGroupHom) -> InducedGroupHom:
        """``other o self``."""
        if other.source != self.target:
            raise FunctorError("maps are not composable")
        return InducedGroupHom({f: other.basis_map[g] for f, g in self.basis_map.items()}, self.source, other.target)

    def matrix(self) -> list[list[int]]:
        """Columns indexed by source basis, rows by target basis."""
        rows = [[0] * self.source.rank for _ in range(self.target.rank)]
        for j, f in enumerate(self.source.labels):
            rows[self.target.labels.index(self.basis_map[f])][j] = 1
        return rows


def functor_arrow(report: HomReport) -> InducedGroupHom:
    if not report.valid:
        raise MorphismError("the functor is defined on valid homomorphisms only")
    src = functor_object(report.candidate.source)
    tgt = functor_object(report.candidate.target)
    return InducedGroupHom(dict(report.witness), src, tgt)


@dataclass(frozen=True)
class Decomposition:
    full: ModuleBasis
    selected: ModuleBasis
    rest: ModuleBasis

    @property
    def is_direct_sum(self) -> bool:
        s, r = set(self.selected.labels), set(self.rest.labels)
        return not (s & r) and s | r == set(self.full.labels) and self.full.rank == self.selected.rank + self.rest.rank


def decompose(pss: PSS, support: Iterable[str] | None = None) -> Decomposition:
    """Split the full enumeration basis into S and its complement."""
    full = tuple(f.label for f in full_enumeration(pss))
    chosen = [f.label for f in pss.support] if support is None else list(support)
    if not chosen:
        raise FunctorError("S must be nonempty (it is a probability support)")
    unknown = set(chosen) - set(full)
    if unknown:
        raise FunctorError(f"not update functions of the data: {sorted(unknown)}")
    keep = set(chosen)
    sel = tuple(l for l in full if l in keep)
    rest = tuple(l for l in full if l not in keep)
    return Decomposition(ModuleBasis(full, pss.p), ModuleBasis(sel, pss.p), ModuleBasis(rest, pss.p))


def compare_complements(a: PSS, b: PSS) -> HomReport:
    """Identity-map check between two probability assignments on one data set.

    Both systems must share graph, local functions and schedules (as two
    outputs of ``complement`` do).  Functions are paired with themselves; the
    report's epsilon_min is the largest probability gap.
    """
    if (a.field, a.graph, a.families, a.schedules) != (b.field, b.graph, b.families, b.schedules):
        raise FunctorError("the two systems are not built on the same data")
    gsupport = {g.label for g in b.support}
    missing = [f.label for f in a.support if f.label not in gsupport]
    if missing:
        raise FunctorError(f"supports differ; {missing} carry no probability in {b.name!r}")
    ident = tuple(range(a.p))
    cand = HomCandidate(
        a,
        b,
        GraphMorphism(b.graph, a.graph, tuple(range(1, a.n + 1))),
        tuple(ident for _ in range(a.n)),
        {f.label: f.label for f in a.support},
    )
    return check_pss_hom(cand)


__all__ = [
    "Decomposition",
    "FormalSum",
    "FunctorError",
    "InducedGroupHom",
    "ModuleBasis",
    "compare_complements",
    "decompose",
    "functor_arrow",
    "functor_object",
]
