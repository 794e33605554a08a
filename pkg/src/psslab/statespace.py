"""State spaces, transition matrices and Markov-chain analytics.

Matrices are built with exact ``Fraction`` entries and stored row-sparse;
powers and stationary distributions are computed in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from . import budget
from .field import State, format_state, index_state, state_index
from .model import PSS, ModelError

DENSE_STATES = 2**12


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix over the states in index order.

    ``rows[u]`` maps column index -> exact probability; absent entries are 0.
    """

    n: int
    p: int
    rows: tuple[dict[int, Fraction], ...]

    @property
    def size(self) -> int:
        return len(self.rows)

    def __getitem__(self, uv: tuple[int, int]) -> Fraction:
        u, v = uv
        return self.rows[u].get(v, Fraction(0))

    def entry(self, u: Sequence[int], v: Sequence[int]) -> Fraction:
        return self[state_index(u, self.p), state_index(v, self.p)]

    def dense(self) -> list[list[Fraction]]:
        out = []
        for row in self.rows:
            line = [Fraction(0)] * self.size
            for v, q in row.items():
                line[v] = q
            out.append(line)
        return out

    def to_numpy(self) -> np.ndarray:
        budget.check(self.size, budget.cap(DENSE_STATES), "dense float matrix")
        a = np.zeros((self.size, self.size))
        for u, row in enumerate(self.rows):
            for v, q in row.items():
                a[u, v] = float(q)
        return a

    def to_sparse(self) -> sparse.csr_matrix:
        r, c, d = [], [], []
        for u, row in enumerate(self.rows):
            for v, q in sorted(row.items()):
                r.append(u)
                c.append(v)
                d.append(float(q))
        return sparse.csr_matrix((d, (r, c)), shape=(self.size, self.size))

    def nonzero_count(self) -> int:
        return sum(1 for row in self.rows for q in row.values() if q != 0)

    def row_sums(self) -> list[Fraction]:
        return [sum(row.values(), Fraction(0)) for row in self.rows]

    def state_labels(self) -> list[str]:
        return [format_state(index_state(i, self.n, self.p), self.p) for i in range(self.size)]


@dataclass(frozen=True)
class StateSpace:
    """Digraph on K^n with one arc per (u, v) reached by some f in S.

    ``arcs[(u, v)] = (labels, probability)`` with state indices u, v.
    """

    n: int
    p: int
    arcs: dict[tuple[int, int], tuple[tuple[str, ...], Fraction]]

    @property
    def size(self) -> int:
        return self.p**self.n

    def successors(self, u: int) -> list[int]:
        return sorted(v for (a, v) in self.arcs if a == u)

    def restrict(self, label: str) -> dict[int, int]:
        """Sub-digraph induced by one update function, as a map u -> v."""
        return {u: v for (u, v), (labels, _) in self.arcs.items() if label in labels}


def _state_budget(pss: PSS, limit: int | None):
    if limit is None:
        limit = budget.cap(budget.MATRIX_STATES)
    budget.check(pss.p**pss.n, limit, "state space")


def transition_matrix(pss: PSS, limit: int | None = None) -> TransitionMatrix:
    """Entry (u, v) is the total probability of the f in S with f(u) = v."""
    _state_budget(pss, limit)
    size = pss.p**pss.n
    rows = [dict() for _ in range(size)]
    for f in pss.support:
        c = pss.prob(f.label)
        for u, v in enumerate(f.table):
            rows[u][v] = rows[u].get(v, Fraction(0)) + c
    return TransitionMatrix(pss.n, pss.p, tuple({v: q for v, q in sorted(r.items())} for r in rows))


def build_state_space(pss: PSS, limit: int | None = None) -> StateSpace:
    _state_budget(pss, limit)
    arcs: dict[tuple[int, int], tuple[tuple[str, ...], Fraction]] = {}
    support = pss.support
    for x in pss.states():
        u = state_index(x, pss.p)
        for f in support:
            v = state_index(f.apply(x), pss.p)
            labels, total = arcs.get((u, v), ((), Fraction(0)))
            arcs[(u, v)] = (labels + (f.label,), total + pss.prob(f.label))
    return StateSpace(pss.n, pss.p, dict(sorted(arcs.items())))


def state_space_matrix(ss: StateSpace) -> TransitionMatrix:
    rows = [dict() for _ in range(ss.size)]
    for (u, v), (_, q) in ss.arcs.items():
        rows[u][v] = q
    return TransitionMatrix(ss.n, ss.p, tuple(rows))


def matrix_power(T: TransitionMatrix | np.ndarray, m: int) -> np.ndarray:
    """T**m in floating point, by repeated squaring."""
    if m < 1:
        raise ValueError(f"power must be >= 1, got {m}")
    a = T.to_numpy() if isinstance(T, TransitionMatrix) else np.asarray(T, dtype=float)
    result = None
    base = a
    while m:
        if m & 1:
            result = base.copy() if result is None else result @ base
        m >>= 1
        if m:
            base = base @ base
    return result


class StationaryResult(NamedTuple):
    pi: np.ndarray
    converged: bool
    iterations: int
    residual: float


def stationary(T: TransitionMatrix, tol: float = 1e-9, max_iter: int = 10**6) -> StationaryResult:
    """Long-run distribution reached from the uniform start.

    Iterates the lazy chain ``(I + T) / 2``.  Its powers are binomial
    averages of the powers of ``T``; they converge geometrically to the
    same limit as the Cesaro means, including on periodic chains, where the
    plain iteration oscillates.  Stops once ``||pi T - pi||_inf <= tol``.
    """
    A = T.to_sparse().T.tocsr()
    x = np.full(T.size, 1.0 / T.size)
    residual = math.inf
    for it in range(max_iter + 1):
        xt = A @ x
        residual = float(np.max(np.abs(xt - x)))
        if residual <= tol:
            return StationaryResult(x, True, it, residual)
        x = 0.5 * (x + xt)
        x /= x.sum()
    return StationaryResult(x, False, max_iter, residual)


class RecurrentClasses(NamedTuple):
    recurrent: list[frozenset[State]]
    transient: frozenset[State]


def recurrent_classes(ss: StateSpace) -> RecurrentClasses:
    """Closed strongly connected components of the positive-probability digraph."""
    size = ss.size
    r = [u for (u, v), (_, q) in ss.arcs.items() if q > 0]
    c = [v for (u, v), (_, q) in ss.arcs.items() if q > 0]
    adj = sparse.csr_matrix((np.ones(len(r)), (r, c)), shape=(size, size))
    _, comp = connected_components(adj, directed=True, connection="strong")
    leaves = set()
    for u, v in zip(r, c):
        if comp[u] != comp[v]:
            leaves.add(comp[u])
    members: dict[int, list[int]] = {}
    for i, k in enumerate(comp):
        members.setdefault(int(k), []).append(i)
    recurrent, transient = [], []
    for k, idx in sorted(members.items(), key=lambda kv: kv[1][0]):
        states = [index_state(i, ss.n, ss.p) for i in idx]
        if k in leaves:
            transient.extend(states)
        else:
            recurrent.append(frozenset(states))
    return RecurrentClasses(recurrent, frozenset(transient))


# -- sampling ---------------------------------------------------------------

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256:
    """xoshiro256** seeded with four consecutive splitmix64 outputs.

    ``random53()`` returns the top 53 bits of one 64-bit output.  A draw
    from probabilities ``c_1..c_s`` (in support order) picks the first k
    with ``random53() / 2**53 < c_1 + ... + c_k``, compared exactly in
    integers.
    """

    def __init__(self, seed: int):
        sm = seed & _MASK
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self.s = s

    def next64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random53(self) -> int:
        return self.next64() >> 11

    def choose(self, cumulative: Sequence[Fraction]) -> int:
        u = self.random53()
        for k, c in enumerate(cumulative):
            if u * c.denominator < c.numerator * (1 << 53):
                return k
        return len(cumulative) - 1


@dataclass(frozen=True)
class Trajectory:
    start: State
    steps: tuple[tuple[str, State], ...]
    seed: int

    @property
    def states(self) -> list[State]:
        return [self.start] + [s for _, s in self.steps]


def sample_trajectory(pss: PSS, start: Sequence[int], steps: int, seed: int) -> Trajectory:
    if steps < 0:
        raise ValueError("steps must be >= 0")
    start = tuple(int(v) for v in start)
    if len(start) != pss.n or any(not 0 <= v < pss.p for v in start):
        raise ModelError(f"start state {start} is not a state of {pss.name!r}")
    support = pss.support
    cumulative, acc = [], Fraction(0)
    for f in support:
        acc += pss.prob(f.label)
        cumulative.append(acc)
    rng = Xoshiro256(seed)
    p = pss.p
    x = state_index(start, p)
    out = []
    for _ in range(steps):
        f = support[rng.choose(cumulative)]
        x = f.table[x]
        out.append((f.label, index_state(x, pss.n, p)))
    return Trajectory(start, tuple(out), seed)
