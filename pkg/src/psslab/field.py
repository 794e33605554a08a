"""Prime-field arithmetic and the state indexing convention.

States are plain tuples of ints ``(x1, ..., xn)``.  The index of a state is
its lexicographic rank with ``x1`` most significant, so over GF(2) the state
``(1, 0, 0)`` has index 4.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

State = tuple[int, ...]


class FieldError(ValueError):
    pass


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class FieldSpec:
    """The prime field Z_p."""

    p: int

    def __post_init__(self):
        if not isinstance(self.p, int) or not _is_prime(self.p):
            raise FieldError(f"field modulus must be prime, got {self.p!r}")

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(value % self.p, self)

    @property
    def elements(self) -> range:
        return range(self.p)

    def states(self, n: int) -> Iterator[State]:
        """All states of K^n in index order."""
        return itertools.product(range(self.p), repeat=n)

    def num_states(self, n: int) -> int:
        return self.p**n


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: FieldSpec

    def __post_init__(self):
        if not 0 <= self.value < self.field.p:
            raise FieldError(f"{self.value} is not a reduced element of GF({self.field.p})")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldError("arithmetic across different fields")
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self.field(self.value + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self.field(self.value - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self.field(o - self.value)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self.field(self.value * o)

    __rmul__ = __mul__

    def __neg__(self):
        return self.field(-self.value)

    def __pow__(self, k: int):
        return self.field(pow(self.value, k, self.field.p))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.field.p})"


def state_index(state: Sequence[int], p: int) -> int:
    """Lexicographic rank of ``state``, first coordinate most significant."""
    i = 0
    for x in state:
        x = int(x)
        if not 0 <= x < p:
            raise FieldError(f"coordinate {x} outside GF({p})")
        i = i * p + x
    return i


def index_state(i: int, n: int, p: int) -> State:
    if not 0 <= i < p**n:
        raise IndexError(f"state index {i} out of range for {p}^{n} states")
    out = [0] * n
    for k in range(n - 1, -1, -1):
        i, out[k] = divmod(i, p)
    return tuple(out)


def format_state(state: Sequence[int], p: int) -> str:
    """Compact state label: ``"010"`` when p <= 10, else comma separated."""
    if p <= 10:
        return "".join(str(int(x)) for x in state)
    return ",".join(str(int(x)) for x in state)


def parse_state(text: str, n: int, p: int) -> State:
    text = text.strip()
    if "," in text:
        parts = [int(t) for t in text.split(",")]
    else:
        parts = [int(c) for c in text]
    if len(parts) != n:
        raise FieldError(f"state {text!r} does not have {n} coordinates")
    for x in parts:
        if not 0 <= x < p:
            raise FieldError(f"coordinate {x} outside GF({p})")
    return tuple(parts)
