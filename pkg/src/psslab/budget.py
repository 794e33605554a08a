"""Enumeration caps.

Every exhaustive routine in the package is guarded by a cap.  The defaults
below can be scaled by setting ``PSSLAB_BUDGET`` to a positive integer
multiplier (``PSSLAB_BUDGET=16`` allows sixteen times as much work).
"""

import os

SUPPORT_STATES = 2**20
UPDATE_FUNCTIONS = 10**6
MATRIX_STATES = 2**14
SEARCH_VERTICES = 5
SEARCH_P = 3
SEARCH_PAIRS = 64
SEARCH_CANDIDATES = 10**6


class BudgetExceeded(RuntimeError):
    pass


def scale() -> int:
    raw = os.environ.get("PSSLAB_BUDGET", "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"PSSLAB_BUDGET must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"PSSLAB_BUDGET must be a positive integer, got {raw!r}")
    return value


def cap(default: int) -> int:
    return default * scale()


def check(amount: int, limit: int, what: str) -> None:
    if amount > limit:
        raise BudgetExceeded(f"{what}: {amount} exceeds budget {limit}")
