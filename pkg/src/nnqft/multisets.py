"""Index multisets over a grid.

Symmetric rank-n tensors over g grid points are stored as flat vectors
indexed by the sorted index multisets, in lexicographic order.  These
helpers are cached; every module shares the same ordering.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement


@lru_cache(maxsize=None)
def multisets(g: int, n: int) -> tuple:
    """All sorted index n-tuples over ``range(g)``, lexicographically."""
    return tuple(combinations_with_replacement(range(g), n))


@lru_cache(maxsize=None)
def multiset_index(g: int, n: int) -> dict:
    """Map from sorted index tuple to its flat position."""
    return {m: i for i, m in enumerate(multisets(g, n))}


def canonical(idx) -> tuple:
    return tuple(sorted(idx))


def count(g: int, n: int) -> int:
    return len(multisets(g, n))
