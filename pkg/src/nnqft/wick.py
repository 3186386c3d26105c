"""Perfect-matching enumeration and free-theory n-pt assembly.

An n-pt function of a Gaussian ensemble is the sum over all perfect
matchings of the n points of the product of kernel values over the matched
pairs; there are (n-1)!! matchings and odd orders vanish identically.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import PairingError

#: Upper bound on contraction arity; (n-1)!! grows too fast beyond this.
MAX_POINTS = 12


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


@lru_cache(maxsize=None)
def enumerate_pairings(n: int) -> tuple:
    """All perfect matchings of ``range(n)`` in canonical order.

    Each matching is a tuple of ``(a, b)`` pairs with ``a < b``; the
    smallest unmatched index is always paired first and its partners run
    in ascending order, so the output order is deterministic.
    """
    if n <= 0 or n % 2:
        raise PairingError(f"need a positive even number of points, got {n}", code="odd-arity")
    if n > MAX_POINTS:
        raise PairingError(f"n={n} exceeds the supported maximum {MAX_POINTS}", code="size-limit")

    def rec(free):
        if not free:
            yield ()
            return
        a = free[0]
        for i in range(1, len(free)):
            b = free[i]
            rest = free[1:i] + free[i + 1 :]
            for tail in rec(rest):
                yield ((a, b),) + tail

    return tuple(rec(tuple(range(n))))


def gp_npt_from_values(kernel_values) -> float:
    """Free n-pt value from a symmetric matrix of kernel values.

    ``kernel_values[a][b]`` must hold K(x_a, x_b) for the n points.  The
    factors of each matching are multiplied in sorted order and the terms
    summed exactly (``math.fsum``), so permuting the points changes nothing
    beyond at most the last float bit.
    """
    n = len(kernel_values)
    if n % 2:
        return 0.0
    terms = []
    for matching in enumerate_pairings(n):
        factors = sorted(float(kernel_values[a][b]) for a, b in matching)
        prod = 1.0
        for f in factors:
            prod *= f
        terms.append(prod)
    return math.fsum(terms)


def gp_npt(kernel_model, points) -> float:
    """Free n-pt prediction at explicit points; zero for odd n."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n % 2:
        return 0.0
    if n > MAX_POINTS:
        raise PairingError(f"n={n} exceeds the supported maximum {MAX_POINTS}", code="size-limit")
    gram = np.asarray(kernel_model.k(pts[:, None, :], pts[None, :, :]), dtype=np.float64)
    return gp_npt_from_values(gram)


def gp_from_gram(gram: np.ndarray, idx) -> float:
    """Free n-pt value for grid indices ``idx`` given a kernel Gram matrix."""
    sub = gram[np.ix_(idx, idx)]
    return gp_npt_from_values(sub)


def pair_splits(n: int = 6) -> tuple:
    """Distinct (pair, complement) splits derived from the matchings.

    For n = 6 this yields the 15 ways of singling out one spectator pair,
    each paired with the sorted 4-tuple of remaining indices.
    """
    seen = {}
    for matching in enumerate_pairings(n):
        for pair in matching:
            if pair not in seen:
                rest = tuple(i for i in range(n) if i not in pair)
                seen[pair] = rest
    return tuple(sorted((pair, rest) for pair, rest in seen.items()))
