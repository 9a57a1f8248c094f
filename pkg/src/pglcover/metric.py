"""Hamming metric on permutations and distance to an enumerated group."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .gf import prime_power
from .projline import Permutation, ProjLine


def hamming(u: Permutation, v: Permutation) -> int:
    """Number of points where u and v disagree."""
    if len(u) != len(v):
        raise ValueError(f"length mismatch: {len(u)} vs {len(v)}")
    return sum(1 for a, b in zip(u.images, v.images) if a != b)


@dataclass(frozen=True)
class DistanceResult:
    """Distance from a permutation to the group, with the closest element."""

    distance: int
    argmin_index: int       # enumeration rank of the closest group element
    agreements: int         # q+1 - distance

    def to_json(self, line: Optional[ProjLine] = None) -> dict:
        triple = list(line.triple_of_rank(self.argmin_index)) if line else None
        return {
            "distance": self.distance,
            "argmin_index": self.argmin_index,
            "argmin_triple": triple,
            "agreements": self.agreements,
        }


def distance_to_group(v: Permutation, group: Iterable[Permutation]) -> DistanceResult:
    """Exact min Hamming distance from v to the enumerated group.

    Scans positions in order 0..q and abandons a candidate as soon as its
    disagreement count reaches the current best; ties keep the lowest
    enumeration index.  Accepts a materialized table or any stream in
    enumeration order.
    """
    vi = v.images
    n = len(vi)
    best = n + 1
    best_idx = -1
    for idx, g in enumerate(group):
        gi = g.images
        dis = 0
        for i in range(n):
            if vi[i] != gi[i]:
                dis += 1
                if dis >= best:
                    break
        if dis < best:
            best = dis
            best_idx = idx
            if best == 0:
                break
    if best_idx < 0:
        raise ValueError("group iteration was empty")
    return DistanceResult(best, best_idx, n - best)


def distance_to_group_naive(v: Permutation, group: Iterable[Permutation]) -> DistanceResult:
    """Reference double loop with no early exit; oracle for the fast path."""
    n = len(v)
    best = n + 1
    best_idx = -1
    for idx, g in enumerate(group):
        dis = hamming(v, g)
        if dis < best:
            best = dis
            best_idx = idx
    if best_idx < 0:
        raise ValueError("group iteration was empty")
    return DistanceResult(best, best_idx, n - best)


def expected_cr(q: int) -> int:
    """Closed-form covering radius of PGL(2,q): q-2 for even q, q-3 for odd."""
    if q < 2 or prime_power(q) is None:
        raise ValueError(f"{q} is not a prime power >= 2")
    return q - 2 if q % 2 == 0 else q - 3
