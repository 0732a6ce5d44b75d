"""Exact 2-Wasserstein distance between persistence diagrams.

Each diagram is augmented with one diagonal slot per point of the other, so
the matching is a perfect bipartite assignment of size |D| + |D'|. Ground
costs: point-point = max(|b-b'|, |d-d'|)^2 (squared sup-norm), point-diagonal
= ((b-d)/2)^2 (squared distance to the closest diagonal point, in sup-norm),
diagonal-diagonal = 0. The distance is the square root of the minimal total.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._reduction import lap_jv
from .errors import DimensionMismatchError, SizeLimitError
from .filtration import PersistenceDiagram

DIAGONAL = "diag"

W2_SIZE_CAP = 20_000
BRUTE_FORCE_CAP = 8


@dataclass(frozen=True)
class Matching:
    """An optimal augmented matching.

    pairs lists (i, j) with i an index into D or "diag" and j an index into
    D' or "diag"; every real point appears exactly once and the filler
    diagonal-diagonal assignments (always cost 0) are omitted. Entries are
    ordered: point-point and point-diagonal pairs by ascending i, then
    diagonal-point pairs by ascending j. total_sq_cost is the summed cost.
    """

    pairs: tuple[tuple[int | str, int | str], ...]
    total_sq_cost: float


def _coords(d: PersistenceDiagram) -> tuple[np.ndarray, np.ndarray]:
    bd = d.births_deaths()
    return bd[:, 0], bd[:, 1]


def _pair_cost(b, d, bp, dp) -> float:
    return max(abs(b - bp), abs(d - dp)) ** 2


def _diag_cost(b, d) -> float:
    return ((b - d) / 2.0) ** 2


def w2_distance(
    d1: PersistenceDiagram, d2: PersistenceDiagram
) -> tuple[float, Matching]:
    """Exact 2-Wasserstein distance and the matching realizing it.

    Solved as a square assignment problem of size |D|+|D'| with an O(n^3)
    Hungarian-family solver; each point may route to its own diagonal slot.
    Deterministic: the solver scans indices in fixed ascending order.

    Raises:
        DimensionMismatchError: diagrams of different homology dimension.
        SizeLimitError: more than 20000 points on either side.
    """
    if d1.dim != d2.dim:
        raise DimensionMismatchError(
            f"cannot match a dim-{d1.dim} diagram with a dim-{d2.dim} diagram"
        )
    n, m = len(d1), len(d2)
    if n > W2_SIZE_CAP or m > W2_SIZE_CAP:
        raise SizeLimitError(
            f"diagram sizes {n} and {m} exceed the exact-matching cap {W2_SIZE_CAP}"
        )
    if n == 0 and m == 0:
        return 0.0, Matching((), 0.0)
    b1, dth1 = _coords(d1)
    b2, dth2 = _coords(d2)
    size = n + m
    cost = np.zeros((size, size), dtype=np.float64)
    if n and m:
        cost[:n, :m] = (
            np.maximum(
                np.abs(b1[:, None] - b2[None, :]),
                np.abs(dth1[:, None] - dth2[None, :]),
            )
            ** 2
        )
    diag1 = ((b1 - dth1) / 2.0) ** 2
    diag2 = ((b2 - dth2) / 2.0) ** 2
    # each real point may only take its own diagonal slot; every other
    # slot edge gets a finite "forbidden" cost no optimal matching can use
    big = 1.0 + math.fsum(cost[:n, :m].ravel()) + math.fsum(diag1) + math.fsum(diag2)
    cost[:n, m:] = big
    cost[np.arange(n), m + np.arange(n)] = diag1
    cost[n:, :m] = big
    cost[n + np.arange(m), np.arange(m)] = diag2
    row_to_col = lap_jv(cost)
    pairs: list[tuple[int | str, int | str]] = []
    costs: list[float] = []
    for i in range(n):
        j = int(row_to_col[i])
        if j < m:
            pairs.append((i, j))
            costs.append(_pair_cost(b1[i], dth1[i], b2[j], dth2[j]))
        else:
            pairs.append((i, DIAGONAL))
            costs.append(float(diag1[i]))
    tail = []
    for r in range(n, size):
        j = int(row_to_col[r])
        if j < m:
            tail.append((j, float(diag2[j])))
    for j, c in sorted(tail):
        pairs.append((DIAGONAL, j))
        costs.append(c)
    total = math.fsum(costs)
    return math.sqrt(total), Matching(tuple(pairs), total)


def brute_force_w2(d1: PersistenceDiagram, d2: PersistenceDiagram) -> float:
    """Exhaustive oracle: tries every augmented bijection.

    Capped at |D| + |D'| <= 8 (at most 8! = 40320 bijections). Used to
    validate w2_distance; shares only the cost definitions with it.
    """
    if d1.dim != d2.dim:
        raise DimensionMismatchError(
            f"cannot match a dim-{d1.dim} diagram with a dim-{d2.dim} diagram"
        )
    n, m = len(d1), len(d2)
    if n + m > BRUTE_FORCE_CAP:
        raise SizeLimitError(
            f"brute_force_w2 is capped at {BRUTE_FORCE_CAP} total points, got {n + m}"
        )
    if n + m == 0:
        return 0.0
    b1, dth1 = _coords(d1)
    b2, dth2 = _coords(d2)
    pp = [[_pair_cost(b1[i], dth1[i], b2[j], dth2[j]) for j in range(m)] for i in range(n)]
    diag1 = [_diag_cost(b1[i], dth1[i]) for i in range(n)]
    diag2 = [_diag_cost(b2[j], dth2[j]) for j in range(m)]
    size = n + m
    best = math.inf
    # left side: D's points then m diagonal slots; right side: D''s points
    # then n diagonal slots; perm[k] is the right item taken by left item k
    for perm in itertools.permutations(range(size)):
        total = 0.0
        for li in range(size):
            ri = perm[li]
            if li < n:
                total += pp[li][ri] if ri < m else diag1[li]
            elif ri < m:
                total += diag2[ri]
            if total >= best:
                break
        else:
            best = total
    return math.sqrt(best)
