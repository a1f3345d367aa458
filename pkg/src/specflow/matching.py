"""The optimal-matching metric ``d(S, T)`` between rigged sets.

``d`` is the infimum, over enumerations of both sets, of the summed pointwise
distances.  Because the sticky point has infinite multiplicity, any point may
be paired with the sticky point instead of a partner.  For finite-rank sets
this is a square assignment problem once each side is padded with as many
sticky copies as the other side has points.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import SizeLimit, SpaceMismatch
from .rigged import CIRCLE, STICKY, TWO_PI, RiggedSet

BRUTE_FORCE_LIMIT = 8


@dataclass(frozen=True)
class MatchingResult:
    """Optimal cost plus one optimal pairing.

    ``pairs`` lists ``(source, target)`` tuples with multiplicities expanded;
    either entry may be :data:`~specflow.rigged.STICKY`.  Sticky-sticky pairs
    are omitted.
    """

    cost: float
    pairs: tuple


def cost_matrix(space: str, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Padded cost matrix: rows ``xs + len(ys)`` sticky, columns ``ys + len(xs)`` sticky."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    src = np.concatenate([xs, np.zeros(len(ys))])
    dst = np.concatenate([ys, np.zeros(len(xs))])
    delta = np.abs(src[:, None] - dst[None, :])
    if space == CIRCLE:
        delta = np.minimum(delta, TWO_PI - delta)
    return delta


def assign(space: str, xs, ys):
    """Solve the padded assignment on expanded point arrays.

    Returns ``(cost, pairs)`` where ``pairs`` holds ``(i, j)`` indices into
    ``xs`` and ``ys``; ``None`` stands for a sticky copy.  Sticky-sticky pairs
    are dropped.
    """
    nx, ny = len(xs), len(ys)
    if nx + ny == 0:
        return 0.0, []
    cost = cost_matrix(space, xs, ys)
    rows, cols = linear_sum_assignment(cost)
    pairs = []
    terms = []
    for i, j in zip(rows, cols):
        ii = int(i) if i < nx else None
        jj = int(j) if j < ny else None
        if ii is None and jj is None:
            continue
        terms.append(cost[i, j])
        pairs.append((ii, jj))
    total = math.fsum(terms)
    pairs.sort(key=lambda p: (p[0] is None, p[0] if p[0] is not None else 0,
                              p[1] is None, p[1] if p[1] is not None else 0))
    return float(total), pairs


def _check(S: RiggedSet, T: RiggedSet) -> None:
    if S.space != T.space:
        raise SpaceMismatch(f"space mismatch: {S.space} vs {T.space}")


def distance_d(S: RiggedSet, T: RiggedSet) -> MatchingResult:
    """Optimal matching distance between two finite-rank rigged sets."""
    _check(S, T)
    if (T.points, T.mults) < (S.points, S.mults):
        # solve in a canonical orientation so that d(S, T) == d(T, S) bit for bit
        res = distance_d(T, S)
        return MatchingResult(res.cost, tuple(sorted(((b, a) for a, b in res.pairs), key=_pair_key)))
    xs, ys = S.expanded(), T.expanded()
    cost, idx = assign(S.space, xs, ys)
    pairs = tuple((STICKY if i is None else float(xs[i]), STICKY if j is None else float(ys[j]))
                  for i, j in idx)
    return MatchingResult(cost, pairs)


def _pair_key(p):
    return tuple((x is STICKY, 0.0 if x is STICKY else x) for x in p)


def d(S: RiggedSet, T: RiggedSet) -> float:
    """Shorthand for ``distance_d(S, T).cost``."""
    return distance_d(S, T).cost


@lru_cache(maxsize=None)
def _permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)


def brute_force_d(S: RiggedSet, T: RiggedSet) -> float:
    """Exhaustive minimum over all pairings of the sticky-padded point lists."""
    _check(S, T)
    n = S.rank + T.rank
    if n > BRUTE_FORCE_LIMIT:
        raise SizeLimit(f"rank(S) + rank(T) = {n} exceeds {BRUTE_FORCE_LIMIT}")
    if n == 0:
        return 0.0
    src = list(S.expanded()) + [0.0] * T.rank
    dst = list(T.expanded()) + [0.0] * S.rank
    cost = np.empty((n, n))
    for i, a in enumerate(src):
        for j, b in enumerate(dst):
            delta = abs(a - b)
            if S.space == CIRCLE:
                delta = min(delta, TWO_PI - delta)
            cost[i, j] = delta
    perms = _permutations(n)
    return float(cost[np.arange(n), perms].sum(axis=1).min())


def increasing_enumeration_cost(S: RiggedSet, T: RiggedSet) -> float:
    """Best distance over pairs of increasing, sticky-padded enumerations.

    Each circle set is written as ``0,...,0 < s_1 <= ... <= s_n < 2pi,...,2pi``
    (angles as reals in ``[0, 2pi]``) and paired index by index; every split of
    the sticky padding between the ``0`` end and the ``2pi`` end is tried.
    """
    _check(S, T)
    if S.space != CIRCLE:
        raise SpaceMismatch("increasing enumerations are defined on the circle")
    xs, ys = S.expanded(), T.expanded()
    ns, nt = len(xs), len(ys)
    total = ns + nt
    best = math.inf
    for lead_s in range(nt + 1):
        trail_s = nt - lead_s
        es = np.concatenate([np.zeros(lead_s), xs, np.full(trail_s, TWO_PI)])
        for lead_t in range(ns + 1):
            trail_t = ns - lead_t
            et = np.concatenate([np.zeros(lead_t), ys, np.full(trail_t, TWO_PI)])
            assert len(es) == len(et) == total
            best = min(best, float(np.abs(es - et).sum()))
    return 0.0 if total == 0 else best


def monotone_matching_check(S: RiggedSet, T: RiggedSet, tol: float = 1e-10) -> bool:
    """True iff some pair of increasing enumerations attains ``d(S, T)``."""
    return increasing_enumeration_cost(S, T) <= d(S, T) + tol
