import math

import numpy as np
import pytest
from hypothesis import given, settings

from specflow.errors import SizeLimit, SpaceMismatch
from specflow.matching import (assign, brute_force_d, d, distance_d, increasing_enumeration_cost,
                               monotone_matching_check)
from specflow.rigged import CIRCLE, LINE, STICKY, TWO_PI, RiggedSet

from conftest import oracle_set_d, random_set, rigged_sets

PI = math.pi

# values computed by the exhaustive partial-injection oracle in conftest.py
FROZEN = [
    (CIRCLE, [1.0, 2.0], [2.5], 1.5),
    (CIRCLE, [0.3, 6.0], [0.1, 3.2, 3.2], 5.8),
    (CIRCLE, [PI / 2], [], PI / 2),
    (CIRCLE, [1.0], [2.0], 1.0),
    (LINE, [-1.0, 2.0, 2.0], [1.5, -0.5], 3.0),
    (CIRCLE, [0.1, 5.9, 3.0], [6.2, 3.1], 0.5),
]


@pytest.mark.parametrize("space,xs,ys,expected", FROZEN)
def test_frozen_distances(space, xs, ys, expected):
    S = RiggedSet.from_pairs(space, [(x, 1) for x in xs])
    T = RiggedSet.from_pairs(space, [(y, 1) for y in ys])
    assert d(S, T) == pytest.approx(expected, abs=1e-12)
    assert brute_force_d(S, T) == pytest.approx(expected, abs=1e-12)


def test_line_one_over_n():
    S = RiggedSet.line([-2.0, 1.0])
    for n in (1, 2, 4, 10):
        Sn = S + RiggedSet.line([1.0 / n])
        assert d(Sn, S) == pytest.approx(1.0 / n, abs=1e-15)


def test_matching_result_pairs():
    S = RiggedSet.circle([1.0, 3.0], [2, 1])
    T = RiggedSet.circle([1.2])
    res = distance_d(S, T)
    # every point appears mult times
    src = [a for a, _ in res.pairs if a is not STICKY]
    dst = [b for _, b in res.pairs if b is not STICKY]
    assert sorted(src) == [1.0, 1.0, 3.0] and dst == [1.2]
    total = 0.0
    for a, b in res.pairs:
        a = 0.0 if a is STICKY else a
        b = 0.0 if b is STICKY else b
        x = abs(a - b)
        total += min(x, TWO_PI - x)
    assert res.cost == pytest.approx(total)


def test_space_mismatch_and_size_limit():
    with pytest.raises(SpaceMismatch):
        d(RiggedSet.circle([1.0]), RiggedSet.line([1.0]))
    big = RiggedSet.circle([0.5, 1.0, 1.5, 2.0, 2.5])
    with pytest.raises(SizeLimit):
        brute_force_d(big, big)
    assert brute_force_d(RiggedSet.circle([1.0]), RiggedSet.circle([1.0])) == 0.0


def test_assign_empty_and_sticky_only():
    assert assign(CIRCLE, [], []) == (0.0, [])
    cost, pairs = assign(CIRCLE, [1.0], [])
    assert cost == 1.0 and pairs == [(0, None)]


@settings(max_examples=300)
@given(rigged_sets(CIRCLE, 4, 2), rigged_sets(CIRCLE, 4, 2))
def test_assignment_equals_exhaustive_oracle_circle(S, T):
    if S.rank + T.rank > 8:
        return
    assert d(S, T) == pytest.approx(oracle_set_d(S, T), abs=1e-12)
    assert brute_force_d(S, T) == pytest.approx(oracle_set_d(S, T), abs=1e-12)


@settings(max_examples=300)
@given(rigged_sets(LINE, 4, 2), rigged_sets(LINE, 4, 2))
def test_assignment_equals_exhaustive_oracle_line(S, T):
    if S.rank + T.rank > 8:
        return
    assert d(S, T) == pytest.approx(oracle_set_d(S, T), abs=1e-12)


@given(rigged_sets(CIRCLE), rigged_sets(CIRCLE))
def test_symmetry_exact_and_pairs_transposed(S, T):
    a, b = distance_d(S, T), distance_d(T, S)
    assert a.cost == b.cost
    assert sorted(map(repr, a.pairs)) == sorted(repr((y, x)) for x, y in b.pairs)


@given(rigged_sets(CIRCLE), rigged_sets(CIRCLE))
def test_pair_costs_at_most_pi(S, T):
    for a, b in distance_d(S, T).pairs:
        a = 0.0 if a is STICKY else a
        b = 0.0 if b is STICKY else b
        x = abs(a - b)
        assert min(x, TWO_PI - x) <= PI


def test_monotone_matching_examples(rng):
    S = RiggedSet.circle([1.0, 2.0, 5.0])
    assert monotone_matching_check(S, S)
    assert increasing_enumeration_cost(S, S) == 0.0
    for _ in range(200):
        A, B = random_set(rng, CIRCLE, 5), random_set(rng, CIRCLE, 5)
        assert monotone_matching_check(A, B)
        assert increasing_enumeration_cost(A, B) >= d(A, B) - 1e-12


def test_monotone_matching_rejects_line():
    with pytest.raises(SpaceMismatch):
        monotone_matching_check(RiggedSet.line([1.0]), RiggedSet.line([2.0]))


def test_metric_identity(rng):
    for _ in range(100):
        S, T = random_set(rng), random_set(rng)
        assert d(S, S) == 0.0
        if S != T:
            assert d(S, T) > 0.0
    assert np.isfinite(d(RiggedSet.empty(), RiggedSet.empty()))
