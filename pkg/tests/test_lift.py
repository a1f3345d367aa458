import math

import numpy as np
import pytest

from specflow import paths
from specflow.errors import DepthExceeded, SamplerInconsistent
from specflow.lift import (ArgumentTrack, SpectrumPath, endpoint_sum, lift_path, project, read_track_csv,
                           step_displacements, sub_track, tail_sums, write_track_csv)
from specflow.matching import d
from specflow.rigged import TWO_PI, RiggedSet
from specflow.unispec import UnitaryTC, spec, unitary_path

PI = math.pi


def diag_path(r):
    return np.diag([np.exp(1j * PI * r), np.exp(-0.5j * PI * r)])


def test_constant_empty_path():
    tr = lift_path(SpectrumPath(0.0, 1.0, lambda r: RiggedSet.empty()))
    assert tr.n_tracks == 0
    assert endpoint_sum(tr) == 0.0
    assert project(tr, -1).is_empty()


@pytest.mark.parametrize("N", [1, 2, 3])
def test_loop_tracks_are_straight_lines(N):
    tr = lift_path(unitary_path(paths.loop(N).U))
    assert tr.n_tracks == N
    for j in range(N):
        np.testing.assert_allclose(tr.thetas[1:-1, j], TWO_PI * tr.grid[1:-1], atol=1e-9)
    assert endpoint_sum(tr) == pytest.approx(TWO_PI * N, abs=1e-9)


def test_diagonal_path_closed_form():
    tr = lift_path(unitary_path(diag_path))
    # the two tracks are born at the first step; identify them by sign
    up = tr.thetas[:, np.argmax(tr.thetas[-1])]
    down = tr.thetas[:, np.argmin(tr.thetas[-1])]
    np.testing.assert_allclose(up, PI * tr.grid, atol=1e-9)
    np.testing.assert_allclose(down, -0.5 * PI * tr.grid, atol=1e-9)
    assert endpoint_sum(tr) == pytest.approx(PI / 2, abs=1e-9)
    assert all(b >= 0 for b in tr.born)


def test_round_trip_and_step_bounds(rng):
    for _ in range(5):
        P = paths.random_two_generator(int(rng.integers(1, 6)), rng, 0.7)
        tr = lift_path(unitary_path(P.U))
        diffs = np.abs(np.diff(tr.thetas, axis=0))
        assert tr.n_tracks == 0 or diffs.max() < PI / 2
        steps = step_displacements(tr)
        for k, r in enumerate(tr.grid):
            S = spec(UnitaryTC(P.U(r)))
            assert d(project(tr, k), S) < 1e-8
            if k + 1 < tr.n_nodes:
                dk = d(S, spec(UnitaryTC(P.U(tr.grid[k + 1]))))
                assert dk < 0.1
                assert steps[k] <= dk + tr.n_tracks * 1e-8
        # start normalisation: every argument starts in 2 pi Z
        np.testing.assert_allclose(np.mod(tr.thetas[0] + PI, TWO_PI) - PI, 0.0, atol=1e-12)


def test_tail_sums_monotone(rng):
    P = paths.random_two_generator(6, rng, 1.0)
    tails = tail_sums(lift_path(unitary_path(P.U)))
    assert tails[-1] == 0.0
    assert np.all(np.diff(tails) <= 0.0)


def test_grid_nodes_are_kept():
    P = unitary_path(diag_path, grid=(0.3, 0.7))
    tr = lift_path(P)
    assert 0.3 in tr.grid and 0.7 in tr.grid


def test_depth_exceeded_on_discontinuous_sampler():
    def jumpy(r):
        return RiggedSet.empty() if r < 0.5 else RiggedSet.circle([PI])
    with pytest.raises(DepthExceeded) as info:
        lift_path(SpectrumPath(0.0, 1.0, jumpy), max_depth=20)
    lo, hi = info.value.interval
    assert lo < 0.5 <= hi and hi - lo < 1e-5


def test_start_flag_requires_identity():
    with pytest.raises(SamplerInconsistent):
        lift_path(SpectrumPath(0.0, 1.0, lambda r: RiggedSet.circle([1.0])))
    tr = lift_path(SpectrumPath(0.0, 1.0, lambda r: RiggedSet.circle([1.0 + r]), start_at_identity=False))
    np.testing.assert_allclose(tr.thetas[:, 0], 1.0 + tr.grid, atol=1e-12)


def test_non_reproducible_sampler_detected():
    calls = {"n": 0}

    def flaky(r):
        if r == 1.0:
            calls["n"] += 1
            return RiggedSet.circle([0.5 + 0.01 * calls["n"]])
        return RiggedSet.circle([0.5 * r]) if r > 0 else RiggedSet.empty()

    with pytest.raises(SamplerInconsistent):
        lift_path(SpectrumPath(0.0, 1.0, flaky))


def test_bad_tolerances():
    P = SpectrumPath(0.0, 1.0, lambda r: RiggedSet.empty())
    with pytest.raises(ValueError):
        lift_path(P, step_tol=0.0)
    with pytest.raises(ValueError):
        SpectrumPath(1.0, 1.0, lambda r: RiggedSet.empty())


def test_sticky_absorption_and_birth():
    # one eigenvalue leaves 1 clockwise, comes back and then leaves anticlockwise
    def U(r):
        return np.diag([np.exp(1j * math.sin(TWO_PI * r))])
    tr = lift_path(unitary_path(U))
    assert tr.n_tracks >= 2
    assert endpoint_sum(tr) == pytest.approx(0.0, abs=1e-9)
    for j in range(tr.n_tracks):
        assert np.all(np.abs(tr.thetas[:, j]) < PI)


def test_track_csv_round_trip(tmp_path, rng):
    P = paths.random_two_generator(4, rng, 0.8)
    tr = lift_path(unitary_path(P.U))
    f = tmp_path / "t.csv"
    write_track_csv(tr, f)
    back = read_track_csv(f)
    assert np.array_equal(back.grid, tr.grid)
    assert np.max(np.abs(back.thetas - tr.thetas)) <= 1e-12
    assert f.read_text().splitlines()[0] == "r,j,theta_j"


def test_sub_track_endpoints(rng):
    P = paths.random_two_generator(3, rng, 0.8)
    tr = lift_path(unitary_path(P.U))
    k = tr.n_nodes // 2
    left, right = sub_track(tr, 0, k), sub_track(tr, k, tr.n_nodes - 1)
    assert left.n_nodes + right.n_nodes == tr.n_nodes + 1
    assert left.endpoint_sets()[1] == right.endpoint_sets()[0]
    assert isinstance(left, ArgumentTrack)
