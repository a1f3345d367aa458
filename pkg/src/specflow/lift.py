"""Continuous enumeration of circle spectra along a sampled parameter path.

Consecutive samples are matched with the optimal-matching metric and every
matched target angle is unwrapped to the real representative nearest to the
previous argument.  Points matched to the sticky point are absorbed at the
nearest element of ``2*pi*Z`` and stay there; points emerging from the sticky
point start from ``0`` with their argument taken in ``(-pi, pi]``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DepthExceeded, SamplerInconsistent
from .matching import assign, d
from .rigged import CIRCLE, TWO_PI, RiggedSet

STEP_TOL = 0.1
NODE_TOL = 1e-8
MAX_DEPTH = 40
MAX_DISPLACEMENT = 0.5 * math.pi
STICKY_SNAP = 1e-9
MIN_STEPS = 8


@dataclass(frozen=True)
class SpectrumPath:
    """A deterministic sampler ``r -> RiggedSet`` on ``[a, b]``.

    ``grid`` optionally lists interior nodes that must appear in the lift.
    """

    a: float
    b: float
    sampler: Callable[[float], RiggedSet]
    start_at_identity: bool = True
    grid: tuple = ()

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("path interval must satisfy a < b")


@dataclass(frozen=True)
class ArgumentTrack:
    """Unwrapped arguments ``thetas[k, j]`` of track ``j`` at grid node ``k``.

    A track exists at every node: before its birth it sits at the element of
    ``2*pi*Z`` it was born from, after its death at the element it was
    absorbed into.  ``born[j]``/``died[j]`` are node indices (``-1`` if the
    track was present at the start or alive at the end).
    """

    grid: np.ndarray
    thetas: np.ndarray
    start_at_identity: bool = True
    born: tuple = ()
    died: tuple = ()
    start_set: RiggedSet | None = None
    end_set: RiggedSet | None = None

    @property
    def n_tracks(self) -> int:
        return int(self.thetas.shape[1])

    @property
    def n_nodes(self) -> int:
        return int(len(self.grid))

    def endpoint_sets(self) -> tuple[RiggedSet, RiggedSet]:
        start = self.start_set if self.start_set is not None else project(self, 0)
        end = self.end_set if self.end_set is not None else project(self, self.n_nodes - 1)
        return start, end


def _nearest_rep(angle: float, ref: float) -> float:
    """Real number congruent to ``angle`` mod 2pi closest to ``ref``."""
    return angle + TWO_PI * round((ref - angle) / TWO_PI)


def _nearest_sticky(ref: float) -> float:
    return TWO_PI * round(ref / TWO_PI)


def _principal(angle: float) -> float:
    return angle - TWO_PI if angle > math.pi else angle


def _slot_thetas(S: RiggedSet) -> list[float]:
    return [_principal(x) for x in S.expanded()]


def _step(space, xs, ys, cur):
    """Advance the active arguments ``cur`` (aligned with ``xs``) to ``ys``.

    Returns ``(cost, moves, max_disp)`` where ``moves`` lists
    ``(slot_or_None, new_theta, target_index_or_None)``.
    """
    cost, pairs = assign(space, xs, ys)
    moves = []
    max_disp = 0.0
    for i, j in pairs:
        if i is None:
            new = _principal(float(ys[j]))
            disp = abs(new)
        elif j is None:
            new = _nearest_sticky(cur[i])
            disp = abs(new - cur[i])
        else:
            new = _nearest_rep(float(ys[j]), cur[i])
            disp = abs(new - cur[i])
        max_disp = max(max_disp, disp)
        moves.append((i, new, j))
    return cost, moves, max_disp


def lift_path(P: SpectrumPath, step_tol: float = STEP_TOL, node_tol: float = NODE_TOL,
              max_depth: int = MAX_DEPTH, min_steps: int = MIN_STEPS) -> ArgumentTrack:
    """Lift a sampled circle-spectrum path to continuous real arguments.

    The step between accepted nodes satisfies ``d(S(r_k), S(r_{k+1})) <
    step_tol`` and every matched displacement is below ``pi/2``.  Steps are
    halved on rejection and doubled after acceptance, never beyond the next
    mandatory grid node; ``max_depth`` bounds the number of halvings of the
    enclosing grid interval.

    Samples cannot reveal a full turn of an eigenvalue between two nodes, so
    steps never exceed ``1/min_steps`` of their grid interval.
    """
    if step_tol <= 0 or node_tol <= 0 or max_depth < 1 or min_steps < 1:
        raise ValueError("tolerances must be positive")
    nodes = sorted({float(P.a), float(P.b), *(float(r) for r in P.grid if P.a < r < P.b)})
    S0 = P.sampler(nodes[0])
    if P.start_at_identity and not S0.is_empty():
        raise SamplerInconsistent(f"path flagged to start at the identity but S(a) = {S0}")

    # per-track histories; values recorded lazily, filled at the end
    history: list[list[tuple[int, float]]] = []
    born: list[int] = []
    died: list[int] = []
    active: list[int] = []  # track id per slot of the current set
    for theta in _slot_thetas(S0):
        history.append([(0, theta)])
        born.append(-1)
        died.append(-1)
        active.append(len(history) - 1)

    grid = [nodes[0]]
    sets = [S0]
    r, S = nodes[0], S0
    cur = [history[t][-1][1] for t in active]
    xs = S.expanded()

    for target in nodes[1:]:
        span = target - r
        h_max = span / min_steps
        h = h_max
        min_h = span / 2.0 ** max_depth
        while r < target:
            h = min(h, target - r)
            r_new = target if h >= target - r else r + h
            S_new = P.sampler(r_new)
            ys = S_new.expanded()
            cost, moves, max_disp = _step(CIRCLE, xs, ys, cur)
            if cost >= step_tol or max_disp >= MAX_DISPLACEMENT:
                if h / 2.0 < min_h:
                    raise DepthExceeded(r, r_new)
                h /= 2.0
                continue
            k = len(grid)
            new_active = [None] * len(ys)
            for i, new, j in moves:
                if i is None:
                    tid = len(history)
                    history.append([(0, 0.0), (k, new)])
                    born.append(k)
                    died.append(-1)
                else:
                    tid = active[i]
                    history[tid].append((k, new))
                    if j is None:
                        died[tid] = k
                if j is not None:
                    new_active[j] = tid
            active = new_active
            cur = [history[t][-1][1] for t in active]
            grid.append(r_new)
            sets.append(S_new)
            r, S, xs = r_new, S_new, ys
            h = min(2.0 * h, h_max)

    n_nodes, n_tracks = len(grid), len(history)
    thetas = np.empty((n_nodes, n_tracks))
    for t, hist in enumerate(history):
        for (k0, v0), (k1, _) in zip(hist, hist[1:] + [(n_nodes, None)]):
            thetas[k0:k1, t] = v0

    track = ArgumentTrack(np.asarray(grid), thetas, P.start_at_identity,
                          tuple(born), tuple(died), sets[0], sets[-1])
    _verify_nodes(track, sets, node_tol)
    if d(P.sampler(P.b), sets[-1]) >= node_tol:
        raise SamplerInconsistent("sampler is not reproducible at the path end")
    return track


def _verify_nodes(track: ArgumentTrack, sets: Sequence[RiggedSet], node_tol: float) -> None:
    for k, S in enumerate(sets):
        gap = d(project(track, k), S)
        if gap >= node_tol:
            raise SamplerInconsistent(f"node {k} (r={track.grid[k]!r}) reconstructs with error {gap:.3g}")


def project(track: ArgumentTrack, k: int) -> RiggedSet:
    """Circle set of the arguments at node ``k`` (values in ``2*pi*Z`` dropped)."""
    if not -track.n_nodes <= k < track.n_nodes:
        raise IndexError(k)
    return RiggedSet.from_angles(track.thetas[k], sticky_tol=STICKY_SNAP)


def endpoint_sum(track: ArgumentTrack) -> float:
    """``sum_j (theta_j(b) - theta_j(a))``."""
    if track.n_tracks == 0:
        return 0.0
    return float(np.sum(track.thetas[-1] - track.thetas[0]))


def step_displacements(track: ArgumentTrack) -> np.ndarray:
    """Per-step total displacement ``sum_j |theta_j(r_{k+1}) - theta_j(r_k)|``."""
    if track.n_tracks == 0:
        return np.zeros(max(track.n_nodes - 1, 0))
    return np.abs(np.diff(track.thetas, axis=0)).sum(axis=1)


def tail_sums(track: ArgumentTrack) -> np.ndarray:
    """``out[K]`` = max over nodes of ``sum |theta_j|`` beyond the K largest tracks."""
    if track.n_tracks == 0:
        return np.zeros(1)
    mags = np.abs(track.thetas)
    order = np.argsort(-mags.max(axis=0), kind="stable")
    mags = mags[:, order]
    out = np.empty(track.n_tracks + 1)
    for K in range(track.n_tracks + 1):
        out[K] = mags[:, K:].sum(axis=1).max() if K < track.n_tracks else 0.0
    return out


def sub_track(track: ArgumentTrack, k0: int, k1: int) -> ArgumentTrack:
    """Restriction to nodes ``k0..k1`` (inclusive)."""
    sl = slice(k0, k1 + 1)
    return ArgumentTrack(track.grid[sl].copy(), track.thetas[sl].copy(),
                         track.start_at_identity and k0 == 0,
                         start_set=project(track, k0), end_set=project(track, k1))


# -- CSV ----------------------------------------------------------------------


def write_track_csv(track: ArgumentTrack, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "j", "theta_j"])
        for k, r in enumerate(track.grid):
            for j in range(track.n_tracks):
                w.writerow([repr(float(r)), j, repr(float(track.thetas[k, j]))])


def read_track_csv(path, start_at_identity: bool = True) -> ArgumentTrack:
    rows = {}
    n_tracks = 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["r", "j", "theta_j"]:
            raise ValueError(f"expected header r,j,theta_j, got {reader.fieldnames}")
        for row in reader:
            r, j = float(row["r"]), int(row["j"])
            rows.setdefault(r, {})[j] = float(row["theta_j"])
            n_tracks = max(n_tracks, j + 1)
    grid = np.array(sorted(rows))
    thetas = np.zeros((len(grid), n_tracks))
    for k, r in enumerate(grid):
        for j, v in rows[r].items():
            thetas[k, j] = v
    return ArgumentTrack(grid, thetas, start_at_identity)
