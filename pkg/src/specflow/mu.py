"""Spectral flow of a lifted path: the mu-invariant.

For an angle ``theta`` in ``(0, 2*pi)`` the mu-invariant of a path counts the
net number of anticlockwise passages of the path's eigenvalues through
``exp(i*theta)``.  Arrivals and departures count one half each, so the value
at a jump angle is the mean of the one-sided limits.

Jumps can only occur at the angles of the two endpoint sets, hence the
invariant is stored exactly as a :class:`~specflow.rigged.StepFunction`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import JunctionMismatch, NonConstant, NotALoop
from .lift import ArgumentTrack
from .rigged import TWO_PI, RiggedSet, StepFunction

_INT_SNAP = 1e-12
JUNCTION_TOL = 1e-10


def _snap_int(x: float) -> float:
    n = round(x)
    return float(n) if abs(x - n) <= _INT_SNAP * max(1.0, abs(x)) else x


def crossing_count(theta: float, th1: float, th2: float) -> float:
    """Half-integer count of passages of ``e^{it}`` through ``e^{i*theta}``.

    Mean of the strict and closed counts of ``k`` with ``theta + 2*pi*k``
    between ``th1`` and ``th2``; antisymmetric in ``(th1, th2)``.
    """
    if th2 < th1:
        return -crossing_count(theta, th2, th1)
    if th1 == th2:
        return 0.0
    lo = _snap_int((th1 - theta) / TWO_PI)
    hi = _snap_int((th2 - theta) / TWO_PI)
    strict = max(0, math.ceil(hi) - math.floor(lo) - 1)
    closed = max(0, math.floor(hi) - math.ceil(lo) + 1)
    return 0.5 * (strict + closed)


@dataclass(frozen=True)
class MuInvariant:
    """mu-invariant of a path, with the sets at its two ends."""

    step: StepFunction
    start: RiggedSet
    end: RiggedSet

    def __call__(self, theta: float) -> float:
        return self.step.mid(theta)

    @property
    def base(self) -> int:
        return self.step.base

    def is_constant(self) -> bool:
        return self.step.is_constant()

    def __add__(self, other: "MuInvariant") -> "MuInvariant":
        return mu_concat(self, other)

    def __eq__(self, other):
        if not isinstance(other, MuInvariant):
            return NotImplemented
        return self.step == other.step

    def __hash__(self):
        return hash(self.step)


def _jump_candidates(*sets: RiggedSet) -> list[float]:
    return sorted({x for S in sets for x in S.points})


def _snap_to(angle: float, candidates: list[float], tol: float) -> float:
    if not candidates:
        return angle
    i = int(np.argmin([abs(angle - c) for c in candidates]))
    return candidates[i] if abs(angle - candidates[i]) <= tol else angle


def mu_invariant(track: ArgumentTrack) -> MuInvariant:
    """mu-invariant of a lifted path, evaluated from crossing counts.

    The value on each interval between consecutive endpoint angles is
    obtained by summing :func:`crossing_count` over the tracks at the
    interval midpoint.
    """
    start, end = track.endpoint_sets()
    cuts = [0.0] + _jump_candidates(start, end) + [TWO_PI]
    if track.n_tracks == 0:
        return MuInvariant(StepFunction(), start, end)
    first, last = track.thetas[0], track.thetas[-1]
    values = []
    for lo, hi in zip(cuts, cuts[1:]):
        if hi - lo <= 0.0:
            continue
        mid = 0.5 * (lo + hi)
        total = sum(crossing_count(mid, t1, t2) for t1, t2 in zip(first, last))
        values.append((lo, int(round(total))))
    base = values[0][1]
    jumps = [(a, v - prev) for (a, v), (_, prev) in zip(values[1:], values)]
    return MuInvariant(StepFunction(tuple(jumps), base), start, end)


def _phase_parts(phases: Iterable[float], snap: list[float], tol: float):
    """Split each real phase as ``2*pi*m + tau`` with ``tau`` in ``[0, 2*pi)``."""
    for t in phases:
        m = math.floor(t / TWO_PI)
        tau = t - TWO_PI * m
        if tau <= tol:
            tau = 0.0
        elif TWO_PI - tau <= tol:
            m, tau = m + 1, 0.0
        else:
            tau = _snap_to(tau, snap, tol)
        yield m, tau


def mu_from_phases(end_phases: Iterable[float], start_phases: Iterable[float] = (),
                   end: RiggedSet | None = None, start: RiggedSet | None = None,
                   tol: float = 1e-9) -> MuInvariant:
    """Closed form ``-sum_j floor((theta - t_j)/2pi)`` minus the same for the start phases.

    Phases within ``tol`` of a point of ``end``/``start`` are snapped onto it
    so that invariants sharing an endpoint set have identical jump angles.
    """
    end_phases = list(end_phases)
    start_phases = list(start_phases)
    if end is None:
        end = RiggedSet.from_angles(end_phases, sticky_tol=tol)
    if start is None:
        start = RiggedSet.from_angles(start_phases, sticky_tol=tol)
    base = 0
    jumps = []
    for sign, phases, S in ((1, end_phases, end), (-1, start_phases, start)):
        for m, tau in _phase_parts(phases, list(S.points), tol):
            if tau > 0.0:
                base += sign * (m + 1)
                jumps.append((tau, -sign))
            else:
                base += sign * m
    return MuInvariant(StepFunction(tuple(jumps), base), start, end)


def mu_integral(m: MuInvariant) -> float:
    """Exact integral of the step function over ``(0, 2*pi)``."""
    return m.step.integral()


def mu_concat(m1: MuInvariant, m2: MuInvariant, tol: float = JUNCTION_TOL) -> MuInvariant:
    """mu over ``[a, b]`` from the pieces over ``[a, c]`` and ``[c, b]``."""
    if not m1.end.isclose(m2.start, tol):
        raise JunctionMismatch(f"junction sets differ: {m1.end} vs {m2.start}")
    pts = list(m1.end.points)
    jumps2 = tuple((_snap_to(a, pts, tol), s) for a, s in m2.step.jumps)
    step = m1.step + StepFunction(jumps2, m2.step.base)
    return MuInvariant(step, m1.start, m2.end)


def loop_constancy_check(track: ArgumentTrack) -> int:
    """Winding number of a loop based at the identity."""
    start, end = track.endpoint_sets()
    if not (start.is_empty() and end.is_empty()):
        raise NotALoop(f"path does not start and end at the identity: {start}, {end}")
    m = mu_invariant(track)
    if not m.is_constant():
        raise NonConstant(f"mu-invariant of a loop has jumps {m.step.jumps}")
    return m.base


def write_mu_csv(m: MuInvariant, path) -> None:
    """Rows ``theta_lo, theta_hi, value`` for each interval, then jump-point values."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta_lo", "theta_hi", "value"])
        for lo, hi, v in m.step.intervals():
            w.writerow([repr(float(lo)), repr(float(hi)), v])
        for a in m.step.angles:
            w.writerow([repr(float(a)), repr(float(a)), m(a)])


def read_mu_csv(path) -> StepFunction:
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if float(r["theta_lo"]) != float(r["theta_hi"])]
    base = int(rows[0]["value"])
    jumps = []
    prev = base
    for r in rows[1:]:
        v = int(r["value"])
        jumps.append((float(r["theta_lo"]), v - prev))
        prev = v
    return StepFunction(tuple(jumps), base)

