"""Finite-rank rigged sets on the circle and the line.

A rigged set is a multiset of points carrying a distinguished *sticky* point
of infinite multiplicity: ``1`` on the unit circle (angle ``0 == 2*pi``) and
``0`` on the real line.  Only finitely many non-sticky points are stored.
Circle points are stored as angles in the open interval ``(0, 2*pi)``.

Besides set arithmetic this module houses integer step functions on
``(0, 2*pi)``, counting functions of circle sets and the quotient L1 metric
``rho1`` between counting functions.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DominanceViolation, SpaceMismatch

TWO_PI = 2.0 * math.pi
MERGE_TOL = 1e-12
CIRCLE = "circle"
LINE = "line"
_SPACES = (CIRCLE, LINE)


class _Sticky:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "STICKY"

    def __reduce__(self):
        return (_Sticky, ())


STICKY = _Sticky()
"""Marker for the sticky point (``1`` on the circle, ``0`` on the line)."""


def sticky_distance(space: str, x: float) -> float:
    """Distance from ``x`` to the sticky point of ``space``."""
    if space == CIRCLE:
        x = x % TWO_PI
        return min(x, TWO_PI - x)
    return abs(x)


def point_distance(space: str, x, y) -> float:
    """Geodesic distance between two points, either of which may be STICKY."""
    x = 0.0 if x is STICKY else x
    y = 0.0 if y is STICKY else y
    if space == CIRCLE:
        delta = abs(x - y) % TWO_PI
        return min(delta, TWO_PI - delta)
    return abs(x - y)


def _is_sticky(space: str, x) -> bool:
    if x is STICKY:
        return True
    return sticky_distance(space, float(x)) == 0.0


@dataclass(frozen=True)
class RiggedSet:
    """Finite-rank rigged set.

    ``points`` are strictly increasing, ``mults`` are positive integers of the
    same length.  The sticky point is implicit and never stored.
    """

    space: str
    points: tuple = ()
    mults: tuple = ()

    def __post_init__(self):
        if self.space not in _SPACES:
            raise ValueError(f"unknown space {self.space!r}")
        if len(self.points) != len(self.mults):
            raise ValueError("points and mults differ in length")
        for x, m in zip(self.points, self.mults):
            if not isinstance(m, (int, np.integer)) or m < 1:
                raise ValueError(f"multiplicity must be a positive integer, got {m!r}")
            if not math.isfinite(x):
                raise ValueError(f"point {x!r} is not finite")
            if self.space == CIRCLE and not 0.0 < x < TWO_PI:
                raise ValueError(f"circle angle {x!r} outside (0, 2pi)")
            if self.space == LINE and x == 0.0:
                raise ValueError("the sticky point 0 cannot be stored on the line")
        if any(b <= a for a, b in zip(self.points, self.points[1:])):
            raise ValueError("points must be strictly increasing")

    # -- construction -----------------------------------------------------
    @classmethod
    def empty(cls, space: str = CIRCLE) -> "RiggedSet":
        return cls(space)

    @classmethod
    def from_pairs(cls, space: str, pairs: Iterable, merge_tol: float = MERGE_TOL) -> "RiggedSet":
        """Build from ``(point, mult)`` pairs, merging points closer than ``merge_tol``."""
        items = sorted((float(x), int(m)) for x, m in pairs if int(m) != 0)
        points: list[float] = []
        mults: list[int] = []
        for x, m in items:
            if m < 0:
                raise ValueError(f"negative multiplicity {m} at {x}")
            if points and x - points[-1] < merge_tol:
                mults[-1] += m
            else:
                points.append(x)
                mults.append(m)
        return cls(space, tuple(points), tuple(mults))

    @classmethod
    def circle(cls, angles: Sequence[float], mults: Sequence[int] | None = None) -> "RiggedSet":
        if mults is None:
            mults = [1] * len(angles)
        return cls.from_pairs(CIRCLE, zip(angles, mults))

    @classmethod
    def line(cls, values: Sequence[float], mults: Sequence[int] | None = None) -> "RiggedSet":
        if mults is None:
            mults = [1] * len(values)
        return cls.from_pairs(LINE, zip(values, mults))

    @classmethod
    def from_angles(cls, angles: Iterable[float], sticky_tol: float = MERGE_TOL,
                    merge_tol: float = MERGE_TOL) -> "RiggedSet":
        """Wrap arbitrary real angles into ``(0, 2*pi)``, dropping those at the sticky point."""
        kept = []
        for a in angles:
            a = float(a) % TWO_PI
            if min(a, TWO_PI - a) <= sticky_tol:
                continue
            kept.append((a, 1))
        return cls.from_pairs(CIRCLE, kept, merge_tol=merge_tol)

    # -- basic queries ----------------------------------------------------
    @property
    def rank(self) -> int:
        return int(sum(self.mults))

    @property
    def support(self) -> tuple:
        return self.points

    def __len__(self):
        return self.rank

    def __iter__(self):
        return iter(zip(self.points, self.mults))

    def is_empty(self) -> bool:
        return not self.points

    def expanded(self) -> np.ndarray:
        """Points repeated according to multiplicity, ascending."""
        return np.repeat(np.asarray(self.points, dtype=float), np.asarray(self.mults, dtype=int))

    def mult(self, x) -> float:
        return mult(self, x)

    def __add__(self, other: "RiggedSet") -> "RiggedSet":
        return rigged_sum(self, other)

    def __sub__(self, other: "RiggedSet") -> "RiggedSet":
        return difference(self, other)

    def __le__(self, other: "RiggedSet") -> bool:
        _check_space(self, other)
        return all(m <= other.mult(x) for x, m in self)

    def __neg__(self) -> "RiggedSet":
        if self.space != LINE:
            raise SpaceMismatch("negation is defined for line sets only")
        return RiggedSet.from_pairs(LINE, ((-x, m) for x, m in self))

    def isclose(self, other: "RiggedSet", tol: float = 1e-12) -> bool:
        """Same multiplicities and points agreeing to ``tol``."""
        if self.space != other.space or self.mults != other.mults:
            return False
        return all(abs(a - b) <= tol for a, b in zip(self.points, other.points))

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return {"space": self.space,
                "points": [{"x": float(x), "mult": int(m)} for x, m in self]}

    @classmethod
    def from_dict(cls, doc: dict) -> "RiggedSet":
        """Parse the JSON document form; raises ``ValueError`` naming the bad field."""
        if not isinstance(doc, dict):
            raise ValueError("rigged set must be a JSON object")
        extra = set(doc) - {"space", "points"}
        if extra:
            raise ValueError(f"unknown field(s) {sorted(extra)}")
        space = doc.get("space")
        if space not in _SPACES:
            raise ValueError(f"field 'space' must be 'circle' or 'line', got {space!r}")
        pts = doc.get("points")
        if not isinstance(pts, list):
            raise ValueError("field 'points' must be a list")
        pairs = []
        for i, p in enumerate(pts):
            if not isinstance(p, dict) or set(p) != {"x", "mult"}:
                raise ValueError(f"field 'points[{i}]' must have exactly keys 'x' and 'mult'")
            x, m = p["x"], p["mult"]
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ValueError(f"field 'points[{i}].x' must be a number")
            if isinstance(m, bool) or not isinstance(m, int) or m < 1:
                raise ValueError(f"field 'points[{i}].mult' must be a positive integer")
            if space == CIRCLE and not 0.0 < x < TWO_PI:
                raise ValueError(f"field 'points[{i}].x' must lie in (0, 2pi)")
            if space == LINE and x == 0:
                raise ValueError(f"field 'points[{i}].x' must be nonzero")
            pairs.append((x, m))
        return cls.from_pairs(space, pairs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RiggedSet":
        return cls.from_dict(json.loads(text))


def _check_space(S: RiggedSet, T: RiggedSet) -> None:
    if S.space != T.space:
        raise SpaceMismatch(f"space mismatch: {S.space} vs {T.space}")


def _index(S: RiggedSet, x: float) -> int | None:
    i = bisect.bisect_left(S.points, x - MERGE_TOL)
    if i < len(S.points) and abs(S.points[i] - x) < MERGE_TOL:
        return i
    return None


def mult(S: RiggedSet, x) -> float:
    """Multiplicity of ``x`` in ``S``; ``math.inf`` at the sticky point."""
    if _is_sticky(S.space, x):
        return math.inf
    x = float(x)
    if S.space == CIRCLE:
        x %= TWO_PI
    i = _index(S, x)
    return 0 if i is None else S.mults[i]


def rigged_sum(S: RiggedSet, T: RiggedSet) -> RiggedSet:
    _check_space(S, T)
    return RiggedSet.from_pairs(S.space, list(S) + list(T))


def difference(S: RiggedSet, T: RiggedSet) -> RiggedSet:
    """``S - T``; requires ``T <= S`` pointwise in multiplicity."""
    _check_space(S, T)
    counts = dict(zip(S.points, S.mults))
    for x, m in T:
        i = _index(S, x)
        have = 0 if i is None else S.mults[i]
        if m > have:
            raise DominanceViolation(f"mult({x!r}; T) = {m} exceeds mult in S = {have}")
        counts[S.points[i]] -= m
    return RiggedSet.from_pairs(S.space, counts.items())


def truncate_eps(S: RiggedSet, eps: float) -> RiggedSet:
    """Points of ``S`` at distance ``< eps`` from the sticky point."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return RiggedSet.from_pairs(S.space, ((x, m) for x, m in S if sticky_distance(S.space, x) < eps))


def pos_neg_parts(S: RiggedSet) -> tuple[RiggedSet, RiggedSet]:
    """Split a line set into its positive and negative parts."""
    if S.space != LINE:
        raise SpaceMismatch("positive/negative parts are defined for line sets only")
    pos = RiggedSet.from_pairs(LINE, ((x, m) for x, m in S if x > 0))
    neg = RiggedSet.from_pairs(LINE, ((x, m) for x, m in S if x < 0))
    return pos, neg


def abs_set(S: RiggedSet) -> RiggedSet:
    pos, neg = pos_neg_parts(S)
    return pos + (-neg)


# ---------------------------------------------------------------------------
# Step functions on (0, 2*pi)


def _normalize_jumps(jumps: Iterable) -> tuple:
    acc: dict[float, int] = {}
    for a, s in jumps:
        a = float(a)
        if not 0.0 < a < TWO_PI:
            raise ValueError(f"jump angle {a!r} outside (0, 2pi)")
        acc[a] = acc.get(a, 0) + int(s)
    return tuple((a, s) for a, s in sorted(acc.items()) if s != 0)


@dataclass(frozen=True)
class StepFunction:
    """Integer-valued, piecewise constant function on ``(0, 2*pi)``.

    ``base`` is the value just right of 0; ``jumps`` are ``(angle, size)``
    pairs.  Calling the function gives the left-continuous value;
    :meth:`mid` gives the mean of one-sided limits.
    """

    jumps: tuple = ()
    base: int = 0

    def __post_init__(self):
        object.__setattr__(self, "jumps", _normalize_jumps(self.jumps))
        object.__setattr__(self, "base", int(self.base))

    @property
    def angles(self) -> tuple:
        return tuple(a for a, _ in self.jumps)

    def _value(self, theta: float, include_equal: bool) -> int:
        total = self.base
        for a, s in self.jumps:
            if a < theta or (include_equal and a == theta):
                total += s
            else:
                break
        return total

    def __call__(self, theta: float) -> int:
        return self._value(theta, include_equal=False)

    def right(self, theta: float) -> int:
        return self._value(theta, include_equal=True)

    def mid(self, theta: float) -> float:
        return 0.5 * (self(theta) + self.right(theta))

    def intervals(self) -> list:
        """``(lo, hi, value)`` triples covering ``(0, 2*pi)``."""
        out = []
        lo, value = 0.0, self.base
        for a, s in self.jumps:
            out.append((lo, a, value))
            lo, value = a, value + s
        out.append((lo, TWO_PI, value))
        return out

    def integral(self) -> float:
        return float(sum((hi - lo) * v for lo, hi, v in self.intervals()))

    def values(self) -> list:
        return [v for _, _, v in self.intervals()]

    def is_constant(self) -> bool:
        return not self.jumps

    def __add__(self, other):
        if isinstance(other, (int, np.integer)):
            return StepFunction(self.jumps, self.base + int(other))
        return StepFunction(self.jumps + other.jumps, self.base + other.base)

    __radd__ = __add__

    def __neg__(self):
        return StepFunction(tuple((a, -s) for a, s in self.jumps), -self.base)

    def __sub__(self, other):
        return self + (-other)

    def equiv_mod_const(self, other: "StepFunction") -> bool:
        return self.jumps == other.jumps


def counting_function(S: RiggedSet) -> StepFunction:
    """``f_S(theta) = #{s in S : s >= theta}`` with multiplicity; left-continuous at the points of ``S``."""
    if S.space != CIRCLE:
        raise SpaceMismatch("counting functions are defined for circle sets only")
    return StepFunction(tuple((x, -m) for x, m in S), base=S.rank)


def _weighted_median_int(values: Sequence[int], weights: Sequence[float]) -> int:
    order = np.argsort(values, kind="stable")
    vals = np.asarray(values)[order]
    w = np.asarray(weights, dtype=float)[order]
    half = 0.5 * w.sum()
    acc = np.cumsum(w)
    return int(vals[int(np.searchsorted(acc, half))])


def rho1_shift(f: StepFunction, g: StepFunction) -> int:
    """Integer ``n`` minimizing ``int |f - g + n|``."""
    pieces = (f - g).intervals()
    vals = [v for _, _, v in pieces]
    weights = [hi - lo for lo, hi, _ in pieces]
    return -_weighted_median_int(vals, weights)


def rho1(f: StepFunction, g: StepFunction) -> float:
    """Quotient L1 distance ``min_n int_0^{2pi} |f - g + n|``."""
    n = rho1_shift(f, g)
    return float(sum((hi - lo) * abs(v + n) for lo, hi, v in (f - g).intervals()))


def rho1_bruteforce(f: StepFunction, g: StepFunction) -> float:
    """Scan every integer shift between the extreme values of ``g - f``."""
    pieces = (f - g).intervals()
    vals = [v for _, _, v in pieces]
    best = math.inf
    for n in range(-max(vals), -min(vals) + 1):
        best = min(best, sum((hi - lo) * abs(v + n) for lo, hi, v in pieces))
    return float(best)
