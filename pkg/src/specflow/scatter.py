"""Desk-scale scattering on the 1-D lattice.

The free operator is the discrete Laplacian ``(H0 u)(n) = u(n+1) + u(n-1)``
with absolutely continuous spectrum ``[-2, 2]``.  A perturbation
``V_r = F* (r J) F`` couples finitely many sites with frame weights ``kappa``.
Everything needed downstream lives on the coupled sites:

* ``T0(z) = F R_z(H0) F*`` with entries ``kappa_i kappa_j G(z; n_i, n_j)``;
* the unitary ``S~(z, r) = 1 - 2i sqrt(Im T0) J_r (1 + T0 J_r)^{-1} sqrt(Im T0)``;
* the two mu-invariants, along ``y`` (``z = lambda + iy``, ``y: inf -> 0``)
  and along the coupling ``rho: 0 -> r``, and the resulting split of the
  spectral shift function ``xi = xi_ac + xi_s``.
"""
from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import (BranchFailure, ResonanceHit, ResonanceOnPath, SpecflowError,
                     ThetaDependence)
from .lift import ArgumentTrack, SpectrumPath, endpoint_sum, lift_path
from .mu import MuInvariant, mu_integral, mu_invariant
from .rigged import TWO_PI, RiggedSet, StepFunction
from .unispec import UnitaryTC, spec, trace_norm

EDGE_TOL = 1e-12
HERGLOTZ_TOL = 1e-10
SQRT_CLAMP = 1e-12
RESONANCE_SINGVAL = 1e-10
UNITARITY_TOL = 1e-8
SCAN_THRESHOLD = 1e-8
SCAN_WIDTH = 1e-10
Y_FLOOR = 1e-8
Y_START_TARGET = 0.01
INTEGER_TOL = 1e-6
BK_TOL = 1e-6

DEFAULT_LAMBDA_GRID = (-1.5, -1.0, -0.5, 0.5, 1.0, 1.5)
DEFAULT_R_GRID = tuple(float(r) for r in np.linspace(0.1, 2.0, 20))


# -- free lattice Green's function --------------------------------------------


def _zeta(z: complex) -> complex:
    """Root of ``zeta + 1/zeta = z`` inside the unit disc (boundary value on the band)."""
    if abs(z.imag) == 0.0:
        lam = z.real
        if abs(abs(lam) - 2.0) <= EDGE_TOL:
            raise BranchFailure(f"lambda = {lam!r} is a band edge")
        if abs(lam) < 2.0:
            # limit from Im z > 0: zeta = exp(-i phi), cos(phi) = lambda/2
            return complex(0.5 * lam, -math.sqrt(1.0 - 0.25 * lam * lam))
    elif z.imag < 0:
        raise BranchFailure(f"Im z = {z.imag!r} < 0; only the upper half plane is supported")
    s = cmath.sqrt(0.25 * z * z - 1.0)
    a, b = 0.5 * z + s, 0.5 * z - s
    return a if abs(a) < abs(b) else b


def lattice_green(z: complex, m: int = 0, n: int = 0) -> complex:
    """``G(z; m, n) = ((H0 - z)^{-1})_{mn} = zeta^|m-n| / (zeta - 1/zeta)``.

    Real ``z`` inside ``(-2, 2)`` is read as ``lambda + i0``.
    """
    zeta = _zeta(complex(z))
    return zeta ** abs(int(m) - int(n)) / (zeta - 1.0 / zeta)


def truncated_green(z: complex, m: int, n: int, size: int = 4001) -> complex:
    """``((H_trunc - z)^{-1})_{mn}`` with sites centred in a chain of ``size`` sites."""
    c = size // 2
    if not (-c <= m <= c and -c <= n <= c):
        raise ValueError("sites fall outside the truncation")
    ab = np.empty((3, size), dtype=complex)
    ab[0, :] = 1.0
    ab[1, :] = -complex(z)
    ab[2, :] = 1.0
    rhs = np.zeros(size, dtype=complex)
    rhs[c + n] = 1.0
    return complex(solve_banded((1, 1), ab, rhs)[c + m])


def extrapolated_boundary_green(lam: float, m: int, n: int, y: float = 1e-3,
                                size: int = 40001) -> complex:
    """Boundary value ``G(lam + i0; m, n)`` from truncations at ``y`` and ``2y``.

    Richardson step ``2 G(y) - G(2y)`` removes the linear term in ``y``.
    """
    g1 = truncated_green(complex(lam, y), m, n, size)
    g2 = truncated_green(complex(lam, 2 * y), m, n, size)
    return 2 * g1 - g2


# -- model --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScatteringModel:
    """Finite-rank coupling ``V_r = F* (r J) F`` of lattice sites."""

    sites: tuple
    kappa: tuple
    J: np.ndarray
    green: Callable[[complex, int, int], complex] = field(default=lattice_green)

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        kappa = tuple(float(x) for x in self.kappa)
        J = np.array(self.J, dtype=complex)
        k = len(sites)
        if k == 0:
            raise ValueError("model needs at least one coupled site")
        if len(kappa) != k:
            raise ValueError(f"kappa has {len(kappa)} entries for {k} sites")
        if len(set(sites)) != k:
            raise ValueError("sites must be distinct")
        if any(not x > 0 for x in kappa):
            raise ValueError("frame weights kappa must be positive")
        if J.shape != (k, k):
            raise ValueError(f"J must be {k}x{k}, got {J.shape}")
        if np.max(np.abs(J - J.conj().T)) > 1e-12:
            raise ValueError("J must be Hermitian")
        J.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "J", J)

    @property
    def k(self) -> int:
        return len(self.sites)

    def J_r(self, r: float) -> np.ndarray:
        return r * self.J


def default_rank_one() -> ScatteringModel:
    return ScatteringModel((0,), (1.0,), [[1.0]])


def default_rank_two() -> ScatteringModel:
    return ScatteringModel((0, 3), (1.0, 0.8), [[1.0, 0.5], [0.5, -0.7]])


@dataclass(frozen=True, eq=False)
class T0Matrix:
    z: complex
    M: np.ndarray

    @property
    def imag_part(self) -> np.ndarray:
        return (self.M - self.M.conj().T) / 2j


def t0(model: ScatteringModel, z: complex) -> T0Matrix:
    """``T0(z) = F R_z(H0) F*`` on the coupled sites."""
    z = complex(z)
    k = model.k
    M = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            M[i, j] = model.kappa[i] * model.kappa[j] * model.green(z, model.sites[i], model.sites[j])
    T = T0Matrix(z, M)
    w = np.linalg.eigvalsh(T.imag_part)
    if w.min() < -HERGLOTZ_TOL:
        raise BranchFailure(f"Im T0({z}) has eigenvalue {w.min():.3g} < 0")
    return T


def psd_sqrt(A: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix (eigenvalues below 1e-12 clamped to 0)."""
    A = 0.5 * (A + A.conj().T)
    w, V = np.linalg.eigh(A)
    w = np.where(w < SQRT_CLAMP, 0.0, w)
    return (V * np.sqrt(w)[None, :]) @ V.conj().T


def min_singval(model: ScatteringModel, z: complex, r: float) -> float:
    """Smallest singular value of ``1 + T0(z) J_r``."""
    A = np.eye(model.k) + t0(model, z).M @ model.J_r(r)
    return float(np.linalg.svd(A, compute_uv=False).min())


def tilde_s(model: ScatteringModel, z: complex, r: float) -> UnitaryTC:
    """``S~(z, r) = 1 - 2i sqrt(Im T0) J_r (1 + T0 J_r)^{-1} sqrt(Im T0)``."""
    T = t0(model, z)
    Jr = model.J_r(r)
    A = np.eye(model.k) + T.M @ Jr
    smin = float(np.linalg.svd(A, compute_uv=False).min())
    if smin < RESONANCE_SINGVAL:
        raise ResonanceHit(f"1 + T0 J_r is singular at z={z}, r={r} (min singular value {smin:.3g})", smin)
    B = psd_sqrt(T.imag_part)
    S = np.eye(model.k) - 2j * B @ Jr @ np.linalg.solve(A, B)
    return UnitaryTC(S, tol=UNITARITY_TOL)


def unitarity_residual(U: UnitaryTC) -> float:
    M = U.matrix
    return float(np.linalg.norm(M.conj().T @ M - np.eye(len(M)), 2))


# -- resonances ---------------------------------------------------------------

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, lo: float, hi: float, width: float):
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > width:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
    mid = 0.5 * (lo + hi)
    return float(lo), float(hi), f(mid)


def resonance_scan(model: ScatteringModel, lam: float, r_grid: Sequence[float],
                   threshold: float = SCAN_THRESHOLD, width: float = SCAN_WIDTH) -> list[tuple[float, float]]:
    """Brackets ``(lo, hi)`` of width ``<= width`` around couplings where
    ``1 + T0(lam + i0) J_r`` is singular.

    The smallest singular value is sampled on ``r_grid``; every local minimum
    is refined by golden-section search on its neighbouring grid cells.
    """
    grid = np.unique(np.asarray(r_grid, dtype=float))
    if len(grid) == 0 or not np.any(model.J):
        return []
    M = t0(model, lam).M
    J = model.J
    eye = np.eye(model.k)

    def sigma(r):
        return float(np.linalg.svd(eye + r * (M @ J), compute_uv=False).min())

    vals = np.array([sigma(r) for r in grid])
    out = []
    for i, v in enumerate(vals):
        left = vals[i - 1] if i > 0 else math.inf
        right = vals[i + 1] if i + 1 < len(vals) else math.inf
        if not (v <= left and v <= right):
            continue
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        if v < threshold and hi - lo <= width:
            out.append((float(lo), float(hi)))
            continue
        if hi == lo:
            continue
        a, b, s = _golden_min(sigma, lo, hi, width)
        if s < threshold:
            out.append((a, b))
    # plateaus can report the same resonance twice
    merged: list[tuple[float, float]] = []
    for a, b in sorted(out):
        if merged and a <= merged[-1][1] + width:
            merged[-1] = (merged[-1][0], max(b, merged[-1][1]))
        else:
            merged.append((a, b))
    return merged


# -- the two mu-invariants ----------------------------------------------------


def choose_y_start(model: ScatteringModel, lam: float, r: float, target: float = Y_START_TARGET) -> float:
    """Smallest ``y = 2^k`` (``k >= 0``) with ``||S~(lam + iy, r) - 1||_1 < target``."""
    y = 1.0
    while True:
        S = tilde_s(model, complex(lam, y), r).matrix
        if trace_norm(S - np.eye(model.k)) < target:
            return y
        y *= 2.0
        if y > 1e15:
            raise SpecflowError("could not find a starting height for the y-path")


def _y_of_t(t: float, y_start: float, T: float) -> float:
    if t <= 0.0:
        return math.inf if t <= -1.0 else y_start / (1.0 + t)
    if t <= T:
        return y_start * 2.0 ** (-t)
    return max(Y_FLOOR * (T + 1.0 - t), 0.0)


def pushnitski_track(model: ScatteringModel, lam: float, r: float, step_tol: float | None = None,
                     max_depth: int | None = None) -> ArgumentTrack:
    """Lift of ``spec S~(lam + iy, r)`` as ``y`` runs from ``inf`` to ``0``.

    The parameter ``t`` in ``[-1, T + 1]`` maps to ``y = y0/(1+t)`` on
    ``[-1, 0]``, ``y = y0 2^-t`` on ``[0, T]`` (down to ``1e-8``) and then
    linearly to ``0``; ``t = -1`` is the identity.
    """
    y0 = choose_y_start(model, lam, r)
    T = math.log2(y0 / Y_FLOOR)

    def sampler(t):
        y = _y_of_t(t, y0, T)
        if math.isinf(y):
            return RiggedSet.empty("circle")
        z = complex(lam) if y == 0.0 else complex(lam, y)
        return spec(tilde_s(model, z, r))

    grid = [-0.5, 0.0] + [float(k) for k in range(1, int(math.ceil(T)))] + [T]
    P = SpectrumPath(-1.0, T + 1.0, sampler, True, tuple(grid))
    return lift_path(P, **_lift_kwargs(step_tol, max_depth))


def mu_pushnitski(model: ScatteringModel, lam: float, r: float, **kw) -> MuInvariant:
    """Pushnitski mu-invariant: spectral flow of ``S~(lam + iy, r)`` from ``y = inf`` to ``y = 0``."""
    return mu_invariant(pushnitski_track(model, lam, r, **kw))


def ac_track(model: ScatteringModel, lam: float, r: float, step_tol: float | None = None,
             max_depth: int | None = None, scan_points: int = 65) -> ArgumentTrack:
    """Lift of ``spec S~(lam + i0, rho)`` for ``rho`` from ``0`` to ``r``.

    Raises :class:`ResonanceOnPath` if ``[0, r]`` contains a resonance.
    """
    brackets = resonance_scan(model, lam, np.linspace(0.0, r, scan_points))
    if brackets:
        raise ResonanceOnPath(brackets)

    def sampler(s):
        return spec(tilde_s(model, complex(lam), s * r))

    P = SpectrumPath(0.0, 1.0, sampler, True)
    return lift_path(P, **_lift_kwargs(step_tol, max_depth))


def mu_ac(model: ScatteringModel, lam: float, r: float, **kw) -> MuInvariant:
    """Absolutely continuous mu-invariant: flow of the scattering phases along the coupling."""
    return mu_invariant(ac_track(model, lam, r, **kw))


def _lift_kwargs(step_tol, max_depth):
    kw = {}
    if step_tol is not None:
        kw["step_tol"] = step_tol
    if max_depth is not None:
        kw["max_depth"] = max_depth
    return kw


# -- decomposition of xi ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class XiDecomposition:
    lam: float
    r: float
    xi: float
    xi_ac: float
    xi_s: float
    mu: MuInvariant
    mu_ac: MuInvariant
    mu_s_value: int
    bk_residual: float
    min_singval: float
    unitarity_residual: float
    det_residual: float
    phases: tuple

    def row(self) -> dict:
        return {"lambda": self.lam, "r": self.r, "xi": self.xi, "xi_ac": self.xi_ac,
                "xi_s": self.xi_s, "mu_s_value": self.mu_s_value,
                "bk_residual": self.bk_residual, "min_singval": self.min_singval}


def xi_decompose(model: ScatteringModel, lam: float, r: float, **kw) -> XiDecomposition:
    """``xi = -(1/2pi) int mu``, ``xi_ac = -(1/2pi) int mu_ac`` and ``xi_s = xi - xi_ac``.

    ``mu - mu_ac`` must be constant in ``theta``; its value is ``-xi_s``.
    """
    lam, r = float(lam), float(r)
    S = tilde_s(model, complex(lam), r)
    smin = min_singval(model, complex(lam), r)
    if r == 0.0:
        zero = MuInvariant(StepFunction(), RiggedSet.empty("circle"), RiggedSet.empty("circle"))
        return XiDecomposition(lam, r, 0.0, 0.0, 0.0, zero, zero, 0, abs(1 - np.linalg.det(S.matrix)),
                               smin, unitarity_residual(S), 0.0, ())
    ytrack = pushnitski_track(model, lam, r, **kw)
    rtrack = ac_track(model, lam, r, **kw)
    mu = mu_invariant(ytrack)
    mua = mu_invariant(rtrack)
    diff = mu.step - mua.step
    if not diff.is_constant():
        raise ThetaDependence(f"mu - mu_ac has jumps {diff.jumps} at lambda={lam}, r={r}")
    mu_s_value = diff.base
    xi = -mu_integral(mu) / TWO_PI
    xi_ac = -mu_integral(mua) / TWO_PI
    xi_s = xi - xi_ac
    if abs(xi_s + mu_s_value) >= INTEGER_TOL or abs(xi_s - round(xi_s)) >= INTEGER_TOL:
        raise ThetaDependence(f"xi_s = {xi_s!r} is inconsistent with mu_s = {mu_s_value}")
    det = complex(np.linalg.det(S.matrix))
    bk = abs(cmath.exp(-2j * math.pi * xi) - det)
    phases = tuple(float(x) for x in rtrack.thetas[-1]) if rtrack.n_tracks else ()
    det_res = abs(cmath.exp(1j * endpoint_sum(rtrack)) - det)
    return XiDecomposition(lam, r, xi, xi_ac, xi_s, mu, mua, mu_s_value, bk, smin,
                           unitarity_residual(S), det_res, phases)


# -- sweeps -------------------------------------------------------------------


@dataclass
class SweepRow:
    lam: float
    r: float
    result: XiDecomposition | None = None
    resonance: tuple | None = None

    @property
    def flagged(self) -> bool:
        return self.result is None


def sweep(model: ScatteringModel, lambda_grid: Sequence[float], r_grid: Sequence[float],
          scan_points: int = 257, workers: int = 1, **kw) -> list[SweepRow]:
    """``xi_decompose`` on every ``(lambda, r)``; rows past a resonance are flagged.

    A row is flagged with the first resonance bracket in ``[0, r]``. With
    ``workers > 1`` grid points run on a thread pool; row order is unchanged.
    """
    rs = sorted(float(r) for r in r_grid)
    rows = []
    for lam in lambda_grid:
        brackets = []
        pos = [r for r in rs if r > 0]
        neg = [r for r in rs if r < 0]
        if pos:
            brackets += resonance_scan(model, lam, np.linspace(0.0, max(pos), scan_points))
        if neg:
            brackets += resonance_scan(model, lam, np.linspace(min(neg), 0.0, scan_points))
        for r in rs:
            hit = [b for b in brackets if min(0.0, r) <= b[0] and b[1] <= max(0.0, r)]
            rows.append(SweepRow(float(lam), r, None, min(hit, key=lambda b: abs(b[0])) if hit else None))

    def run(row):
        if row.resonance is None:
            row.result = xi_decompose(model, row.lam, row.r, **kw)
        return row

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, rows))
    return [run(row) for row in rows]
