"""Unitary matrices as elements of ``1 + trace class`` and their spectra.

A finite unitary matrix ``U`` is identified with ``U (+) 1 (+) 1 (+) ...``;
its eigenvalues equal to 1 disappear into the sticky point of the spectrum.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateSpectrum, NotUnitary, SolverFailure
from .lift import SpectrumPath
from .matching import d
from .rigged import TWO_PI, RiggedSet

UNITARY_TOL = 1e-10
CLUSTER_TOL = 1e-7
RESIDUAL_TOL = 1e-8
#: sup of x / |e^{ix} - 1| over (0, pi]
TRACE_NORM_CONSTANT = 0.5 * math.pi


@dataclass(frozen=True, eq=False)
class UnitaryTC:
    """A unitary ``N x N`` matrix, regarded as ``1 + A`` with ``A`` trace class."""

    matrix: np.ndarray
    tol: float = UNITARY_TOL

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {M.shape}")
        if M.size:
            E = M.conj().T @ M - np.eye(len(M))
            # Frobenius bounds the operator norm; fall back to the exact norm only when needed
            if np.linalg.norm(E) > self.tol and np.linalg.norm(E, 2) > self.tol:
                raise NotUnitary("matrix is not unitary within tolerance")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "UnitaryTC") -> "UnitaryTC":
        return UnitaryTC(self.matrix @ other.matrix)

    @classmethod
    def identity(cls, N: int) -> "UnitaryTC":
        return cls(np.eye(N, dtype=complex))


def eig_unitary(U: UnitaryTC) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues on the unit circle and orthonormal eigenvectors (columns).

    Uses the complex Schur form, which is diagonal for normal matrices, so the
    Schur vectors are an orthonormal eigenbasis even for repeated eigenvalues.
    """
    M = U.matrix
    if M.size == 0:
        return np.zeros(0, dtype=complex), np.zeros((0, 0), dtype=complex)
    T, Z = scipy.linalg.schur(M, output="complex")
    lam = np.diag(T).copy()
    mod = np.abs(lam)
    if np.any(np.abs(mod - 1.0) > RESIDUAL_TOL):
        raise SolverFailure(f"eigenvalue modulus off the unit circle by {np.max(np.abs(mod - 1)):.3g}")
    lam = lam / mod
    resid = np.linalg.norm(M @ Z - Z * lam[None, :], axis=0)
    if np.any(resid > RESIDUAL_TOL):
        raise SolverFailure(f"eigenpair residual {resid.max():.3g} exceeds {RESIDUAL_TOL}")
    return lam, Z


def _cluster(angles: np.ndarray, tol: float) -> list[tuple[float, int]]:
    out: list[tuple[float, int]] = []
    group: list[float] = []
    for a in sorted(angles.tolist()):
        if group and a - group[-1] > tol:
            out.append((sum(group) / len(group), len(group)))
            group = []
        group.append(a)
    if group:
        out.append((sum(group) / len(group), len(group)))
    return out


def spec(U: UnitaryTC, cluster_tol: float = CLUSTER_TOL) -> RiggedSet:
    """Spectrum of ``U`` as a circle rigged set.

    Eigenvalues within ``cluster_tol`` (radians) of 1 are dropped; the rest
    are grouped into multiplicities by angular clustering at ``cluster_tol``.
    """
    lam, _ = eig_unitary(U)
    angles = np.mod(np.angle(lam), TWO_PI)
    keep = np.minimum(angles, TWO_PI - angles) > cluster_tol
    pairs = _cluster(angles[keep], cluster_tol)
    return RiggedSet.from_pairs("circle", pairs)


def trace_norm(A) -> float:
    """Sum of singular values."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False).sum())


def spec_continuity_check(U1: UnitaryTC, U2: UnitaryTC) -> tuple[float, float]:
    """``(d(spec U1, spec U2), (pi/2) * ||U1 - U2||_1)``; the first never exceeds the second."""
    if U1.N != U2.N:
        raise ValueError(f"dimension mismatch: {U1.N} vs {U2.N}")
    lhs = d(spec(U1), spec(U2))
    rhs = TRACE_NORM_CONSTANT * trace_norm(U1.matrix - U2.matrix)
    return lhs, rhs


def _as_matrix(U) -> np.ndarray:
    return U.matrix if isinstance(U, UnitaryTC) else np.asarray(U, dtype=complex)


def eigen_velocities(U: Callable, r0: float, h: float = 1e-4, dU: Callable | None = None,
                     gap_tol: float = 1e-6):
    """Eigenvalues at ``r0`` with finite-difference and expectation velocities.

    Returns ``(lam, fd, expect, Uprime)`` where ``fd`` are central differences
    of the eigenvalues (matched to ``lam`` by optimal assignment), ``expect``
    are ``<psi_j, U'(r0) psi_j>`` and ``Uprime`` is ``dU(r0)`` when supplied,
    else the central difference of ``U``.
    """
    U0 = UnitaryTC(_as_matrix(U(r0)))
    lam, Z = eig_unitary(U0)
    n = len(lam)
    if n > 1:
        gaps = np.abs(lam[:, None] - lam[None, :]) + np.eye(n) * 10.0
        if gaps.min() < gap_tol:
            raise DegenerateSpectrum(f"eigenvalue gap {gaps.min():.3g} below {gap_tol}")
    Up, Um = _as_matrix(U(r0 + h)), _as_matrix(U(r0 - h))
    lam_p = _matched(lam, eig_unitary(UnitaryTC(Up))[0])
    lam_m = _matched(lam, eig_unitary(UnitaryTC(Um))[0])
    fd = (lam_p - lam_m) / (2 * h)
    Uprime = _as_matrix(dU(r0)) if dU is not None else (Up - Um) / (2 * h)
    expect = np.einsum("ij,ik,kj->j", Z.conj(), Uprime, Z)
    return lam, fd, expect, Uprime


def _matched(ref: np.ndarray, lam: np.ndarray) -> np.ndarray:
    rows, cols = linear_sum_assignment(np.abs(ref[:, None] - lam[None, :]))
    out = np.empty_like(ref)
    out[rows] = lam[cols]
    return out


def eigen_velocity_check(U: Callable, r0: float, h: float = 1e-4, dU: Callable | None = None) -> float:
    """Max deviation between finite-difference eigenvalue velocities and ``<psi, U' psi>``."""
    _, fd, expect, _ = eigen_velocities(U, r0, h, dU)
    return float(np.max(np.abs(fd - expect))) if len(fd) else 0.0


def velocity_bound(U: Callable, r0: float, h: float = 1e-4, dU: Callable | None = None):
    """``(sum_j |lambda_j'|, ||U'||_1)`` at ``r0``."""
    _, _, expect, Uprime = eigen_velocities(U, r0, h, dU)
    return float(np.abs(expect).sum()), trace_norm(Uprime)


def unitary_path(U: Callable, a: float = 0.0, b: float = 1.0, cluster_tol: float = CLUSTER_TOL,
                 start_at_identity: bool = True, grid=()) -> SpectrumPath:
    """Spectrum path ``r -> spec(U(r))`` for a matrix-valued callable."""
    def sampler(r):
        return spec(UnitaryTC(_as_matrix(U(r))), cluster_tol)

    return SpectrumPath(a, b, sampler, start_at_identity, tuple(grid))


def random_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    X = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2)
    Q, R = np.linalg.qr(X)
    return Q * (np.diag(R) / np.abs(np.diag(R)))[None, :]


def random_hermitian(N: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    X = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return scale * 0.5 * (X + X.conj().T)


# -- matrix JSON: arrays of [re, im] pairs, row-major -------------------------


def matrix_to_json(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrix_from_json(doc) -> np.ndarray:
    if not isinstance(doc, list) or not doc:
        raise ValueError("matrix must be a non-empty list of rows")
    n = len(doc[0])
    rows = []
    for i, row in enumerate(doc):
        if not isinstance(row, list) or len(row) != n:
            raise ValueError(f"matrix row {i} has the wrong length")
        out = []
        for j, z in enumerate(row):
            if not (isinstance(z, list) and len(z) == 2 and all(isinstance(t, (int, float)) for t in z)):
                raise ValueError(f"matrix entry [{i}][{j}] must be a [re, im] pair")
            out.append(complex(z[0], z[1]))
        rows.append(out)
    return np.array(rows, dtype=complex)


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_json(json.load(fh))
