"""Matrix paths ``r -> U(r)`` used by the CLI, the verify suite and the tests."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .unispec import random_hermitian


@dataclass(frozen=True)
class MatrixPath:
    """Unitary-valued path on ``[a, b]``."""

    U: Callable[[float], np.ndarray]
    a: float = 0.0
    b: float = 1.0
    N: int = 1
    dU: Callable[[float], np.ndarray] | None = None

    def __call__(self, r: float) -> np.ndarray:
        return self.U(r)


def loop(N: int) -> MatrixPath:
    """``U(r) = exp(2 pi i r) I_N``: every eigenvalue winds once anticlockwise."""
    def U(r):
        return np.exp(2j * math.pi * r) * np.eye(N)
    return MatrixPath(U, 0.0, 1.0, N)


def identity(N: int) -> MatrixPath:
    return MatrixPath(lambda r: np.eye(N, dtype=complex), 0.0, 1.0, N)


def exp_irH(H, a: float = 0.0, b: float = 1.0) -> MatrixPath:
    """``U(r) = exp(i r H)``."""
    H = np.asarray(H, dtype=complex)
    w, V = np.linalg.eigh(H)

    def U(r):
        return (V * np.exp(1j * r * w)[None, :]) @ V.conj().T

    def dU(r):
        return (V * (1j * w * np.exp(1j * r * w))[None, :]) @ V.conj().T

    return MatrixPath(U, a, b, len(H), dU)


def two_generator(A, B, a: float = 0.0, b: float = 1.0) -> MatrixPath:
    """``U(r) = exp(i r A) exp(i r^2 B)``; starts at the identity for ``a = 0``."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    wa, Va = np.linalg.eigh(A)
    wb, Vb = np.linalg.eigh(B)

    def ea(r, f=lambda x: 1.0):
        return (Va * (f(wa) * np.exp(1j * r * wa))[None, :]) @ Va.conj().T

    def eb(r, f=lambda x: 1.0):
        return (Vb * (f(wb) * np.exp(1j * r * r * wb))[None, :]) @ Vb.conj().T

    def U(r):
        return ea(r) @ eb(r)

    def dU(r):
        return ea(r, lambda w: 1j * w) @ eb(r) + ea(r) @ eb(r, lambda w: 2j * r * w)

    return MatrixPath(U, a, b, len(A), dU)


def random_two_generator(N: int, rng: np.random.Generator, scale: float = 1.0) -> MatrixPath:
    """Random ``exp(i r A) exp(i r^2 B)`` on ``[0, 1]`` with Gaussian Hermitian ``A, B`` scaled by ``scale``."""
    A = random_hermitian(N, rng, scale)
    B = random_hermitian(N, rng, scale)
    return two_generator(A, B)


def loop_homotopy(N: int, K, s: float, n_total: int | None = None) -> MatrixPath:
    """Deformation of the ``N``-fold loop inside dimension ``n_total``.

    ``U_s(r) = exp(2 pi i r P) exp(i s sin(pi r) K)`` with ``P`` the projection
    onto the first ``N`` coordinates; every member is a loop at the identity.
    """
    K = np.asarray(K, dtype=complex)
    n = n_total or len(K)
    p = np.zeros(n)
    p[:N] = 1.0
    w, V = np.linalg.eigh(K)

    def U(r):
        phase = np.diag(np.exp(2j * math.pi * r * p))
        bump = (V * np.exp(1j * s * math.sin(math.pi * r) * w)[None, :]) @ V.conj().T
        return phase @ bump

    return MatrixPath(U, 0.0, 1.0, n)


def geodesic_interpolation(rs: Sequence[float], mats: Sequence[np.ndarray]) -> MatrixPath:
    """Piecewise geodesic path through sampled unitaries.

    Between nodes ``r_k < r_{k+1}`` the path is
    ``U_k exp(s log(U_k^* U_{k+1}))`` with the principal logarithm, so it
    reproduces every sample exactly and each segment has the smallest possible
    eigenvalue rotation.
    """
    rs = np.asarray(rs, dtype=float)
    if len(rs) < 2 or np.any(np.diff(rs) <= 0):
        raise ValueError("need at least two strictly increasing sample points")
    mats = [np.asarray(M, dtype=complex) for M in mats]
    segs = []
    for M0, M1 in zip(mats, mats[1:]):
        D = M0.conj().T @ M1
        # D is unitary: diagonalise its Hermitian generator
        T, Z = _schur_unitary(D)
        segs.append((M0, Z, np.angle(T)))

    def U(r):
        k = int(np.clip(np.searchsorted(rs, r, side="right") - 1, 0, len(segs) - 1))
        if r == rs[k]:
            return mats[k]
        if r == rs[k + 1]:
            return mats[k + 1]
        s = (r - rs[k]) / (rs[k + 1] - rs[k])
        M0, Z, ang = segs[k]
        return M0 @ (Z * np.exp(1j * s * ang)[None, :]) @ Z.conj().T

    return MatrixPath(U, float(rs[0]), float(rs[-1]), len(mats[0]))


def _schur_unitary(D: np.ndarray):
    T, Z = scipy.linalg.schur(D, output="complex")
    return np.diag(T), Z
