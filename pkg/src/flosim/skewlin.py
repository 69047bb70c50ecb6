"""Linear algebra on antisymmetric matrices.

Pfaffians (elimination and matching-sum), the real normal form
``M = R (+)_j [[0, l_j], [-l_j, 0]] R^T`` with ``R in SO(2n)``, and
rotations generated by real antisymmetric matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

SKEW_TOL = 1e-12
COMBINATORIAL_MAX_DIM = 12
RECONSTRUCTION_TOL = 1e-9


class NotAntisymmetricError(ValueError):
    pass


class BlockDiagonalizationError(np.linalg.LinAlgError):
    def __init__(self, residual: float):
        super().__init__(f"real Schur normal form failed, reconstruction residual {residual:.3e}")
        self.residual = residual


def as_skew(S, tol: float = SKEW_TOL, real: bool | None = None) -> np.ndarray:
    """Validate antisymmetry and return the exactly antisymmetrised copy.

    ``tol`` is relative: ``|S + S^T|_max <= tol * (1 + |S|_max)``.
    """
    S = np.array(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"need a square matrix, got shape {S.shape}")
    if S.shape[0] % 2:
        raise ValueError(f"need an even dimension, got {S.shape[0]}")
    if real is True:
        if np.iscomplexobj(S):
            if np.max(np.abs(S.imag), initial=0.0) > tol:
                raise ValueError("matrix has a non-zero imaginary part")
            S = S.real
        S = S.astype(float)
    elif not np.iscomplexobj(S):
        S = S.astype(float)
    scale = np.max(np.abs(S), initial=0.0)
    if np.max(np.abs(S + S.T), initial=0.0) > tol * (1.0 + scale):
        raise NotAntisymmetricError("matrix is not antisymmetric")
    return (S - S.T) / 2


def pfaffian(S) -> complex | float:
    """Pfaffian by skew Gaussian elimination (Parlett-Reid) with partial pivoting.

    Convention ``Pf([[0, a], [-a, 0]]) = a``.  Each symmetric row/column swap
    flips the sign.
    """
    A = np.array(S, dtype=complex if np.iscomplexobj(S) else float)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ValueError("need a square matrix")
    if n % 2:
        return A.dtype.type(0)
    pf = A.dtype.type(1)
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1 :, k])))
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            pf = -pf
        pivot = A[k, k + 1]
        if pivot == 0:
            return A.dtype.type(0)
        pf = pf * pivot
        if k + 2 < n:
            tau = A[k, k + 2 :] / pivot
            col = A[k + 2 :, k + 1]
            A[k + 2 :, k + 2 :] += np.outer(tau, col) - np.outer(col, tau)
    return pf


def pfaffian_combinatorial(S) -> complex | float:
    """Pfaffian as the signed sum over perfect matchings (``(2n-1)!!`` terms)."""
    A = np.asarray(S)
    d = A.shape[0]
    if d > COMBINATORIAL_MAX_DIM:
        raise ValueError(f"matching sum limited to dim <= {COMBINATORIAL_MAX_DIM}, got {d}")
    if d % 2:
        return 0
    entries = A.tolist()

    @lru_cache(maxsize=None)
    def expand(remaining: tuple[int, ...]):
        if not remaining:
            return 1
        i, rest = remaining[0], remaining[1:]
        total = 0
        for pos, j in enumerate(rest):
            a = entries[i][j]
            if a == 0:
                continue
            sign = -1 if pos % 2 else 1
            total += sign * a * expand(rest[:pos] + rest[pos + 1 :])
        return total

    return expand(tuple(range(d)))


@dataclass(frozen=True)
class BlockDiagonalForm:
    rotation: np.ndarray
    lambdas: np.ndarray

    def blocks(self) -> np.ndarray:
        return canonical_skew(self.lambdas)

    def reconstruct(self) -> np.ndarray:
        R = self.rotation
        return R @ self.blocks() @ R.T

    @property
    def williamson(self) -> np.ndarray:
        return np.sort(np.abs(self.lambdas))


def canonical_skew(lambdas) -> np.ndarray:
    """Direct sum of ``[[0, l], [-l, 0]]`` blocks."""
    lambdas = np.asarray(lambdas, dtype=float)
    out = np.zeros((2 * len(lambdas), 2 * len(lambdas)))
    idx = np.arange(len(lambdas))
    out[2 * idx, 2 * idx + 1] = lambdas
    out[2 * idx + 1, 2 * idx] = -lambdas
    return out


def block_diagonalize(M) -> BlockDiagonalForm:
    M = as_skew(M, real=True)
    d = M.shape[0]
    if not np.any(M):
        return BlockDiagonalForm(np.eye(d), np.zeros(d // 2))
    T, Z = scipy.linalg.schur(M, output="real")
    pairs: list[tuple[int, int]] = []
    singles: list[int] = []
    k = 0
    while k < d:
        if k + 1 < d and T[k + 1, k] != 0.0:
            pairs.append((k, k + 1))
            k += 2
        else:
            singles.append(k)
            k += 1
    # zero eigenvalues come out as 1x1 blocks; pair them up arbitrarily
    pairs.extend(zip(singles[0::2], singles[1::2]))
    order = [c for p in pairs for c in p]
    R = Z[:, order]
    Tp = T[np.ix_(order, order)]
    lam = np.array([(Tp[2 * j, 2 * j + 1] - Tp[2 * j + 1, 2 * j]) / 2 for j in range(d // 2)])
    if np.linalg.det(R) < 0:
        R[:, [-2, -1]] = R[:, [-1, -2]]
        lam[-1] = -lam[-1]
    form = BlockDiagonalForm(R, lam)
    residual = np.max(np.abs(form.reconstruct() - M))
    if residual > RECONSTRUCTION_TOL * (1.0 + np.max(np.abs(M))):
        raise BlockDiagonalizationError(residual)
    return form


def williamson_eigenvalues(M) -> np.ndarray:
    """Sorted ``|lambda_j|`` of a real antisymmetric matrix."""
    return block_diagonalize(M).williamson


def rotation_from_generator(h) -> np.ndarray:
    """``exp(h)`` for real antisymmetric ``h``, exactly orthogonal by construction."""
    form = block_diagonalize(h)
    d = form.rotation.shape[0]
    G = np.zeros((d, d))
    for j, phi in enumerate(form.lambdas):
        c, s = np.cos(phi), np.sin(phi)
        G[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = [[c, s], [-s, c]]
    R = form.rotation
    return R @ G @ R.T
