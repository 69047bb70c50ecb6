"""Gaussian states, Gaussian operators and Gaussian linear maps.

A Gaussian operator ``X`` on ``n`` modes has Grassmann representation
``C exp((i/2) theta^T M theta)``; a Gaussian state is the special case
``C = 2**-n`` with real ``M``.  A Gaussian map is given by its integral
kernel ``C exp[S(theta, eta) + i eta^T mu]`` with action

    S(theta, eta) = (i/2) (theta, eta)^T [[A, B], [-B^T, D]] (theta, eta).

The functions here act on those parameters directly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .skewlin import as_skew, block_diagonalize, canonical_skew, pfaffian

VALID_TOL = 1e-9
PURE_TOL = 1e-8
SINGULAR_DET = 1e-12
SINGULAR_COND = 1e12
TP_TOL = 1e-10
CP_C_TOL = 1e-12
CP_REAL_TOL = 1e-10
CP_SV_TOL = 1e-9


class SingularUpdate(np.linalg.LinAlgError):
    """The image is a traceless Gaussian operator with no regular representation."""


class SingularComposition(np.linalg.LinAlgError):
    pass


def _n_from_dim(d: int) -> int:
    if d % 2:
        raise ValueError(f"odd matrix dimension {d}")
    return d // 2


@dataclass(frozen=True)
class GaussianState:
    n_modes: int
    corr: np.ndarray = field(repr=False)

    def __post_init__(self):
        M = as_skew(self.corr, real=True)
        if M.shape != (2 * self.n_modes, 2 * self.n_modes):
            raise ValueError(f"corr must be {2 * self.n_modes}x{2 * self.n_modes}, got {M.shape}")
        if not is_valid_state(M):
            raise ValueError(
                f"not a state: largest singular value {np.linalg.norm(M, 2):.12g} exceeds 1"
            )
        M.setflags(write=False)
        object.__setattr__(self, "corr", M)

    @classmethod
    def from_corr(cls, M) -> "GaussianState":
        M = np.asarray(M)
        return cls(_n_from_dim(M.shape[0]), M)

    def as_operator(self) -> "GaussianOperator":
        return GaussianOperator(self.n_modes, 2.0**-self.n_modes, self.corr)

    def williamson(self) -> np.ndarray:
        return block_diagonalize(self.corr).williamson


@dataclass(frozen=True)
class GaussianOperator:
    n_modes: int
    prefactor: complex
    corr: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.prefactor == 0:
            raise ValueError("regular Gaussian operators need a non-zero prefactor")
        M = as_skew(self.corr)
        if M.shape != (2 * self.n_modes, 2 * self.n_modes):
            raise ValueError(f"corr must be {2 * self.n_modes}x{2 * self.n_modes}, got {M.shape}")
        M.setflags(write=False)
        object.__setattr__(self, "corr", M)
        object.__setattr__(self, "prefactor", complex(self.prefactor))

    @property
    def trace(self) -> complex:
        return 2.0**self.n_modes * self.prefactor

    def as_state(self, tol: float = 1e-9) -> GaussianState:
        """Normalise to a density operator; the correlation matrix must be real."""
        if np.max(np.abs(np.imag(self.corr)), initial=0.0) > tol:
            raise ValueError("correlation matrix is not real")
        return GaussianState(self.n_modes, np.real(self.corr))


@dataclass(frozen=True)
class GaussianMap:
    n_modes: int
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    D: np.ndarray = field(repr=False)
    C: complex = 1.0

    def __post_init__(self):
        d = 2 * self.n_modes
        A, B, D = (np.array(x, dtype=complex) for x in (self.A, self.B, self.D))
        for name, x in (("A", A), ("B", B), ("D", D)):
            if x.shape != (d, d):
                raise ValueError(f"{name} must be {d}x{d}, got {x.shape}")
        # only the antisymmetric parts of A and D enter the action
        A = (A - A.T) / 2
        D = (D - D.T) / 2
        for x in (A, B, D):
            x.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "C", complex(self.C))

    def block_matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B], [-self.B.T, self.D]])


@dataclass(frozen=True)
class DualOperator(GaussianOperator):
    """Gaussian operator on ``2n`` modes dual to an ``n``-mode map.

    ``n_modes`` counts the doubled system; ``map_modes`` the original one.
    """

    @property
    def map_modes(self) -> int:
        return self.n_modes // 2

    def blocks(self):
        d = self.n_modes
        M = self.corr
        return M[:d, :d], M[:d, d:], M[d:, d:]


# -- constructors ------------------------------------------------------


def vacuum_state(n: int) -> GaussianState:
    if n < 1:
        raise ValueError("need at least one mode")
    return GaussianState(n, canonical_skew(np.ones(n)))


def maximally_mixed_state(n: int) -> GaussianState:
    return GaussianState(n, np.zeros((2 * n, 2 * n)))


def identity_map(n: int) -> GaussianMap:
    z = np.zeros((2 * n, 2 * n))
    return GaussianMap(n, z, np.eye(2 * n), z, 1.0)


def rotation_map(R) -> GaussianMap:
    """Map of the canonical transformation with ``V c_a V^dag = sum_b R_ab c_b``."""
    R = np.asarray(R, dtype=float)
    n = _n_from_dim(R.shape[0])
    z = np.zeros_like(R)
    return GaussianMap(n, z, R.T, z, 1.0)


# -- states ------------------------------------------------------------


def is_valid_state(M, tol: float = VALID_TOL) -> bool:
    M = np.asarray(M)
    if np.iscomplexobj(M) and np.max(np.abs(M.imag), initial=0.0) > tol:
        return False
    if M.size == 0:
        return True
    return bool(np.linalg.norm(np.real(M), 2) <= 1.0 + tol)


def is_pure(state: GaussianState, tol: float = PURE_TOL) -> bool:
    M = state.corr
    return bool(np.max(np.abs(M.T @ M - np.eye(M.shape[0]))) <= tol)


def wick_correlator(state: GaussianState, indices) -> float:
    """``tr(rho i^p c_a1 ... c_a2p)`` for strictly increasing ``indices``."""
    idx = list(indices)
    if len(idx) % 2:
        raise ValueError("need an even number of Majorana indices")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError("indices must be strictly increasing")
    if idx and (idx[0] < 0 or idx[-1] >= 2 * state.n_modes):
        raise IndexError(f"Majorana index out of range for {state.n_modes} modes")
    if not idx:
        return 1.0
    return float(pfaffian(state.corr[np.ix_(idx, idx)]))


# -- applying maps -----------------------------------------------------


def _pivot(Q: np.ndarray, err_cls, what: str):
    with warnings.catch_warnings():
        # singular input is reported below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu = scipy.linalg.lu_factor(Q, check_finite=False)
    det = np.prod(np.diag(lu[0])) * (-1) ** int(np.sum(lu[1] != np.arange(len(lu[1]))))
    cond = np.linalg.cond(Q)
    if abs(det) <= SINGULAR_DET or not np.isfinite(cond) or cond > SINGULAR_COND:
        raise err_cls(f"{what} is singular (|det| = {abs(det):.3e}, cond = {cond:.3e})")
    return lu


def trace_factor(M, D) -> complex:
    """``(-1)^n Pf(M) Pf(M^-1 + D)``, evaluated as ``(-1)^n Pf([[M, I], [-I, D]])``.

    The block form is a polynomial in the entries and needs no inverse,
    so it is exact for singular ``M`` too.  Its square is ``det(I + M D)``.
    """
    M = np.asarray(M, dtype=complex)
    d = M.shape[0]
    eye = np.eye(d)
    Z = np.block([[M, eye], [-eye, np.asarray(D, dtype=complex)]])
    return (-1) ** (d // 2) * pfaffian(Z)


def apply_map(emap: GaussianMap, X: GaussianOperator | GaussianState) -> GaussianOperator:
    """Image of a regular Gaussian operator under a Gaussian map."""
    if isinstance(X, GaussianState):
        X = X.as_operator()
    if X.n_modes != emap.n_modes:
        raise ValueError(f"map on {emap.n_modes} modes applied to {X.n_modes}-mode operator")
    M = np.asarray(X.corr, dtype=complex)
    d = M.shape[0]
    lu = _pivot(np.eye(d) + M @ emap.D, SingularUpdate, "I + M D")
    corr = emap.B @ scipy.linalg.lu_solve(lu, M) @ emap.B.T + emap.A
    prefactor = X.prefactor * emap.C * trace_factor(M, emap.D)
    if prefactor == 0:
        raise SingularUpdate("image has zero trace")
    return GaussianOperator(X.n_modes, prefactor, (corr - corr.T) / 2)


def apply_map_to_state(emap: GaussianMap, state: GaussianState) -> tuple[GaussianState, float]:
    """Normalised image state and its weight ``tr E(rho)``."""
    out = apply_map(emap, state)
    weight = out.trace
    if abs(weight.imag) > 1e-9 * max(1.0, abs(weight)):
        raise ValueError(f"image of a state has complex trace {weight}")
    return out.as_state(), float(weight.real)


def trace_of_image_squared(emap: GaussianMap, X: GaussianOperator | GaussianState) -> complex:
    """``C^2 det(I + M D) tr(X)^2``; defined even when the image is traceless."""
    if isinstance(X, GaussianState):
        X = X.as_operator()
    M = np.asarray(X.corr, dtype=complex)
    det = np.linalg.det(np.eye(M.shape[0]) + M @ emap.D)
    return complex(emap.C**2 * det * X.trace**2)


# -- certification -----------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """Measured quantities behind the TP / bistochastic / CP verdicts."""

    d_norm: float
    a_norm: float
    c_deviation: float
    c_imag: float
    c_real: float
    block_imag: float
    block_sv_max: float

    @property
    def tp(self) -> bool:
        return self.d_norm <= TP_TOL and self.c_deviation <= TP_TOL

    @property
    def bistochastic(self) -> bool:
        return self.tp and self.a_norm <= TP_TOL

    @property
    def cp(self) -> bool:
        return (
            self.c_imag <= CP_REAL_TOL
            and self.c_real >= -CP_C_TOL
            and self.block_imag <= CP_REAL_TOL
            and self.block_sv_max <= 1.0 + CP_SV_TOL
        )

    def margins(self) -> dict[str, float]:
        """Distance to each tolerance; negative means the check is violated."""
        return {
            "tp_d_norm": TP_TOL - self.d_norm,
            "tp_c_deviation": TP_TOL - self.c_deviation,
            "bistochastic_a_norm": TP_TOL - self.a_norm,
            "cp_c_imag": CP_REAL_TOL - self.c_imag,
            "cp_c_nonnegative": self.c_real + CP_C_TOL,
            "cp_block_imag": CP_REAL_TOL - self.block_imag,
            "cp_singular_value": 1.0 + CP_SV_TOL - self.block_sv_max,
        }


def certify(emap: GaussianMap) -> Certificate:
    blk = emap.block_matrix()
    return Certificate(
        d_norm=float(np.max(np.abs(emap.D))),
        a_norm=float(np.max(np.abs(emap.A))),
        c_deviation=float(abs(emap.C - 1)),
        c_imag=float(abs(emap.C.imag)),
        c_real=float(emap.C.real),
        block_imag=float(np.max(np.abs(blk.imag))),
        block_sv_max=float(np.linalg.norm(blk, 2)),
    )


def is_trace_preserving(emap: GaussianMap) -> bool:
    return certify(emap).tp


def is_bistochastic(emap: GaussianMap) -> bool:
    return certify(emap).bistochastic


def is_completely_positive(emap: GaussianMap) -> bool:
    return certify(emap).cp


def dual_state(emap: GaussianMap) -> DualOperator:
    n = emap.n_modes
    return DualOperator(2 * n, emap.C / 4.0**n, emap.block_matrix())


# -- composition -------------------------------------------------------


def compose(map2: GaussianMap, map1: GaussianMap) -> GaussianMap:
    """Gaussian map of ``map2 o map1`` (``map1`` acts first)."""
    if map1.n_modes != map2.n_modes:
        raise ValueError("maps act on different numbers of modes")
    d = 2 * map1.n_modes
    lu = _pivot(np.eye(d) + map1.A @ map2.D, SingularComposition, "I + A1 D2")
    QA = scipy.linalg.lu_solve(lu, map1.A)
    QB = scipy.linalg.lu_solve(lu, map1.B)
    A = map2.A + map2.B @ QA @ map2.B.T
    B = map2.B @ QB
    D = map1.D + map1.B.T @ map2.D @ QB
    C = map1.C * map2.C * trace_factor(map1.A, map2.D)
    return GaussianMap(map1.n_modes, A, B, D, C)


@dataclass(frozen=True)
class ProductDecomposition:
    left: np.ndarray
    diag: np.ndarray
    right: np.ndarray

    def matrix(self) -> np.ndarray:
        return self.left @ np.diag(self.diag) @ self.right


def decompose_bistochastic(emap: GaussianMap) -> ProductDecomposition:
    """``B = R_l diag(b) R_r`` with ``R_l, R_r in SO(2n)`` and ``|b_a| <= 1``."""
    cert = certify(emap)
    if not (cert.bistochastic and cert.cp):
        raise ValueError("product decomposition needs a bistochastic completely positive map")
    B = np.real(emap.B)
    U, s, Vt = np.linalg.svd(B)
    if np.linalg.det(U) < 0:
        U[:, -1] *= -1
        s[-1] = -s[-1]
    if np.linalg.det(Vt) < 0:
        Vt[-1, :] *= -1
        s[-1] = -s[-1]
    return ProductDecomposition(U, s, Vt)
