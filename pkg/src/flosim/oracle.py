"""Brute-force Jordan-Wigner reference for small mode counts.

Operators are plain ``2**n x 2**n`` complex arrays.  Mode ``j`` is the
``j``-th tensor factor (most significant bit of the basis index), and the
annihilator is ``[[0, 1], [0, 0]]`` on that factor, so the Fock vacuum is
basis vector 0 and basis index bits are occupation numbers.  With
``c_{2j} = a_j^dag + a_j`` and ``c_{2j+1} = -i (a_j^dag - a_j)`` this gives
``c_{2j} = Z..Z X I..I`` and ``c_{2j+1} = Z..Z (-Y) I..I``.

Nothing here is used by the production path.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.linalg

from . import grassmann as gr
from .gaussian import GaussianMap, is_valid_state

MAX_MODES = 6
MAX_OMEGA_MODES = 5
TRACE_TOL = 1e-9

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_MY = np.array([[0, 1j], [-1j, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_I = np.eye(2, dtype=complex)


class OracleMismatch(AssertionError):
    pass


def _guard(n: int, limit: int = MAX_MODES) -> None:
    if not 1 <= n <= limit:
        raise ValueError(f"oracle supports 1..{limit} modes, got {n}")


def _chain(factors) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


@lru_cache(maxsize=None)
def _majoranas(n: int) -> tuple[np.ndarray, ...]:
    ops = []
    for j in range(n):
        for local in (_X, _MY):
            m = _chain([_Z] * j + [local] + [_I] * (n - j - 1))
            m.setflags(write=False)
            ops.append(m)
    return tuple(ops)


def majoranas(n: int) -> list[np.ndarray]:
    _guard(n)
    return [m.copy() for m in _majoranas(n)]


def annihilator(n: int, j: int) -> np.ndarray:
    c = _majoranas(n)
    return (c[2 * j] - 1j * c[2 * j + 1]) / 2


def parity_operator(n: int) -> np.ndarray:
    """``i^n c_1 c_2 ... c_2n``, which is ``Z (x) ... (x) Z`` here."""
    out = np.eye(2**n, dtype=complex)
    for c in _majoranas(n):
        out = out @ c
    return (1j**n) * out


@lru_cache(maxsize=None)
def _monomial_table(n: int):
    """Every Majorana monomial ``c_S`` as a signed permutation.

    ``c_S[i, i ^ flips[S]] = values[S, i]`` and all other entries vanish.
    """
    dim = 2**n
    rows = np.arange(dim)
    gens = []
    for c in _majoranas(n):
        x = int(np.flatnonzero(c[0])[0])
        gens.append((x, c[rows, rows ^ x]))
    count = 4**n
    flips = np.zeros(count, dtype=np.int64)
    values = np.zeros((count, dim), dtype=complex)
    values[0] = 1.0
    for mask in range(1, count):
        top = mask.bit_length() - 1
        prev = mask ^ (1 << top)
        xg, vg = gens[top]
        xp = flips[prev]
        flips[mask] = xp ^ xg
        values[mask] = values[prev] * vg[rows ^ xp]
    return flips, values


def monomial(n: int, indices) -> np.ndarray:
    """Dense ``c_{a1} c_{a2} ...`` for ascending indices."""
    mask = 0
    for a in indices:
        mask |= 1 << a
    flips, values = _monomial_table(n)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    rows = np.arange(dim)
    out[rows, rows ^ flips[mask]] = values[mask]
    return out


def _modes_of(X: np.ndarray) -> int:
    dim = X.shape[0]
    n = dim.bit_length() - 1
    if X.shape != (dim, dim) or 2**n != dim:
        raise ValueError(f"not a 2^n x 2^n operator: shape {X.shape}")
    return n


def omega(X: np.ndarray) -> gr.GrassmannPoly:
    """Grassmann representation: coefficient of ``theta_S`` is ``2^-n tr(c_S^dag X)``."""
    X = np.asarray(X, dtype=complex)
    n = _modes_of(X)
    _guard(n, MAX_OMEGA_MODES)
    flips, values = _monomial_table(n)
    rows = np.arange(2**n)
    picked = X[rows[None, :], rows[None, :] ^ flips[:, None]]
    coeffs = np.sum(np.conj(values) * picked, axis=1) / 2**n
    return gr.GrassmannPoly(2 * n, {k: v for k, v in enumerate(coeffs) if v != 0})


def dense_from_grassmann(f: gr.GrassmannPoly) -> np.ndarray:
    if f.num_generators % 2:
        raise ValueError("need an even number of generators")
    n = f.num_generators // 2
    _guard(n)
    flips, values = _monomial_table(n)
    dim = 2**n
    rows = np.arange(dim)
    out = np.zeros((dim, dim), dtype=complex)
    for mask, c in f.coeffs.items():
        out[rows, rows ^ flips[mask]] += c * values[mask]
    return out


def trace_pair(X: np.ndarray, Y: np.ndarray, tol: float = TRACE_TOL) -> complex:
    """``tr(XY)``, cross-checked against the Berezin-integral trace formula."""
    n = _modes_of(X)
    _guard(n, 4)
    if Y.shape != X.shape:
        raise ValueError("operators act on different spaces")
    m = 2 * n
    kernel = gr.exp_even(
        gr.GrassmannPoly(2 * m, {(1 << a) | (1 << (m + a)): 1.0 for a in range(m)})
    )
    integrand = kernel * omega(X).embed(2 * m) * omega(Y).embed(2 * m, offset=m)
    via_grassmann = (-2) ** n * gr.berezin_full(integrand)
    direct = np.trace(X @ Y)
    if abs(via_grassmann - direct) > tol * max(1.0, abs(direct)):
        raise OracleMismatch(f"trace formula {via_grassmann} != matrix trace {direct}")
    return complex(direct)


def dense_gaussian(M, prefactor: complex) -> np.ndarray:
    return dense_from_grassmann(gr.gaussian_exp(M, prefactor))


def dense_state(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if not is_valid_state(M):
        raise ValueError("not a valid correlation matrix")
    n = M.shape[0] // 2
    _guard(n, MAX_OMEGA_MODES)
    return dense_gaussian(M, 2.0**-n)


def correlation_matrix(rho: np.ndarray) -> np.ndarray:
    """``M_ab = tr(rho i c_a c_b)`` for ``a != b``."""
    n = _modes_of(rho)
    c = _majoranas(n)
    d = 2 * n
    M = np.zeros((d, d))
    for a in range(d):
        for b in range(a + 1, d):
            M[a, b] = np.real(np.trace(rho @ (1j * c[a] @ c[b])))
            M[b, a] = -M[a, b]
    return M


def quadratic_operator(h) -> np.ndarray:
    """``(i/4) sum_ab h_ab c_a c_b``."""
    h = np.asarray(h)
    n = h.shape[0] // 2
    c = _majoranas(n)
    out = np.zeros((2**n, 2**n), dtype=complex)
    for a in range(2 * n):
        for b in range(2 * n):
            if h[a, b] != 0:
                out += h[a, b] * (c[a] @ c[b])
    return 0.25j * out


def canonical_unitary(generator, time: float = 1.0) -> np.ndarray:
    """``exp(i t H)`` with ``H = (i/4) sum h_ab c_a c_b``."""
    return scipy.linalg.expm(1j * time * quadratic_operator(generator))


def rotation_of(V: np.ndarray) -> np.ndarray:
    """``R`` with ``V c_a V^dag = sum_b R_ab c_b``."""
    n = _modes_of(V)
    c = _majoranas(n)
    d = 2 * n
    R = np.zeros((d, d))
    for a in range(d):
        img = V @ c[a] @ V.conj().T
        for b in range(d):
            R[a, b] = np.real(np.trace(c[b] @ img)) / 2**n
    return R


def mode_hamiltonian(n: int, eps, t=None, s=None) -> np.ndarray:
    """Quadratic Hamiltonian assembled from creation/annihilation matrices."""
    a = [annihilator(n, j) for j in range(n)]
    ad = [x.conj().T for x in a]
    H = np.zeros((2**n, 2**n), dtype=complex)
    for j, e in enumerate(eps):
        H += e * ad[j] @ a[j]
    for (j, k), v in (t or {}).items():
        H += v * ad[j] @ a[k] + np.conj(v) * ad[k] @ a[j]
    for (j, k), v in (s or {}).items():
        H += v * ad[j] @ ad[k] + np.conj(v) * a[k] @ a[j]
    return H


def projector(n: int, mode: int, outcome: int) -> np.ndarray:
    """``a a^dag`` (outcome 0, empty) or ``a^dag a`` (outcome 1, occupied)."""
    a = annihilator(n, mode)
    return a @ a.conj().T if outcome == 0 else a.conj().T @ a


def conjugate(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return op @ rho @ op.conj().T


def graded_tensor(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """``X (x) Y`` in ``C_2n (x) C_2n`` realised inside ``C_4n`` on ``2n`` modes.

    ``c_a (x) 1 -> c_a`` and ``1 (x) c_b -> c_{2n+b}``; for homogeneous ``Y``
    this is ``X P^{p(Y)} (x) Y`` with ``P`` the parity operator.
    """
    n = _modes_of(X)
    py = omega(Y).parity()
    if py is None:
        raise ValueError("second factor must have definite parity")
    left = X @ parity_operator(n) if py else X
    return np.kron(left, Y)


def lambda_operator(n: int) -> np.ndarray:
    """``sum_a c_a (x) c_a`` in the graded tensor realisation."""
    c2 = _majoranas(2 * n)
    return sum(c2[a] @ c2[2 * n + a] for a in range(2 * n))


def lambda_commutator(X: np.ndarray) -> np.ndarray:
    n = _modes_of(X)
    XX = graded_tensor(X, X)
    L = lambda_operator(n)
    return L @ XX - XX @ L


# -- Gaussian maps through their integral kernel ------------------------


def apply_map_symbolic(emap: GaussianMap, f: gr.GrassmannPoly) -> gr.GrassmannPoly:
    """``C int exp[S(theta, eta) + i eta^T mu] X(mu) D eta D mu``, term by term.

    Generators: ``theta`` 0..2n-1, ``eta`` 2n..4n-1 and, for the first
    integral, ``mu`` 2n..4n-1 after ``eta`` moves to 0..2n-1.
    """
    n = emap.n_modes
    m = 2 * n
    if f.num_generators != m:
        raise ValueError("polynomial does not match the map's mode count")
    # f(eta) = int exp(i eta^T mu) X(mu) D mu, eta -> 0..m-1, mu -> m..2m-1
    link = gr.exp_even(
        gr.GrassmannPoly(2 * m, {(1 << a) | (1 << (m + a)): 1j for a in range(m)})
    )
    inner = gr.berezin_partial(link * f.embed(2 * m, offset=m), range(m, 2 * m))
    # move eta from 0..m-1 up to m..2m-1, making room for theta
    f_eta = gr.GrassmannPoly(2 * m, {k << m: v for k, v in inner.coeffs.items()})
    action = gr.gaussian_exp(emap.block_matrix())
    out = gr.berezin_partial(action * f_eta, range(m, 2 * m))
    return gr.GrassmannPoly(m, out.coeffs).scale(emap.C)


def dense_apply_map(emap: GaussianMap, X: np.ndarray) -> np.ndarray:
    return dense_from_grassmann(apply_map_symbolic(emap, omega(X)))


def dense_dual_state(emap: GaussianMap) -> np.ndarray:
    """``rho_E`` on ``2n`` modes from its Grassmann form ``C/4^n exp(S)``."""
    return dense_gaussian(emap.block_matrix(), emap.C / 4.0**emap.n_modes)


def maximally_entangled(n: int) -> np.ndarray:
    """``rho_I = 4^-n prod_a (I + i c_a c_{2n+a})`` on ``2n`` modes."""
    c = _majoranas(2 * n)
    dim = 4**n
    out = np.eye(dim, dtype=complex)
    for a in range(2 * n):
        out = out @ (np.eye(dim) + 1j * c[a] @ c[2 * n + a])
    return out / 4.0**n


def is_psd(rho: np.ndarray, tol: float = 1e-9) -> bool:
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        return False
    return bool(np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)) >= -tol)


# -- circuits -----------------------------------------------------------


def dense_distribution(circuit, initial_corr):
    """Dense counterpart of ``flo.exact_distribution``.

    Returns ``(table, weight, finals)`` where ``finals`` holds normalised
    density matrices.  Branches of probability at most ``1e-12`` are dropped.
    """
    from .flo import Measure

    n = circuit.n_modes
    branches = [("", 1.0, dense_state(initial_corr))]
    for op in circuit.ops:
        if not isinstance(op, Measure):
            V = canonical_unitary(op.generator, op.time)
            branches = [(k, w, conjugate(V, rho)) for k, w, rho in branches]
            continue
        nxt = []
        for key, w, rho in branches:
            for outcome in (0, 1) if op.force is None else (op.force,):
                post = conjugate(projector(n, op.mode, outcome), rho)
                p = float(np.real(np.trace(post)))
                if p > 1e-12:
                    nxt.append((key + str(outcome), w * p, post / p))
        branches = nxt
    weight = sum(w for _, w, _ in branches)
    table = {k: w / weight for k, w, _ in branches if w / weight > 1e-15}
    finals = {k: rho for k, _, rho in branches if k in table}
    return table, weight, finals
