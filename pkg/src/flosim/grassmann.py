"""Exact symbolic Grassmann algebra.

A polynomial over ``m`` anticommuting generators is stored as a sparse map
from bitmasks to complex coefficients; bit ``a`` set means ``theta_a`` is a
factor of the monomial, and every monomial is kept in ascending index order.
Generators are indexed ``0 .. m-1``.

This module is a test oracle for the numerical code: it is exact up to
floating point and scales as ``2**m`` in the worst case.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

PRUNE = 1e-14
MAX_GENERATORS = 64
ANTISYMMETRY_TOL = 1e-12
GAUSSIAN_TOL = 1e-10


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _merge_sign(left: int, right: int) -> int:
    """Sign of reordering ``theta_left * theta_right`` into ascending order."""
    swaps = 0
    for b in _bits(right):
        swaps += _popcount(left >> (b + 1))
    return -1 if swaps & 1 else 1


class GrassmannPoly:
    """Immutable polynomial in ``num_generators`` Grassmann generators."""

    __slots__ = ("num_generators", "_coeffs")

    def __init__(self, num_generators: int, coeffs: Mapping[int, complex] | None = None):
        if not 0 < num_generators <= MAX_GENERATORS:
            raise ValueError(f"num_generators must be in 1..{MAX_GENERATORS}, got {num_generators}")
        self.num_generators = num_generators
        top = 1 << num_generators
        clean: dict[int, complex] = {}
        for mask, c in (coeffs or {}).items():
            if not 0 <= mask < top:
                raise ValueError(f"monomial mask {mask:#x} outside {num_generators} generators")
            c = complex(c)
            if abs(c) > PRUNE:
                clean[mask] = c
        self._coeffs = clean

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, m: int, value: complex = 1.0) -> "GrassmannPoly":
        return cls(m, {0: value})

    @classmethod
    def generator(cls, m: int, a: int) -> "GrassmannPoly":
        _check_index(m, a)
        return cls(m, {1 << a: 1.0})

    @classmethod
    def monomial(cls, m: int, indices: Sequence[int], coeff: complex = 1.0) -> "GrassmannPoly":
        """Product ``coeff * theta_{i0} theta_{i1} ...`` in the given order."""
        out = cls.constant(m, coeff)
        for a in indices:
            out = out * cls.generator(m, a)
        return out

    @classmethod
    def linear(cls, m: int, vec: Sequence[complex]) -> "GrassmannPoly":
        if len(vec) != m:
            raise ValueError("linear form needs one coefficient per generator")
        return cls(m, {1 << a: v for a, v in enumerate(vec)})

    # -- inspection ---------------------------------------------------
    @property
    def coeffs(self) -> dict[int, complex]:
        return dict(self._coeffs)

    def coefficient(self, indices: Iterable[int]) -> complex:
        """Coefficient of the ascending monomial over ``indices``."""
        mask = 0
        for a in indices:
            _check_index(self.num_generators, a)
            mask |= 1 << a
        return self._coeffs.get(mask, 0j)

    def terms(self) -> list[tuple[tuple[int, ...], complex]]:
        return [(tuple(_bits(k)), v) for k, v in sorted(self._coeffs.items())]

    def max_abs(self) -> float:
        return max((abs(v) for v in self._coeffs.values()), default=0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def parity(self) -> int | None:
        """0 for even, 1 for odd, None for mixed parity. Zero counts as even."""
        ps = {_popcount(k) & 1 for k in self._coeffs}
        if not ps:
            return 0
        if len(ps) == 1:
            return ps.pop()
        return None

    def __len__(self) -> int:
        return len(self._coeffs)

    def __repr__(self) -> str:
        if not self._coeffs:
            return f"GrassmannPoly({self.num_generators}, 0)"
        parts = []
        for idx, v in self.terms()[:8]:
            mono = "".join(f"t{a}" for a in idx) or "1"
            parts.append(f"({v:.6g}){mono}")
        more = " + ..." if len(self._coeffs) > 8 else ""
        return f"GrassmannPoly({self.num_generators}, {' + '.join(parts)}{more})"

    # -- arithmetic ---------------------------------------------------
    def _check_same(self, other: "GrassmannPoly") -> None:
        if not isinstance(other, GrassmannPoly):
            raise TypeError(f"expected GrassmannPoly, got {type(other).__name__}")
        if other.num_generators != self.num_generators:
            raise ValueError(
                f"generator count mismatch: {self.num_generators} vs {other.num_generators}"
            )

    def __add__(self, other):
        if np.isscalar(other):
            other = GrassmannPoly.constant(self.num_generators, other)
        self._check_same(other)
        out = dict(self._coeffs)
        for k, v in other._coeffs.items():
            out[k] = out.get(k, 0j) + v
        return GrassmannPoly(self.num_generators, out)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannPoly(self.num_generators, {k: -v for k, v in self._coeffs.items()})

    def __sub__(self, other):
        if np.isscalar(other):
            other = GrassmannPoly.constant(self.num_generators, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: complex) -> "GrassmannPoly":
        return GrassmannPoly(self.num_generators, {k: c * v for k, v in self._coeffs.items()})

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scale(other)
        self._check_same(other)
        out: dict[int, complex] = {}
        for ka, va in self._coeffs.items():
            for kb, vb in other._coeffs.items():
                if ka & kb:
                    continue
                k = ka | kb
                out[k] = out.get(k, 0j) + _merge_sign(ka, kb) * va * vb
        return GrassmannPoly(self.num_generators, out)

    def __rmul__(self, other):
        if np.isscalar(other):
            return self.scale(other)
        return NotImplemented

    def embed(self, num_generators: int, offset: int = 0) -> "GrassmannPoly":
        """Same polynomial with generator ``a`` renamed ``a + offset`` in a larger algebra."""
        if offset < 0 or offset + self.num_generators > num_generators:
            raise ValueError("embedding does not fit")
        return GrassmannPoly(num_generators, {k << offset: v for k, v in self._coeffs.items()})

    def allclose(self, other: "GrassmannPoly", atol: float = 1e-10) -> bool:
        return (self - other).max_abs() <= atol


def _check_index(m: int, a: int) -> None:
    if not 0 <= a < m:
        raise IndexError(f"generator index {a} out of range for {m} generators")


def mul(f: GrassmannPoly, g: GrassmannPoly) -> GrassmannPoly:
    return f * g


def derivative(f: GrassmannPoly, a: int) -> GrassmannPoly:
    """Left derivative with respect to generator ``a``."""
    _check_index(f.num_generators, a)
    bit = 1 << a
    below = bit - 1
    out = {}
    for k, v in f._coeffs.items():
        if k & bit:
            sign = -1 if _popcount(k & below) & 1 else 1
            out[k ^ bit] = sign * v
    return GrassmannPoly(f.num_generators, out)


def berezin_full(f: GrassmannPoly) -> complex:
    """Integral over every generator, normalised so the ascending top monomial gives 1."""
    return f._coeffs.get((1 << f.num_generators) - 1, 0j)


def berezin_partial(f: GrassmannPoly, indices: Sequence[int]) -> GrassmannPoly:
    """Integrate over ``indices``, applying the derivative for ``indices[0]`` first.

    Integrating over an ascending run ``[a, a+1, ..., b]`` is the block measure
    used throughout: ``int D(theta) theta_a ... theta_b = 1``.
    """
    if len(set(indices)) != len(indices):
        raise ValueError(f"duplicate integration index in {list(indices)}")
    out = f
    for a in indices:
        out = derivative(out, a)
    return out


def quadratic_form(M: np.ndarray, m: int | None = None, offset: int = 0) -> GrassmannPoly:
    """``sum_ab M_ab theta_a theta_b`` (antisymmetric part only survives)."""
    M = np.asarray(M, dtype=complex)
    d = M.shape[0]
    m = d if m is None else m
    out = {}
    for a in range(d):
        for b in range(a + 1, d):
            c = M[a, b] - M[b, a]
            if c != 0:
                out[(1 << (a + offset)) | (1 << (b + offset))] = c
    return GrassmannPoly(m, out)


def exp_even(q: GrassmannPoly) -> GrassmannPoly:
    """Taylor series of ``exp(q)`` for an even, nilpotent ``q`` (no constant term)."""
    if q.parity() != 0:
        raise ValueError("exp_even needs an even polynomial")
    if q.coefficient(()) != 0:
        raise ValueError("exp_even needs a polynomial without constant term")
    m = q.num_generators
    result = GrassmannPoly.constant(m)
    power = GrassmannPoly.constant(m)
    for k in range(1, m // 2 + 1):
        power = (power * q).scale(1.0 / k)
        if power.is_zero():
            break
        result = result + power
    return result


def gaussian_exp(M, prefactor: complex = 1.0) -> GrassmannPoly:
    """``prefactor * exp((i/2) theta^T M theta)`` for antisymmetric ``M``."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise ValueError(f"need an even-dimensional square matrix, got shape {M.shape}")
    if np.max(np.abs(M + M.T), initial=0.0) > ANTISYMMETRY_TOL:
        raise ValueError("matrix is not antisymmetric")
    q = quadratic_form(M).scale(0.5j)
    return exp_even(q).scale(prefactor)


def change_variables(f: GrassmannPoly, T, cond_limit: float = 1e12) -> GrassmannPoly:
    """Substitute ``theta_a -> sum_b T_ab theta_b`` and re-expand.

    The Berezin measure picks up ``det T``:
    ``berezin_full(change_variables(f, T)) == det(T) * berezin_full(f)``.
    """
    T = np.asarray(T, dtype=complex)
    m = f.num_generators
    if T.shape != (m, m):
        raise ValueError(f"T must be {m}x{m}, got {T.shape}")
    if not np.isfinite(np.linalg.cond(T)) or np.linalg.cond(T) > cond_limit:
        raise np.linalg.LinAlgError("substitution matrix is singular")
    images = [GrassmannPoly.linear(m, T[a]) for a in range(m)]
    out = GrassmannPoly(m)
    for mask, v in f._coeffs.items():
        term = GrassmannPoly.constant(m, v)
        for a in _bits(mask):
            term = term * images[a]
            if term.is_zero():
                break
        out = out + term
    return out


def tensor(f: GrassmannPoly, g: GrassmannPoly) -> GrassmannPoly:
    """Graded tensor product ``f (x) g`` as a polynomial over ``2m`` generators.

    The first factor keeps generators ``0..m-1``, the second is shifted to
    ``m..2m-1``.  Multiplication in the big algebra then reproduces the rule
    ``(x (x) y)(x' (x) y') = (-1)^{p(y) p(x')} xx' (x) yy'``.
    """
    f._check_same(g)
    m = f.num_generators
    return f.embed(2 * m) * g.embed(2 * m, offset=m)


def lambda_ad(f: GrassmannPoly, g: GrassmannPoly) -> GrassmannPoly:
    """``2 sum_a (theta_a f (x) d_a g + d_a f (x) theta_a g)``."""
    f._check_same(g)
    pf, pg = f.parity(), g.parity()
    if pf is None or pg is None or pf != pg:
        raise ValueError("lambda_ad needs inputs of one common parity")
    m = f.num_generators
    out = GrassmannPoly(2 * m)
    for a in range(m):
        t = GrassmannPoly.generator(m, a)
        out = out + tensor(t * f, derivative(g, a)) + tensor(derivative(f, a), t * g)
    return out.scale(2.0)


def gaussian_residual(f: GrassmannPoly) -> float:
    """Largest coefficient of ``lambda_ad(f, f)``; ``inf`` for non-even input."""
    if f.parity() != 0:
        return float("inf")
    return lambda_ad(f, f).max_abs()


def is_gaussian_operator(f: GrassmannPoly, tol: float = GAUSSIAN_TOL) -> bool:
    if f.parity() != 0:
        return False
    scale = f.max_abs()
    if scale == 0.0:
        return True
    return gaussian_residual(f) <= tol * scale**2
