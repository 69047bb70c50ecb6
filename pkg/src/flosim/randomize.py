"""Random states, generators and maps for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .gaussian import GaussianMap, GaussianState
from .skewlin import canonical_skew, rotation_from_generator


def random_skew(d: int, rng: np.random.Generator, complex_: bool = False, scale: float = 1.0) -> np.ndarray:
    X = rng.normal(size=(d, d))
    if complex_:
        X = X + 1j * rng.normal(size=(d, d))
    return scale * (X - X.T) / 2


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Element of ``SO(d)`` (``d`` even) drawn through a random generator."""
    return rotation_from_generator(random_skew(d, rng, scale=np.pi))


def random_corr(n: int, rng: np.random.Generator, pure: bool = False, lambdas=None) -> np.ndarray:
    """Real antisymmetric ``M`` with Williamson eigenvalues in ``[0, 1]`` (or given)."""
    if lambdas is None:
        lambdas = rng.choice([-1.0, 1.0], size=n) if pure else rng.uniform(-1, 1, size=n)
    R = random_rotation(2 * n, rng)
    M = R @ canonical_skew(lambdas) @ R.T
    return (M - M.T) / 2


def random_state(n: int, rng: np.random.Generator, pure: bool = False) -> GaussianState:
    return GaussianState(n, random_corr(n, rng, pure=pure))


def map_from_block(n: int, block, C: complex) -> GaussianMap:
    d = 2 * n
    block = np.asarray(block)
    return GaussianMap(n, block[:d, :d], block[:d, d:], block[d:, d:], C)


def random_cp_map(n: int, rng: np.random.Generator, lambdas=None) -> GaussianMap:
    """Completely positive map: ``C > 0`` and a valid ``2n``-mode correlation block."""
    block = random_corr(2 * n, rng, lambdas=lambdas)
    return map_from_block(n, block, rng.uniform(0.2, 2.0))


def random_map(n: int, rng: np.random.Generator) -> GaussianMap:
    """Generic complex Gaussian map, no positivity."""
    d = 2 * n
    B = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    C = complex(rng.normal(), rng.normal())
    return GaussianMap(n, random_skew(d, rng, True), B, random_skew(d, rng, True), C)
