import numpy as np
import pytest
import scipy.linalg

from flosim.randomize import random_skew
from flosim.skewlin import (
    BlockDiagonalizationError,
    NotAntisymmetricError,
    as_skew,
    block_diagonalize,
    canonical_skew,
    pfaffian,
    pfaffian_combinatorial,
    rotation_from_generator,
    williamson_eigenvalues,
)


def test_pfaffian_2x2():
    assert pfaffian([[0, 2.5], [-2.5, 0]]) == 2.5
    assert pfaffian_combinatorial([[0, 1], [-1, 0]]) == 1


def test_pfaffian_4x4_formula(rng):
    S = random_skew(4, rng)
    expect = S[0, 1] * S[2, 3] - S[0, 2] * S[1, 3] + S[0, 3] * S[1, 2]
    assert np.isclose(pfaffian(S), expect, rtol=1e-13)
    assert np.isclose(pfaffian_combinatorial(S), expect, rtol=1e-13)


def test_pfaffian_integer_example():
    S = np.zeros((4, 4))
    S[np.triu_indices(4, 1)] = [1, 2, 3, 4, 5, 6]
    S = S - S.T
    assert np.isclose(pfaffian(S), 8)
    assert pfaffian_combinatorial(S) == 8


def test_single_matching():
    S = canonical_skew([1, 1])
    assert pfaffian_combinatorial(S) == 1
    assert pfaffian(S) == 1


def test_pfaffian_squared_is_det_complex_8(rng):
    S = random_skew(8, rng, complex_=True)
    pf = pfaffian(S)
    det = scipy.linalg.lu_factor(S)
    d = np.prod(np.diag(det[0])) * (-1) ** np.sum(det[1] != np.arange(8))
    assert abs(pf**2 - d) <= 1e-8 * abs(d)


def test_real_6x6_cross_check(rng):
    S = random_skew(6, rng)
    assert np.isclose(pfaffian(S), pfaffian_combinatorial(S), rtol=1e-10)


def test_pfaffian_of_odd_dimension_is_zero():
    assert pfaffian(np.zeros((3, 3))) == 0


def test_pfaffian_needs_pivoting():
    # S_12 = 0 forces a swap on the first step
    S = np.zeros((4, 4))
    S[0, 2], S[1, 3] = 1.0, 1.0
    S = S - S.T
    assert pfaffian(S) == pfaffian_combinatorial(S) == -1


def test_pfaffian_transforms_with_det(rng):
    S = random_skew(6, rng)
    B = rng.normal(size=(6, 6))
    assert np.isclose(pfaffian(B @ S @ B.T), np.linalg.det(B) * pfaffian(S), rtol=1e-10)


def test_combinatorial_size_limit():
    with pytest.raises(ValueError):
        pfaffian_combinatorial(np.zeros((14, 14)))


def test_as_skew_rejects_symmetric():
    with pytest.raises(NotAntisymmetricError):
        as_skew([[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        as_skew(np.zeros((3, 3)))


def test_block_diagonal_input_is_fixed():
    form = block_diagonalize(canonical_skew([1, 1]))
    assert np.allclose(form.reconstruct(), canonical_skew([1, 1]))
    assert np.allclose(form.williamson, [1, 1])


def test_block_diagonalize_zero():
    form = block_diagonalize(np.zeros((4, 4)))
    assert np.array_equal(form.rotation, np.eye(4))
    assert np.array_equal(form.lambdas, [0, 0])


def test_block_diagonalize_random(rng):
    for _ in range(20):
        M = random_skew(6, rng)
        form = block_diagonalize(M)
        R = form.rotation
        assert np.max(np.abs(form.reconstruct() - M)) <= 1e-9
        assert np.allclose(R @ R.T, np.eye(6), atol=1e-12)
        assert np.linalg.det(R) > 0
        ev = np.sort(np.linalg.eigvalsh(-M @ M))[::2]
        assert np.allclose(np.sort(form.lambdas**2), ev, atol=1e-9)


def test_block_diagonalize_degenerate(rng):
    from flosim.randomize import random_rotation

    R = random_rotation(6, rng)
    M = R @ canonical_skew([0.0, 0.5, 0.0]) @ R.T
    form = block_diagonalize(M)
    assert np.allclose(form.williamson, [0, 0, 0.5], atol=1e-12)
    assert np.linalg.det(form.rotation) > 0


def test_williamson_has_no_sign(rng):
    w = williamson_eigenvalues(canonical_skew([-0.3, 0.9]))
    assert np.allclose(w, [0.3, 0.9])


def test_rotation_from_zero_generator():
    assert np.allclose(rotation_from_generator(np.zeros((4, 4))), np.eye(4))


def test_planar_rotation():
    phi = 0.81
    R = rotation_from_generator([[0, phi], [-phi, 0]])
    assert np.allclose(R, [[np.cos(phi), np.sin(phi)], [-np.sin(phi), np.cos(phi)]])


def test_rotation_matches_series(rng):
    h = random_skew(6, rng, scale=2.0)
    # truncated Taylor series with scaling and squaring
    k = 8
    X = h / 2**k
    E, term = np.eye(6), np.eye(6)
    for j in range(1, 20):
        term = term @ X / j
        E = E + term
    for _ in range(k):
        E = E @ E
    R = rotation_from_generator(h)
    assert np.max(np.abs(R - E)) <= 1e-9
    assert np.isclose(np.linalg.det(R), 1.0)


def test_block_diagonalization_error_carries_residual():
    err = BlockDiagonalizationError(0.25)
    assert err.residual == 0.25 and "2.5" in str(err)
