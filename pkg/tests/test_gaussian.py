import numpy as np
import pytest

from flosim import grassmann as gr
from flosim import oracle
from flosim.flo import measurement_map
from flosim.gaussian import (
    GaussianMap,
    GaussianOperator,
    GaussianState,
    SingularComposition,
    SingularUpdate,
    apply_map,
    apply_map_to_state,
    certify,
    compose,
    decompose_bistochastic,
    dual_state,
    identity_map,
    is_bistochastic,
    is_completely_positive,
    is_pure,
    is_trace_preserving,
    is_valid_state,
    maximally_mixed_state,
    rotation_map,
    trace_factor,
    trace_of_image_squared,
    vacuum_state,
    wick_correlator,
)
from flosim.randomize import random_cp_map, random_map, random_rotation, random_skew, random_state
from flosim.skewlin import canonical_skew, pfaffian

K = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _op_close(X, Y, tol=1e-10):
    return X.n_modes == Y.n_modes and abs(X.prefactor - Y.prefactor) <= tol * abs(Y.prefactor) and np.allclose(
        X.corr, Y.corr, atol=tol
    )


# -- states --------------------------------------------------------------


def test_vacuum_blocks():
    assert np.array_equal(vacuum_state(1).corr, K)
    assert np.array_equal(vacuum_state(2).corr, canonical_skew([1, 1]))
    assert is_pure(vacuum_state(3))


def test_valid_and_pure():
    assert is_valid_state(np.zeros((4, 4)))
    assert not is_pure(maximally_mixed_state(2))
    assert not is_valid_state(canonical_skew([1.5, 0.2]))
    with pytest.raises(ValueError):
        GaussianState(2, canonical_skew([1.5, 0.2]))


def test_state_rejects_wrong_shape():
    with pytest.raises(ValueError):
        GaussianState(2, K)


def test_random_pure_state_is_pure(rng):
    assert is_pure(random_state(3, rng, pure=True))
    assert not is_pure(random_state(3, rng))


def test_wick_examples(rng):
    assert wick_correlator(vacuum_state(2), [0, 1]) == 1.0
    s = random_state(2, rng)
    M = s.corr
    expect = M[0, 1] * M[2, 3] - M[0, 2] * M[1, 3] + M[0, 3] * M[1, 2]
    assert np.isclose(wick_correlator(s, [0, 1, 2, 3]), expect)
    assert wick_correlator(vacuum_state(2), [0, 2]) == 0.0


def test_wick_matches_dense_expectation(rng):
    s = random_state(3, rng)
    rho = oracle.dense_state(s.corr)
    c = oracle.majoranas(3)
    idx = [0, 2, 3, 5]
    op = (1j) ** 2 * c[0] @ c[2] @ c[3] @ c[5]
    assert np.isclose(wick_correlator(s, idx), np.trace(rho @ op).real, atol=1e-12)


def test_wick_rejects_unsorted():
    with pytest.raises(ValueError):
        wick_correlator(vacuum_state(2), [1, 0])


# -- apply_map -----------------------------------------------------------


def test_identity_map_leaves_operator(rng):
    X = GaussianOperator(2, 0.3 - 0.2j, random_skew(4, rng, complex_=True))
    assert _op_close(apply_map(identity_map(2), X), X)


def test_rotation_map_rotates_state(rng):
    s = random_state(2, rng)
    R = random_rotation(4, rng)
    out = apply_map(rotation_map(R), s)
    assert np.allclose(out.corr, R.T @ s.corr @ R)
    assert np.isclose(out.prefactor, 0.25)


def test_measurement_map_on_vacuum():
    out, w = apply_map_to_state(measurement_map(2, 0, 0), vacuum_state(2))
    assert np.isclose(w, 1.0)
    assert np.allclose(out.corr, vacuum_state(2).corr)


def test_apply_map_matches_integral_kernel(rng):
    for n in (1, 2):
        for _ in range(3):
            emap = random_map(n, rng)
            X = GaussianOperator(n, complex(rng.normal(), rng.normal()), random_skew(2 * n, rng, complex_=True))
            out = apply_map(emap, X)
            ref = oracle.apply_map_symbolic(emap, gr.gaussian_exp(X.corr, X.prefactor))
            assert ref.allclose(gr.gaussian_exp(out.corr, out.prefactor), atol=1e-10 * ref.max_abs())


def test_apply_map_matches_dense_conjugation(rng):
    R = random_rotation(4, rng)
    s = random_state(2, rng)
    from scipy.linalg import logm

    # a dense canonical unitary near R; its exact adjoint action is read back
    h = np.real(logm(R))
    V = oracle.canonical_unitary((h - h.T) / 2)
    rho = oracle.dense_state(s.corr)
    out = apply_map(rotation_map(oracle.rotation_of(V)), s)
    assert np.allclose(oracle.correlation_matrix(V @ rho @ V.conj().T), np.real(out.corr), atol=1e-10)


def test_singular_update_is_reported():
    # E_{1,1} applied to the vacuum: the image is zero
    with pytest.raises(SingularUpdate):
        apply_map(measurement_map(1, 0, 1), vacuum_state(1))


def test_trace_factor_squares_to_det(rng):
    M = random_skew(4, rng, complex_=True)
    D = random_skew(4, rng, complex_=True)
    assert np.isclose(trace_factor(M, D) ** 2, np.linalg.det(np.eye(4) + M @ D))


def test_trace_factor_invertible_form(rng):
    M = random_skew(4, rng)
    D = random_skew(4, rng)
    expect = pfaffian(M) * pfaffian(np.linalg.inv(M) + D)
    assert np.isclose(trace_factor(M, D), expect)


def test_trace_of_image_squared_examples(rng):
    s = random_state(2, rng)
    assert np.isclose(trace_of_image_squared(identity_map(2), s), 1.0)
    emap = random_cp_map(2, rng)
    tp = GaussianMap(2, emap.A, emap.B, np.zeros((4, 4)), 1.0)
    assert np.isclose(trace_of_image_squared(tp, s), 1.0)
    assert np.isclose(trace_of_image_squared(measurement_map(1, 0, 0), vacuum_state(1)), 1.0)
    out = apply_map(emap, s)
    assert np.isclose(trace_of_image_squared(emap, s), out.trace**2)


# -- certification -------------------------------------------------------


def test_rotation_map_certificate(rng):
    emap = rotation_map(random_rotation(4, rng))
    assert is_trace_preserving(emap)
    assert is_bistochastic(emap)
    assert is_completely_positive(emap)


def test_measurement_map_certificate():
    emap = measurement_map(2, 1, 1)
    assert not is_trace_preserving(emap)
    assert is_completely_positive(emap)


def test_zero_map_is_not_tp():
    z = np.zeros((2, 2))
    assert not is_trace_preserving(GaussianMap(1, z, z, z, 0.0))


def test_bistochastic_examples():
    z = np.zeros((2, 2))
    assert not is_bistochastic(GaussianMap(1, K * 0.5, np.eye(2) * 0.5, z, 1.0))
    att = GaussianMap(1, z, 0.5 * np.eye(2), z, 1.0)
    assert is_bistochastic(att) and is_completely_positive(att)


def test_expanding_map_is_not_cp():
    z = np.zeros((2, 2))
    cert = certify(GaussianMap(1, z, 2 * np.eye(2), z, 1.0))
    assert not cert.cp
    assert np.isclose(cert.margins()["cp_singular_value"], -1.0, atol=1e-8)


def test_complex_prefactor_is_not_cp(rng):
    emap = random_cp_map(1, rng)
    assert is_completely_positive(emap)
    assert not is_completely_positive(GaussianMap(1, emap.A, emap.B, emap.D, 1j * emap.C))
    assert not is_completely_positive(GaussianMap(1, emap.A, emap.B, emap.D, -emap.C))


# -- dual states ---------------------------------------------------------


def test_dual_of_identity():
    d = dual_state(identity_map(1))
    z = np.zeros((2, 2))
    assert np.allclose(d.corr, np.block([[z, np.eye(2)], [-np.eye(2), z]]))
    assert np.isclose(d.prefactor, 0.25)
    assert d.map_modes == 1


def test_dual_of_identity_is_maximally_entangled():
    d = dual_state(identity_map(1))
    dense = oracle.dense_gaussian(d.corr, d.prefactor)
    assert np.allclose(dense, oracle.maximally_entangled(1))


def test_dual_of_rotation(rng):
    R = random_rotation(4, rng)
    d = dual_state(rotation_map(R))
    A, B, D = d.blocks()
    assert np.allclose(B, R.T) and np.allclose(A, 0) and np.allclose(D, 0)
    assert np.allclose(d.corr[4:, :4], -R)


def test_dual_of_cp_map_is_a_state(rng):
    emap = random_cp_map(2, rng)
    d = dual_state(emap)
    assert is_valid_state(np.real(d.corr))
    assert np.isclose(d.prefactor / emap.C, 1 / 16)


def test_dual_equals_map_on_half_of_entangled_pair(rng):
    emap = random_cp_map(1, rng)
    d = dual_state(emap)
    # (E (x) I)(rho_I) evaluated through the kernel on the first tensor factor
    big = GaussianMap(
        2,
        np.pad(emap.A, ((0, 2), (0, 2))),
        np.block([[emap.B, np.zeros((2, 2))], [np.zeros((2, 2)), np.eye(2)]]),
        np.pad(emap.D, ((0, 2), (0, 2))),
        emap.C,
    )
    out = apply_map(big, dual_state(identity_map(1)))
    assert np.allclose(out.corr, d.corr) and np.isclose(out.prefactor, d.prefactor)


# -- composition ---------------------------------------------------------


def test_compose_with_identity(rng):
    m1 = random_map(2, rng)
    out = compose(identity_map(2), m1)
    for name in "ABD":
        assert np.allclose(getattr(out, name), getattr(m1, name))
    assert np.isclose(out.C, m1.C)


def test_compose_rotations(rng):
    R1, R2 = random_rotation(4, rng), random_rotation(4, rng)
    out = compose(rotation_map(R2), rotation_map(R1))
    # M -> R2^T R1^T M R1 R2, so the composite rotation is R1 R2 and B = (R1 R2)^T
    s = random_state(2, rng)
    seq = apply_map(rotation_map(R2), apply_map(rotation_map(R1), s))
    assert np.allclose(apply_map(out, s).corr, seq.corr)
    assert np.allclose(out.B, R2.T @ R1.T)


def test_compose_measurement_is_idempotent(rng):
    E = measurement_map(2, 0, 0)
    EE = compose(E, E)
    s = random_state(2, rng)
    a, b = apply_map(EE, s), apply_map(E, s)
    assert np.allclose(a.corr, b.corr) and np.isclose(a.prefactor, b.prefactor)
    rho = oracle.dense_state(s.corr)
    P = oracle.projector(2, 0, 0)
    assert np.allclose(oracle.dense_gaussian(a.corr, a.prefactor), P @ rho @ P)


def test_compose_matches_sequential_kernel(rng):
    m1, m2 = random_map(1, rng), random_map(1, rng)
    X = GaussianOperator(1, 0.5, random_skew(2, rng, complex_=True))
    f = gr.gaussian_exp(X.corr, X.prefactor)
    ref = oracle.apply_map_symbolic(m2, oracle.apply_map_symbolic(m1, f))
    out = apply_map(compose(m2, m1), X)
    assert ref.allclose(gr.gaussian_exp(out.corr, out.prefactor), atol=1e-10 * ref.max_abs())


def test_compose_singular():
    E0, E1 = measurement_map(1, 0, 0), measurement_map(1, 0, 1)
    # A1 D2 = K K = -I for the pair (E_{1,1} after E_{1,0})
    with pytest.raises(SingularComposition):
        compose(E1, E0)


def test_compose_mode_mismatch(rng):
    with pytest.raises(ValueError):
        compose(identity_map(1), identity_map(2))


# -- bistochastic decomposition ------------------------------------------


@pytest.mark.parametrize("B,diag", [(np.eye(4), 1.0), (0.3 * np.eye(4), 0.3)])
def test_decompose_scaled_identity(B, diag):
    z = np.zeros((4, 4))
    pd = decompose_bistochastic(GaussianMap(2, z, B, z, 1.0))
    assert np.allclose(pd.diag, diag)
    assert np.allclose(pd.matrix(), B)
    for R in (pd.left, pd.right):
        assert np.allclose(R @ R.T, np.eye(4)) and np.isclose(np.linalg.det(R), 1.0)


def test_decompose_rotation(rng):
    R = random_rotation(4, rng)
    z = np.zeros((4, 4))
    pd = decompose_bistochastic(GaussianMap(2, z, R, z, 1.0))
    assert np.allclose(pd.diag, 1.0)
    assert np.allclose(pd.left @ pd.right, R)


def test_decompose_general_contraction(rng):
    from flosim.randomize import random_rotation as rr

    for _ in range(10):
        B = rr(4, rng) @ np.diag(rng.uniform(-1, 1, 4)) @ rr(4, rng)
        z = np.zeros((4, 4))
        pd = decompose_bistochastic(GaussianMap(2, z, B, z, 1.0))
        assert np.allclose(pd.matrix(), B)
        assert np.all(np.abs(pd.diag) <= 1 + 1e-12)
        assert np.linalg.det(pd.left) > 0 and np.linalg.det(pd.right) > 0


def test_decompose_rejects_non_bistochastic():
    with pytest.raises(ValueError):
        decompose_bistochastic(measurement_map(1, 0, 0))
