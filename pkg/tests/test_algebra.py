"""Quaternion and dual quaternion algebra against hand-built oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from dqtrack import algebra as dqa
from dqtrack.errors import ContractError, DegeneratePoseError, NormalizationError

N = 10_000

comp = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)
dquats = arrays(np.float64, 8, elements=comp)
vec3 = arrays(np.float64, 3, elements=comp)


def dvec(a, b):
    return dqa.dual_vector(a, b)


def skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def left_matrix(a):
    """4x4 matrix L with L @ b = a b, written out from the vector/scalar split."""
    L = np.zeros((4, 4))
    L[:3, :3] = a[3] * np.eye(3) + skew(a[:3])
    L[:3, 3] = a[:3]
    L[3, :3] = -a[:3]
    L[3, 3] = a[3]
    return L


def dq_left_matrix(a):
    """8x8 left multiplication: [[L(a_r), 0], [L(a_d), L(a_r)]] (eps^2 = 0)."""
    M = np.zeros((8, 8))
    M[:4, :4] = left_matrix(a[:4])
    M[4:, 4:] = left_matrix(a[:4])
    M[4:, :4] = left_matrix(a[4:])
    return M


# --- quaternion products ----------------------------------------------------


@pytest.mark.parametrize("a, b, expected", [
    ([0, 0, 0, 1], [0, 0, 0, 1], [0, 0, 0, 1]),
    ([1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]),
    ([0, 1, 0, 0], [0, 0, 1, 0], [1, 0, 0, 0]),
    ([0, 0, 1, 0], [1, 0, 0, 0], [0, 1, 0, 0]),
    ([1, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1]),
    ([0, 1, 0, 0], [1, 0, 0, 0], [0, 0, -1, 0]),
])
def test_quat_mul_unit_basis(a, b, expected):
    np.testing.assert_array_equal(dqa.quat_mul(a, b), expected)


def test_quat_mul_matches_left_matrix(rng):
    a = dqa.random_quaternions(rng, 500)
    b = dqa.random_quaternions(rng, 500)
    ref = np.stack([left_matrix(x) @ y for x, y in zip(a, b)])
    np.testing.assert_allclose(dqa.quat_mul(a, b), ref, rtol=0, atol=1e-15)


def test_quat_norm_multiplicative(rng):
    a = dqa.random_quaternions(rng, N)
    b = dqa.random_quaternions(rng, N)
    lhs = np.sqrt(dqa.quat_norm2(dqa.quat_mul(a, b)))
    rhs = np.sqrt(dqa.quat_norm2(a) * dqa.quat_norm2(b))
    assert np.max(np.abs(lhs - rhs) / rhs) < 1e-12


def test_quat_conj_involution_and_product_rule(rng):
    a = dqa.random_quaternions(rng, 100)
    b = dqa.random_quaternions(rng, 100)
    np.testing.assert_array_equal(dqa.quat_conj(dqa.quat_conj(a)), a)
    np.testing.assert_allclose(dqa.quat_conj(dqa.quat_mul(a, b)),
                               dqa.quat_mul(dqa.quat_conj(b), dqa.quat_conj(a)), atol=1e-15)


def test_quat_cross_table(rng):
    a = dqa.random_quaternions(rng, 200)
    b = dqa.random_quaternions(rng, 200)
    half = 0.5 * (dqa.quat_mul(a, b) - dqa.quat_mul(dqa.quat_conj(b), dqa.quat_conj(a)))
    np.testing.assert_allclose(dqa.quat_cross(a, b), half, atol=1e-15)
    assert np.all(dqa.quat_cross(a, b)[:, 3] == 0.0)


def test_quat_rotate_matches_rotation_matrix(rng):
    axis = rng.normal(size=3)
    angle = 1.1
    q = dqa.quat_from_axis_angle(axis, angle)
    n = axis / np.linalg.norm(axis)
    K = skew(n)
    Rm = np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K
    v = rng.normal(size=3)
    np.testing.assert_allclose(dqa.quat_rotate(q, v), Rm @ v, atol=1e-14)


def test_zero_axis_rejected():
    with pytest.raises(ContractError):
        dqa.quat_from_axis_angle([0, 0, 0], 1.0)


# --- dual quaternion products --------------------------------------------


def test_dq_mul_identity(rng):
    a = dqa.random_dual_quaternions(rng, 50)
    np.testing.assert_array_equal(dqa.dq_mul(dqa.DQ_ONE, a), a)
    np.testing.assert_array_equal(dqa.dq_mul(a, dqa.DQ_ONE), a)


def test_dq_mul_nilpotent_eps(rng):
    q = dqa.random_quaternions(rng)
    p = dqa.random_quaternions(rng)
    out = dqa.dq_mul(dqa.dq(q, np.zeros(4)), dqa.dq(np.zeros(4), p))
    np.testing.assert_array_equal(out[:4], 0.0)
    np.testing.assert_allclose(out[4:], dqa.quat_mul(q, p), atol=1e-16)
    eps = dqa.dq(np.zeros(4), dqa.QUAT_ONE)
    np.testing.assert_array_equal(dqa.dq_mul(eps, eps), 0.0)


def test_dq_mul_matches_8x8_oracle(rng):
    a = dqa.random_dual_quaternions(rng, N)
    b = dqa.random_dual_quaternions(rng, N)
    M = np.stack([dq_left_matrix(x) for x in a])
    ref = np.einsum("nij,nj->ni", M, b)
    assert np.max(np.abs(dqa.dq_mul(a, b) - ref)) < 1e-13


def test_dq_mul_associative(rng):
    a, b, c = (dqa.random_dual_quaternions(rng, 1000) for _ in range(3))
    lhs = dqa.dq_mul(dqa.dq_mul(a, b), c)
    rhs = dqa.dq_mul(a, dqa.dq_mul(b, c))
    assert np.max(np.abs(lhs - rhs)) < 1e-14


def test_operation_table(rng):
    a = dqa.random_dual_quaternions(rng, 300)
    b = dqa.random_dual_quaternions(rng, 300)
    ac, bc = dqa.dq_conj(a), dqa.dq_conj(b)
    # conjugate: componentwise quaternion conjugate of both parts
    np.testing.assert_array_equal(dqa.real_part(ac), dqa.quat_conj(a[:, :4]))
    np.testing.assert_array_equal(dqa.dual_part(ac), dqa.quat_conj(a[:, 4:]))
    # swap is an involution
    np.testing.assert_array_equal(dqa.swap(dqa.swap(a)), a)
    np.testing.assert_array_equal(dqa.swap(a)[:, :4], a[:, 4:])
    # dot product: both symmetric forms
    dot = dqa.dq_dot(a, b)
    np.testing.assert_allclose(dot, 0.5 * (dqa.dq_mul(ac, b) + dqa.dq_mul(bc, a)), atol=1e-15)
    np.testing.assert_allclose(dot, 0.5 * (dqa.dq_mul(a, bc) + dqa.dq_mul(b, ac)), atol=1e-15)
    # dual norm: a a* = a* a = a . a
    dn = dqa.dual_norm(a)
    np.testing.assert_allclose(dn, dqa.dq_mul(a, ac), atol=1e-15)
    np.testing.assert_allclose(dn, dqa.dq_mul(ac, a), atol=1e-15)
    np.testing.assert_allclose(dn[:, 3], np.sum(a[:, :4] ** 2, axis=1), atol=1e-15)
    np.testing.assert_allclose(dn[:, 7], 2 * np.sum(a[:, :4] * a[:, 4:], axis=1), atol=1e-15)
    # circle and norm
    np.testing.assert_allclose(dqa.circle(a, a), dqa.norm2(a))
    assert np.all(dqa.norm2(a) >= 0)
    np.testing.assert_allclose(dqa.circle(a, b), dqa.circle(b, a))
    # sc + vec = identity, with exact zeros in the complementary slots
    np.testing.assert_array_equal(dqa.sc(a) + dqa.vec(a), a)
    assert dqa.is_dual_vector(dqa.vec(a))
    np.testing.assert_array_equal(dqa.sc(a)[:, [0, 1, 2, 4, 5, 6]], 0.0)


def test_cross_table(rng):
    a = dqa.random_dual_vectors(rng, 300)
    b = dqa.random_dual_vectors(rng, 300)
    half = 0.5 * (dqa.dq_mul(a, b) - dqa.dq_mul(dqa.dq_conj(b), dqa.dq_conj(a)))
    np.testing.assert_allclose(dqa.cross(a, b), half, atol=1e-15)
    ar, ad, br, bd = a[:, 0:3], a[:, 4:7], b[:, 0:3], b[:, 4:7]
    np.testing.assert_allclose(dqa.cross(a, b)[:, 0:3], np.cross(ar, br), atol=1e-15)
    np.testing.assert_allclose(dqa.cross(a, b)[:, 4:7], np.cross(ad, br) + np.cross(ar, bd),
                               atol=1e-15)


def test_matrix_star_blocks(rng):
    M = rng.uniform(-1, 1, (8, 8))
    a = dqa.random_dual_quaternions(rng)
    out = dqa.matrix_star(M, a)
    real = M[:4, :4] @ a[:4] + M[:4, 4:] @ a[4:]
    dual = M[4:, :4] @ a[:4] + M[4:, 4:] @ a[4:]
    np.testing.assert_allclose(out, np.concatenate([real, dual]), atol=1e-15)


@pytest.mark.parametrize("bad", [
    [0, 0, 0, 1e-300, 0, 0, 0, 0],
    [1, 2, 3, 0, 4, 5, 6, 0.5],
])
def test_cross_rejects_non_dual_vectors(bad):
    good = dqa.dual_vector([1, 0, 0], [0, 1, 0])
    with pytest.raises(ContractError):
        dqa.cross(bad, good)
    with pytest.raises(ContractError):
        dqa.cross(good, bad)


def test_cross_rejects_wrong_length():
    with pytest.raises(ContractError):
        dqa.cross(np.zeros(4), np.zeros(4))


# --- circle, cross, transpose and antisymmetry identities, vectorized ----


def test_circle_product_identity_bulk(rng):
    a, b, c = (dqa.random_dual_quaternions(rng, N) for _ in range(3))
    lhs = dqa.circle(a, dqa.dq_mul(b, c))
    mid = dqa.circle(dqa.swap(b), dqa.dq_mul(dqa.swap(a), dqa.dq_conj(c)))
    rhs = dqa.circle(dqa.swap(c), dqa.dq_mul(dqa.dq_conj(b), dqa.swap(a)))
    assert np.max(np.abs(lhs - mid)) < 1e-12
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_circle_cross_identity_bulk(rng):
    a, b, c = (dqa.random_dual_vectors(rng, N) for _ in range(3))
    lhs = dqa.circle(a, dqa.cross(b, c))
    mid = dqa.circle(dqa.swap(b), dqa.cross(c, dqa.swap(a)))
    rhs = dqa.circle(dqa.swap(c), dqa.cross(dqa.swap(a), b))
    assert np.max(np.abs(lhs - mid)) < 1e-12
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_matrix_transpose_identity_bulk(rng):
    M = rng.uniform(-1, 1, (N, 8, 8))
    a, b = (dqa.random_dual_quaternions(rng, N) for _ in range(2))
    lhs = dqa.circle(np.einsum("nij,nj->ni", M, a), b)
    rhs = dqa.circle(a, np.einsum("nji,nj->ni", M, b))
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_cross_antisymmetry_bulk(rng):
    a, b = (dqa.random_dual_vectors(rng, N) for _ in range(2))
    assert np.max(np.abs(dqa.cross(a, b) + dqa.cross(b, a))) < 1e-12


@settings(max_examples=200, deadline=None)
@given(dquats, dquats, dquats)
def test_circle_product_identity_property(a, b, c):
    lhs = dqa.circle(a, dqa.dq_mul(b, c))
    assert abs(lhs - dqa.circle(dqa.swap(b), dqa.dq_mul(dqa.swap(a), dqa.dq_conj(c)))) < 1e-12
    assert abs(lhs - dqa.circle(dqa.swap(c), dqa.dq_mul(dqa.dq_conj(b), dqa.swap(a)))) < 1e-12


@settings(max_examples=200, deadline=None)
@given(vec3, vec3, vec3, vec3, vec3, vec3)
def test_circle_cross_identity_property(a1, a2, b1, b2, c1, c2):
    a, b, c = dvec(a1, a2), dvec(b1, b2), dvec(c1, c2)
    lhs = dqa.circle(a, dqa.cross(b, c))
    assert abs(lhs - dqa.circle(dqa.swap(b), dqa.cross(c, dqa.swap(a)))) < 1e-12
    assert abs(lhs - dqa.circle(dqa.swap(c), dqa.cross(dqa.swap(a), b))) < 1e-12


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (8, 8), elements=comp), dquats, dquats)
def test_matrix_transpose_identity_property(M, a, b):
    lhs = dqa.circle(dqa.matrix_star(M, a), b)
    assert abs(lhs - dqa.circle(a, dqa.matrix_star(M.T, b))) < 1e-12


@settings(max_examples=200, deadline=None)
@given(vec3, vec3, vec3, vec3)
def test_cross_antisymmetry_property(a1, a2, b1, b2):
    a, b = dvec(a1, a2), dvec(b1, b2)
    np.testing.assert_allclose(dqa.cross(a, b), -dqa.cross(b, a), atol=1e-15)


# --- poses -----------------------------------------------------------------


def test_pose_identity():
    np.testing.assert_array_equal(dqa.pose_from_parts(dqa.QUAT_ONE, [0, 0, 0]), dqa.DQ_ONE)


def test_pose_pure_translation_dual_part():
    p = dqa.pose_from_parts(dqa.QUAT_ONE, [2.0, 0.0, 0.0])
    np.testing.assert_array_equal(p[4:], [1.0, 0.0, 0.0, 0.0])


def test_pose_round_trip(rng):
    q = dqa.random_unit_quaternions(rng, 1000)
    r = rng.uniform(-5, 5, (1000, 3))
    q2, r2 = dqa.pose_to_parts(dqa.pose_from_parts(q, r))
    np.testing.assert_allclose(q2, q, atol=1e-15)
    np.testing.assert_allclose(r2, r, atol=1e-13)


def test_pose_is_unit(rng):
    a = dqa.random_unit_dual_quaternions(rng, N)
    assert dqa.is_unit(a)
    prod = dqa.dq_mul(a, dqa.dq_conj(a))
    assert np.max(np.abs(prod - dqa.DQ_ONE)) < dqa.UNIT_TOL


def test_position_in_reference_is_rotated_body_position(rng):
    q = dqa.random_unit_quaternions(rng, 50)
    r = rng.uniform(-5, 5, (50, 3))
    pose = dqa.pose_from_parts(q, r)
    np.testing.assert_allclose(dqa.position_in_reference(pose), dqa.quat_rotate(q, r),
                               atol=1e-13)


def test_pose_rejects_non_unit():
    with pytest.raises(NormalizationError):
        dqa.pose_from_parts([0, 0, 0, 1.1], [0, 0, 0])


def test_require_unit(rng):
    dqa.require_unit(dqa.random_unit_dual_quaternions(rng, 10))
    with pytest.raises(ContractError):
        dqa.require_unit(2 * dqa.DQ_ONE)


# --- renormalization ---------------------------------------------------


def test_renormalize_unit_is_unchanged(rng):
    a = dqa.random_unit_dual_quaternions(rng, 100)
    assert np.max(np.abs(dqa.renormalize(a) - a)) < 1e-14


def test_renormalize_scaled_identity():
    np.testing.assert_array_equal(dqa.renormalize(2 * dqa.DQ_ONE), dqa.DQ_ONE)


def test_renormalize_restores_invariants(rng):
    a = dqa.random_unit_dual_quaternions(rng, 1000) + 1e-3 * rng.normal(size=(1000, 8))
    n, o = dqa.unit_defect(dqa.renormalize(a))
    assert np.max(n) < 1e-14
    assert np.max(o) < 1e-14


def test_renormalize_degenerate():
    with pytest.raises(DegeneratePoseError):
        dqa.renormalize([0, 0, 0, 1e-12, 1, 0, 0, 0])


# --- exponential ------------------------------------------------------


def dq_matrix_exp(xi):
    """exp of a dual quaternion through the matrix exponential of its left-multiplication matrix."""
    return expm(dq_left_matrix(xi)) @ dqa.DQ_ONE


@pytest.mark.parametrize("scale", [0.0, 1e-9, 1e-4, 0.3, 1.0, 2.5])
def test_dq_exp_matches_matrix_exponential(rng, scale):
    xi = dqa.random_dual_vectors(rng) * scale
    xi[4:7] = rng.uniform(-1, 1, 3)
    np.testing.assert_allclose(dqa.dq_exp(xi), dq_matrix_exp(xi), atol=1e-14)
    assert dqa.is_unit(dqa.dq_exp(xi))


def test_dq_exp_requires_dual_vector():
    with pytest.raises(ContractError):
        dqa.dq_exp(dqa.DQ_ONE)
