"""Quaternion and dual quaternion algebra on plain numpy arrays.

Layout
------
A quaternion is a float array whose last axis has length 4, ordered
``(x, y, z, w)``: vector part first, scalar part last.  A dual quaternion is a
float array whose last axis has length 8, ``(real.vec, real.scalar,
dual.vec, dual.scalar)``.  This is the stacking used by the 8x8 dual inertia
matrix, so ``matrix_star(M, a)`` is an ordinary matrix-vector product.

Every function broadcasts over leading axes, which lets the simulator carry a
whole Monte-Carlo batch through one call.

Dual vectors (both scalar slots zero) are not a separate class.  They are
produced by :func:`dual_vector` or :func:`vec`, which write exact zeros, and
operations that are only valid on dual vectors call
:func:`require_dual_vector`, which rejects any nonzero scalar slot.
"""

import numpy as np

from .errors import ContractError, DegeneratePoseError, NormalizationError

UNIT_TOL = 1e-9

QUAT_ONE = np.array([0.0, 0.0, 0.0, 1.0])
DQ_ONE = np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
DQ_ZERO = np.zeros(8)
# swap(1) = 0 + eps 1
DQ_ONE_SWAP = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])

_QCONJ = np.array([-1.0, -1.0, -1.0, 1.0])
_DQCONJ = np.concatenate([_QCONJ, _QCONJ])
_VEC_MASK = np.array([1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0])
_SC_MASK = 1.0 - _VEC_MASK
_SCALAR_SLOTS = [3, 7]


def _f(a):
    return np.asarray(a, dtype=float)


# ---------------------------------------------------------------------------
# reference formulas, written the way the algebra is defined; the fast
# bilinear tables below are generated from these once at import time


def _quat_mul_formula(a, b):
    av, a4 = a[..., :3], a[..., 3:]
    bv, b4 = b[..., :3], b[..., 3:]
    v = a4 * bv + b4 * av + np.cross(av, bv)
    s = a4 * b4 - np.sum(av * bv, axis=-1, keepdims=True)
    return np.concatenate([v, s], axis=-1)


def _quat_cross_formula(a, b):
    av, a4 = a[..., :3], a[..., 3:]
    bv, b4 = b[..., :3], b[..., 3:]
    v = b4 * av + a4 * bv + np.cross(av, bv)
    return np.concatenate([v, np.zeros_like(a4)], axis=-1)


def _dq_mul_formula(a, b):
    ar, ad = a[..., :4], a[..., 4:]
    br, bd = b[..., :4], b[..., 4:]
    real = _quat_mul_formula(ar, br)
    dual = _quat_mul_formula(ar, bd) + _quat_mul_formula(ad, br)
    return np.concatenate([real, dual], axis=-1)


def _dq_cross_formula(a, b):
    ar, ad = a[..., :4], a[..., 4:]
    br, bd = b[..., :4], b[..., 4:]
    real = _quat_cross_formula(ar, br)
    dual = _quat_cross_formula(ad, br) + _quat_cross_formula(ar, bd)
    return np.concatenate([real, dual], axis=-1)


def _table(formula, n):
    eye = np.eye(n)
    rows = [formula(eye[i], eye[j]) for i in range(n) for j in range(n)]
    return np.array(rows)


_QMUL = _table(_quat_mul_formula, 4)
_DQMUL = _table(_dq_mul_formula, 8)
_DQCROSS = _table(_dq_cross_formula, 8)


def _bilinear(a, b, table):
    a = _f(a)
    b = _f(b)
    outer = a[..., :, None] * b[..., None, :]
    return outer.reshape(outer.shape[:-2] + (-1,)) @ table


# ---------------------------------------------------------------------------
# quaternions


def quat_mul(a, b):
    """Hamilton product ``ab``."""
    return _bilinear(a, b, _QMUL)


def quat_conj(a):
    return _f(a) * _QCONJ


def quat_dot(a, b):
    """Scalar ``a4 b4 + a.b`` (the scalar slot of the quaternion dot product)."""
    return np.sum(_f(a) * _f(b), axis=-1)


def quat_norm2(a):
    return quat_dot(a, a)


def quat_cross(a, b):
    return _quat_cross_formula(_f(a), _f(b))


def quat_from_axis_angle(axis, angle):
    axis = _f(axis)
    n = np.linalg.norm(axis, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ContractError("rotation axis must be nonzero")
    half = 0.5 * _f(angle)[..., None]
    return np.concatenate([np.sin(half) * axis / n, np.cos(half)], axis=-1)


def quat_rotate(q, v):
    """Rotate the 3-vector ``v`` by unit quaternion ``q``: ``vec(q v q*)``."""
    v4 = np.concatenate([_f(v), np.zeros(np.shape(v)[:-1] + (1,))], axis=-1)
    return quat_mul(quat_mul(q, v4), quat_conj(q))[..., :3]


# ---------------------------------------------------------------------------
# dual quaternions


def dq(real, dual):
    """Stack real and dual quaternion parts into one dual quaternion array."""
    return np.concatenate(np.broadcast_arrays(_f(real), _f(dual)), axis=-1)


def real_part(a):
    return _f(a)[..., :4]


def dual_part(a):
    return _f(a)[..., 4:]


def dq_mul(a, b):
    """Dual quaternion product ``(a_r b_r) + eps (a_r b_d + a_d b_r)``."""
    return _bilinear(a, b, _DQMUL)


def dq_conj(a):
    return _f(a) * _DQCONJ


def swap(a):
    """Exchange real and dual parts."""
    a = _f(a)
    return np.concatenate([a[..., 4:], a[..., :4]], axis=-1)


def circle(a, b):
    """Circle product ``a_r . b_r + a_d . b_d`` (a real number)."""
    return np.sum(_f(a) * _f(b), axis=-1)


def norm2(a):
    """Scalar squared norm ``a o a``."""
    return circle(a, a)


def norm(a):
    return np.sqrt(norm2(a))


def dq_dot(a, b):
    """Dual-number dot product ``a_r.b_r + eps (a_d.b_r + a_r.b_d)``, as an element of D^s."""
    a = _f(a)
    b = _f(b)
    r = quat_dot(a[..., :4], b[..., :4])
    d = quat_dot(a[..., 4:], b[..., :4]) + quat_dot(a[..., :4], b[..., 4:])
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    out[..., 3] = r
    out[..., 7] = d
    return out


def dual_norm(a):
    """``a a*`` = ``(a_r . a_r) + eps (2 a_r . a_d)``."""
    return dq_dot(a, a)


def sc(a):
    return _f(a) * _SC_MASK


def vec(a):
    """Vector part; the scalar slots of the result are exact zeros."""
    return _f(a) * _VEC_MASK


def cross(a, b):
    """Dual quaternion cross product; both arguments must be dual vectors."""
    require_dual_vector(a, "cross: first argument")
    require_dual_vector(b, "cross: second argument")
    return _bilinear(a, b, _DQCROSS)


def _cross(a, b):
    # unchecked variant for the integrator hot path
    return _bilinear(a, b, _DQCROSS)


def matrix_star(m, a):
    """``M * a`` for an 8x8 matrix acting on the stacked 8-vector."""
    return _f(a) @ np.asarray(m, dtype=float).T


def dual_vector(omega, v):
    """Build ``(omega, 0) + eps (v, 0)`` with exact zero scalar slots."""
    omega, v = np.broadcast_arrays(_f(omega), _f(v))
    out = np.zeros(omega.shape[:-1] + (8,))
    out[..., 0:3] = omega
    out[..., 4:7] = v
    return out


def is_dual_vector(a):
    a = _f(a)
    return bool(np.all(a[..., _SCALAR_SLOTS] == 0.0))


def require_dual_vector(a, what="argument"):
    if _f(a).shape[-1:] != (8,):
        raise ContractError(f"{what}: expected a dual quaternion (last axis 8)")
    if not is_dual_vector(a):
        raise ContractError(f"{what}: scalar slots must be exactly zero for a dual vector")


def unit_defect(a):
    """``(|real . real - 1|, |real . dual|)`` for a dual quaternion (broadcasts)."""
    a = _f(a)
    r, d = a[..., :4], a[..., 4:]
    return np.abs(quat_norm2(r) - 1.0), np.abs(quat_dot(r, d))


def is_unit(a, tol=UNIT_TOL):
    n, o = unit_defect(a)
    return bool(np.all(n <= tol) and np.all(o <= tol))


def require_unit(a, what="pose", tol=UNIT_TOL):
    if _f(a).shape[-1:] != (8,):
        raise ContractError(f"{what}: expected a dual quaternion (last axis 8)")
    if not is_unit(a, tol):
        n, o = unit_defect(a)
        raise ContractError(
            f"{what}: not a unit dual quaternion "
            f"(|norm^2-1|={np.max(n):.3e}, |real.dual|={np.max(o):.3e})"
        )


def pose_from_parts(q, r_body):
    """Unit dual quaternion ``q + eps 1/2 q r`` from a unit rotation and a body-frame translation."""
    q = _f(q)
    if np.any(np.abs(quat_norm2(q) - 1.0) > UNIT_TOL):
        raise NormalizationError("rotation quaternion is not unit to tolerance")
    r4 = np.concatenate([_f(r_body), np.zeros(np.shape(r_body)[:-1] + (1,))], axis=-1)
    return dq(q, 0.5 * quat_mul(q, r4))


def pose_to_parts(a):
    """Inverse of :func:`pose_from_parts`: returns ``(q, r_body)`` with ``r = vec(2 q* q_d)``."""
    a = _f(a)
    q = a[..., :4]
    r = 2.0 * quat_mul(quat_conj(q), a[..., 4:])
    return q.copy(), r[..., :3]


def position_in_reference(a):
    """Translation expressed in the reference frame, ``vec(2 q_d q*)``."""
    a = _f(a)
    return (2.0 * quat_mul(a[..., 4:], quat_conj(a[..., :4])))[..., :3]


def renormalize(a):
    """Project onto the unit dual quaternions.

    The real part is scaled to unit length and the dual part (scaled by the
    same factor) has its component along the real part removed.
    """
    a = _f(a)
    r, d = a[..., :4], a[..., 4:]
    n = np.sqrt(quat_norm2(r))[..., None]
    if np.any(n < 1e-9):
        raise DegeneratePoseError("real part norm below 1e-9; cannot renormalize")
    r = r / n
    d = d / n
    d = d - quat_dot(r, d)[..., None] * r
    return np.concatenate([r, d], axis=-1)


def dq_exp(xi):
    """Exponential of a dual vector ``xi = a + eps b``.

    With ``theta = |a|`` and axis ``n``, this is the screw motion
    ``(n sin theta, cos theta) + eps (...)``.  Small angles use the series
    form so the result is smooth through ``theta = 0``.
    """
    xi = _f(xi)
    require_dual_vector(xi, "dq_exp")
    a = xi[..., 0:3]
    b = xi[..., 4:7]
    theta = np.linalg.norm(a, axis=-1, keepdims=True)
    small = theta < 1e-6
    safe = np.where(small, 1.0, theta)
    s = np.sin(theta)
    c = np.cos(theta)
    # sin(theta)/theta and (cos(theta) - sin(theta)/theta)/theta^2, series near 0
    sinc = np.where(small, 1.0 - theta**2 / 6.0, s / safe)
    k = np.where(small, -1.0 / 3.0 + theta**2 / 30.0, (c - s / safe) / safe**2)
    d = np.sum(a * b, axis=-1, keepdims=True)
    real = np.concatenate([sinc * a, c], axis=-1)
    dual_v = sinc * b + k * d * a
    dual_s = -d * sinc
    return np.concatenate([real, dual_v, dual_s], axis=-1)


def _shape(size, tail):
    return tuple(np.atleast_1d(size).astype(int)) + (tail,) if np.size(size) else (tail,)


def random_quaternions(rng, size=()):
    """Components uniform in [-1, 1]."""
    return rng.uniform(-1.0, 1.0, size=_shape(size, 4))


def random_dual_quaternions(rng, size=()):
    return rng.uniform(-1.0, 1.0, size=_shape(size, 8))


def random_unit_quaternions(rng, size=()):
    while True:
        q = rng.uniform(-1.0, 1.0, size=_shape(size, 4))
        n = np.linalg.norm(q, axis=-1, keepdims=True)
        if np.all(n > 1e-3):
            return q / n


def random_unit_dual_quaternions(rng, size=(), translation_range=5.0):
    """Random rotation composed with a translation uniform in ``[-range, range]^3``."""
    q = random_unit_quaternions(rng, size)
    r = rng.uniform(-translation_range, translation_range, size=q.shape[:-1] + (3,))
    return pose_from_parts(q, r)


def random_dual_vectors(rng, size=()):
    shape = _shape(size, 3)
    return dual_vector(rng.uniform(-1.0, 1.0, shape), rng.uniform(-1.0, 1.0, shape))
