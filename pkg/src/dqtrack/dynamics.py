"""Rigid-body tracking-error dynamics in dual quaternion form.

States are carried as a pair of arrays: the pose error ``q`` (unit dual
quaternion of B relative to D) and the velocity error ``w`` (dual vector
``omega + eps v`` expressed in B).  Both broadcast over leading axes.

The reference acceleration is always supplied in the D frame and transported
into B with the sandwich ``q* a q``; with this convention the feedforward
terms of the feedback law cancel the reference terms below exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from . import algebra as dqa
from .errors import ContractError


@dataclass(frozen=True)
class DualInertia:
    """Mass and body inertia packed as the 8x8 matrix ``diag(m I3, 1, I, 1)``.

    Parameters
    ----------
    mass : float
        Body mass in kg.
    inertia : (3, 3) array_like
        Symmetric positive-definite inertia matrix in kg m^2.
    """

    mass: float
    inertia: np.ndarray
    matrix: np.ndarray = field(init=False, repr=False)
    inverse: np.ndarray = field(init=False, repr=False)
    _inertia_inv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        inertia = np.array(self.inertia, dtype=float)
        if inertia.shape != (3, 3):
            raise ContractError("inertia must be 3x3")
        if not np.isfinite(self.mass) or self.mass <= 0:
            raise ContractError("mass must be positive and finite")
        scale = max(1.0, float(np.max(np.abs(inertia))))
        if np.max(np.abs(inertia - inertia.T)) > 1e-12 * scale:
            raise ContractError("inertia must be symmetric")
        if np.min(np.linalg.eigvalsh(inertia)) <= 0:
            raise ContractError("inertia must be positive definite")
        inertia.setflags(write=False)
        m = np.zeros((8, 8))
        m[0:3, 0:3] = self.mass * np.eye(3)
        m[3, 3] = 1.0
        m[4:7, 4:7] = inertia
        m[7, 7] = 1.0
        inv = np.linalg.inv(m)
        m.setflags(write=False)
        inv.setflags(write=False)
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "inverse", inv)
        object.__setattr__(self, "_inertia_inv", inv[4:7, 4:7])

    @property
    def J_M(self):
        return float(np.max(np.linalg.eigvalsh(self.matrix)))

    @property
    def J_m(self):
        return float(np.min(np.linalg.eigvalsh(self.matrix)))

    def star(self, a):
        return dqa.matrix_star(self.matrix, a)

    def inv_star(self, a):
        return dqa.matrix_star(self.inverse, a)


# ---------------------------------------------------------------------------
# reference trajectories


class StaticReference:
    """Reference frame fixed at ``pose`` (identity by default)."""

    def __init__(self, pose=None):
        pose = dqa.DQ_ONE if pose is None else np.asarray(pose, dtype=float)
        dqa.require_unit(pose, "reference pose")
        self.pose = pose.copy()

    is_static = True

    def at(self, t):
        return self.pose, np.zeros(8), np.zeros(8)


class ScrewReference:
    """Motion about a fixed screw ``xi`` at a time-varying rate.

    The reference twist in D is ``s(t) xi`` with ``s(t) = rate + amp sin(freq t)``.
    Because the screw axis is fixed in D, the pose has the closed form
    ``pose0 exp(S(t) xi / 2)`` with ``S`` the integral of ``s``.

    Parameters
    ----------
    pose0 : (8,) array_like
        Unit dual quaternion at ``t = 0``.
    xi : (8,) array_like
        Dual vector giving the screw direction.
    rate, amp, freq : float
        Parameters of ``s(t)``; ``amp = 0`` is a constant twist.
    """

    is_static = False

    def __init__(self, pose0, xi, rate=1.0, amp=0.0, freq=0.0):
        pose0 = np.asarray(pose0, dtype=float)
        xi = np.asarray(xi, dtype=float)
        dqa.require_unit(pose0, "reference pose")
        dqa.require_dual_vector(xi, "screw")
        self.pose0 = pose0.copy()
        self.xi = xi.copy()
        self.rate = float(rate)
        self.amp = float(amp)
        self.freq = float(freq)

    def _integral(self, t):
        if self.amp == 0.0 or self.freq == 0.0:
            return self.rate * t
        return self.rate * t + self.amp * (1.0 - np.cos(self.freq * t)) / self.freq

    def _s(self, t):
        return self.rate + self.amp * np.sin(self.freq * t)

    def _sdot(self, t):
        return self.amp * self.freq * np.cos(self.freq * t)

    def at(self, t):
        pose = dqa.dq_mul(self.pose0, dqa.dq_exp(0.5 * self._integral(t) * self.xi))
        return pose, self._s(t) * self.xi, self._sdot(t) * self.xi


def ConstantTwistReference(pose0, twist):
    """Reference moving with a constant body twist ``twist`` from ``pose0``."""
    return ScrewReference(pose0, twist, rate=1.0)


def reference_delta(ref, t_final, n=1000, inflation=1.05):
    """Estimate ``sup |w_ref|`` over ``[0, t_final]`` by dense sampling, inflated.

    The twist norm is taken in the reference frame; the frame transport into
    B preserves the rotational part exactly.
    """
    if getattr(ref, "is_static", False):
        return 0.0
    ts = np.linspace(0.0, t_final, n)
    peak = max(float(dqa.norm(ref.at(t)[1])) for t in ts)
    return inflation * peak


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class BodyState:
    """Absolute pose ``q_B/I`` and body twist ``w_B/I`` (in B)."""

    pose: np.ndarray
    twist: np.ndarray

    def __post_init__(self):
        dqa.require_unit(self.pose, "body pose")
        dqa.require_dual_vector(self.twist, "body twist")


def transport(q_err, a_D):
    """Express a D-frame dual vector in B: ``vec(q* a q)``."""
    return dqa.vec(dqa.dq_mul(dqa.dq_mul(dqa.dq_conj(q_err), a_D), q_err))


def error_state(body, ref, t):
    """Pose and velocity tracking errors of ``body`` relative to ``ref`` at ``t``.

    Returns
    -------
    q_err : (8,) ndarray
        ``q_D/I* q_B/I``.
    w_err : (8,) ndarray
        ``w_B/I - q_err* w_D q_err``.
    ref_twist_B : (8,) ndarray
        The transported reference twist, reused by the controller.
    """
    pose_D, twist_D, _ = ref.at(t)
    dqa.require_unit(body.pose, "body pose")
    dqa.require_unit(pose_D, "reference pose")
    q_err = dqa.dq_mul(dqa.dq_conj(pose_D), body.pose)
    w_ref_B = transport(q_err, twist_D)
    return q_err, body.twist - w_ref_B, w_ref_B


def state_norm(q, w):
    """``sqrt(|q - 1|^2 + |w|^2)``, the norm defining the ball ``B_R``."""
    return np.sqrt(dqa.norm2(np.asarray(q) - dqa.DQ_ONE) + dqa.norm2(w))


def _bracket(q, w, wrench, J, ref_twist_B, ref_accel_D):
    if ref_twist_B is None:
        tot = w
    else:
        tot = w + ref_twist_B
    out = wrench - dqa._cross(tot, J.star(dqa.swap(tot)))
    if ref_accel_D is not None:
        out = out - J.star(dqa.swap(transport(q, ref_accel_D)))
    if ref_twist_B is not None:
        out = out - J.star(dqa.swap(dqa._cross(ref_twist_B, w)))
    return out


def error_derivative(q, w, wrench, J, ref_twist_B=None, ref_accel_D=None):
    """Time derivative of the tracking error.

    Parameters
    ----------
    q, w : array_like
        Pose error (unit dual quaternion) and velocity error (dual vector).
    wrench : array_like
        Dual force ``(f, 0) + eps (tau, 0)`` in B.
    J : DualInertia
    ref_twist_B : array_like, optional
        Reference twist transported into B; ``None`` means the reference is at rest.
    ref_accel_D : array_like, optional
        Reference twist rate in D; ``None`` means zero.

    Returns
    -------
    qdot, wdot : ndarray
        ``qdot = q w / 2``.  ``wdot`` is returned unswapped, ready for integration.
    """
    qdot = 0.5 * dqa.dq_mul(q, w)
    wdot = dqa.swap(J.inv_star(_bracket(q, w, wrench, J, ref_twist_B, ref_accel_D)))
    return qdot, wdot


@dataclass(frozen=True)
class Disturbance:
    """Additive disturbances on the pose (``d1``) and velocity (``d2``) channels.

    ``d1`` and ``d2`` are callables of time returning dual vectors.
    """

    d1: object
    d2: object
    d_m: float

    def at(self, t):
        return np.asarray(self.d1(t), dtype=float), np.asarray(self.d2(t), dtype=float)


def zero_disturbance():
    z = np.zeros(8)
    return Disturbance(lambda t: z, lambda t: z, 0.0)


def constant_disturbance(d1, d2):
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    dqa.require_dual_vector(d1, "d1")
    dqa.require_dual_vector(d2, "d2")
    return Disturbance(lambda t: d1, lambda t: d2, float(max(dqa.norm(d1), dqa.norm(d2))))


def disturbed_derivative(q, w, wrench, J, ref_twist_B, ref_accel_D, dist, t):
    """:func:`error_derivative` with ``d1(t)`` added to ``qdot`` and ``d2(t)`` inside the bracket."""
    d1, d2 = dist.at(t)
    return _disturbed(q, w, wrench, J, ref_twist_B, ref_accel_D, d1, d2)


def _disturbed(q, w, wrench, J, ref_twist_B, ref_accel_D, d1, d2):
    qdot = 0.5 * dqa.dq_mul(q, w) + d1
    b = _bracket(q, w, wrench, J, ref_twist_B, ref_accel_D) + d2
    return qdot, dqa.swap(J.inv_star(b))


def attitude_reduction(q, w, wrench, J, ref_twist_B=None, ref_accel_D=None):
    """Attitude-only dynamics for states without translation.

    Uses ``N = diag(I, 1)`` acting on quaternions:
    ``qdot = q w / 2`` and ``N wdot = tau - w_t x (N w_t) - N (q* a q) - N (w_D x w)``
    with ``w_t = w + w_D``.

    Returns
    -------
    qdot, wdot : (4,) ndarray
        Real-part derivatives.
    """
    q = np.asarray(q, dtype=float)
    w = np.asarray(w, dtype=float)
    parts = [q[..., 4:], w[..., 4:]]
    for a in (ref_twist_B, ref_accel_D):
        if a is not None:
            parts.append(np.asarray(a, dtype=float)[..., 4:])
    if any(np.any(p != 0.0) for p in parts):
        raise ContractError("attitude_reduction requires zero dual parts")
    n = np.eye(4)
    n[:3, :3] = J.inertia
    qr, wr = q[..., :4], w[..., :4]
    tau = np.asarray(wrench, dtype=float)[..., 4:]
    wd = np.zeros(4) if ref_twist_B is None else np.asarray(ref_twist_B, dtype=float)[..., :4]
    tot = wr + wd
    rhs = tau - dqa.quat_cross(tot, tot @ n.T)
    if ref_accel_D is not None:
        a = np.asarray(ref_accel_D, dtype=float)[..., :4]
        a_B = dqa.quat_mul(dqa.quat_mul(dqa.quat_conj(qr), a), qr) * np.array([1, 1, 1, 0.0])
        rhs = rhs - a_B @ n.T
    rhs = rhs - dqa.quat_cross(wd, wr) @ n.T
    return 0.5 * dqa.quat_mul(qr, wr), rhs @ np.linalg.inv(n).T

