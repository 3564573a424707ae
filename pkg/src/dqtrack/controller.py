"""Feedback tracking laws producing a dual wrench ``(f, 0) + eps (tau, 0)`` in B."""

from dataclasses import dataclass

import numpy as np

from . import algebra as dqa
from .dynamics import transport
from .errors import DomainError


@dataclass(frozen=True)
class Gains:
    """Proportional and derivative gains, both strictly positive."""

    kp: float
    kd: float

    def __post_init__(self):
        for name in ("kp", "kd"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise DomainError(f"{name} must be positive, got {v!r}")
            object.__setattr__(self, name, float(v))


def pose_gradient(q):
    """``q* (q^s - 1^s)``, the pose-error term shared by the laws and ``V``.

    For unit ``q`` this equals ``q_r* q_d + eps (q_r* (q_r - 1) + q_d* q_d)``.
    Scalar slots are generally nonzero.
    """
    q = np.asarray(q, dtype=float)
    return dqa.dq_mul(dqa.dq_conj(q), dqa.swap(q) - dqa.DQ_ONE_SWAP)


def pose_error2(q):
    """``|q - 1|^2``."""
    return dqa.norm2(np.asarray(q, dtype=float) - dqa.DQ_ONE)


def _feedforward(q, J, ref_twist_B, ref_accel_D):
    out = 0.0
    if ref_accel_D is not None:
        out = out + J.star(dqa.swap(transport(q, ref_accel_D)))
    if ref_twist_B is not None:
        out = out + dqa._cross(ref_twist_B, J.star(dqa.swap(ref_twist_B)))
    return out


def _law(q, w, J, g, ref_twist_B, ref_accel_D, normalized, check):
    if check:
        dqa.require_unit(q, "pose error")
        dqa.require_dual_vector(w, "velocity error")
    # vec() keeps the wrench a dual vector; the scalar slots of the pose term
    # would otherwise leak into the unused scalar channels of the dynamics
    p = dqa.vec(pose_gradient(q))
    if normalized:
        p = p / (1.0 + pose_error2(q))[..., None]
    return -g.kp * p - g.kd * dqa.swap(w) + _feedforward(q, J, ref_twist_B, ref_accel_D)


def feedback_wrench(q, w, J, g, ref_twist_B=None, ref_accel_D=None, check=True):
    """Proposed law with the bounded proportional term.

    ``f = -kp P / (1 + |q - 1|^2) - kd w^s + J*(q* a_D q)^s + w_D x (J* w_D^s)``
    with ``P = vec(q* (q^s - 1^s))``.

    Parameters
    ----------
    q, w : array_like
        Pose and velocity error.
    J : DualInertia
    g : Gains
    ref_twist_B, ref_accel_D : array_like, optional
        Reference twist (in B) and twist rate (in D).  ``None`` means zero.
    check : bool
        Validate the unit and dual-vector contracts.  The integrator turns
        this off after its own renormalization.
    """
    return _law(q, w, J, g, ref_twist_B, ref_accel_D, True, check)


def baseline_wrench(q, w, J, g, ref_twist_B=None, ref_accel_D=None, check=True):
    """Asymptotic baseline law: same as :func:`feedback_wrench` without the denominator."""
    return _law(q, w, J, g, ref_twist_B, ref_accel_D, False, check)
