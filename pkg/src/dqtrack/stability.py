"""Lyapunov functions, exponential-stability envelopes and ISS bounds.

All constants are closed-form functions of the gains, the ball radius ``R``,
the reference-twist bound ``delta`` and the extreme eigenvalues ``J_M``,
``J_m`` of the dual inertia matrix.

Two decay rates appear.  Without disturbances ``V`` decays at
``beta kd / J_M``; when a disturbance is active the weaker rate
``beta kd / (2 J_M)`` is the one available, and :attr:`StabilityEnvelope.alpha`
(the rate of the state-norm envelope) equals half the nominal ``V`` rate in
either case.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import algebra as dqa
from .controller import pose_error2, pose_gradient
from .errors import ContractError, DomainError

C_MARGIN = 1.0001
BETA_MARGIN = 0.999


def lyapunov_v0(q, w, J, g):
    """``kp ln(1 + |q - 1|^2) + (w^s o J* w^s) / 2``."""
    ws = dqa.swap(w)
    return g.kp * np.log1p(pose_error2(q)) + 0.5 * dqa.circle(ws, J.star(ws))


def lyapunov_v0_rate(q, w, qdot, wdot, J, g):
    """Exact time derivative of :func:`lyapunov_v0` along ``(qdot, wdot)``."""
    e = np.asarray(q, dtype=float) - dqa.DQ_ONE
    ws = dqa.swap(w)
    return (2.0 * g.kp * dqa.circle(e, qdot) / (1.0 + dqa.norm2(e))
            + dqa.circle(ws, J.star(dqa.swap(wdot))))


def lyapunov_v(q, w, J, g, c):
    """``c (exp(V0/kp) - 1) + P o (J* w^s)`` with ``P = q* (q^s - 1^s)``."""
    v0 = lyapunov_v0(q, w, J, g)
    return c * np.expm1(v0 / g.kp) + dqa.circle(pose_gradient(q), J.star(dqa.swap(w)))


def lemma_gap(q):
    """``|q* (q^s - 1^s)|^2 - |q - 1|^2 / 2``; nonnegative for unit ``q``."""
    dqa.require_unit(q, "lemma_gap")
    return dqa.norm2(pose_gradient(q)) - 0.5 * pose_error2(q)


@dataclass(frozen=True)
class StabilityEnvelope:
    """Closed-form constants of the exponential envelope on the ball ``B_R``.

    ``m_env`` can overflow for heavy bodies; ``log_m_env`` is always finite
    and is what the envelope check uses.
    """

    R: float
    delta: float
    kp: float
    kd: float
    J_M: float
    J_m: float
    k0: float
    c: float
    beta: float
    alpha: float
    k1: float
    log_m_env: float
    m_env: float

    @property
    def nominal_rate(self):
        """Decay rate of ``V`` without disturbances."""
        return self.beta * self.kd / self.J_M

    @property
    def disturbed_rate(self):
        """Decay rate of ``V`` available while a disturbance acts."""
        return self.beta * self.kd / (2.0 * self.J_M)

    def to_dict(self):
        d = asdict(self)
        d["nominal_rate"] = self.nominal_rate
        d["disturbed_rate"] = self.disturbed_rate
        return d

    @classmethod
    def from_dict(cls, d):
        names = cls.__dataclass_fields__
        return cls(**{k: float(d[k]) for k in names})


def _c_bounds(R, J_M, J_m, kp, kd, k0):
    return (4.0 * kp * k0 / kd, 0.75 * J_M * (1.0 + R) ** 2, J_M * kp / J_m)


def _beta_bound(R, J_M, kp, kd, c):
    return min(c / (2.0 * kp),
               kp / (2.0 * (1.0 + R) * kd * (1.5 * (1.0 + R) ** 2 + c / J_M)),
               1.0)


def make_envelope(R, J, g, delta=0.0, c=None, beta=None):
    """Evaluate every envelope constant.

    Parameters
    ----------
    R : float
        Radius of the initial-condition ball.
    J : DualInertia
    g : Gains
    delta : float
        Bound on the reference twist seen in B.
    c, beta : float, optional
        Overrides.  By default ``c`` is 1.0001 times its largest lower bound
        and ``beta`` is 0.999 times its smallest upper bound.

    Raises
    ------
    DomainError
        Non-positive ``R``, negative ``delta``, or overrides that violate
        the bounds.
    """
    if not np.isfinite(R) or R <= 0:
        raise DomainError(f"R must be positive, got {R!r}")
    if not np.isfinite(delta) or delta < 0:
        raise DomainError(f"delta must be nonnegative, got {delta!r}")
    R = float(R)
    kp, kd = g.kp, g.kd
    J_M, J_m = J.J_M, J.J_m
    k0 = (2.25 * J_M * (1.0 + R)
          + (1.5 * kd + 4.5 * J_M * delta * (1.0 + R)) ** 2 * (1.0 + R) ** 3 / kp)
    c_min = max(_c_bounds(R, J_M, J_m, kp, kd, k0))
    if c is None:
        c = C_MARGIN * c_min
    elif c < c_min:
        raise DomainError(f"c={c!r} is below its lower bound {c_min!r}")
    b_max = _beta_bound(R, J_M, kp, kd, c)
    if beta is None:
        beta = BETA_MARGIN * b_max
    elif not 0.0 < beta < b_max:
        raise DomainError(f"beta={beta!r} outside (0, {b_max!r})")
    alpha = beta * kd / (2.0 * J_M)
    k1 = min(c - 1.5 * (J_M / 2.0) * (1.0 + R) ** 2, c * J_m / (2.0 * kp) - J_M / 2.0)
    if not k1 > 0:
        raise DomainError("k1 is not positive for this c")
    if not 0.0 < beta < 1.0:
        raise DomainError("beta must lie in (0, 1)")
    E = J_M * R * R / (2.0 * kp)
    B = math.sqrt(1.5) * (1.0 + R) * (J_M / 2.0) * R * R
    # log of (1 + R^2) e^E - 1 + B, written to avoid both overflow (large E)
    # and cancellation (small R)
    if E < 700.0:
        log_a = math.log((1.0 + R * R) * math.expm1(E) + R * R + B)
    else:
        log_a = E + math.log((1.0 + R * R) + (B - 1.0) * math.exp(-E))
    log_m_env = 0.5 * log_a - math.log(R) - 0.5 * math.log(k1)
    m_env = math.exp(log_m_env) if log_m_env < 709.0 else math.inf
    return StabilityEnvelope(R=R, delta=float(delta), kp=kp, kd=kd, J_M=J_M, J_m=J_m,
                             k0=k0, c=float(c), beta=float(beta), alpha=alpha, k1=k1,
                             log_m_env=log_m_env, m_env=m_env)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a trajectory check.

    ``margin`` is the smallest ``bound - value`` over the checked samples and
    ``first_violation`` the index of the first failing sample (or ``None``).
    """

    passed: bool
    margin: float
    first_violation: object = None

    def to_dict(self):
        return asdict(self)


def _as_series(t, x):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.ndim != 1 or t.shape != x.shape:
        raise DomainError("time and value series must be 1-D and of equal length")
    if t.size == 0:
        raise DomainError("empty trajectory")
    return t, x


def envelope_bound(t, x0, env, t0=0.0):
    """``m_env exp(-alpha (t - t0)) x0``, evaluated in log space (``inf`` on overflow)."""
    t = np.asarray(t, dtype=float)
    if x0 == 0:
        return np.zeros_like(t)
    with np.errstate(over="ignore"):
        return np.exp(env.log_m_env - env.alpha * (t - t0) + math.log(x0))


def check_envelope(t, norms, env):
    """Check ``|x(t)| <= m_env exp(-alpha (t - t0)) |x(t0)|`` at every sample."""
    t, x = _as_series(t, norms)
    x0 = float(x[0])
    if x0 > env.R:
        raise ContractError(f"initial state norm {x0!r} lies outside the ball of radius {env.R!r}")
    if x0 == 0.0:
        bad = np.flatnonzero(x > 0.0)
        margin = float(np.min(-x))
    else:
        log_bound = env.log_m_env - env.alpha * (t - t[0]) + math.log(x0)
        with np.errstate(divide="ignore"):
            bad = np.flatnonzero(np.log(x) > log_bound)
        with np.errstate(over="ignore"):
            margin = float(np.min(np.exp(log_bound) - x))
    first = int(bad[0]) if bad.size else None
    return Verdict(bad.size == 0, margin, first)


def check_lyapunov(t, v, norms, env, rate=None, tol=1e-8):
    """Check ``k1 |x|^2 <= V(t) <= V(t0) exp(-rate (t - t0))`` with absolute slack ``tol``.

    ``rate`` defaults to the nominal decay rate of the envelope.
    """
    t, v = _as_series(t, v)
    _, x = _as_series(t, norms)
    rate = env.nominal_rate if rate is None else rate
    lower = env.k1 * x * x - v
    upper = v - v[0] * np.exp(-rate * (t - t[0]))
    worst = np.maximum(lower, upper)
    bad = np.flatnonzero(worst > tol)
    first = int(bad[0]) if bad.size else None
    return Verdict(bad.size == 0, float(np.min(-worst)) + 0.0, first)


@dataclass(frozen=True)
class IssBound:
    """Ultimate bound ``psi d_m`` on the state norm under disturbances of size ``d_m``."""

    psi: float
    d_m: float

    @property
    def ball_radius(self):
        return self.psi * self.d_m

    def to_dict(self):
        return {"psi": self.psi, "d_m": self.d_m, "ball_radius": self.ball_radius}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["psi"]), float(d["d_m"]))


def iss_psi(R, kp, kd, beta):
    a = 4.0 * (1.0 + R) ** 2 * math.sqrt(3.0) / (math.sqrt(2.0) * kp)
    b = 2.0 * (1.0 + kp) / ((1.0 - beta) * kd)
    return math.hypot(a, b)


def make_iss_bound(env, g, d_m):
    if not np.isfinite(d_m) or d_m < 0:
        raise DomainError(f"d_m must be nonnegative, got {d_m!r}")
    return IssBound(iss_psi(env.R, g.kp, g.kd, env.beta), float(d_m))


def check_iss(t, norms, bound, settle_window=0.2):
    """Check ``|x| <= psi d_m`` over the trailing ``settle_window`` fraction of the horizon."""
    t, x = _as_series(t, norms)
    if not 0.0 < settle_window <= 1.0:
        raise DomainError("settle_window must lie in (0, 1]")
    start = t[-1] - settle_window * (t[-1] - t[0])
    idx = np.flatnonzero(t >= start)
    excess = x[idx] - bound.ball_radius
    bad = idx[excess > 0.0]
    first = int(bad[0]) if bad.size else None
    return Verdict(bad.size == 0, float(np.min(-excess)), first)
