"""Closed-loop simulation of the tracking error under a feedback law."""

from dataclasses import dataclass, field

import numpy as np

from .. import algebra as dqa
from ..controller import baseline_wrench, feedback_wrench
from ..dynamics import _disturbed, error_derivative, transport
from ..errors import ConfigError, InfeasibleQPError
from ..safety import safe_wrench
from .integrator import integrate_step, stack

LAWS = {"proposed": feedback_wrench, "baseline": baseline_wrench}


@dataclass
class QpStats:
    calls: int = 0
    modified: int = 0
    infeasible: int = 0
    max_kkt: float = 0.0


@dataclass
class ClosedLoop:
    """Plant, reference, feedback law and optional safety filter.

    Parameters
    ----------
    J : DualInertia
    gains : Gains
    ref : reference object
        Anything with ``at(t) -> (pose, twist_D, accel_D)`` and ``is_static``.
    law : str
        ``"proposed"`` or ``"baseline"``.
    barriers : tuple of BarrierSpec
        Empty for no safety filter.
    poles : CbfPoles, optional
    f_max : float, optional
        Symmetric force box for the safety filter.
    barrier_offset : (3,) array_like, optional
        Reference origin expressed in barrier coordinates.
    """

    J: object
    gains: object
    ref: object
    law: str = "proposed"
    barriers: tuple = ()
    poles: object = None
    f_max: object = None
    barrier_offset: object = None
    stats: QpStats = field(default_factory=QpStats)

    def __post_init__(self):
        if self.law not in LAWS:
            raise ConfigError(f"unknown law {self.law!r}; expected one of {sorted(LAWS)}")

    def reference_terms(self, q, t):
        if getattr(self.ref, "is_static", False):
            return None, None
        _, twist_D, accel_D = self.ref.at(t)
        return transport(q, twist_D), accel_D

    def wrench(self, q, w, t, wb=None, ac=None, count=False):
        """Applied wrench and barrier values for a batch of states."""
        if wb is None and ac is None:
            wb, ac = self.reference_terms(q, t)
        f = LAWS[self.law](q, w, self.J, self.gains, wb, ac, check=False)
        if not self.barriers:
            return f, None
        lo = hi = None
        if self.f_max is not None:
            lo, hi = -self.f_max * np.ones(3), self.f_max * np.ones(3)
        out = np.array(f, dtype=float, copy=True)
        hs = np.zeros(q.shape[:-1] + (len(self.barriers),))
        for i in np.ndindex(q.shape[:-1]):
            try:
                res = safe_wrench(q[i], w[i], f[i], self.barriers, self.poles, self.J, lo, hi,
                                  self.barrier_offset)
                out[i] = res.wrench
                hs[i] = res.h
                if count:
                    self.stats.modified += int(res.modified)
                    self.stats.max_kkt = max(self.stats.max_kkt, res.kkt)
            except InfeasibleQPError as err:
                # keep the force that best satisfies the hardest row and flag it
                out[i, 0:3] = err.best_u
                if count:
                    self.stats.infeasible += 1
            if count:
                self.stats.calls += 1
        return out, hs

    @property
    def fast(self):
        """True when the resting-reference, unfiltered shortcut applies."""
        return getattr(self.ref, "is_static", False) and not self.barriers

    def derivative(self, q, w, t, d1=None, d2=None):
        if self.fast:
            return static_derivative(q, w, self.J, self.gains, self.law == "proposed", d1, d2)
        wb, ac = self.reference_terms(q, t)
        f, _ = self.wrench(q, w, t, wb, ac, count=True)
        if d1 is None:
            return error_derivative(q, w, f, self.J, wb, ac)
        return _disturbed(q, w, f, self.J, wb, ac, d1, d2)


def _cross_rows(a, b):
    # operands are (3, N) component rows; contiguous rows beat np.cross on small batches
    return np.array((a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]))


def _dot_rows(a, b):
    return np.einsum("ij,ij->j", a, b)


def static_derivative(q, w, J, g, normalized=True, d1=None, d2=None):
    """Closed-loop derivative for a resting reference, written out in components.

    Equivalent to the feedback law followed by :func:`error_derivative` (or
    its disturbed form), but with the dual quaternion products expanded:
    ``f = -kp vec(q_r* q_d)/s - kd v``, ``tau = -kp vec(q_r)/s - kd omega``,
    ``v' = f/m - omega x v`` and ``I omega' = tau - omega x I omega``, where
    ``s = 1 + |q - 1|^2`` (or 1 for the baseline law).

    Parameters
    ----------
    q, w : (N, 8) ndarray
    J : DualInertia
    g : Gains
    normalized : bool
        Proposed law when true, baseline law otherwise.
    d1, d2 : (N, 8) ndarray, optional
        Additive disturbances on the pose and velocity channels.
    """
    Q = np.ascontiguousarray(np.asarray(q, dtype=float).T)
    W = np.ascontiguousarray(np.asarray(w, dtype=float).T)
    rv, rs, dv, ds = Q[0:3], Q[3], Q[4:7], Q[7]
    om, v = W[0:3], W[4:7]
    if normalized:
        e = Q.copy()
        e[3] -= 1.0
        kp = g.kp / (1.0 + _dot_rows(e, e))
    else:
        kp = g.kp
    # vec(q_r* q_d) = r_s d_v - d_s r_v - r_v x d_v
    force = -kp * (rs * dv - ds * rv - _cross_rows(rv, dv)) - g.kd * v
    torque = -kp * rv - g.kd * om
    if d2 is not None:
        D2 = np.asarray(d2).T
        force = force + D2[0:3]
        torque = torque + D2[4:7]
    out = np.zeros((16,) + Q.shape[1:])
    out[8:11] = J._inertia_inv @ (torque - _cross_rows(om, J.inertia @ om))
    out[12:15] = force / J.mass - _cross_rows(om, v)
    # q w with pure-vector parts: (p, p_s)(u, 0) = (p_s u + p x u, -p.u)
    out[0:3] = 0.5 * (rs * om + _cross_rows(rv, om))
    out[3] = -0.5 * _dot_rows(rv, om)
    out[4:7] = 0.5 * (rs * v + _cross_rows(rv, v) + ds * om + _cross_rows(dv, om))
    out[7] = -0.5 * (_dot_rows(rv, v) + _dot_rows(dv, om))
    if d1 is not None:
        out[0:8] += np.asarray(d1).T
    return out[0:8].T, out[8:16].T


@dataclass
class SimResult:
    """Recorded samples of a batch of trajectories.

    Arrays are indexed ``[trajectory, sample, ...]``; ``h`` is ``None``
    without a safety filter.
    """

    t: np.ndarray
    q: np.ndarray
    w: np.ndarray
    wrench: np.ndarray
    h: object
    max_drift: float
    qp: QpStats


def draw_disturbance(rng, shape, d_max):
    """Uniform draws on the six vector slots of two dual vectors."""
    d = rng.uniform(-d_max, d_max, size=shape + (2, 6))
    d1 = dqa.dual_vector(d[..., 0, 0:3], d[..., 0, 3:6])
    d2 = dqa.dual_vector(d[..., 1, 0:3], d[..., 1, 3:6])
    return d1, d2


def simulate(loop, q0, w0, dt, t_final, record_every=1, d_max=0.0, seed=0,
             renormalize_every=1):
    """Integrate a batch of closed-loop trajectories with fixed-step RK4.

    Parameters
    ----------
    loop : ClosedLoop
    q0, w0 : (N, 8) array_like
        Initial pose and velocity errors.
    dt, t_final : float
        Step and horizon; the horizon is rounded to a whole number of steps.
    record_every : int
        Keep every ``record_every``-th step (the final step is always kept).
    d_max : float
        Half-width of the per-step uniform disturbance; 0 disables it.
    seed : int
        Seed of the disturbance stream.
    renormalize_every : int
        Pose renormalization period in steps.
    """
    q0 = np.atleast_2d(np.asarray(q0, dtype=float))
    w0 = np.atleast_2d(np.asarray(w0, dtype=float))
    if not dt > 0 or not t_final >= dt:
        raise ConfigError("need dt > 0 and t_final >= dt")
    n_steps = int(round(t_final / dt))
    keep = set(range(0, n_steps + 1, max(1, int(record_every)))) | {n_steps}
    rng = np.random.default_rng(seed) if d_max > 0 else None
    x = stack(q0, w0)
    N = x.shape[0]
    ts, qs, ws = [], [], []
    max_drift = 0.0
    for k in range(n_steps + 1):
        t = k * dt
        if k in keep:
            ts.append(t)
            qs.append(x[:, :8].copy())
            ws.append(x[:, 8:].copy())
        if k == n_steps:
            break
        if rng is not None:
            d1, d2 = draw_disturbance(rng, (N,), d_max)
            fn = lambda q, w, s: loop.derivative(q, w, s, d1, d2)  # noqa: E731
        else:
            fn = loop.derivative
        renorm = (k + 1) % max(1, int(renormalize_every)) == 0
        x, drift = integrate_step(x, fn, t, dt, step=k, renormalize=renorm)
        max_drift = max(max_drift, drift)
    t = np.array(ts)
    q = np.stack(qs, axis=1)
    w = np.stack(ws, axis=1)
    wrench = np.zeros_like(q)
    h = None
    for j, tj in enumerate(t):
        f, hj = loop.wrench(q[:, j], w[:, j], tj)
        wrench[:, j] = f
        if hj is not None:
            if h is None:
                h = np.zeros((N, len(t), hj.shape[-1]))
            h[:, j] = hj
    return SimResult(t, q, w, wrench, h, max_drift, loop.stats)
