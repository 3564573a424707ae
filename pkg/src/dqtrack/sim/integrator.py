"""Fixed-step classical Runge-Kutta integration on stacked pose/velocity states."""

import numpy as np

from .. import algebra as dqa
from ..errors import SimulationDivergedError


def rk4_step(x, f, t, dt):
    """One classical RK4 step of ``x' = f(x, t)``."""
    k1 = f(x, t)
    k2 = f(x + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(x + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(x + dt * k3, t + dt)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def stack(q, w):
    return np.concatenate(np.broadcast_arrays(np.asarray(q, float), np.asarray(w, float)), axis=-1)


def split(x):
    return x[..., :8], x[..., 8:]


def renormalize_state(x):
    """Project the pose block of a stacked ``(..., 16)`` state onto the unit dual quaternions."""
    q, w = split(x)
    return stack(dqa.renormalize(q), w)


def integrate_step(x, derivative_fn, t, dt, step=None, renormalize=True):
    """Advance a stacked ``(q, w)`` state by one RK4 step.

    Parameters
    ----------
    x : (..., 16) ndarray
        Pose error followed by velocity error.
    derivative_fn : callable
        ``(q, w, t) -> (qdot, wdot)``.
    t, dt : float
    step : int, optional
        Step index reported if the derivative goes non-finite.
    renormalize : bool
        Project the pose back onto the unit dual quaternions afterwards.

    Returns
    -------
    x_new : ndarray
    drift : float
        Largest unit-constraint defect of the pose before renormalization.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")

    def f(y, s):
        qd, wd = derivative_fn(y[..., :8], y[..., 8:], s)
        out = stack(qd, wd)
        if not np.all(np.isfinite(out)):
            raise SimulationDivergedError(f"non-finite derivative at step {step}", step=step)
        return out

    y = rk4_step(x, f, t, dt)
    n, o = dqa.unit_defect(y[..., :8])
    drift = float(max(np.max(n), np.max(o)))
    if renormalize:
        y = renormalize_state(y)
    return y, drift
