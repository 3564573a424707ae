"""Initial conditions drawn from the ball ``|q - 1|^2 + |w|^2 <= R^2``."""

import numpy as np

from .. import algebra as dqa
from ..errors import DomainError


def sample_ball(R, n, seed):
    """Draw ``n`` tracking-error states from the ball of radius ``R``.

    A point ``rho u`` is drawn uniformly from the 12-dimensional ball, with
    ``u`` split into four 3-vector blocks.  The blocks set, in order, the
    rotation error ``|q_r - 1| = rho |u_rot|``, the dual part
    ``|q_d| = rho |u_t|`` (translation ``2 rho u_t``), the angular rate and
    the linear rate.  Each component therefore carries exactly its share of
    the norm.  Rotations are kept in the ``q4 >= 0`` hemisphere
    (``|q_r - 1|^2 <= 2``) by rejection.

    Returns
    -------
    q : (n, 8) ndarray
    w : (n, 8) ndarray
    """
    if not np.isfinite(R) or R <= 0:
        raise DomainError(f"R must be positive, got {R!r}")
    n = int(n)
    if n < 0:
        raise DomainError("n must be nonnegative")
    rng = np.random.default_rng(seed)
    pts = np.zeros((0, 12))
    while pts.shape[0] < n:
        m = max(2 * (n - pts.shape[0]), 16)
        g = rng.standard_normal((m, 12))
        u = g / np.linalg.norm(g, axis=1, keepdims=True)
        rho = R * rng.uniform(size=(m, 1)) ** (1.0 / 12.0)
        x = rho * u
        ok = np.sum(x[:, 0:3] ** 2, axis=1) <= 2.0
        pts = np.vstack([pts, x[ok]])
    pts = pts[:n]
    a = np.linalg.norm(pts[:, 0:3], axis=1)
    # |q_r - 1|^2 = 2 - 2 cos(phi/2)
    half = np.arccos(np.clip(1.0 - 0.5 * a * a, -1.0, 1.0))
    axis = np.where(a[:, None] > 0, pts[:, 0:3] / np.where(a > 0, a, 1.0)[:, None], 0.0)
    qr = np.concatenate([np.sin(half)[:, None] * axis, np.cos(half)[:, None]], axis=1)
    qr /= np.linalg.norm(qr, axis=1, keepdims=True)
    # q_d = q_r (t, 0) / 2 has norm |t| / 2, so t = 2 u_t gives |q_d| = |u_t|
    q = dqa.pose_from_parts(qr, 2.0 * pts[:, 3:6])
    w = dqa.dual_vector(pts[:, 6:9], pts[:, 9:12])
    return q, w

