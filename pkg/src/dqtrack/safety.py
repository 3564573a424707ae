"""Control barrier functions and the force-filtering quadratic program.

Positions and velocities are expressed in the target (reference) frame D,
which is at rest in every safety scenario.  For the translational double
integrator seen in D, ``r'' = R f / m`` with ``R`` the body-to-D rotation,
so the barrier constraint is affine in the body-frame force ``f``.

Composite docking corridor
--------------------------
With ``x`` the axial coordinate and ``rho^2 = y^2 + z^2``:

* corridor (cissoid) ``h = x^3 tan^2(theta) / (2 r1 - x) - rho^2``
* link ``h = r3^2 - |r|^2 - r* sin(pi x / r2) rho^2``
* sphere ``h = |r|^2 - r3^2``

The safe set is the inside of the corridor and link tube together with the
outside of the sphere of radius ``r3``.  The active piece is chosen by
region: for ``0 <= x <= r1`` the corridor piece if it is nonnegative, for
``r1 < x <= r2`` the link piece if it is nonnegative, and the sphere piece
otherwise.  ``r*`` makes the link and corridor zero sets meet at ``x = r1``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import algebra as dqa
from .errors import ContractError, DomainError, InfeasibleQPError

VARIANTS = ("corridor", "half_space", "ceiling", "sphere_keepout")


@dataclass(frozen=True)
class BarrierSpec:
    """Geometry of one barrier function.

    Parameters
    ----------
    variant : str
        One of ``corridor``, ``half_space`` (``h = n.r - b``),
        ``ceiling`` (``h = H - z``) or ``sphere_keepout``
        (``h = |r - center|^2 - radius^2``).
    r1, r2, r3, theta : float
        Corridor geometry (m, m, m, rad).
    normal, offset : array_like, float
        Half-space parameters.
    height : float
        Ceiling height ``H``.
    center, radius : array_like, float
        Keep-out sphere.
    """

    variant: str
    r1: float = 0.0
    r2: float = 0.0
    r3: float = 0.0
    theta: float = 0.0
    normal: tuple = (0.0, 0.0, 1.0)
    offset: float = 0.0
    height: float = 0.0
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 0.0
    r_star: float = field(init=False, default=float("nan"))

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ContractError(f"unknown barrier variant {self.variant!r}")
        if self.variant == "corridor":
            if not 0 < self.r1 < self.r2 < self.r3:
                raise ContractError("corridor requires 0 < r1 < r2 < r3")
            if not 0 < self.theta < math.pi / 2:
                raise ContractError("corridor half-angle must lie in (0, pi/2)")
            t2 = math.tan(self.theta) ** 2
            rs = (self.r3 ** 2 - self.r1 ** 2 * (1.0 + t2)) / (
                self.r1 ** 2 * math.sin(math.pi * self.r1 / self.r2) * t2)
            object.__setattr__(self, "r_star", rs)
        elif self.variant == "half_space":
            n = np.asarray(self.normal, dtype=float)
            if n.shape != (3,) or not np.linalg.norm(n) > 0:
                raise ContractError("half_space normal must be a nonzero 3-vector")
            object.__setattr__(self, "normal", tuple(float(v) for v in n))
        elif self.variant == "sphere_keepout":
            if not self.radius > 0:
                raise ContractError("keep-out radius must be positive")
            object.__setattr__(self, "center", tuple(float(v) for v in self.center))


def _corridor_piece(s, r):
    x, y, z = r
    t2 = math.tan(s.theta) ** 2
    a = 2.0 * s.r1
    d = a - x
    h = x ** 3 * t2 / d - y * y - z * z
    fx = t2 * (3.0 * x * x / d + x ** 3 / d ** 2)
    fxx = t2 * (6.0 * x / d + 6.0 * x * x / d ** 2 + 2.0 * x ** 3 / d ** 3)
    grad = np.array([fx, -2.0 * y, -2.0 * z])
    hess = np.diag([fxx, -2.0, -2.0])
    return h, grad, hess


def _link_piece(s, r):
    x, y, z = r
    k = math.pi / s.r2
    sn = math.sin(k * x)
    cs = math.cos(k * x)
    rho2 = y * y + z * z
    rs = s.r_star
    h = s.r3 ** 2 - (x * x + rho2) - rs * sn * rho2
    grad = np.array([
        -2.0 * x - rs * k * cs * rho2,
        -2.0 * y - 2.0 * rs * sn * y,
        -2.0 * z - 2.0 * rs * sn * z,
    ])
    hxy = -2.0 * rs * k * cs * y
    hxz = -2.0 * rs * k * cs * z
    hyy = -2.0 - 2.0 * rs * sn
    hess = np.array([
        [-2.0 + rs * k * k * sn * rho2, hxy, hxz],
        [hxy, hyy, 0.0],
        [hxz, 0.0, hyy],
    ])
    return h, grad, hess


def _sphere_piece(s, r):
    return float(r @ r - s.r3 ** 2), 2.0 * r, 2.0 * np.eye(3)


def corridor_piece(spec, r):
    """Name of the corridor piece governing position ``r``."""
    r = np.asarray(r, dtype=float)
    x = r[0]
    if x < -spec.r3 or x > spec.r2:
        raise DomainError(f"axial coordinate {x!r} outside [-r3, r2]")
    if 0.0 <= x <= spec.r1:
        if _corridor_piece(spec, r)[0] >= 0.0:
            return "corridor"
    elif spec.r1 < x <= spec.r2:
        if _link_piece(spec, r)[0] >= 0.0:
            return "link"
    return "sphere"


_PIECES = {"corridor": _corridor_piece, "link": _link_piece, "sphere": _sphere_piece}


def barrier_eval(spec, r):
    """Value, gradient and Hessian of the barrier at position ``r``.

    Returns
    -------
    h : float
    grad : (3,) ndarray
    hess : (3, 3) ndarray
    """
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ContractError("position must be a 3-vector")
    v = spec.variant
    if v == "corridor":
        h, g, H = _PIECES[corridor_piece(spec, r)](spec, r)
        return float(h), g, H
    if v == "half_space":
        n = np.asarray(spec.normal)
        return float(n @ r - spec.offset), n.copy(), np.zeros((3, 3))
    if v == "ceiling":
        return float(spec.height - r[2]), np.array([0.0, 0.0, -1.0]), np.zeros((3, 3))
    d = r - np.asarray(spec.center)
    return float(d @ d - spec.radius ** 2), 2.0 * d, 2.0 * np.eye(3)


@dataclass(frozen=True)
class CbfPoles:
    """Coefficients of ``h'' + a1 h' + a2 h >= 0``; both roots must be real and negative."""

    a1: float = 2.0
    a2: float = 1.0

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 > 0):
            raise ContractError("CBF coefficients must be positive")
        if self.a1 ** 2 < 4.0 * self.a2:
            raise ContractError("CBF poles must be real: need a1^2 >= 4 a2")


def cbf_constraint(spec, poles, r, v, J, q_rot=None, drift=None):
    """Affine constraint ``g_row . f >= rhs`` on the force.

    Parameters
    ----------
    spec : BarrierSpec
    poles : CbfPoles
    r, v : (3,) array_like
        Position and velocity in the barrier frame.
    J : DualInertia
        Only the mass is used.
    q_rot : (4,) array_like, optional
        Rotation from the force frame into the barrier frame; identity if omitted.
    drift : (3,) array_like, optional
        Input-independent acceleration in the barrier frame; zero if omitted.

    Returns
    -------
    g_row : (3,) ndarray
    rhs : float
    """
    v = np.asarray(v, dtype=float)
    h, grad, hess = barrier_eval(spec, r)
    hdot = grad @ v
    rhs = -poles.a1 * hdot - poles.a2 * h - v @ hess @ v
    if drift is not None:
        rhs -= grad @ np.asarray(drift, dtype=float)
    g_row = grad / J.mass
    if q_rot is not None:
        g_row = dqa.quat_rotate(dqa.quat_conj(q_rot), g_row)
    return g_row, float(rhs)


# ---------------------------------------------------------------------------
# quadratic program


@dataclass(frozen=True)
class QpProblem:
    """``min |u - u0|^2`` subject to ``G u >= rhs`` and ``lower <= u <= upper``.

    ``G`` may hold one or several rows; ``lower``/``upper`` may be ``None``
    for an unbounded input set.
    """

    u0: np.ndarray
    G: np.ndarray
    rhs: np.ndarray
    lower: object = None
    upper: object = None

    def __post_init__(self):
        u0 = np.array(self.u0, dtype=float).reshape(-1)
        G = np.array(self.G, dtype=float).reshape(-1, u0.size)
        rhs = np.array(self.rhs, dtype=float).reshape(-1)
        if G.shape[0] != rhs.size:
            raise ContractError("one right-hand side per constraint row")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "rhs", rhs)
        if (self.lower is None) != (self.upper is None):
            raise ContractError("give both box bounds or neither")
        if self.lower is not None:
            lo = np.broadcast_to(np.asarray(self.lower, dtype=float), u0.shape).copy()
            hi = np.broadcast_to(np.asarray(self.upper, dtype=float), u0.shape).copy()
            if np.any(lo > hi):
                raise ContractError("box lower bound exceeds upper bound")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)

    def constraints(self):
        """All constraints stacked as ``A u >= b`` (rows, then box faces)."""
        A = [self.G]
        b = [self.rhs]
        if self.lower is not None:
            n = self.u0.size
            A += [np.eye(n), -np.eye(n)]
            b += [self.lower, -self.upper]
        return np.vstack(A), np.concatenate(b)


@dataclass(frozen=True)
class QpSolution:
    u: np.ndarray
    multipliers: np.ndarray
    active: tuple
    iterations: int


def _tol(b):
    return 1e-12 * (1.0 + np.abs(b))


def box_maximizer(g, lower, upper):
    """Point of the box maximizing ``g . u``."""
    return np.where(g >= 0.0, upper, lower)


def _infeasible(p, msg):
    A = p.G
    if p.lower is not None and A.shape[0]:
        best = [box_maximizer(g, p.lower, p.upper) for g in A]
        vals = [float(g @ u - b) for g, u, b in zip(A, best, p.rhs)]
        k = int(np.argmin(vals))
        raise InfeasibleQPError(msg, best_u=best[k], best_value=vals[k])
    raise InfeasibleQPError(msg)


def solve_qp(p, max_iter=100):
    """Dual active-set (Goldfarb-Idnani) solve of a :class:`QpProblem`.

    The identity Hessian makes the unconstrained minimizer ``u0`` the
    starting point, so a feasible ``u0`` is returned without modification.
    Violated constraints are added one at a time, dropping active
    constraints whose multipliers would turn negative.

    Raises
    ------
    InfeasibleQPError
        If no point satisfies all constraints.
    """
    A, b = p.constraints()
    m = A.shape[0]
    if p.lower is not None:
        for g, r in zip(p.G, p.rhs):
            if g @ box_maximizer(g, p.lower, p.upper) < r - _tol(r):
                _infeasible(p, "constraint row cannot be met anywhere in the input box")
    u = p.u0.copy()
    active = []
    lam = np.zeros(m)
    tol = _tol(b)
    for it in range(max_iter):
        s = A @ u - b
        viol = np.where(s < -tol, s, 0.0)
        if not np.any(viol < 0):
            return QpSolution(u, lam, tuple(active), it)
        k = int(np.argmin(viol))
        while True:
            n_k = A[k]
            if active:
                N = A[active].T
                r = np.linalg.solve(N.T @ N, N.T @ n_k)
                z = n_k - N @ r
            else:
                r = np.zeros(0)
                z = n_k
            zz = z @ n_k
            t2 = -(A[k] @ u - b[k]) / zz if zz > 1e-14 * (n_k @ n_k) else math.inf
            t1, drop = math.inf, None
            for j, rj in enumerate(r):
                if rj > 0:
                    ratio = lam[active[j]] / rj
                    if ratio < t1:
                        t1, drop = ratio, j
            t = min(t1, t2)
            if not math.isfinite(t):
                _infeasible(p, "constraints are jointly infeasible")
            if math.isfinite(t2):
                u = u + t * z
            for j, rj in enumerate(r):
                lam[active[j]] -= t * rj
            lam[k] += t
            if t2 <= t1:
                active.append(k)
                break
            lam[active[drop]] = 0.0
            del active[drop]
    raise InfeasibleQPError("active-set iteration limit reached")


def solve_filter_qp(p):
    """Minimally modified input: the solution ``u`` of :func:`solve_qp`."""
    return solve_qp(p).u


def kkt_residual(p, u, multipliers):
    """Largest violation among stationarity, feasibility and complementarity."""
    A, b = p.constraints()
    lam = np.asarray(multipliers, dtype=float)
    s = A @ u - b
    stat = np.max(np.abs(u - p.u0 - A.T @ lam)) if A.size else np.max(np.abs(u - p.u0))
    parts = [stat]
    if s.size:
        parts += [np.max(np.maximum(-s, 0.0)), np.max(np.maximum(-lam, 0.0)), np.max(np.abs(lam * s))]
    return float(max(parts))


@dataclass(frozen=True)
class FilterResult:
    """Filtered wrench plus diagnostics for one safety-filter call."""

    wrench: np.ndarray
    h: np.ndarray
    modified: bool
    kkt: float


def barrier_frame_state(q, w, offset=None):
    """Position and velocity of B in the barrier frame, from the tracking error.

    The barrier frame is parallel to the resting reference frame; ``offset``
    is the position of the reference origin in barrier coordinates.
    """
    q = np.asarray(q, dtype=float)
    qr = q[..., :4]
    r = dqa.position_in_reference(q)
    if offset is not None:
        r = r + np.asarray(offset, dtype=float)
    v = dqa.quat_rotate(qr, np.asarray(w, dtype=float)[..., 4:7])
    return r, v, qr


def safe_wrench(q, w, nominal, specs, poles, J, lower=None, upper=None, offset=None):
    """Replace the nominal force by the CBF-filtered one; the torque passes through.

    Parameters
    ----------
    q, w : (8,) array_like
        Tracking error relative to a resting target frame.
    nominal : (8,) array_like
        Nominal dual wrench.
    specs : BarrierSpec or sequence of BarrierSpec
        One constraint row per barrier.
    poles : CbfPoles
    J : DualInertia
    lower, upper : (3,) array_like, optional
        Force box.
    offset : (3,) array_like, optional
        Reference origin in barrier coordinates (a docking standoff).

    Raises
    ------
    InfeasibleQPError
        Propagated from the QP; the caller decides the fallback.
    """
    if isinstance(specs, BarrierSpec):
        specs = [specs]
    r, v, qr = barrier_frame_state(q, w, offset)
    rows, rhs, hs = [], [], []
    for s in specs:
        g, c = cbf_constraint(s, poles, r, v, J, q_rot=qr)
        rows.append(g)
        rhs.append(c)
        hs.append(barrier_eval(s, r)[0])
    nominal = np.asarray(nominal, dtype=float)
    p = QpProblem(nominal[0:3], np.array(rows), np.array(rhs), lower, upper)
    sol = solve_qp(p)
    out = nominal.copy()
    out[0:3] = sol.u
    return FilterResult(out, np.array(hs), bool(sol.active), kkt_residual(p, sol.u, sol.multipliers))
