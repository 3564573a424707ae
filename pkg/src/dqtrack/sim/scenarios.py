"""Canned closed-loop experiments and their pass/fail checks.

A scenario is a nested dictionary of parameters.  :data:`SCENARIOS` holds
the defaults; user configuration and command-line overrides are merged on
top, and :func:`run_scenario` turns the result into trajectory records plus
a JSON-ready summary.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .. import algebra as dqa
from ..config import merge
from ..controller import Gains
from ..dynamics import BodyState, DualInertia, ScrewReference, StaticReference, error_state, \
    reference_delta, state_norm
from ..errors import ConfigError, DqtrackError
from ..safety import BarrierSpec, CbfPoles
from ..stability import (check_envelope, check_iss, check_lyapunov, lyapunov_v, lyapunov_v0,
                         make_envelope, make_iss_bound, IssBound, StabilityEnvelope, Verdict)
from .closed_loop import ClosedLoop, simulate
from .fuel import C1, FuelModel, fuel_consumed
from .records import TrajectoryRecord, axial_position, pose_columns
from .sampling import sample_ball

MARCO_MASS = 13.5
MARCO_INERTIA = [[0.0465, -0.0007, 0.0004],
                 [-0.0007, 0.0486, -0.0021],
                 [0.0004, -0.0021, 0.0482]]
APOLLO_MASS = 30322.9
APOLLO_INERTIA = [[49248.7, 2862.1, -370.1],
                  [2862.1, 108514.2, -3075.0],
                  [-370.1, -3075.0, 110771.7]]

H_TOL = 1e-6
KKT_TOL = 1e-8

_STATIC = {"axis": [0.0, 0.0, 1.0], "angle_deg": 0.0, "position": [0.0, 0.0, 0.0]}

_COMMON = {
    "law": "proposed",
    "seed": 0,
    "renormalize_every": 1,
    "reference": dict(_STATIC),
    "disturbance": {"d_max": 0.0},
    "fuel": {"c1": C1, "m0": 0.0},
}

SCENARIOS = {
    "marco_track": {
        "body": {"mass": MARCO_MASS, "inertia": MARCO_INERTIA},
        "gains": {"kp": 0.2, "kd": 0.3},
        "R": 2.5, "n": 100,
        "dt": 0.01, "t_final": 200.0, "record_dt": 0.5,
        "initial": {"mode": "ball"},
        "checks": ["envelope", "lyapunov"],
    },
    "marco_iss": {
        "body": {"mass": MARCO_MASS, "inertia": MARCO_INERTIA},
        "gains": {"kp": 0.2, "kd": 0.3},
        "R": 3.5, "n": 100,
        "dt": 0.2, "t_final": 10000.0, "record_dt": 10.0,
        "initial": {"mode": "ball"},
        "disturbance": {"d_max": 0.01},
        "settle_window": 0.2,
        "checks": ["iss"],
    },
    "apollo_transposition": {
        "body": {"mass": APOLLO_MASS, "inertia": APOLLO_INERTIA},
        "gains": {"kp": 100.0, "kd": 100.0},
        "R": 1.5, "n": 1,
        "dt": 1.0, "t_final": 15000.0, "record_dt": 10.0,
        "initial": {"mode": "pose", **_STATIC, "omega": [0.0, 0.0, 0.0], "v": [0.0, 0.0, 0.0]},
        "reference": {"axis": [0.0, 1.0, 0.0], "angle_deg": 180.0, "position": [0.0, 0.0, 0.0]},
        "q_tol": 1e-3,
        "checks": ["transposition", "envelope"],
    },
    "apollo_docking": {
        "body": {"mass": APOLLO_MASS, "inertia": APOLLO_INERTIA},
        "gains": {"kp": 100.0, "kd": 100.0},
        "R": 0.1, "n": 50,
        "dt": 1.0, "t_final": 3000.0, "record_dt": 10.0,
        "initial": {"mode": "ball"},
        "p_e": 0.3,
        "checks": ["docking", "envelope"],
    },
    "apollo_fuel": {
        "body": {"mass": APOLLO_MASS, "inertia": APOLLO_INERTIA},
        "gains": {"kp": 100.0, "kd": 100.0},
        "R": 10.5, "n": 1,
        "dt": 0.1, "t_final": 400.0, "record_dt": 1.0,
        "initial": {"mode": "pose", "axis": [0.0, 0.0, 1.0], "angle_deg": 0.0,
                    "position": [20.0, 0.0, 0.0], "omega": [0.0, 0.0, 0.0], "v": [0.0, 0.0, 0.0]},
        "reference": {"axis": [0.0, 1.0, 0.0], "angle_deg": 180.0, "position": [0.0, 0.0, 0.0]},
        "report_times": [100.0, 200.0, 300.0, 400.0],
        "checks": ["fuel"],
    },
    "corridor_dock": {
        "body": {"mass": MARCO_MASS, "inertia": MARCO_INERTIA},
        "gains": {"kp": 0.5, "kd": 1.5},
        "R": 2.5, "n": 1,
        "dt": 0.02, "t_final": 120.0, "record_dt": 0.1,
        "initial": {"mode": "pose", "axis": [0.0, 0.0, 1.0], "angle_deg": 30.0,
                    "position": [2.5, 0.3, -0.2], "omega": [0.05, 0.0, 0.0], "v": [0.0, 0.05, 0.0]},
        "safety": {
            "barriers": [{"variant": "corridor", "r1": 2.0, "r2": 4.0, "r3": 5.0, "theta_deg": 20.0}],
            "a1": 2.0, "a2": 1.0, "f_max": 1.0, "offset": [0.5, 0.0, 0.0],
        },
        "checks": ["cbf"],
    },
    "altitude_avoid": {
        "body": {"mass": MARCO_MASS, "inertia": MARCO_INERTIA},
        "gains": {"kp": 0.5, "kd": 1.5},
        "R": 2.5, "n": 1,
        "dt": 0.02, "t_final": 120.0, "record_dt": 0.1,
        "initial": {"mode": "pose", "axis": [0.0, 0.0, 1.0], "angle_deg": -20.0,
                    "position": [-3.0, 0.5, 0.6], "omega": [0.0, 0.0, 0.02], "v": [0.2, 0.0, -0.3]},
        "safety": {
            # h1 = z keeps the vehicle above the floor, h2 = H_m - z below the overhang
            "barriers": [{"variant": "half_space", "normal": [0.0, 0.0, 1.0], "offset": 0.0},
                         {"variant": "ceiling", "height": 1.0}],
            "a1": 2.0, "a2": 1.0, "f_max": 3.0, "offset": [0.0, 0.0, 0.1],
        },
        "checks": ["cbf"],
    },
}


@dataclass(frozen=True)
class SimConfig:
    """Scenario name plus the run-level knobs and free-form overrides.

    ``overrides`` is a nested mapping merged over the scenario defaults; the
    explicit fields, when not ``None``, take precedence over both.
    """

    scenario: str
    dt: object = None
    t_final: object = None
    seed: object = None
    n: object = None
    renormalize_every: object = None
    overrides: dict = field(default_factory=dict)

    def resolve(self):
        """Fully merged and validated parameter dictionary."""
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {sorted(SCENARIOS)}")
        p = merge(merge(_COMMON, SCENARIOS[self.scenario]), self.overrides)
        for k in ("dt", "t_final", "seed", "n", "renormalize_every"):
            v = getattr(self, k)
            if v is not None:
                p[k] = v
        p["scenario"] = self.scenario
        _validate(p)
        return p


def _num(p, key, positive=True):
    v = p.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{key} must be a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{key} must be positive, got {v!r}")
    return v


def _validate(p):
    _num(p, "dt")
    _num(p, "t_final")
    _num(p, "R")
    _num(p, "record_dt")
    if p["t_final"] < p["dt"]:
        raise ConfigError("t_final must be at least dt")
    n = p.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError(f"n must be a positive integer, got {n!r}")
    seed = p.get("seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    r = p.get("renormalize_every")
    if isinstance(r, bool) or not isinstance(r, int) or r < 1:
        raise ConfigError("renormalize_every must be a positive integer")
    for k in ("kp", "kd"):
        _num(p["gains"], k)
    _num(p["body"], "mass")
    _num(p["disturbance"], "d_max", positive=False)
    if p["disturbance"]["d_max"] < 0:
        raise ConfigError("disturbance.d_max must be nonnegative")
    mode = p["initial"].get("mode")
    if mode not in ("ball", "pose"):
        raise ConfigError(f"initial.mode must be 'ball' or 'pose', got {mode!r}")
    unknown = set(p["checks"]) - set(CHECKS)
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}")


def _pose(spec):
    q = dqa.quat_from_axis_angle(np.asarray(spec["axis"], float), math.radians(spec["angle_deg"]))
    r_world = np.asarray(spec["position"], float)
    # position is given in the parent frame; the pose stores it in the body frame
    return dqa.pose_from_parts(q, dqa.quat_rotate(dqa.quat_conj(q), r_world))


def build_reference(p):
    ref = p["reference"]
    pose = _pose(ref)
    twist = ref.get("twist")
    if twist is None or not np.any(np.asarray(twist, float)):
        return StaticReference(pose)
    tw = np.asarray(twist, float)
    return ScrewReference(pose, dqa.dual_vector(tw[:3], tw[3:]),
                          rate=1.0, amp=float(ref.get("amp", 0.0)), freq=float(ref.get("freq", 0.0)))


def build_plant(p):
    try:
        J = DualInertia(p["body"]["mass"], p["body"]["inertia"])
        g = Gains(p["gains"]["kp"], p["gains"]["kd"])
    except DqtrackError as err:
        raise ConfigError(str(err)) from err
    return J, g


def build_safety(p):
    s = p.get("safety")
    if not s:
        return (), None, None, None
    specs = []
    for b in s["barriers"]:
        b = dict(b)
        if "theta_deg" in b:
            b["theta"] = math.radians(b.pop("theta_deg"))
        try:
            specs.append(BarrierSpec(**b))
        except (TypeError, DqtrackError) as err:
            raise ConfigError(f"bad barrier {b}: {err}") from err
    try:
        poles = CbfPoles(s.get("a1", 2.0), s.get("a2", 1.0))
    except DqtrackError as err:
        raise ConfigError(str(err)) from err
    return tuple(specs), poles, s.get("f_max"), s.get("offset")


def initial_states(p, ref):
    if p["initial"]["mode"] == "ball":
        return sample_ball(p["R"], p["n"], p["seed"])
    ini = p["initial"]
    body = BodyState(_pose(ini), dqa.dual_vector(ini["omega"], ini["v"]))
    q, w, _ = error_state(body, ref, 0.0)
    return np.repeat(q[None], p["n"], axis=0), np.repeat(w[None], p["n"], axis=0)


def build_envelope(p, J, g, ref):
    delta = reference_delta(ref, p["t_final"])
    env = make_envelope(p["R"], J, g, delta, c=p.get("c"), beta=p.get("beta"))
    return env, make_iss_bound(env, g, disturbance_bound(p))


def disturbance_bound(p):
    """Norm bound of a dual vector whose six vector slots lie in ``[-d_max, d_max]``."""
    return math.sqrt(6.0) * p["disturbance"]["d_max"]


# ---------------------------------------------------------------------------
# checks computed from trajectory columns only, so files reproduce them


def _check_envelope(cols, meta):
    return check_envelope(cols["t"], cols["norm_x"], StabilityEnvelope.from_dict(meta["envelope"]))


def _check_lyapunov(cols, meta):
    env = StabilityEnvelope.from_dict(meta["envelope"])
    return check_lyapunov(cols["t"], cols["V"], cols["norm_x"], env)


def _check_iss(cols, meta):
    return check_iss(cols["t"], cols["norm_x"], IssBound.from_dict(meta["iss"]),
                     meta["params"]["settle_window"])


def _check_transposition(cols, meta):
    err = np.sqrt(dqa.norm2(pose_columns(cols) - dqa.DQ_ONE))
    tol = meta["params"]["q_tol"]
    return Verdict(bool(err[-1] < tol), float(tol - err[-1]), None if err[-1] < tol else len(err) - 1)


def _check_docking(cols, meta):
    x = np.abs(axial_position(cols))
    pe = meta["params"]["p_e"]
    ok = bool(x[-1] <= pe)
    return Verdict(ok, float(pe - x[-1]), None if ok else len(x) - 1)


def _check_fuel(cols, meta):
    f = cols["fuel_kg"]
    d = np.diff(f)
    bad = np.flatnonzero(~(d >= 0.0)) + 1
    ok = bool(np.all(np.isfinite(f)) and bad.size == 0)
    return Verdict(ok, float(np.min(d)) if d.size else 0.0, int(bad[0]) if bad.size else None)


def _check_cbf(cols, meta):
    h = cols["h_min"]
    bad = np.flatnonzero(~(h >= -H_TOL))
    return Verdict(bad.size == 0, float(np.min(h) + H_TOL), int(bad[0]) if bad.size else None)


CHECKS = {
    "envelope": _check_envelope,
    "lyapunov": _check_lyapunov,
    "iss": _check_iss,
    "transposition": _check_transposition,
    "docking": _check_docking,
    "fuel": _check_fuel,
    "cbf": _check_cbf,
}


def trajectory_verdicts(cols, meta):
    """Run every configured check on one trajectory's columns."""
    return {name: CHECKS[name](cols, meta) for name in meta["params"]["checks"]}


@dataclass
class ScenarioResult:
    records: list
    verdicts: list
    summary: dict

    @property
    def passed(self):
        return bool(self.summary["passed"])


def _records(res, J, g, env, fuel_model):
    out = []
    for i in range(res.q.shape[0]):
        q, w, f = res.q[i], res.w[i], res.wrench[i]
        h = np.full(res.t.shape, np.nan) if res.h is None else np.min(res.h[i], axis=-1)
        out.append(TrajectoryRecord(
            t=res.t, q=q, w=w,
            norm_x=state_norm(q, w),
            V0=lyapunov_v0(q, w, J, g),
            V=lyapunov_v(q, w, J, g, env.c),
            wrench=f, h_min=h,
            fuel_kg=fuel_consumed(res.t, f, fuel_model)))
    return out


def run_scenario(cfg):
    """Simulate a scenario and evaluate its checks.

    Parameters
    ----------
    cfg : SimConfig

    Returns
    -------
    ScenarioResult
    """
    p = cfg.resolve()
    J, g = build_plant(p)
    ref = build_reference(p)
    specs, poles, f_max, offset = build_safety(p)
    if specs and not isinstance(ref, StaticReference):
        raise ConfigError("safety filtering requires a resting reference")
    env, iss = build_envelope(p, J, g, ref)
    q0, w0 = initial_states(p, ref)
    loop = ClosedLoop(J, g, ref, law=p["law"], barriers=specs, poles=poles,
                      f_max=f_max, barrier_offset=offset)
    record_every = max(1, int(round(p["record_dt"] / p["dt"])))
    res = simulate(loop, q0, w0, p["dt"], p["t_final"], record_every=record_every,
                   d_max=p["disturbance"]["d_max"], seed=p["seed"],
                   renormalize_every=p["renormalize_every"])
    fuel_model = FuelModel(p["fuel"]["c1"], p["fuel"]["m0"])
    records = _records(res, J, g, env, fuel_model)
    meta = {"params": p, "envelope": env.to_dict(), "iss": iss.to_dict()}
    verdicts = [trajectory_verdicts(r.columns(), meta) for r in records]

    summary = dict(meta)
    summary["scenario"] = p["scenario"]
    summary["seed"] = p["seed"]
    per = []
    for i, v in enumerate(verdicts):
        per.append({"index": i, "file": f"traj_{i:04d}.csv",
                    "norm_x0": float(records[i].norm_x[0]),
                    "verdicts": {k: x.to_dict() for k, x in v.items()}})
    summary["trajectories"] = per
    agg = {}
    for name in p["checks"]:
        ok = [v[name].passed for v in verdicts]
        agg[name] = {"passed": all(ok), "n_pass": int(sum(ok)), "n": len(ok),
                     "min_margin": float(min(v[name].margin for v in verdicts))}
    if specs:
        st = res.qp
        agg["qp"] = {"passed": bool(st.infeasible == 0 and st.max_kkt <= KKT_TOL),
                     "calls": st.calls, "modified": st.modified, "infeasible": st.infeasible,
                     "max_kkt": st.max_kkt}
    if "fuel" in p["checks"]:
        agg["fuel"]["report"] = {
            repr(float(tr)): float(np.interp(tr, records[0].t, records[0].fuel_kg) + fuel_model.m0)
            for tr in p.get("report_times", [])}
    summary["verdicts"] = agg
    summary["diagnostics"] = {"max_unit_drift": res.max_drift, "n_samples": int(res.t.size)}
    summary["passed"] = all(a["passed"] for a in agg.values())
    return ScenarioResult(records, verdicts, summary)
