"""Command-line front end.

Subcommands
-----------
run        simulate a scenario and write ``traj_XXXX.csv`` files plus ``summary.json``
check      recompute the verdicts of one trajectory file from the files alone
constants  print the envelope and ISS constants of a scenario without simulating
export     write a plot-ready CSV of state norms against their bounds

Exit codes: 0 when every verdict passes, 2 when a verdict fails, 1 on any
configuration, domain or I/O error.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .config import load_config, merge, parse_override, set_path
from .errors import ConfigError, DqtrackError
from .sim.records import dumps, read_json, read_trajectory_csv, write_json, write_trajectory_csv
from .sim.scenarios import (SCENARIOS, SimConfig, build_envelope, build_plant, build_reference,
                            run_scenario, trajectory_verdicts)
from .stability import IssBound, StabilityEnvelope, envelope_bound

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAIL = 2

SUMMARY_FILE = "summary.json"


def _sim_config(args):
    """Merge ``--config`` and ``--set`` into a :class:`SimConfig`."""
    overrides = load_config(args.config) if args.config else {}
    scenario = args.scenario or overrides.pop("scenario", None)
    overrides.pop("scenario", None)
    if scenario is None:
        raise ConfigError("no scenario given; use --scenario or a 'scenario' key in --config")
    extra = {}
    for item in args.set or []:
        key, value = parse_override(item)
        set_path(extra, key, value)
    return SimConfig(scenario, dt=args.dt, t_final=args.t_final, seed=args.seed, n=args.n,
                     overrides=merge(overrides, extra))


def _verdict_line(summary):
    parts = []
    for name, agg in summary["verdicts"].items():
        if "n" in agg:
            parts.append(f"{name} {agg['n_pass']}/{agg['n']}")
        else:
            parts.append(f"{name} {'ok' if agg['passed'] else 'FAIL'}")
    status = "PASS" if summary["passed"] else "FAIL"
    return f"{summary['scenario']}: {status} ({', '.join(parts)})"


def cmd_run(args):
    cfg = _sim_config(args)
    cfg.resolve()
    out = Path(args.out or f"runs/{cfg.scenario}")
    out.mkdir(parents=True, exist_ok=True)
    result = run_scenario(cfg)
    for rec, entry in zip(result.records, result.summary["trajectories"]):
        write_trajectory_csv(out / entry["file"], rec)
    write_json(out / SUMMARY_FILE, result.summary)
    print(f"{_verdict_line(result.summary)} -> {out}")
    return EXIT_OK if result.passed else EXIT_FAIL


def _meta_for(csv_path, meta_path):
    path = Path(meta_path) if meta_path else Path(csv_path).parent / SUMMARY_FILE
    meta = read_json(path)
    for key in ("params", "envelope", "iss"):
        if key not in meta:
            raise ConfigError(f"{path}: missing {key!r}")
    return meta


def cmd_check(args):
    meta = _meta_for(args.trajectory, args.summary)
    cols = read_trajectory_csv(args.trajectory)
    verdicts = trajectory_verdicts(cols, meta)
    report = {"file": str(args.trajectory),
              "verdicts": {k: v.to_dict() for k, v in verdicts.items()},
              "passed": all(v.passed for v in verdicts.values())}
    sys.stdout.write(dumps(report))
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_constants(args):
    p = _sim_config(args).resolve()
    J, g = build_plant(p)
    env, iss = build_envelope(p, J, g, build_reference(p))
    sys.stdout.write(dumps({"scenario": p["scenario"], "envelope": env.to_dict(),
                            "iss": iss.to_dict()}))
    return EXIT_OK


EXPORT_COLUMNS = ["traj", "t", "norm_x", "envelope", "iss_radius", "V", "V_bound"]


def cmd_export(args):
    run_dir = Path(args.run_dir)
    summary = read_json(run_dir / SUMMARY_FILE)
    env = StabilityEnvelope.from_dict(summary["envelope"])
    iss = IssBound.from_dict(summary["iss"])
    out = Path(args.out) if args.out else run_dir / "norms.csv"
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(EXPORT_COLUMNS)
        for entry in summary["trajectories"]:
            cols = read_trajectory_csv(run_dir / entry["file"])
            t, x, v = cols["t"], cols["norm_x"], cols["V"]
            bound = envelope_bound(t, float(x[0]), env, t0=float(t[0]))
            v_bound = v[0] * np.exp(-env.nominal_rate * (t - t[0]))
            for row in zip(t, x, bound, v, v_bound):
                wr.writerow([entry["index"]] + [repr(float(a)) for a in row[:2]]
                            + [repr(float(row[2])), repr(iss.ball_radius)]
                            + [repr(float(a)) for a in row[3:]])
    print(f"wrote {out}")
    return EXIT_OK


def _add_scenario_args(sp):
    sp.add_argument("--scenario", choices=sorted(SCENARIOS), help="built-in scenario name")
    sp.add_argument("--config", help="TOML or JSON file merged over the scenario defaults")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="dotted override, e.g. gains.kp=0.5 (repeatable)")
    sp.add_argument("--seed", type=int, help="random seed")
    sp.add_argument("--n", type=int, help="number of trajectories")
    sp.add_argument("--dt", type=float, help="integration step [s]")
    sp.add_argument("--t-final", dest="t_final", type=float, help="horizon [s]")


def build_parser():
    parser = argparse.ArgumentParser(prog="dqtrack", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="simulate a scenario and write CSV/JSON artifacts")
    _add_scenario_args(sp)
    sp.add_argument("--out", help="output directory (default runs/<scenario>)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("check", help="re-verify a trajectory file offline")
    sp.add_argument("trajectory", help="traj_XXXX.csv written by 'run'")
    sp.add_argument("--summary", "--envelope", dest="summary",
                    help="summary JSON (default: summary.json next to the CSV)")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("constants", help="print envelope and ISS constants as JSON")
    _add_scenario_args(sp)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("export", help="write norms and bounds of a run as one CSV")
    sp.add_argument("run_dir", help="directory written by 'run'")
    sp.add_argument("--out", help="output CSV (default <run_dir>/norms.csv)")
    sp.set_defaults(func=cmd_export)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DqtrackError, OSError) as err:
        print(f"dqtrack {args.command}: error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
