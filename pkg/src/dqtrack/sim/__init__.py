"""Closed-loop simulation, Monte-Carlo sampling, fuel accounting and scenarios."""

from .closed_loop import ClosedLoop, SimResult, simulate
from .fuel import FuelModel, fuel_consumed
from .integrator import integrate_step, rk4_step
from .records import TrajectoryRecord, read_trajectory_csv, write_trajectory_csv
from .sampling import sample_ball
from .scenarios import SCENARIOS, ScenarioResult, SimConfig, run_scenario

__all__ = [
    "ClosedLoop", "SimResult", "simulate", "FuelModel", "fuel_consumed", "integrate_step",
    "rk4_step", "TrajectoryRecord", "read_trajectory_csv", "write_trajectory_csv",
    "sample_ball", "SCENARIOS", "ScenarioResult", "SimConfig", "run_scenario",
]
