"""Deterministic 2D simulator of a belt-drive robot clearing cubes off a white area."""

from .config import Calibration, load_calibration, save_calibration
from .geometry import Pose
from .harness import (
    Batch, PairwiseDiff, Start, StartSet, SummaryStats, evaluate, grid_starts,
    pairwise_diffs, perturb_motor, perturb_rotation, random_starts, run_batch, summarize,
)
from .runtime import Robot, RunLimits, RunResult, run_episode
from .solutions import SOLUTIONS, SolutionParams, make_solution
from .world import Arena, BlinkLight, Cube, Scenario, default_scenario, load_scenario

__version__ = "0.1.0"
