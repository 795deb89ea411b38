"""Batch evaluation: starting-position sets, perturbations, statistics, export."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .config import Calibration, RobotGeometry
from .dynamics import CONTACT_TOLERANCE, robot_corners
from .geometry import Pose, rects_overlap
from .runtime import RunLimits, RunResult, read_trajectory_jsonl, run_episode, write_trajectory_jsonl
from .solutions import SolutionParams, make_solution
from .world import Arena, Scenario, default_scenario, in_white

STARTS_SCHEMA = "cubesim.starts/1"
BATCH_SCHEMA = "cubesim.batch/1"
SUMMARY_CSV_SCHEMA = "cubesim.summary-csv/1"
RUNS_CSV_SCHEMA = "cubesim.runs-csv/1"
SUMMARY_FIELDS = ("solution", "N", "M", "SD", "failed")
RUNS_FIELDS = ("solution", "start", "x", "y", "heading", "status", "completion_time", "ticks", "removals")
MAJOR_HEADINGS = (0.0, 90.0, 180.0, 270.0)


class ConfigError(ValueError):
    """A start set or batch cannot be built from the given configuration."""


# -- start sets ----------------------------------------------------------------

@dataclass(frozen=True)
class Start:
    pose: Pose
    overrides: dict[str, Any] = field(default_factory=dict)  # scenario keys replaced for this start

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = self.pose.to_dict()
        if self.overrides:
            d["overrides"] = self.overrides
        return d

    @classmethod
    def from_dict(cls, d) -> Start:
        return cls(Pose.from_dict(d), dict(d.get("overrides", {})))


@dataclass(frozen=True)
class StartSet:
    name: str
    starts: tuple[Start, ...]
    provenance: str  # "grid", "random(seed=N)" or "file:<path>"

    def __len__(self) -> int:
        return len(self.starts)

    def __iter__(self):
        return iter(self.starts)

    def poses(self) -> list[Pose]:
        return [s.pose for s in self.starts]

    def to_dict(self) -> dict[str, Any]:
        return {"schema": STARTS_SCHEMA, "name": self.name, "provenance": self.provenance,
                "starts": [s.to_dict() for s in self.starts]}

    @classmethod
    def from_dict(cls, d, provenance: str | None = None) -> StartSet:
        if d.get("schema", STARTS_SCHEMA) != STARTS_SCHEMA:
            raise ConfigError(f"unsupported start-set schema {d.get('schema')!r}")
        try:
            starts = tuple(Start.from_dict(s) for s in d["starts"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed start set: {exc}") from exc
        return cls(d.get("name", "starts"), starts, provenance or d.get("provenance", "file"))


def load_starts(path: str | Path) -> StartSet:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read start file {path}: {exc}") from exc
    if isinstance(data, list):
        data = {"starts": data, "name": path.stem}
    return StartSet.from_dict(data, provenance=f"file:{path}")


def save_starts(starts: StartSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(starts.to_dict(), indent=2) + "\n")


def footprint_in_white(arena: Arena, pose: Pose, robot: RobotGeometry = RobotGeometry()) -> bool:
    return all(in_white(arena, x, y) for x, y in robot_corners(pose, robot))


def touches_cube(scenario: Scenario, pose: Pose, robot: RobotGeometry = RobotGeometry()) -> bool:
    footprint = robot_corners(pose, robot)
    return any(rects_overlap(footprint, c.corners(), CONTACT_TOLERANCE)
               for c in scenario.build_world().live_cubes())


def _valid_start(scenario: Scenario, pose: Pose, robot: RobotGeometry) -> bool:
    return footprint_in_white(scenario.arena, pose, robot) and not touches_cube(scenario, pose, robot)


def _grid_positions(x0: float, y0: float, x1: float, y1: float) -> list[tuple[float, float]]:
    # quincunx first (corners, centre), then the rest of a 3x3 and a 5x5 lattice
    xs = [x0 + (x1 - x0) * i / 4.0 for i in range(5)]
    ys = [y0 + (y1 - y0) * j / 4.0 for j in range(5)]
    order = [(0, 0), (4, 0), (0, 4), (4, 4), (2, 2), (2, 0), (0, 2), (4, 2), (2, 4)]
    order += [(i, j) for j in range(5) for i in range(5) if (i, j) not in order]
    return [(xs[i], ys[j]) for i, j in order]


def grid_starts(arena: Arena | None = None, count: int = 20, scenario: Scenario | None = None,
                robot: RobotGeometry = RobotGeometry(), inset: float = 15.0) -> StartSet:
    """Grid positions inset from the white-area edge, each in the four major headings.

    Start poses touching a cube are skipped; later lattice points fill in.
    """
    scenario = scenario or default_scenario()
    arena = arena or scenario.arena
    scenario = dataclasses.replace(scenario, arena=arena)
    if count < 1 or count % len(MAJOR_HEADINGS):
        raise ConfigError(f"grid count must be a positive multiple of 4, got {count}")
    x0, y0, x1, y1 = arena.white_bounds
    x0, y0, x1, y1 = x0 + inset, y0 + inset, x1 - inset, y1 - inset
    if x1 <= x0 or y1 <= y0:
        raise ConfigError("arena too small for the grid inset")
    starts = []
    for x, y in _grid_positions(x0, y0, x1, y1):
        for h in MAJOR_HEADINGS:
            pose = Pose(x, y, h)
            if _valid_start(scenario, pose, robot):
                starts.append(Start(pose))
                if len(starts) == count:
                    return StartSet(f"grid{count}", tuple(starts), "grid")
    raise ConfigError(f"arena too small: only {len(starts)} of {count} grid starts are free")


def random_starts(arena: Arena | None = None, count: int = 99, *, seed: int,
                  scenario: Scenario | None = None, robot: RobotGeometry = RobotGeometry(),
                  max_reject_rate: float = 0.99) -> StartSet:
    """Uniform positions over the white area with uniform headings, seeded."""
    scenario = scenario or default_scenario()
    arena = arena or scenario.arena
    scenario = dataclasses.replace(scenario, arena=arena)
    if count < 0:
        raise ConfigError("count must be non-negative")
    rng = random.Random(seed)
    x0, y0, x1, y1 = arena.white_bounds
    budget = math.ceil(count / (1.0 - max_reject_rate)) if count else 0
    starts: list[Start] = []
    attempts = 0
    while len(starts) < count:
        if attempts >= budget:
            raise ConfigError(f"rejection rate above {max_reject_rate:.0%} "
                              f"({len(starts)} of {count} starts after {attempts} draws)")
        attempts += 1
        pose = Pose(rng.uniform(x0, x1), rng.uniform(y0, y1), rng.uniform(0.0, 360.0))
        if _valid_start(scenario, pose, robot):
            starts.append(Start(pose))
    return StartSet(f"random{count}", tuple(starts), f"random(seed={seed})")


def perturb_rotation(starts: StartSet, degrees: float = 1.0) -> StartSet:
    """Offset every start heading; positive is counter-clockwise."""
    rotated = tuple(Start(Pose(s.pose.x, s.pose.y, s.pose.heading + degrees), s.overrides)
                    for s in starts)
    return StartSet(f"{starts.name}-rot{degrees:+g}", rotated, starts.provenance)


def perturb_motor(calibration: Calibration | None = None, right_gain: float = 1.01) -> Calibration:
    """Scale the right belt's speed contribution by ``right_gain``."""
    cal = calibration or Calibration()
    motion = dataclasses.replace(cal.motion, right_gain=cal.motion.right_gain * right_gain)
    return dataclasses.replace(cal, motion=motion)


# -- batches -------------------------------------------------------------------

def scenario_for(scenario: Scenario, start: Start) -> Scenario:
    if start.overrides:
        merged = scenario.to_dict()
        merged.update(start.overrides)
        scenario = Scenario.from_dict(merged)
    return scenario.with_start(start.pose)


def _run_one(job) -> RunResult:
    scenario, solution, params, limits, calibration = job
    return run_episode(scenario, make_solution(solution, params), limits, calibration)


def run_batch(starts: StartSet | Sequence[Start], solution: str, limits: RunLimits | None = None,
              calibration: Calibration | None = None, parallelism: int = 1,
              scenario: Scenario | None = None, params: SolutionParams | None = None) -> list[RunResult]:
    """One result per start, in start order, independent of ``parallelism``."""
    make_solution(solution, params)  # fail fast on a bad name
    if parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    scenario = scenario or default_scenario()
    jobs = [(scenario_for(scenario, s), solution, params, limits, calibration) for s in starts]
    if parallelism == 1 or len(jobs) < 2:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(parallelism, len(jobs))) as pool:
        return list(pool.map(_run_one, jobs))


@dataclass
class Batch:
    """Everything needed to rerun or perturb a batch, plus its results."""

    solution: str
    starts: StartSet
    results: list[RunResult]
    scenario: Scenario = field(default_factory=default_scenario)
    calibration: Calibration = field(default_factory=Calibration)
    limits: RunLimits = field(default_factory=RunLimits)
    params: SolutionParams = field(default_factory=SolutionParams)
    seed: int | None = None

    def manifest(self) -> dict[str, Any]:
        return {
            "solution": self.solution,
            "params": dataclasses.asdict(self.params),
            "scenario": self.scenario.to_dict(),
            "calibration": self.calibration.to_dict(),
            "limits": dataclasses.asdict(self.limits),
            "starts": self.starts.to_dict(),
            "seed": self.seed,
        }

    def summary(self) -> SummaryStats:
        return summarize(self.results)


def evaluate(solution: str, starts: StartSet, limits: RunLimits | None = None,
             calibration: Calibration | None = None, parallelism: int = 1,
             scenario: Scenario | None = None, params: SolutionParams | None = None,
             seed: int | None = None) -> Batch:
    scenario = scenario or default_scenario()
    calibration = calibration or Calibration()
    limits = limits or RunLimits()
    params = params or SolutionParams()
    results = run_batch(starts, solution, limits, calibration, parallelism, scenario, params)
    return Batch(solution, starts, results, scenario, calibration, limits, params, seed)


def rerun(batch: Batch, starts: StartSet | None = None, calibration: Calibration | None = None,
          parallelism: int = 1) -> Batch:
    """Same batch with the starts or calibration swapped, e.g. for a perturbation."""
    return evaluate(batch.solution, starts or batch.starts, batch.limits, calibration or batch.calibration,
                    parallelism, batch.scenario, batch.params, batch.seed)


# -- statistics ----------------------------------------------------------------

@dataclass(frozen=True)
class SummaryStats:
    n: int  # completed runs
    failed: int
    mean: float | None  # None when undefined
    sd: float | None  # sample SD, n - 1 denominator

    @property
    def defined(self) -> bool:
        return self.mean is not None


def summarize(results: Iterable[RunResult]) -> SummaryStats:
    """Completed runs only; failures are counted but never enter mean or SD."""
    times, failed = [], 0
    for r in results:
        if r.failed:
            failed += 1
        else:
            times.append(r.completion_time)
    mean = statistics.fmean(times) if times else None
    sd = statistics.stdev(times) if len(times) > 1 else None
    return SummaryStats(len(times), failed, mean, sd)


@dataclass(frozen=True)
class PairwiseDiff:
    diffs: tuple[tuple[int, float], ...]  # (start index, |t_a - t_b|)
    mean: float | None
    sd: float | None

    @property
    def empty(self) -> bool:
        return not self.diffs

    @property
    def values(self) -> list[float]:
        return [d for _, d in self.diffs]


def pairwise_diffs(results_a: Sequence[RunResult], results_b: Sequence[RunResult]) -> PairwiseDiff:
    """Absolute per-start time differences over starts completed in both arms."""
    if len(results_a) != len(results_b):
        raise ValueError("pairwise diffs need results over the same start set")
    diffs = tuple((i, abs(a.completion_time - b.completion_time))
                  for i, (a, b) in enumerate(zip(results_a, results_b))
                  if not a.failed and not b.failed)
    values = [d for _, d in diffs]
    mean = statistics.fmean(values) if values else None
    sd = statistics.stdev(values) if len(values) > 1 else None
    return PairwiseDiff(diffs, mean, sd)


# -- export --------------------------------------------------------------------

def _num(v: float | None) -> str:
    return "" if v is None else repr(v)


def write_summary_csv(rows: Sequence[tuple[str, SummaryStats]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {SUMMARY_CSV_SCHEMA}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for name, s in rows:
            w.writerow([name, s.n, _num(s.mean), _num(s.sd), s.failed])


def read_summary_csv(path: str | Path) -> list[tuple[str, SummaryStats]]:
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    out = []
    for row in csv.DictReader(lines):
        f = lambda k: float(row[k]) if row[k] else None  # noqa: E731
        out.append((row["solution"], SummaryStats(int(row["N"]), int(row["failed"]), f("M"), f("SD"))))
    return out


def write_runs_csv(batch: Batch, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {RUNS_CSV_SCHEMA}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUNS_FIELDS)
        for i, (s, r) in enumerate(zip(batch.starts, batch.results)):
            removals = ";".join(f"{c}@{t}" for c, t in r.removals)
            w.writerow([batch.solution, i, repr(s.pose.x), repr(s.pose.y), repr(s.pose.heading),
                        r.status, _num(r.completion_time), r.ticks, removals])


def _trajectory_name(index: int) -> str:
    return f"run_{index:03d}.jsonl"


def write_batch(batch: Batch, out_dir: str | Path, trajectories: bool = True) -> Path:
    """results.json (manifest + results), summary.csv, runs.csv, trajectories/*.jsonl."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        doc = {"schema": BATCH_SCHEMA, "manifest": batch.manifest(),
               "summary": dataclasses.asdict(batch.summary()),
               "results": [r.to_dict(trajectory=False) for r in batch.results]}
        (out / "results.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        write_summary_csv([(batch.solution, batch.summary())], out / "summary.csv")
        write_runs_csv(batch, out / "runs.csv")
        if trajectories:
            tdir = out / "trajectories"
            tdir.mkdir(exist_ok=True)
            for i, r in enumerate(batch.results):
                write_trajectory_jsonl(r, tdir / _trajectory_name(i))
    except OSError as exc:
        raise OSError(f"cannot write batch output to {out}: {exc}") from exc
    return out


def read_batch(out_dir: str | Path) -> Batch:
    out = Path(out_dir)
    path = out / "results.json"
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read batch results {path}: {exc}") from exc
    if doc.get("schema") != BATCH_SCHEMA:
        raise ConfigError(f"{path} is not a {BATCH_SCHEMA} file")
    m = doc["manifest"]
    results = []
    for i, rd in enumerate(doc["results"]):
        tpath = out / "trajectories" / _trajectory_name(i)
        if tpath.exists():
            results.append(read_trajectory_jsonl(tpath))
        else:
            results.append(RunResult.from_dict(rd))
    return Batch(
        solution=m["solution"],
        starts=StartSet.from_dict(m["starts"]),
        results=results,
        scenario=Scenario.from_dict(m["scenario"]),
        calibration=Calibration.from_dict(m["calibration"]),
        limits=RunLimits(**m["limits"]),
        params=SolutionParams.from_dict(m["params"]),
        seed=m.get("seed"),
    )


def format_table(rows: Sequence[tuple[str, SummaryStats]], reference: str | None = None) -> str:
    """Fixed-width N / M / SD / failed table, optionally with M relative to one row."""
    ref = dict(rows).get(reference) if reference else None
    head = f"{'solution':<14}{'N':>5}{'M':>10}{'SD':>10}{'failed':>8}"
    if ref is not None:
        head += f"{'M/ref':>8}"
    lines = [head]
    for name, s in rows:
        m = f"{s.mean:10.2f}" if s.mean is not None else f"{'-':>10}"
        sd = f"{s.sd:10.2f}" if s.sd is not None else f"{'-':>10}"
        line = f"{name:<14}{s.n:>5}{m}{sd}{s.failed:>8}"
        if ref is not None:
            ratio = s.mean / ref.mean if s.mean is not None and ref.mean else None
            line += f"{ratio:8.3f}" if ratio is not None else f"{'-':>8}"
        lines.append(line)
    return "\n".join(lines)
