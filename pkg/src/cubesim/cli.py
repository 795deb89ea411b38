"""Command line entry point: run, compare, perturb, plot."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
import time
from pathlib import Path

from .config import load_calibration
from .harness import (
    Batch, ConfigError, StartSet, evaluate, format_table, grid_starts, load_starts,
    pairwise_diffs, perturb_motor, perturb_rotation, random_starts, read_batch, rerun,
    write_batch, write_summary_csv,
)
from .plot import export_trajectory_svg
from .runtime import RunLimits, read_trajectory_jsonl
from .solutions import SOLUTIONS, SolutionParams
from .world import Scenario, load_scenario

log = logging.getLogger("cubesim")


def resolve_starts(value: str, seed: int, scenario: Scenario) -> StartSet:
    m = re.fullmatch(r"(grid|random)(\d+)", value)
    if m:
        kind, count = m.group(1), int(m.group(2))
        if kind == "grid":
            return grid_starts(scenario.arena, count, scenario)
        return random_starts(scenario.arena, count, seed=seed, scenario=scenario)
    if not Path(value).exists():
        raise ConfigError(f"--starts must be gridN, randomN or an existing file, got {value!r}")
    return load_starts(value)


def _load_params(path: str | None) -> SolutionParams:
    if path is None:
        return SolutionParams()
    try:
        return SolutionParams.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read solution params {path}: {exc}") from exc


def _common(args) -> dict:
    scenario = load_scenario(args.scenario)
    return dict(
        starts=resolve_starts(args.starts, args.seed, scenario),
        limits=RunLimits(timeout_s=args.timeout, stride=args.stride),
        calibration=load_calibration(args.calibration),
        parallelism=args.parallel,
        scenario=scenario,
        params=_load_params(args.params),
        seed=args.seed,
    )


def _run_solution(name: str, common: dict, out: Path, trajectories: bool) -> Batch:
    t0 = time.perf_counter()
    batch = evaluate(name, **common)
    write_batch(batch, out, trajectories)
    log.info("%s: %d runs in %.1f s -> %s", name, len(batch.results), time.perf_counter() - t0, out)
    return batch


def cmd_run(args) -> int:
    batch = _run_solution(args.solution, _common(args), Path(args.out), not args.no_trajectories)
    print(format_table([(batch.solution, batch.summary())]))
    return 0


def cmd_compare(args) -> int:
    names = [n.strip() for n in args.solutions.split(",") if n.strip()]
    unknown = [n for n in names if n not in SOLUTIONS]
    if not names or unknown:
        raise ConfigError(f"unknown solutions {unknown}; choose from {sorted(SOLUTIONS)}")
    common = _common(args)
    out = Path(args.out)
    rows = []
    for name in names:
        batch = _run_solution(name, common, out / name, not args.no_trajectories)
        rows.append((name, batch.summary()))
    write_summary_csv(rows, out / "summary.csv")
    print(format_table(rows, reference=names[-1]))
    return 0


def _baseline_dirs(path: Path) -> list[Path]:
    if (path / "results.json").exists():
        return [path]
    dirs = sorted(p for p in path.iterdir() if (p / "results.json").exists()) if path.is_dir() else []
    if not dirs:
        raise ConfigError(f"no batch results under {path}")
    return dirs


def cmd_perturb(args) -> int:
    base_root = Path(args.baseline)
    if args.rotate_deg is not None:
        tag = f"rot{args.rotate_deg:+g}"
    else:
        tag = f"gain{args.right_motor_gain:g}"
    out_root = Path(args.out) if args.out else base_root.with_name(f"{base_root.name}-{tag}")
    header = f"{'solution':<14}{'N':>5}{'pert M':>10}{'pert SD':>10}{'diff M':>10}{'diff SD':>10}{'pairs':>7}"
    lines = [header]
    for bdir in _baseline_dirs(base_root):
        base = read_batch(bdir)
        if args.rotate_deg is not None:
            pert = rerun(base, starts=perturb_rotation(base.starts, args.rotate_deg), parallelism=args.parallel)
        else:
            pert = rerun(base, calibration=perturb_motor(base.calibration, args.right_motor_gain),
                         parallelism=args.parallel)
        out = out_root if bdir == base_root else out_root / bdir.name
        write_batch(pert, out, not args.no_trajectories)
        diff = pairwise_diffs(base.results, pert.results)
        with open(out / "pairwise.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("start", "baseline", "perturbed", "abs_diff"))
            for i, d in diff.diffs:
                w.writerow((i, repr(base.results[i].completion_time), repr(pert.results[i].completion_time), repr(d)))
        s = pert.summary()
        cell = lambda v: f"{v:10.2f}" if v is not None else f"{'-':>10}"  # noqa: E731
        lines.append(f"{base.solution:<14}{s.n:>5}{cell(s.mean)}{cell(s.sd)}{cell(diff.mean)}{cell(diff.sd)}"
                     f"{len(diff.diffs):>7}")
    print("\n".join(lines))
    return 0


def cmd_plot(args) -> int:
    run = Path(args.run)
    if run.is_dir():
        run = run / "trajectories" / f"run_{args.index:03d}.jsonl"
    result = read_trajectory_jsonl(run)
    scenario = None
    if args.scenario:
        scenario = load_scenario(args.scenario)
    elif (run.parent.parent / "results.json").exists():
        scenario = Scenario.from_dict(json.loads((run.parent.parent / "results.json").read_text())["manifest"]["scenario"])
    out = Path(args.out) if args.out else run.with_suffix(".svg")
    export_trajectory_svg(result, out, scenario)
    print(out)
    return 0


def _add_batch_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--starts", default="grid20", help="grid20, random99 (any count) or a start-set JSON file")
    p.add_argument("--seed", type=int, default=0, help="seed for random start sets")
    p.add_argument("--calibration", help="calibration JSON (default: built-in constants)")
    p.add_argument("--scenario", help="scenario JSON (default: three-cube layout)")
    p.add_argument("--params", help="solution parameter overrides, JSON")
    p.add_argument("--timeout", type=float, default=300.0, help="simulated seconds per episode")
    p.add_argument("--stride", type=int, default=10, help="trajectory sampling stride in ticks")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--parallel", type=int, default=1, help="worker processes")
    p.add_argument("--no-trajectories", action="store_true", help="skip per-run JSONL files")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cubesim", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one solution over a start set")
    p.add_argument("--solution", required=True, choices=sorted(SOLUTIONS))
    _add_batch_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run several solutions over the same start set")
    p.add_argument("--solutions", default="ultrasound1,ultrasound2,blink")
    _add_batch_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("perturb", help="rerun a baseline with a perturbation, report pairwise diffs")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--rotate-deg", type=float, help="start heading offset, CCW positive")
    g.add_argument("--right-motor-gain", type=float, help="right belt gain, e.g. 1.01")
    p.add_argument("--baseline", required=True, help="directory written by run or compare")
    p.add_argument("--out", help="output directory (default: next to the baseline)")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--no-trajectories", action="store_true")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("plot", help="render a run trajectory as SVG")
    p.add_argument("--run", required=True, help="trajectory JSONL, or a batch directory with --index")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--scenario")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
