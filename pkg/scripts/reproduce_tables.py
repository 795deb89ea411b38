"""Print the evaluation tables: grid and random starts, then both perturbations.

    python scripts/reproduce_tables.py [--seed 0] [--parallel 1] [--out DIR]

With --out the summary and pairwise CSVs are written there as well.
"""

import argparse
import csv
import sys
from pathlib import Path

from cubesim.harness import (
    format_table, grid_starts, pairwise_diffs, perturb_motor, perturb_rotation, random_starts,
    run_batch, summarize, write_summary_csv,
)
from cubesim.runtime import RunLimits
from cubesim.solutions import SOLUTIONS

ORDER = ("ultrasound1", "ultrasound2", "blink")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0, help="seed for the random start set")
    ap.add_argument("--parallel", type=int, default=1)
    ap.add_argument("--timeout", type=float, default=300.0)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args(argv)
    assert set(ORDER) == set(SOLUTIONS)

    limits = RunLimits(timeout_s=args.timeout, stride=100_000)
    grid = grid_starts()
    sets = {"grid20": grid, f"random99(seed={args.seed})": random_starts(seed=args.seed)}
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)

    baseline = {}
    for label, starts in sets.items():
        rows = []
        for name in ORDER:
            results = run_batch(starts, name, limits, parallelism=args.parallel)
            if starts is grid:
                baseline[name] = results
            rows.append((name, summarize(results)))
        print(f"\n{label} starts, completion time in seconds")
        print(format_table(rows, reference="blink"))
        if args.out:
            write_summary_csv(rows, args.out / f"summary-{label.split('(')[0]}.csv")

    perturbations = {
        "rotated +1 deg": dict(starts=perturb_rotation(grid, 1.0)),
        "right gain 1.01": dict(starts=grid, calibration=perturb_motor(right_gain=1.01)),
    }
    for label, kw in perturbations.items():
        print(f"\ngrid20 {label}: pairwise |t_base - t_pert| over mutually completed starts")
        print(f"{'solution':<14}{'N':>5}{'pert M':>10}{'pert SD':>10}{'diff M':>10}{'diff SD':>10}")
        table = []
        for name in ORDER:
            pert = run_batch(kw["starts"], name, limits, kw.get("calibration"), args.parallel)
            s, d = summarize(pert), pairwise_diffs(baseline[name], pert)
            table.append((name, s, d))
            cells = [s.mean, s.sd, d.mean, d.sd]
            print(f"{name:<14}{len(d.diffs):>5}" + "".join(f"{c:10.2f}" if c is not None else f"{'-':>10}"
                                                          for c in cells))
        if args.out:
            slug = "rot" if "rot" in label else "gain"
            with open(args.out / f"pairwise-{slug}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("solution", "pairs", "pert_M", "pert_SD", "diff_M", "diff_SD"))
                for name, s, d in table:
                    w.writerow((name, len(d.diffs), s.mean, s.sd, d.mean, d.sd))
    return 0


if __name__ == "__main__":
    sys.exit(main())
