"""Detection quality as noise grows: one planted event, greedy and random (plus optional others).

    python3 scripts/run_noise_sweep.py --grid 0 5 10 20 40 --repetitions 10 -o results/noise.csv
"""

import argparse
from pathlib import Path

from eventtree.maxtree import ALGORITHMS
from eventtree.synth_eval import SynthParams, run_sweep, write_sweep_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--grid", type=float, nargs="+", default=[0, 5, 10, 20, 40])
    ap.add_argument("--algorithms", nargs="+", choices=ALGORITHMS, default=list(ALGORITHMS))
    ap.add_argument("--event-size", type=int, default=20)
    ap.add_argument("--repetitions", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-o", "--output", default="results/noise_sweep.csv")
    args = ap.parse_args()

    rows = run_sweep("noise", args.grid, args.algorithms, args.repetitions, args.seed,
                     SynthParams(event_size=args.event_size))
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, args.output)
    print(f"{'noise':>6} {'algorithm':>14} {'f1':>6} {'runtime_s':>10}")
    for r in rows:
        print(f"{r.axis_value:6g} {r.algorithm:>14} {r.f1:6.3f} {r.runtime_s:10.4f}")
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
