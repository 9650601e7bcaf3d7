"""Regenerate the MAPS and accuracy tables from the bundled data.

    python scripts/run_tables.py --out-dir results [--quick]

Writes maps_exp.csv (strategy x on-chip fraction on the exponential net)
and accuracy_digits.csv (strategy x seed x checkpoint on the digits net).
"""

import argparse
from pathlib import Path

from probspike.experiments import (
    ExperimentSpec,
    accuracy_summary,
    maps_summary,
    run_accuracy_experiment,
    run_maps_experiment,
    write_csv,
)

DATA = Path(__file__).resolve().parents[1] / "data"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--quick", action="store_true", help="200 images, 1 seed")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    exp = DATA / "exp_128-256-256-10.snn"
    rows = run_maps_experiment(
        ExperimentSpec(str(exp), str(exp.with_suffix(".csv")), steps=100, threads=args.threads)
    )
    write_csv(rows, out / "maps_exp.csv")
    print(maps_summary(rows), end="\n\n")

    rows = run_accuracy_experiment(
        ExperimentSpec(
            str(DATA / "digits_fc.snn"),
            str(DATA / "digits_test.csv"),
            seeds=[0] if args.quick else [0, 1, 2, 3, 4],
            samples=200 if args.quick else None,
            threads=args.threads,
        )
    )
    write_csv(rows, out / "accuracy_digits.csv")
    print(accuracy_summary(rows))


if __name__ == "__main__":
    main()
