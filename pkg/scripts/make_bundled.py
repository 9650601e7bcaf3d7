"""Regenerate the bundled synthetic networks and their random datasets.

    python scripts/make_bundled.py --out-dir data

The trained digits classifier comes from scripts/train_digits.py instead.
"""

import argparse
from pathlib import Path

from probspike.encoding import save_dataset
from probspike.generate import gen_dataset, gen_network
from probspike.netio import save_network

BUNDLED = [
    # (stem, profile, layers, samples)
    ("exp_128-256-256-10", "exponential", [128, 256, 256, 10], 200),
    ("linear_64-128-10", "linear", [64, 128, 10], 200),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="data")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for stem, profile, layers, samples in BUNDLED:
        net = gen_network(profile, layers, args.seed)
        save_network(net, out / f"{stem}.snn")
        save_dataset(gen_dataset(layers[0], samples, layers[-1], args.seed), out / f"{stem}.csv")
        print(f"wrote {out / stem}.snn and .csv")


if __name__ == "__main__":
    main()
