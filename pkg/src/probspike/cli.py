"""Command-line entry point: ``probspike gen|run-accuracy|run-maps|inspect``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .encoding import DatasetError, save_dataset
from .experiments import (
    ExperimentSpec,
    accuracy_summary,
    maps_summary,
    run_accuracy_experiment,
    run_maps_experiment,
    to_csv,
)
from .generate import PROFILES, gen_dataset, gen_network, parse_layers
from .netio import NetworkFormatError, load_network, save_network
from .network import ResetMode
from .propagation import expected_termpt


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _strategies(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> None:
    reset = ResetMode.SUBTRACT if args.reset == "subtract" else ResetMode.ZERO
    if args.profile == "trained-import" and not args.import_path:
        raise ValueError("--profile trained-import requires --import PATH")
    layers = parse_layers(args.layers) if args.layers else None
    if layers is None and args.profile != "trained-import":
        raise ValueError("--layers is required for synthetic profiles")
    net = gen_network(
        args.profile,
        layers,
        args.seed,
        inhibitory_fraction=args.inhibitory_fraction,
        threshold_scale=args.threshold_scale,
        reset=reset,
        source=args.import_path,
    )
    save_network(net, args.out)
    print(f"wrote {args.out}: layers {'-'.join(map(str, net.layer_sizes))}")
    if args.dataset_out:
        data = gen_dataset(net.layer_sizes[0], args.samples, net.layer_sizes[-1], args.seed)
        save_dataset(data, args.dataset_out)
        print(f"wrote {args.dataset_out}: {args.samples} samples")


def _spec(args, strategies_default) -> ExperimentSpec:
    return ExperimentSpec(
        network=args.network,
        dataset=args.dataset,
        strategies=_strategies(args.strategy or strategies_default),
        checkpoints=_ints(args.checkpoints) if args.checkpoints else [args.steps or 1000],
        onchip=_floats(args.onchip),
        seeds=_ints(args.seed),
        samples=args.samples,
        steps=args.steps,
        rate_scale=args.rate_scale,
        threads=args.threads,
        instrument=_ints(args.layers) if args.layers else None,
    )


def cmd_run_accuracy(args) -> None:
    spec = _spec(args, "det,bs,ri,tr,pwl")
    rows = run_accuracy_experiment(spec)
    _emit(to_csv(rows), args.out)
    print(accuracy_summary(rows), file=sys.stderr if not args.out else sys.stdout)


def cmd_run_maps(args) -> None:
    if args.steps is None:
        args.steps = 100
    spec = _spec(args, "det,bs,ri,tr,pwl")
    rows = run_maps_experiment(spec)
    _emit(to_csv(rows), args.out)
    print(maps_summary(rows), file=sys.stderr if not args.out else sys.stdout)


def cmd_inspect(args) -> None:
    net = load_network(args.network)
    rows = []
    for l in range(net.n_layers - 1):
        for j in net.layer_range(l):
            for sign, lst in zip(("exc", "inh"), net.synapses[j]):
                if lst.n_max == 0:
                    continue
                e = expected_termpt(lst)
                rows.append(
                    {
                        "neuron": j,
                        "layer": l,
                        "sign": sign,
                        "n_max": lst.n_max,
                        "w_extreme": lst.w_extreme,
                        "expected_termpt": e,
                        "expected_termpt_norm": e / lst.n_max,
                        **{
                            f"w_norm@{q:g}": float(abs(lst.weights[min(int(q * lst.n_max), lst.n_max - 1)]) / abs(lst.w_extreme))
                            for q in (0.1, 0.2, 0.4, 0.6, 0.8)
                        },
                    }
                )
    _emit(to_csv(rows), args.out)
    norm = np.array([r["expected_termpt_norm"] for r in rows])
    print(
        f"{args.network}: layers {'-'.join(map(str, net.layer_sizes))}, reset {net.reset.name.lower()}, "
        f"{len(rows)} non-empty lists, mean E[termpt]/n_max {norm.mean():.4f}",
        file=sys.stderr if not args.out else sys.stdout,
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="probspike", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic network (and optional dataset)")
    g.add_argument("--profile", choices=PROFILES, default="exponential")
    g.add_argument("--layers", help="layer sizes, e.g. 784-1200-1200-10")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--import", dest="import_path", help="plain-text network for trained-import")
    g.add_argument("--inhibitory-fraction", type=float, default=0.2)
    g.add_argument("--threshold-scale", type=float, default=1.0)
    g.add_argument("--reset", choices=("zero", "subtract"), default="zero")
    g.add_argument("--dataset-out", help="also write a random-intensity dataset CSV")
    g.add_argument("--samples", type=int, default=100)
    g.set_defaults(func=cmd_gen)

    def experiment(name, help_, func, **defaults):
        e = sub.add_parser(name, help=help_)
        e.add_argument("--network", required=True)
        e.add_argument("--dataset", required=True)
        e.add_argument("--strategy", help="comma list of det,scan,bs,ri,tr,pwl")
        e.add_argument("--steps", type=int, default=defaults.get("steps"))
        e.add_argument("--checkpoints", default=defaults.get("checkpoints"))
        e.add_argument("--onchip", default="0,0.2,0.4,0.6,0.8")
        e.add_argument("--seed", default="0", help="comma list of seeds")
        e.add_argument("--samples", type=int)
        e.add_argument("--rate-scale", type=float, default=1.0)
        e.add_argument("--threads", type=int, default=1)
        e.add_argument("--layers", help="presynaptic layers to instrument (comma list)")
        e.add_argument("--out", help="CSV output path (default stdout)")
        e.set_defaults(func=func)

    experiment("run-accuracy", "accuracy vs timesteps per strategy", cmd_run_accuracy, checkpoints="100,200,300,1000")
    experiment("run-maps", "MAPS vs on-chip fraction per strategy", cmd_run_maps)

    i = sub.add_parser("inspect", help="per-neuron profile statistics")
    i.add_argument("--network", required=True)
    i.add_argument("--out")
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (NetworkFormatError, DatasetError, ValueError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
