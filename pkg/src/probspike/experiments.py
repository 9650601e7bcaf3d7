"""Experiment grids: accuracy vs timesteps and MAPS vs on-chip fraction."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .batch import BatchSimulator, build_tables, classify_counts
from .encoding import Dataset, DatasetError, RateEncoder, load_dataset
from .memory import AccessLedger, PlacementPolicy, maps, merge_all, offchip_fraction_vs_det
from .netio import load_network
from .network import Network
from .propagation import Strategy


@dataclass
class ExperimentSpec:
    network: str
    dataset: str
    strategies: list[str] = field(default_factory=lambda: ["det", "bs", "ri", "tr", "pwl"])
    checkpoints: list[int] = field(default_factory=lambda: [100, 200, 300, 1000])
    onchip: list[float] = field(default_factory=lambda: [0.0, 0.2, 0.4, 0.6, 0.8])
    seeds: list[int] = field(default_factory=lambda: [0])
    samples: int | None = None
    steps: int | None = None
    rate_scale: float = 1.0
    threads: int = 1
    instrument: list[int] | None = None
    chunk: int = 500

    def __post_init__(self):
        self.strategies = [Strategy.parse(s).value for s in self.strategies]
        if "det" not in self.strategies:
            raise ValueError("strategies must include det (the normalization baseline)")
        if not self.checkpoints or any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ValueError(f"checkpoints must be strictly increasing, got {self.checkpoints}")
        if self.checkpoints[0] < 1:
            raise ValueError("checkpoints must be positive")
        for f in self.onchip:
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"on-chip fraction {f} outside [0, 1]")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def run_steps(self) -> int:
        return self.steps if self.steps is not None else self.checkpoints[-1]


def load_inputs(spec: ExperimentSpec) -> tuple[Network, Dataset]:
    net = load_network(spec.network)
    data = load_dataset(spec.dataset).head(spec.samples)
    if data.intensities.shape[1] != net.layer_sizes[0]:
        raise DatasetError(
            f"dataset has {data.intensities.shape[1]} inputs but network input layer has {net.layer_sizes[0]}"
        )
    if len(data) == 0:
        raise DatasetError(f"{spec.dataset}: no samples")
    return net, data


def simulate(net, tables, strategy, data: Dataset, seed, checkpoints, fractions, spec: ExperimentSpec):
    """Run every image once; returns ({checkpoint: counts}, [ledger per fraction]).

    Images are split into chunks that may run on worker threads; each chunk
    owns its simulator and ledgers, merged afterwards in chunk order.
    """
    encoder = RateEncoder(spec.rate_scale)
    bounds = [(s, min(s + spec.chunk, len(data))) for s in range(0, len(data), spec.chunk)]

    def work(lo_hi):
        lo, hi = lo_hi
        ledgers = [AccessLedger(PlacementPolicy(f)) for f in fractions]
        sim = BatchSimulator(net, strategy, ledgers, spec.instrument, tables)
        snaps = sim.run(data.intensities[lo:hi], seed, np.arange(lo, hi), checkpoints, encoder)
        return snaps, ledgers

    if spec.threads > 1:
        with ThreadPoolExecutor(spec.threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    counts = {c: np.concatenate([p[0][c] for p in parts]) for c in checkpoints}
    ledgers = [merge_all(p[1][k] for p in parts) for k in range(len(fractions))]
    return counts, ledgers


def _params(spec: ExperimentSpec, n_samples: int) -> dict:
    return {
        "network": Path(spec.network).name,
        "dataset": Path(spec.dataset).name,
        "samples": n_samples,
        "rate_scale": spec.rate_scale,
    }


def run_accuracy_experiment(spec: ExperimentSpec) -> list[dict]:
    """Accuracy and agreement with DET per (strategy, seed, checkpoint).

    One continuous simulation per image; spike counts accumulate and are read
    out at every checkpoint. Rows with ``seed == "mean"`` average over seeds.
    """
    net, data = load_inputs(spec)
    tables = build_tables(net)
    base = _params(spec, len(data))
    order = ["det"] + [s for s in spec.strategies if s != "det"]
    rows = []
    for seed in spec.seeds:
        preds = {}
        for strat in order:
            counts, _ = simulate(net, tables, strat, data, seed, spec.checkpoints, [], spec)
            preds[strat] = {c: classify_counts(counts[c]) for c in spec.checkpoints}
        for strat in spec.strategies:
            for c in spec.checkpoints:
                p = preds[strat][c]
                rows.append(
                    {
                        **base,
                        "strategy": strat,
                        "seed": seed,
                        "checkpoint": c,
                        "accuracy": float(np.mean(p == data.labels)),
                        "agreement_with_det": float(np.mean(p == preds["det"][c])),
                        "acc_gap_vs_det": float(abs(np.mean(p == data.labels) - np.mean(preds["det"][c] == data.labels))),
                    }
                )
    for strat in spec.strategies:
        for c in spec.checkpoints:
            sel = [r for r in rows if r["strategy"] == strat and r["checkpoint"] == c]
            rows.append(
                {
                    **base,
                    "strategy": strat,
                    "seed": "mean",
                    "checkpoint": c,
                    **{k: float(np.mean([r[k] for r in sel])) for k in ("accuracy", "agreement_with_det", "acc_gap_vs_det")},
                }
            )
    return rows


def run_maps_experiment(spec: ExperimentSpec) -> list[dict]:
    """Average MAPS and DET-normalized off-chip reads per (strategy, fraction)."""
    net, data = load_inputs(spec)
    tables = build_tables(net)
    base = _params(spec, len(data))
    fractions = sorted(set(spec.onchip) | {0.0})
    steps = spec.run_steps
    ledgers = {}
    for strat in spec.strategies:
        per_seed = [simulate(net, tables, strat, data, seed, [steps], fractions, spec)[1] for seed in spec.seeds]
        ledgers[strat] = {f: merge_all(ls[k] for ls in per_seed) for k, f in enumerate(fractions)}
    det0 = ledgers["det"][0.0]
    layers = "all" if spec.instrument is None else "+".join(str(l) for l in spec.instrument)
    rows = []
    for strat in spec.strategies:
        for f in spec.onchip:
            led = ledgers[strat][f]
            rows.append(
                {
                    **base,
                    "strategy": strat,
                    "onchip_fraction": f,
                    "steps": steps,
                    "seeds": " ".join(str(s) for s in spec.seeds),
                    "layers": layers,
                    **{k: getattr(led, k) for k in AccessLedger.COUNTERS},
                    "maps": maps(led),
                    "offchip_norm": offchip_fraction_vs_det(led, det0),
                }
            )
    return rows


def format_float(v):
    if isinstance(v, float):
        return repr(round(v, 12))
    return v


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\r\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: format_float(v) for k, v in r.items()})
    return buf.getvalue()


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as f:
        f.write(to_csv(rows))


def accuracy_summary(rows: list[dict]) -> str:
    lines = ["strategy  checkpoint  accuracy  agreement  |gap|"]
    for r in rows:
        if r["seed"] == "mean":
            lines.append(
                f"{r['strategy']:<9} {r['checkpoint']:>10}  {r['accuracy']:8.4f}  "
                f"{r['agreement_with_det']:9.4f}  {r['acc_gap_vs_det']:.4f}"
            )
    return "\n".join(lines)


def maps_summary(rows: list[dict]) -> str:
    fractions = sorted({r["onchip_fraction"] for r in rows})
    head = "strategy  avg MAPS  " + "  ".join(f"f={f:<4g}" for f in fractions)
    lines = [head]
    for strat in dict.fromkeys(r["strategy"] for r in rows):
        sel = {r["onchip_fraction"]: r for r in rows if r["strategy"] == strat}
        first = sel[fractions[0]]
        cells = "  ".join(f"{sel[f]['offchip_norm']:6.3f}" for f in fractions)
        lines.append(f"{strat:<9} {first['maps']:8.1f}  {cells}")
    return "\n".join(lines)
