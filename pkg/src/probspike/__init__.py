"""Probabilistic spike propagation for fully connected spiking networks."""

from .memory import AccessLedger, PlacementPolicy, maps, offchip_fraction_vs_det
from .network import Network, ResetMode, classify, step
from .propagation import Strategy, expected_termpt
from .rng import SpikeRng
from .synapses import SortedSynapseList, build_sorted_lists, fit_pwl

__all__ = [
    "AccessLedger",
    "Network",
    "PlacementPolicy",
    "ResetMode",
    "SortedSynapseList",
    "SpikeRng",
    "Strategy",
    "build_sorted_lists",
    "classify",
    "expected_termpt",
    "fit_pwl",
    "maps",
    "offchip_fraction_vs_det",
    "step",
]
