"""Counter-based random streams.

Every random number used by the simulator is a pure function of
``(seed, stream, purpose, timestep, neuron)``, hashed with the SplitMix64
finalizer. Draws therefore do not depend on evaluation order, which keeps the
scalar engine, the batched engine and multi-threaded runs bit-identical.

The hash chain is::

    h = mix(seed); h = mix(h ^ stream); h = mix(h ^ purpose)
    h = mix(h ^ timestep); h = mix(h ^ neuron)
    u = (h >> 11) * 2**-53            # uniform on [0, 1)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)

# draw purposes
ENCODE = 0
EXCITATORY = 1
INHIBITORY = 2


def _mix(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _as_u64(x) -> np.ndarray:
    a = np.asarray(x)
    if a.dtype.kind == "i" and np.any(a < 0):
        raise ValueError("counter values must be non-negative")
    return a.astype(np.uint64)


def counter_uniform(seed, stream, purpose, timestep, neuron) -> np.ndarray:
    """Uniform [0, 1) doubles for broadcast arrays of counters."""
    with np.errstate(over="ignore"):
        h = _mix(np.atleast_1d(_as_u64(seed)))
        for c in (stream, purpose, timestep, neuron):
            h = _mix(h ^ _as_u64(c))
        return (h >> _S11).astype(np.float64) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class SpikeRng:
    """A seeded stream of draws for one simulation (one image).

    ``stream`` separates images that share a global seed.
    """

    seed: int
    stream: int = 0

    def uniform(self, purpose: int, timestep: int, neuron) -> np.ndarray:
        return counter_uniform(self.seed, self.stream, purpose, timestep, neuron)

    def uniform1(self, purpose: int, timestep: int, neuron: int) -> float:
        return float(self.uniform(purpose, timestep, neuron)[0])
