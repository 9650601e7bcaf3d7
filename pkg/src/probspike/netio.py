"""Network persistence.

Binary ``SNNPROB1`` layout (little-endian; u32 integers, f64 reals)::

    header   magic "SNNPROB1" | version u32 | layer count u32 |
             layer sizes u32 x L | flags u32 (bit 0: reset by subtraction)
    neuron   threshold f64
             excitatory count u32 | (weight f64, target u32) x count
             inhibitory count u32 | (weight f64, target u32) x count
             excitatory PWL: used u32 | (position u32, weight f64) x 6
             inhibitory PWL: used u32 | (position u32, weight f64) x 6

Neuron records follow global neuron order; synapse pairs are stored in
sorted order so loading needs no preprocessing.

Text import format (for hand-authored networks)::

    # comment
    layers 4 3 2
    threshold 1 0.8          # per-layer threshold, layers 1..L-1
    reset zero               # or: subtract
    weights 0                # then one row per presynaptic neuron
    0.1 -0.2 0.0
    ...
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .network import Network, ResetMode
from .synapses import PWL_SLOTS, PwlProfile, SortedSynapseList

MAGIC = b"SNNPROB1"
VERSION = 1
FLAG_SUBTRACT = 1

_PAIR = np.dtype([("w", "<f8"), ("i", "<u4")])
_BREAK = np.dtype([("p", "<u4"), ("w", "<f8")])


class NetworkFormatError(ValueError):
    """Malformed network file; the message names the offending record."""


def _pairs(lst: SortedSynapseList) -> bytes:
    a = np.empty(lst.n_max, dtype=_PAIR)
    a["w"] = lst.weights
    a["i"] = lst.indices
    return struct.pack("<I", lst.n_max) + a.tobytes()


def _breaks(pwl: PwlProfile) -> bytes:
    a = np.zeros(PWL_SLOTS, dtype=_BREAK)
    m = len(pwl.positions)
    a["p"][:m] = pwl.positions
    a["w"][:m] = pwl.weights
    return struct.pack("<I", m) + a.tobytes()


def dumps(network: Network) -> bytes:
    flags = FLAG_SUBTRACT if network.reset is ResetMode.SUBTRACT else 0
    parts = [
        MAGIC,
        struct.pack("<II", VERSION, network.n_layers),
        struct.pack(f"<{network.n_layers}I", *network.layer_sizes),
        struct.pack("<I", flags),
    ]
    for j, (exc, inh) in enumerate(network.synapses):
        parts.append(struct.pack("<d", network.thresholds[j]))
        parts += [_pairs(exc), _pairs(inh), _breaks(exc.pwl), _breaks(inh.pwl)]
    return b"".join(parts)


def save_network(network: Network, path) -> None:
    Path(path).write_bytes(dumps(network))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise NetworkFormatError(f"truncated file: {what} needs {n} bytes at offset {self.pos}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def f64(self, what: str) -> float:
        return struct.unpack("<d", self.take(8, what))[0]

    def array(self, dtype, count: int, what: str) -> np.ndarray:
        return np.frombuffer(self.take(dtype.itemsize * count, what), dtype=dtype, count=count)


def _read_list(rd: _Reader, j: int, sign: str, lo: int, hi: int) -> SortedSynapseList:
    n = rd.u32(f"neuron {j} {sign} count")
    if n > hi - lo:
        raise NetworkFormatError(f"neuron {j}: {sign} count {n} exceeds next layer size {hi - lo}")
    a = rd.array(_PAIR, n, f"neuron {j} {sign} synapses")
    w = a["w"].astype(np.float64)
    idx = a["i"].astype(np.int64)
    bad = np.flatnonzero((idx < lo) | (idx >= hi))
    if bad.size:
        raise NetworkFormatError(
            f"neuron {j}: {sign} target index {int(idx[bad[0]])} outside next layer [{lo}, {hi})"
        )
    lst = SortedSynapseList(w, idx, float(w[0]) if n else 0.0)
    try:
        lst.check()
    except ValueError as e:
        raise NetworkFormatError(f"neuron {j}: {sign} list invalid: {e}") from None
    want = (w > 0) if sign == "excitatory" else (w < 0)
    if not np.all(want):
        raise NetworkFormatError(f"neuron {j}: {sign} list holds weights of the wrong sign")
    return lst


def _read_pwl(rd: _Reader, j: int, sign: str, n: int) -> PwlProfile:
    m = rd.u32(f"neuron {j} {sign} PWL count")
    a = rd.array(_BREAK, PWL_SLOTS, f"neuron {j} {sign} PWL breakpoints")
    if m > PWL_SLOTS or (m == 0) != (n == 0):
        raise NetworkFormatError(f"neuron {j}: {sign} PWL breakpoint count {m} invalid for {n} synapses")
    pos = a["p"][:m].astype(np.int64)
    if m and (pos[0] < 1 or pos[-1] > n or np.any(np.diff(pos) <= 0)):
        raise NetworkFormatError(f"neuron {j}: {sign} PWL positions {pos.tolist()} invalid")
    return PwlProfile(pos, a["w"][:m].astype(np.float64))


def loads(buf: bytes) -> Network:
    rd = _Reader(buf)
    magic = rd.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise NetworkFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version = rd.u32("version")
    if version != VERSION:
        raise NetworkFormatError(f"unsupported format version {version} (expected {VERSION})")
    n_layers = rd.u32("layer count")
    if not 2 <= n_layers <= 1024:
        raise NetworkFormatError(f"implausible layer count {n_layers}")
    sizes = [rd.u32(f"size of layer {l}") for l in range(n_layers)]
    flags = rd.u32("flags")
    if flags & ~FLAG_SUBTRACT:
        raise NetworkFormatError(f"unknown flag bits {flags:#x}")
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    total = int(offsets[-1])
    thresholds = np.empty(total)
    synapses = []
    for l in range(n_layers):
        last = l == n_layers - 1
        lo, hi = (0, 0) if last else (int(offsets[l + 1]), int(offsets[l + 2]))
        for j in range(int(offsets[l]), int(offsets[l + 1])):
            thresholds[j] = rd.f64(f"neuron {j} threshold")
            exc = _read_list(rd, j, "excitatory", lo, hi)
            inh = _read_list(rd, j, "inhibitory", lo, hi)
            exc.pwl = _read_pwl(rd, j, "excitatory", exc.n_max)
            inh.pwl = _read_pwl(rd, j, "inhibitory", inh.n_max)
            if np.unique(np.concatenate([exc.indices, inh.indices])).size != exc.n_max + inh.n_max:
                raise NetworkFormatError(f"neuron {j}: duplicate target index")
            synapses.append((exc, inh))
        if l > 0 and np.any(thresholds[offsets[l] : offsets[l + 1]] <= 0):
            raise NetworkFormatError(f"layer {l}: non-positive threshold")
    if rd.pos != len(buf):
        raise NetworkFormatError(f"{len(buf) - rd.pos} trailing bytes after last neuron record")
    reset = ResetMode.SUBTRACT if flags & FLAG_SUBTRACT else ResetMode.ZERO
    return Network(sizes, thresholds, synapses, reset)


def load_network(path) -> Network:
    try:
        buf = Path(path).read_bytes()
    except OSError as e:
        raise NetworkFormatError(f"cannot read network {path}: {e.strerror}") from None
    return loads(buf)


def networks_equal(a: Network, b: Network) -> bool:
    return (
        a.layer_sizes == b.layer_sizes
        and a.reset == b.reset
        and np.array_equal(a.thresholds, b.thresholds)
        and all(x == y for x, y in zip(a.synapses, b.synapses))
    )


# plain-text import ---------------------------------------------------------


def load_text_network(path) -> Network:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise NetworkFormatError(f"cannot read {path}: {e.strerror}") from None
    sizes = None
    thresholds = {}
    reset = ResetMode.ZERO
    matrices: dict[int, list] = {}
    current = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        where = f"{path}:{lineno}"
        try:
            if head == "layers":
                sizes = [int(v) for v in rest]
                current = None
            elif head == "threshold":
                thresholds[int(rest[0])] = float(rest[1])
                current = None
            elif head == "reset":
                reset = {"zero": ResetMode.ZERO, "subtract": ResetMode.SUBTRACT}[rest[0]]
                current = None
            elif head == "weights":
                current = int(rest[0])
                if current in matrices:
                    raise NetworkFormatError(f"{where}: duplicate weights block {current}")
                matrices[current] = []
            elif current is not None:
                matrices[current].append([float(v) for v in line.split()])
            else:
                raise NetworkFormatError(f"{where}: unexpected line {raw!r}")
        except (ValueError, IndexError, KeyError) as e:
            if isinstance(e, NetworkFormatError):
                raise
            raise NetworkFormatError(f"{where}: cannot parse {raw!r}") from None
    if sizes is None or len(sizes) < 2:
        raise NetworkFormatError(f"{path}: missing 'layers' line")
    weights = []
    for l in range(len(sizes) - 1):
        if l not in matrices:
            raise NetworkFormatError(f"{path}: missing weights block {l}")
        rows = matrices[l]
        if len(rows) != sizes[l] or any(len(r) != sizes[l + 1] for r in rows):
            raise NetworkFormatError(
                f"{path}: weights block {l} must be {sizes[l]} rows of {sizes[l + 1]} values"
            )
        weights.append(np.array(rows, dtype=np.float64))
    th = [thresholds.get(l, 1.0) for l in range(1, len(sizes))]
    return Network.from_dense(sizes, weights, th, reset)


def save_text_network(path, sizes, weights, thresholds, reset: str = "zero") -> None:
    with open(path, "w") as f:
        f.write("layers " + " ".join(str(s) for s in sizes) + "\n")
        for l, th in enumerate(thresholds, start=1):
            f.write(f"threshold {l} {th!r}\n")
        f.write(f"reset {reset}\n")
        for l, w in enumerate(weights):
            f.write(f"weights {l}\n")
            for row in np.asarray(w):
                f.write(" ".join(repr(float(v)) for v in row) + "\n")
