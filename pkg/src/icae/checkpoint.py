"""Model checkpoint files.

Layout::

    AEMODEL v1 n=<n> k=<k> layers=<count>\n
    dense <in> <out> <activation>\n          (one line per dense layer)
    <float64 little-endian payload>

The payload holds, for each dense layer in file order, its weights
(``out x in``, row-major) followed by its biases (``out`` values). The
transmitter is every layer up to and including the first one whose output
width is ``2n``; power normalization is implied after it. The remaining
layers form the receiver.
"""

import re

import numpy as np

from .autoencoder import AeModel
from .errors import CheckpointError, CheckpointVersionError
from .nn import ACTIVATIONS, DenseLayer, PowerNorm, Sequential

VERSION = 1
_HEADER = re.compile(rb"^AEMODEL v(\d+) n=(\d+) k=(\d+) layers=(\d+)$")
_LAYER = re.compile(rb"^dense (\d+) (\d+) ([a-z]+)$")


def save_checkpoint(model, path):
    layers = model.dense_layers()
    lines = [f"AEMODEL v{VERSION} n={model.n} k={model.k} layers={len(layers)}"]
    lines += [f"dense {layer.in_dim} {layer.out_dim} {layer.activation}" for layer in layers]
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        for layer in layers:
            fh.write(layer.weights.values.astype("<f8").tobytes(order="C"))
            fh.write(layer.bias.values.reshape(-1).astype("<f8").tobytes())


def _read_line(data, offset):
    end = data.find(b"\n", offset)
    if end < 0:
        raise CheckpointError("unterminated text line", offset)
    return data[offset:end], end + 1


def load_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    line, offset = _read_line(data, 0)
    if not line.startswith(b"AEMODEL "):
        raise CheckpointError("missing AEMODEL magic", 0)
    m = _HEADER.match(line)
    if m is None:
        version = re.match(rb"^AEMODEL v(\d+)", line)
        if version and int(version.group(1)) != VERSION:
            raise CheckpointVersionError(f"unsupported checkpoint version {int(version.group(1))}", 0)
        raise CheckpointError(f"malformed header {line!r}", 0)
    version, n, k, count = (int(g) for g in m.groups())
    if version != VERSION:
        raise CheckpointVersionError(f"unsupported checkpoint version {version}, expected {VERSION}", 0)

    shapes = []
    for _ in range(count):
        start = offset
        line, offset = _read_line(data, offset)
        lm = _LAYER.match(line)
        if lm is None:
            raise CheckpointError(f"malformed layer line {line!r}", start)
        act = lm.group(3).decode()
        if act not in ACTIVATIONS:
            raise CheckpointError(f"unknown activation {act!r}", start)
        shapes.append((int(lm.group(1)), int(lm.group(2)), act))

    need = sum(o * i + o for i, o, _ in shapes) * 8
    have = len(data) - offset
    if have < need:
        raise CheckpointError(f"truncated payload: need {need} bytes, found {have}", len(data))
    if have > need:
        raise CheckpointError(f"{have - need} trailing bytes after payload", offset + need)

    layers = []
    for idx, (i, o, act) in enumerate(shapes):
        w = np.frombuffer(data, dtype="<f8", count=o * i, offset=offset).reshape(o, i)
        offset += o * i * 8
        b = np.frombuffer(data, dtype="<f8", count=o, offset=offset)
        offset += o * 8
        layers.append((i, o, act, w.astype(np.float64), b.astype(np.float64)))

    split = next((j for j, (_, o, *_rest) in enumerate(layers) if o == 2 * n), None)
    if split is None:
        raise CheckpointError(f"no layer produces the 2n={2 * n} channel vector")
    for (_, o, *_r), (i, *_s) in zip(layers, layers[1:]):
        if o != i:
            raise CheckpointError(f"layer widths do not chain ({o} -> {i})")

    def build(chunk, prefix):
        return [
            DenseLayer(i, o, act, weights=w, bias=b, name=f"{prefix}.{j}")
            for j, (i, o, act, w, b) in enumerate(chunk)
        ]

    tx = Sequential(build(layers[: split + 1], "tx") + [PowerNorm(n)])
    rx = Sequential(build(layers[split + 1:], "rx"))
    return AeModel(n, k, tx, rx)
