"""Binary weight-file format, shared by checkpoints and the CLI.

Layout (all integers little-endian):
  magic "DGW1"
  u32 layer count
  per layer: u32 in-size, u32 out-size, u8 activation tag,
             out*in float64 weights (row-major), out float64 biases
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .kernels import ACTIVATION_NAMES, ACTIVATION_TAGS
from .nn import Layer, MLPParams

MAGIC = b"DGW1"


def save_weights(params: MLPParams, path) -> None:
    chunks = [MAGIC, struct.pack("<I", len(params.layers))]
    for layer in params.layers:
        chunks.append(struct.pack("<IIB", layer.in_size, layer.out_size,
                                  ACTIVATION_TAGS[layer.activation]))
        chunks.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_weights(path, expect_layer_sizes=None) -> MLPParams:
    data = Path(path).read_bytes()
    offset = 0

    def take(n: int, what: str) -> bytes:
        nonlocal offset
        if offset + n > len(data):
            raise FormatError(f"truncated file while reading {what}", offset)
        chunk = data[offset:offset + n]
        offset += n
        return chunk

    if take(4, "magic") != MAGIC:
        raise FormatError("bad magic, not a DGW1 file", 0)
    (n_layers,) = struct.unpack("<I", take(4, "layer count"))
    layers = []
    prev_out = None
    for k in range(n_layers):
        header_off = offset
        in_size, out_size, tag = struct.unpack("<IIB", take(9, f"layer {k} header"))
        if in_size == 0 or out_size == 0:
            raise FormatError(f"layer {k} has zero dimension", header_off)
        if tag not in ACTIVATION_NAMES:
            raise FormatError(f"layer {k} has unknown activation tag {tag}", header_off + 8)
        if prev_out is not None and in_size != prev_out:
            raise FormatError(
                f"layer {k} in-size {in_size} does not chain with previous out-size {prev_out}",
                header_off)
        data_off = offset
        w = np.frombuffer(take(8 * in_size * out_size, f"layer {k} weights"),
                          dtype="<f8").reshape(out_size, in_size).astype(np.float64)
        b = np.frombuffer(take(8 * out_size, f"layer {k} biases"),
                          dtype="<f8").astype(np.float64)
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise FormatError(f"layer {k} contains non-finite values", data_off)
        layers.append(Layer(w, b, ACTIVATION_NAMES[tag]))
        prev_out = out_size
    if offset != len(data):
        raise FormatError("trailing bytes after last layer", offset)
    params = MLPParams(layers)
    if expect_layer_sizes is not None:
        got = params.layer_sizes()
        want = [int(s) for s in expect_layer_sizes]
        if got != want:
            raise FormatError(f"dimension mismatch: file holds {got}, expected {want}", 8)
    return params
