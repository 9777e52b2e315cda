"""Decoder export: DGPR weight files, PGM sample dumps, forward fixtures.

DGPR layout (little endian): magic "DGPR", u32 version = 1, u32 layer count;
per layer u32 in_dim, u32 out_dim, u8 activation code (0 linear, 1 relu,
2 sigmoid, 3 tanh), float32 weights row-major (out, in), float32 bias.
No padding, no trailing bytes.
"""

from __future__ import annotations

import math
import os
import struct

import numpy as np
from torch import nn

from .model import VariationalAutoencoder
from .training import sample_latents

MAGIC = b"DGPR"
VERSION = 1
ACTIVATION_CODES = {"linear": 0, "relu": 1, "sigmoid": 2, "tanh": 3}
_CODE_NAMES = {v: k for k, v in ACTIVATION_CODES.items()}

# layers as (weights (out, in) float32, bias (out,) float32, activation name)
Layer = tuple[np.ndarray, np.ndarray, str]


def decoder_layers(model: VariationalAutoencoder) -> list[Layer]:
    """Flatten the decoder Sequential into (weights, bias, activation) triples."""
    layers: list[Layer] = []
    pending: tuple[np.ndarray, np.ndarray] | None = None
    for module in model.decoder:
        if isinstance(module, nn.Linear):
            if pending is not None:
                layers.append((*pending, "linear"))
            w = module.weight.detach().numpy().astype(np.float32)
            b = module.bias.detach().numpy().astype(np.float32)
            pending = (w, b)
        elif isinstance(module, nn.ReLU):
            layers.append((*pending, "relu"))
            pending = None
        elif isinstance(module, nn.Sigmoid):
            layers.append((*pending, "sigmoid"))
            pending = None
        elif isinstance(module, nn.Tanh):
            layers.append((*pending, "tanh"))
            pending = None
        else:
            raise ValueError(f"decoder contains unexportable module {type(module).__name__}")
    if pending is not None:
        layers.append((*pending, "linear"))
    return layers


def write_weights(path: str, layers: list[Layer]) -> None:
    if len(layers) < 1:
        raise ValueError("refusing to write a weight file with zero layers")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", MAGIC, VERSION, len(layers)))
        for w, b, activation in layers:
            out_dim, in_dim = w.shape
            if b.shape != (out_dim,):
                raise ValueError(f"bias shape {b.shape} does not match {out_dim} outputs")
            fh.write(struct.pack("<IIB", in_dim, out_dim, ACTIVATION_CODES[activation]))
            fh.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f4").tobytes())


def read_weights(path: str) -> list[Layer]:
    """Parse a DGPR file back into layer triples, validating the exact length."""
    with open(path, "rb") as fh:
        raw = fh.read()
    offset = 0

    def take(count: int, what: str) -> bytes:
        nonlocal offset
        if offset + count > len(raw):
            raise ValueError(f"{path}: truncated while reading {what}")
        chunk = raw[offset : offset + count]
        offset += count
        return chunk

    magic, version, layer_count = struct.unpack("<4sII", take(12, "header"))
    if magic != MAGIC:
        raise ValueError(f"{path}: not a weight file (magic {magic!r})")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if layer_count < 1:
        raise ValueError(f"{path}: declares zero layers")
    layers: list[Layer] = []
    for idx in range(layer_count):
        in_dim, out_dim, code = struct.unpack("<IIB", take(9, f"layer {idx} header"))
        if code not in _CODE_NAMES:
            raise ValueError(f"{path}: layer {idx} has unknown activation code {code}")
        w = np.frombuffer(take(4 * in_dim * out_dim, f"layer {idx} weights"), dtype="<f4")
        b = np.frombuffer(take(4 * out_dim, f"layer {idx} bias"), dtype="<f4")
        layers.append((w.reshape(out_dim, in_dim).copy(), b.copy(), _CODE_NAMES[code]))
    if offset != len(raw):
        raise ValueError(f"{path}: {len(raw) - offset} trailing bytes")
    return layers


def export_decoder(model: VariationalAutoencoder, path: str) -> None:
    write_weights(path, decoder_layers(model))


def forward(layers: list[Layer], z: np.ndarray) -> np.ndarray:
    """Evaluate the dense stack in float32, matching the training dtype."""
    h = np.asarray(z, dtype=np.float32)
    for w, b, activation in layers:
        h = w @ h + b
        if activation == "relu":
            h = np.maximum(h, np.float32(0.0))
        elif activation == "sigmoid":
            h = 1.0 / (1.0 + np.exp(-h, dtype=np.float32))
        elif activation == "tanh":
            h = np.tanh(h)
    return h


def write_forward_fixture(model: VariationalAutoencoder, path: str, count: int, seed: int) -> None:
    """Save (latents, outputs) pairs for cross-implementation agreement checks."""
    layers = decoder_layers(model)
    latents = sample_latents(count, model.latent_dim, seed)
    outputs = np.stack([forward(layers, z) for z in latents])
    np.savez(path, latents=latents, outputs=outputs)


def write_pgm(path: str, pixels: np.ndarray) -> None:
    rows, cols = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(pixels.astype(np.uint8).tobytes())


def export_samples(weights_path: str, out_dir: str, count: int, seed: int) -> list[str]:
    """Decode `count` standard-normal latents from a weight file into PGM dumps."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    layers = read_weights(weights_path)
    out_dim = layers[-1][0].shape[0]
    side = math.isqrt(out_dim)
    if side * side != out_dim:
        raise ValueError(f"decoder output length {out_dim} is not a square image")
    if count == 0:
        return []
    os.makedirs(out_dir, exist_ok=True)
    latents = sample_latents(count, layers[0][0].shape[1], seed)
    paths = []
    for i, z in enumerate(latents):
        img = forward(layers, z)
        quantized = np.rint(np.clip(img, 0.0, 1.0) * 255.0).reshape(side, side)
        path = os.path.join(out_dir, f"sample_{i:03d}.pgm")
        write_pgm(path, quantized)
        paths.append(path)
    return paths
