"""Minimal feed-forward nets with explicit backprop, in float64 numpy.

Both the wind predictor and the PPO policy/value nets run on this.
Gradients are hand-derived and cheap to verify against finite
differences, which the test suite does.  Checkpoints use a flat binary
container (magic + version + shape table, float32 row-major payload)
with an optional yaml sidecar for semantic metadata.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import yaml

MAGIC = b"WFNC"
FORMAT_VERSION = 1


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def swish(x: np.ndarray) -> np.ndarray:
    return x * sigmoid(x)


def swish_grad(x: np.ndarray) -> np.ndarray:
    s = sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


def tanh_grad(x: np.ndarray) -> np.ndarray:
    t = np.tanh(x)
    return 1.0 - t * t


_ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "tanh": (np.tanh, tanh_grad),
    "swish": (swish, swish_grad),
}


class FeedForward:
    """Dense stack; the hidden activation optionally covers the last layer.

    activate_last=True turns the net into a feature trunk (activated
    output for downstream heads); False leaves the final layer linear.
    """

    def __init__(
        self,
        layer_sizes: Sequence[int],
        activation: str,
        rng: np.random.Generator,
        *,
        activate_last: bool = False,
        final_scale: float = 1.0,
    ):
        if len(layer_sizes) < 2:
            raise ValueError("need at least an input and an output size")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.layer_sizes = list(layer_sizes)
        self.activation = activation
        self.activate_last = activate_last
        self._act, self._act_grad = _ACTIVATIONS[activation]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for i, (fan_in, fan_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
            scale = 1.0 / np.sqrt(fan_in)
            if i == len(layer_sizes) - 2:
                scale *= final_scale
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def _activated(self, layer_index: int) -> bool:
        return layer_index < len(self.weights) - 1 or self.activate_last

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = np.asarray(x, dtype=np.float64)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if self._activated(i):
                h = self._act(h)
        return h

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
        h = np.asarray(x, dtype=np.float64)
        caches = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            caches.append((h, z))
            h = self._act(z) if self._activated(i) else z
        return h, caches

    def backward(
        self, caches: list[tuple[np.ndarray, np.ndarray]], dout: np.ndarray
    ) -> tuple[list[np.ndarray], np.ndarray]:
        """Given d(loss)/d(output), return (param grads, d(loss)/d(input)).

        Param grads are ordered [dw0, db0, dw1, db1, ...] to match
        parameters().
        """
        grads: list[np.ndarray] = []
        d = dout
        for i in range(len(self.weights) - 1, -1, -1):
            h_in, z = caches[i]
            dz = d * self._act_grad(z) if self._activated(i) else d
            grads.append(dz.sum(axis=0))  # db
            grads.append(h_in.T @ dz)  # dw
            d = dz @ self.weights[i].T
        grads.reverse()
        return grads, d

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out


def parameter_vector(params: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params])


def set_parameter_vector(params: Sequence[np.ndarray], vector: np.ndarray) -> None:
    offset = 0
    for p in params:
        p.flat[:] = vector[offset : offset + p.size]
        offset += p.size
    if offset != vector.size:
        raise ValueError(f"vector has {vector.size} entries, parameters need {offset}")


def numeric_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function; test utility."""
    g = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp[i] += eps
        xm = x.copy()
        xm[i] -= eps
        g[i] = (f(xp) - f(xm)) / (2.0 * eps)
    return g


class Adam:
    """Adam over a list of parameter arrays, updated in place."""

    def __init__(self, params: Sequence[np.ndarray], beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray], lr: float) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def serialize_arrays(arrays: Sequence[np.ndarray]) -> bytes:
    header = struct.pack("<4sII", MAGIC, FORMAT_VERSION, len(arrays))
    shapes = b""
    body = b""
    for a in arrays:
        shapes += struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
        body += np.ascontiguousarray(a, dtype="<f4").tobytes()
    return header + shapes + body


def save_arrays(path: str | Path, arrays: Sequence[np.ndarray], metadata: dict | None = None) -> None:
    path = Path(path)
    path.write_bytes(serialize_arrays(arrays))
    if metadata is not None:
        sidecar_path(path).write_text(yaml.safe_dump(metadata, sort_keys=False))


def load_arrays(path: str | Path) -> list[np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise ValueError(f"{path}: truncated checkpoint")
    magic, version, count = struct.unpack_from("<4sII", raw, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    offset = 12
    shapes = []
    for _ in range(count):
        (ndim,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        shape = struct.unpack_from(f"<{ndim}I", raw, offset)
        offset += 4 * ndim
        shapes.append(shape)
    arrays = []
    for shape in shapes:
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        a = np.frombuffer(raw, dtype="<f4", count=size, offset=offset).reshape(shape)
        offset += 4 * size
        arrays.append(a.astype(np.float64))
    if offset != len(raw):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    return arrays


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.yaml")


def load_sidecar(path: str | Path) -> dict:
    sc = sidecar_path(path)
    if not sc.exists():
        return {}
    data = yaml.safe_load(sc.read_text())
    return data if isinstance(data, dict) else {}


def parameter_hash(arrays: Sequence[np.ndarray]) -> str:
    """sha256 over the serialized float32 payload; stable across reload."""
    return hashlib.sha256(serialize_arrays(arrays)).hexdigest()


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def categorical_entropy(logits: np.ndarray) -> np.ndarray:
    logp = log_softmax(logits)
    return -(np.exp(logp) * logp).sum(axis=-1)


def sample_categorical(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    """Row-wise categorical draw for probs of shape (m, k)."""
    u = rng.random((probs.shape[0], 1))
    cum = probs.cumsum(axis=-1)
    cum[:, -1] = 1.0  # guard against rounding shortfall
    return (u < cum).argmax(axis=-1)
