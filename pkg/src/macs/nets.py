"""Dense ReLU networks with exact reverse-mode gradients, Adam, Polyak
averaging and a bit-exact binary checkpoint format.

Parameters are float64 throughout; all training runs reproduce bit-identically
from a seed. Parameter lists are flat ``[W0, b0, W1, b1, ...]`` sequences so
the optimizer and Polyak updates stay shape-agnostic.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from .errors import (
    ConfigError,
    CorruptCheckpoint,
    DimensionError,
    NumericsError,
    VersionError,
)

_ACTIVATIONS = ("identity", "tanh")


class DenseNet:
    """Fully connected ReLU net with an identity or tanh output layer."""

    def __init__(self, layer_sizes: Sequence[int], output_activation: str = "identity"):
        layer_sizes = [int(s) for s in layer_sizes]
        if len(layer_sizes) < 2 or any(s < 1 for s in layer_sizes):
            raise ConfigError(f"need >= 2 positive layer sizes, got {layer_sizes}")
        if output_activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown output activation {output_activation!r}")
        self.layer_sizes = layer_sizes
        self.output_activation = output_activation
        self.weights = [
            np.zeros((layer_sizes[i], layer_sizes[i + 1])) for i in range(len(layer_sizes) - 1)
        ]
        self.biases = [np.zeros(s) for s in layer_sizes[1:]]

    # -- parameters as a flat list ------------------------------------------

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def set_params(self, params: Sequence[np.ndarray]) -> None:
        expected = self.params
        if len(params) != len(expected):
            raise DimensionError("parameter list length mismatch")
        for i, (w, b) in enumerate(zip(params[0::2], params[1::2])):
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise DimensionError("parameter shape mismatch")
            self.weights[i][...] = w
            self.biases[i][...] = b

    def flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        total = sum(p.size for p in self.params)
        if flat.shape != (total,):
            raise DimensionError(f"expected {total} parameters, got {flat.shape}")
        pos = 0
        for p in self.params:
            p[...] = flat[pos : pos + p.size].reshape(p.shape)
            pos += p.size

    def clone(self) -> "DenseNet":
        other = DenseNet(self.layer_sizes, self.output_activation)
        other.set_flat_params(self.flat_params())
        return other

    # -- forward / backward --------------------------------------------------

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[-1] != self.layer_sizes[0]:
            raise DimensionError(
                f"input width {h.shape[-1]} != first layer size {self.layer_sizes[0]}"
            )
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
        out = h @ self.weights[-1] + self.biases[-1]
        if self.output_activation == "tanh":
            out = np.tanh(out)
        return out[0] if single else out

    def backward(
        self, x: np.ndarray, output_grad: np.ndarray
    ) -> tuple[list[np.ndarray], np.ndarray]:
        """Exact gradients of the forward map.

        Returns ``(param_grads, input_grad)`` where ``param_grads`` matches the
        ``params`` layout. For batched input, parameter gradients are summed
        over the batch rows; scale ``output_grad`` for mean losses.
        """
        x = np.asarray(x, dtype=np.float64)
        output_grad = np.asarray(output_grad, dtype=np.float64)
        single = x.ndim == 1
        h = x[None, :] if single else x
        g = output_grad[None, :] if single else output_grad
        if h.shape[-1] != self.layer_sizes[0]:
            raise DimensionError(
                f"input width {h.shape[-1]} != first layer size {self.layer_sizes[0]}"
            )
        if g.shape != (h.shape[0], self.layer_sizes[-1]):
            raise DimensionError(
                f"output_grad shape {output_grad.shape} does not match output"
            )
        activations = [h]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
            activations.append(h)
        out = h @ self.weights[-1] + self.biases[-1]
        if self.output_activation == "tanh":
            out = np.tanh(out)
            g = g * (1.0 - out * out)
        w_grads: list[np.ndarray] = [None] * len(self.weights)
        b_grads: list[np.ndarray] = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            w_grads[i] = activations[i].T @ g
            b_grads[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
            if i > 0:
                g = g * (activations[i] > 0.0)
        param_grads = []
        for wg, bg in zip(w_grads, b_grads):
            param_grads.append(wg)
            param_grads.append(bg)
        input_grad = g[0] if single else g
        return param_grads, input_grad


def init_net(layer_sizes: Sequence[int], output_activation: str = "identity", seed: int = 0) -> DenseNet:
    """Glorot-uniform weights, zero biases, deterministic in the seed."""
    net = DenseNet(layer_sizes, output_activation)
    rng = np.random.default_rng(seed)
    for w in net.weights:
        fan_in, fan_out = w.shape
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w[...] = rng.uniform(-bound, bound, size=w.shape)
    return net


# -- optimization -------------------------------------------------------------


@dataclass
class AdamState:
    """Moment accumulators for one parameter list."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], lr: float = 1e-3, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            lr=lr, beta1=beta1, beta2=beta2, eps=eps, step=0,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState) -> None:
    """Standard bias-corrected Adam update, in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DimensionError("params/grads/state length mismatch")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NumericsError("non-finite gradient")
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def polyak_update(target_params: Sequence[np.ndarray], online_params: Sequence[np.ndarray], tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, elementwise, in place."""
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"tau must be in [0, 1], got {tau}")
    if len(target_params) != len(online_params):
        raise DimensionError("parameter list length mismatch")
    for t, o in zip(target_params, online_params):
        if t.shape != o.shape:
            raise DimensionError("parameter shape mismatch")
        t *= 1.0 - tau
        t += tau * o


# -- checkpoints ---------------------------------------------------------------
#
# Little-endian layout:
#   magic "MACSCKPT" | version u8 | metadata u32-len + UTF-8 JSON |
#   section count u32 | per section:
#     name u16-len + UTF-8 | layer count u32 | layer sizes u32[] |
#     output activation u8 | parameter count u64 | float64 parameters
#
# A single-network checkpoint is a file with exactly one section named "net".

MAGIC = b"MACSCKPT"
VERSION = 1
_ACT_CODE = {"identity": 0, "tanh": 1}
_ACT_NAME = {v: k for k, v in _ACT_CODE.items()}


def _as_writer(sink) -> tuple[BinaryIO, bool]:
    if isinstance(sink, (str, Path)):
        return open(sink, "wb"), True
    return sink, False


def _as_reader(source) -> tuple[BinaryIO, bool]:
    if isinstance(source, (str, Path)):
        return open(source, "rb"), True
    return source, False


def _read_exact(fh: BinaryIO, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CorruptCheckpoint(f"truncated checkpoint (wanted {n} bytes, got {len(data)})")
    return data


def _write_section(fh: BinaryIO, name: str, net: DenseNet) -> None:
    encoded = name.encode("utf-8")
    fh.write(struct.pack("<H", len(encoded)))
    fh.write(encoded)
    fh.write(struct.pack("<I", len(net.layer_sizes)))
    fh.write(struct.pack(f"<{len(net.layer_sizes)}I", *net.layer_sizes))
    fh.write(struct.pack("<B", _ACT_CODE[net.output_activation]))
    flat = net.flat_params()
    fh.write(struct.pack("<Q", flat.size))
    fh.write(flat.astype("<f8").tobytes())


def _read_section(fh: BinaryIO) -> tuple[str, DenseNet]:
    (name_len,) = struct.unpack("<H", _read_exact(fh, 2))
    name = _read_exact(fh, name_len).decode("utf-8")
    (n_layers,) = struct.unpack("<I", _read_exact(fh, 4))
    if n_layers < 2 or n_layers > 64:
        raise CorruptCheckpoint(f"implausible layer count {n_layers}")
    sizes = struct.unpack(f"<{n_layers}I", _read_exact(fh, 4 * n_layers))
    (act_code,) = struct.unpack("<B", _read_exact(fh, 1))
    if act_code not in _ACT_NAME:
        raise CorruptCheckpoint(f"unknown activation code {act_code}")
    (count,) = struct.unpack("<Q", _read_exact(fh, 8))
    expected = sum(sizes[i] * sizes[i + 1] + sizes[i + 1] for i in range(n_layers - 1))
    if count != expected:
        raise CorruptCheckpoint(
            f"parameter count {count} does not match layer sizes (expected {expected})"
        )
    flat = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8").astype(np.float64)
    net = DenseNet(list(sizes), _ACT_NAME[act_code])
    net.set_flat_params(flat)
    return name, net


def save_sections(sections: dict[str, DenseNet], metadata: dict, sink) -> None:
    """Write a multi-network checkpoint (one section per network)."""
    fh, owned = _as_writer(sink)
    try:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", VERSION))
        blob = json.dumps(metadata, sort_keys=True).encode("utf-8")
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(sections)))
        for name, net in sections.items():
            _write_section(fh, name, net)
    finally:
        if owned:
            fh.close()


def load_sections(source) -> tuple[dict[str, DenseNet], dict]:
    fh, owned = _as_reader(source)
    try:
        if _read_exact(fh, len(MAGIC)) != MAGIC:
            raise CorruptCheckpoint("bad magic header")
        (version,) = struct.unpack("<B", _read_exact(fh, 1))
        if version != VERSION:
            raise VersionError(f"checkpoint version {version}, supported {VERSION}")
        (meta_len,) = struct.unpack("<I", _read_exact(fh, 4))
        metadata = json.loads(_read_exact(fh, meta_len).decode("utf-8"))
        (n_sections,) = struct.unpack("<I", _read_exact(fh, 4))
        if n_sections < 1 or n_sections > 256:
            raise CorruptCheckpoint(f"implausible section count {n_sections}")
        sections = {}
        for _ in range(n_sections):
            name, net = _read_section(fh)
            sections[name] = net
        return sections, metadata
    finally:
        if owned:
            fh.close()


def save_checkpoint(net: DenseNet, metadata: dict, sink) -> None:
    """Single-network checkpoint; round-trips forward outputs bit-exactly."""
    save_sections({"net": net}, metadata, sink)


def load_checkpoint(source) -> tuple[DenseNet, dict]:
    sections, metadata = load_sections(source)
    if list(sections) != ["net"]:
        raise CorruptCheckpoint(
            f"expected a single-network checkpoint, found sections {list(sections)}"
        )
    return sections["net"], metadata


def checkpoint_bytes(net: DenseNet, metadata: dict) -> bytes:
    buf = io.BytesIO()
    save_checkpoint(net, metadata, buf)
    return buf.getvalue()
