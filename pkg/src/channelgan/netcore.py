"""Minimal dense-network engine.

Layers are plain descriptors (kind, dims, weights, bias) chained into a
LayerStack. Forward passes cache activations on the stack so a following
backward pass can produce parameter gradients without a general autodiff
graph. Four layer kinds exist: affine+ReLU, affine, affine+sigmoid, and a
Gaussian sampler layer that consumes externally drawn standard-normal
noise (reparameterized, so gradients flow through it).

All arithmetic is float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import ConfigError, NumericError, ShapeError, StateError

FC_RELU = "fc_relu"
FC_LINEAR = "fc_linear"
FC_SIGMOID = "fc_sigmoid"
SAMPLER = "sampler"

AFFINE_KINDS = (FC_RELU, FC_LINEAR, FC_SIGMOID)

FD_STEP = 1e-5


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D batch matrix, got shape {m.shape}")
    return m


@dataclass
class DenseLayer:
    """One layer descriptor. Sampler layers carry no parameters."""

    kind: str
    in_dim: int
    out_dim: int
    weights: np.ndarray | None = None
    bias: np.ndarray | None = None

    @classmethod
    def fc(cls, kind: str, in_dim: int, out_dim: int) -> "DenseLayer":
        if kind not in AFFINE_KINDS:
            raise ConfigError(f"unknown affine layer kind {kind!r}")
        return cls(kind, in_dim, out_dim,
                   weights=np.zeros((in_dim, out_dim)),
                   bias=np.zeros(out_dim))

    @classmethod
    def sampler(cls, out_dim: int) -> "DenseLayer":
        return cls(SAMPLER, 2 * out_dim, out_dim)

    def validate(self, index: int) -> None:
        if self.kind == SAMPLER:
            if self.weights is not None or self.bias is not None:
                raise ConfigError(f"layer {index}: sampler layers carry no parameters")
            if self.in_dim != 2 * self.out_dim:
                raise ShapeError(f"layer {index}: sampler needs in_dim = 2*out_dim")
        elif self.kind in AFFINE_KINDS:
            if self.weights.shape != (self.in_dim, self.out_dim):
                raise ShapeError(
                    f"layer {index}: weights shape {self.weights.shape} != "
                    f"({self.in_dim}, {self.out_dim})")
            if self.bias.shape != (self.out_dim,):
                raise ShapeError(f"layer {index}: bias shape {self.bias.shape} != ({self.out_dim},)")
        else:
            raise ConfigError(f"layer {index}: unknown kind {self.kind!r}")


class LayerStack:
    """Ordered layers plus the activation cache of the latest forward pass."""

    def __init__(self, layers: list[DenseLayer]):
        self.layers = list(layers)
        self.validate()
        self._cache: list[tuple] | None = None

    def validate(self) -> None:
        for i, layer in enumerate(self.layers):
            layer.validate(i)
            if i > 0 and self.layers[i - 1].out_dim != layer.in_dim:
                raise ShapeError(
                    f"layer {i}: in_dim {layer.in_dim} does not chain from "
                    f"previous out_dim {self.layers[i - 1].out_dim}")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def sampler_dim(self) -> int | None:
        """Noise width required by forward, or None for deterministic stacks."""
        for layer in self.layers:
            if layer.kind == SAMPLER:
                return layer.out_dim
        return None

    def params(self) -> list[np.ndarray]:
        """Parameter arrays in declared layer order (weights, bias per affine layer)."""
        out = []
        for layer in self.layers:
            if layer.kind != SAMPLER:
                out.append(layer.weights)
                out.append(layer.bias)
        return out

    def param_vector(self) -> np.ndarray:
        if not self.params():
            return np.zeros(0)
        return np.concatenate([p.ravel() for p in self.params()]).copy()

    def copy(self) -> "LayerStack":
        layers = []
        for layer in self.layers:
            if layer.kind == SAMPLER:
                layers.append(DenseLayer.sampler(layer.out_dim))
            else:
                layers.append(DenseLayer(layer.kind, layer.in_dim, layer.out_dim,
                                         layer.weights.copy(), layer.bias.copy()))
        return LayerStack(layers)

    def forward(self, x, noise=None) -> np.ndarray:
        return stack_forward(x, self, noise)

    def backward(self, output_grad):
        return stack_backward(self, output_grad)


def fc_forward(x, layer: DenseLayer, index: int = 0) -> np.ndarray:
    """Affine map plus the layer's activation. Does not cache."""
    x = _as_matrix(x)
    if layer.kind not in AFFINE_KINDS:
        raise ConfigError(f"layer {index}: fc_forward cannot run kind {layer.kind!r}")
    if x.shape[1] != layer.in_dim:
        raise ShapeError(
            f"layer {index}: input has {x.shape[1]} cols, layer expects {layer.in_dim}")
    z = _accel.affine_forward(x, layer.weights, layer.bias)
    if layer.kind == FC_RELU:
        out = _accel.relu_forward(z)
    elif layer.kind == FC_SIGMOID:
        out = _accel.sigmoid_forward(z)
    else:
        out = z
    if not np.isfinite(out).all():
        raise NumericError(f"layer {index}: non-finite activations")
    return out


def sampler_forward(pre, epsilon) -> np.ndarray:
    """Reparameterized Gaussian draw from interleaved (mean, scale) columns.

    Column 2j of ``pre`` is the mean of latent j, column 2j+1 the scale
    pre-activation; the scale itself is softplus of that column, keeping it
    positive while staying differentiable. ``epsilon`` must be i.i.d.
    standard normal, drawn by the caller.
    """
    pre = _as_matrix(pre)
    epsilon = _as_matrix(epsilon)
    if pre.shape[1] != 2 * epsilon.shape[1]:
        raise ShapeError(
            f"sampler: pre has {pre.shape[1]} cols, expected 2 x {epsilon.shape[1]}")
    if pre.shape[0] != epsilon.shape[0]:
        raise ShapeError("sampler: pre and epsilon row counts differ")
    return _accel.sampler_forward_kernel(pre, epsilon)


def stack_forward(x, stack: LayerStack, noise=None) -> np.ndarray:
    """Chain all layer forwards; caches activations for stack_backward.

    ``noise`` must be supplied iff the stack contains a sampler layer,
    with one column per latent dimension. Deterministic given
    (x, parameters, noise).
    """
    x = _as_matrix(x)
    stack._cache = None  # a failed forward must not leave a stale cache behind
    sdim = stack.sampler_dim()
    if sdim is None and noise is not None:
        raise ConfigError("stack has no sampler layer but noise was supplied")
    if sdim is not None:
        if noise is None:
            raise ConfigError("stack contains a sampler layer: noise is required")
        noise = _as_matrix(noise)
        if noise.shape != (x.shape[0], sdim):
            raise ShapeError(
                f"noise shape {noise.shape} != ({x.shape[0]}, {sdim})")

    cache = []
    h = np.ascontiguousarray(x)
    for i, layer in enumerate(stack.layers):
        if layer.kind == SAMPLER:
            if h.shape[1] != layer.in_dim:
                raise ShapeError(
                    f"layer {i}: input has {h.shape[1]} cols, layer expects {layer.in_dim}")
            out = _accel.sampler_forward_kernel(h, noise)
            cache.append((h, noise))
            h = out
        else:
            if h.shape[1] != layer.in_dim:
                raise ShapeError(
                    f"layer {i}: input has {h.shape[1]} cols, layer expects {layer.in_dim}")
            z = _accel.affine_forward(h, layer.weights, layer.bias)
            if layer.kind == FC_RELU:
                out = _accel.relu_forward(z)
            elif layer.kind == FC_SIGMOID:
                out = _accel.sigmoid_forward(z)
            else:
                out = z
            cache.append((h, z, out))
            h = out
    if not np.isfinite(h).all():
        raise NumericError("stack forward produced non-finite outputs")
    stack._cache = cache
    return h


def stack_backward(stack: LayerStack, output_grad):
    """Backpropagate ``output_grad`` through the cached forward pass.

    Returns (param_grads, input_grad) where param_grads aligns with
    stack.layers: (dW, db) per affine layer, None per sampler layer.
    """
    if stack._cache is None:
        raise StateError("backward called before forward")
    if len(stack._cache) != len(stack.layers):
        raise StateError("stale forward cache")
    g = _as_matrix(output_grad)
    last = stack.layers[-1]
    if g.shape[1] != last.out_dim:
        raise ShapeError(
            f"output_grad has {g.shape[1]} cols, stack output is {last.out_dim}")

    grads: list[tuple[np.ndarray, np.ndarray] | None] = [None] * len(stack.layers)
    g = np.ascontiguousarray(g)
    for i in range(len(stack.layers) - 1, -1, -1):
        layer = stack.layers[i]
        if layer.kind == SAMPLER:
            pre, eps = stack._cache[i]
            g = _accel.sampler_backward_kernel(pre, eps, g)
        else:
            xin, z, out = stack._cache[i]
            if layer.kind == FC_RELU:
                gz = _accel.relu_backward(z, g)
            elif layer.kind == FC_SIGMOID:
                gz = _accel.sigmoid_backward(out, g)
            else:
                gz = g
            dw, db, g = _accel.affine_backward(xin, layer.weights, gz)
            grads[i] = (dw, db)
    return grads, g


def grads_to_list(stack: LayerStack, grads) -> list[np.ndarray]:
    """Flatten a stack_backward grad structure to match stack.params() order."""
    out = []
    for layer, entry in zip(stack.layers, grads):
        if layer.kind == SAMPLER:
            continue
        dw, db = entry
        out.append(dw)
        out.append(db)
    return out


def finite_diff_wrt_params(stack: LayerStack, loss_fn, h: float = FD_STEP):
    """Central finite differences of ``loss_fn()`` w.r.t. every stack parameter.

    ``loss_fn`` is a closure re-running whatever forward computation the
    perturbed parameters feed; it must hold all randomness fixed. Returns
    grads in the stack_backward structure.
    """
    grads: list[tuple[np.ndarray, np.ndarray] | None] = []
    for layer in stack.layers:
        if layer.kind == SAMPLER:
            grads.append(None)
            continue
        pair = []
        for arr in (layer.weights, layer.bias):
            g = np.zeros_like(arr)
            flat = arr.ravel()
            gflat = g.ravel()
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + h
                up = loss_fn()
                flat[j] = orig - h
                down = loss_fn()
                flat[j] = orig
                if not (np.isfinite(up) and np.isfinite(down)):
                    raise NumericError("non-finite loss during finite differencing")
                gflat[j] = (up - down) / (2.0 * h)
            pair.append(g)
        grads.append((pair[0], pair[1]))
    return grads


def finite_diff_grad(stack: LayerStack, x, noise, scalar_loss, h: float = FD_STEP):
    """Finite-difference parameter gradients of scalar_loss(stack_forward(x))."""

    def loss_fn():
        return float(scalar_loss(stack_forward(x, stack, noise)))

    return finite_diff_wrt_params(stack, loss_fn, h)


@dataclass
class AdamState:
    """Adam accumulators mirroring one list of parameter arrays."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[np.ndarray], learning_rate: float,
                   beta1: float = 0.9, beta2: float = 0.999,
                   epsilon: float = 1e-8) -> "AdamState":
        state = cls(learning_rate, beta1, beta2, epsilon)
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
        return state


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState) -> None:
    """One Adam update, in place, over a parameter list."""
    if len(params) != len(state.m) or len(params) != len(grads):
        raise ShapeError("params, grads and Adam state lengths differ")
    state.step += 1
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeError(f"grad shape {g.shape} != param shape {p.shape}")
        _accel.adam_update(p, g, m, v, state.step, state.learning_rate,
                           state.beta1, state.beta2, state.epsilon)
        if not np.isfinite(p).all():
            raise NumericError("parameters became non-finite during Adam update")


def init_params(stack: LayerStack, seed: int) -> LayerStack:
    """Scaled-Gaussian weight init, zero bias; bit-identical per seed.

    ReLU layers get std sqrt(2/in_dim), linear and sigmoid layers
    sqrt(1/in_dim).
    """
    rng = np.random.default_rng(seed)
    for layer in stack.layers:
        if layer.kind == SAMPLER:
            continue
        std = np.sqrt(2.0 / layer.in_dim) if layer.kind == FC_RELU else np.sqrt(1.0 / layer.in_dim)
        layer.weights[:] = rng.normal(0.0, std, layer.weights.shape)
        layer.bias[:] = 0.0
    stack._cache = None
    return stack


_KIND_CODES = {FC_RELU: 0, FC_LINEAR: 1, FC_SIGMOID: 2, SAMPLER: 3}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}
_MAGIC = b"CGN1"


def save_stack(stack: LayerStack, path, seed: int = 0) -> None:
    """Binary dump: header (magic, seed, layer table) then raw float64 arrays."""
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<qI", int(seed), len(stack.layers)))
        for layer in stack.layers:
            f.write(struct.pack("<BII", _KIND_CODES[layer.kind], layer.in_dim, layer.out_dim))
        for layer in stack.layers:
            if layer.kind == SAMPLER:
                continue
            f.write(np.ascontiguousarray(layer.weights).tobytes())
            f.write(np.ascontiguousarray(layer.bias).tobytes())


def load_stack(path) -> tuple[LayerStack, int]:
    """Inverse of save_stack; round-trips bit-exactly."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise ConfigError(f"{path}: not a saved model file")
        seed, n_layers = struct.unpack("<qI", f.read(12))
        descr = [struct.unpack("<BII", f.read(9)) for _ in range(n_layers)]
        layers = []
        for code, in_dim, out_dim in descr:
            kind = _CODE_KINDS.get(code)
            if kind is None:
                raise ConfigError(f"{path}: unknown layer code {code}")
            if kind == SAMPLER:
                layers.append(DenseLayer.sampler(out_dim))
            else:
                n_w = in_dim * out_dim
                w = np.frombuffer(f.read(8 * n_w), dtype=np.float64).reshape(in_dim, out_dim).copy()
                b = np.frombuffer(f.read(8 * out_dim), dtype=np.float64).copy()
                layers.append(DenseLayer(kind, in_dim, out_dim, w, b))
    return LayerStack(layers), seed
