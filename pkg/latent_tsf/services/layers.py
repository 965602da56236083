#!/usr/bin/env python3
"""
Differentiable Layers - dense float64 building blocks with hand-derived backward passes

Every layer works on the last axis and accepts arbitrary leading axes.
forward() returns (output, cache); backward() consumes the cache and returns the
gradient w.r.t. the input. backward(..., accumulate=False) lets gradients flow
through a layer without touching its parameter accumulators (frozen modules).
"""

import hashlib
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from latent_tsf.utils.errors import ConfigError, ShapeError

logger = logging.getLogger(__name__)

TensorF = np.ndarray

GELU_COEF = 0.044715
SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


def as_tensor(values: Any) -> TensorF:
    """Convert to a contiguous float64 array."""
    return np.ascontiguousarray(values, dtype=np.float64)


class Module(ABC):
    """Base class for layers with explicit forward/backward."""

    @abstractmethod
    def forward(self, x: TensorF, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> Tuple[TensorF, Any]:
        pass

    @abstractmethod
    def backward(self, cache: Any, upstream: TensorF, accumulate: bool = True) -> TensorF:
        pass

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, TensorF, TensorF]]:
        """Yield (name, value, grad) triples; value and grad are updated in place."""
        return iter(())

    def __call__(self, x: TensorF) -> TensorF:
        return self.forward(x, training=False)[0]

    def zero_grads(self) -> None:
        for _, _, grad in self.named_parameters():
            grad.fill(0.0)

    def state_dict(self) -> Dict[str, TensorF]:
        return {name: value.copy() for name, value, _ in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, TensorF]) -> None:
        for name, value, _ in self.named_parameters():
            if name not in state:
                raise ShapeError(f"Missing parameter '{name}' in state")
            incoming = np.asarray(state[name], dtype=np.float64)
            if incoming.shape != value.shape:
                raise ShapeError.mismatch(f"parameter '{name}'", value.shape, incoming.shape)
            value[...] = incoming

    def parameter_count(self) -> int:
        return sum(value.size for _, value, _ in self.named_parameters())


class LinearLayer(Module):
    """y = x W^T + b over the last axis; weight is (out, in)."""

    def __init__(self, weight: TensorF, bias: Optional[TensorF] = None):
        self.weight = as_tensor(weight)
        if self.weight.ndim != 2:
            raise ShapeError(f"Linear weight must be 2-D, got shape {self.weight.shape}")
        self.bias = None if bias is None else as_tensor(bias)
        if self.bias is not None and self.bias.shape != (self.weight.shape[0],):
            raise ShapeError.mismatch("linear bias", (self.weight.shape[0],), self.bias.shape)
        self.weight_grad = np.zeros_like(self.weight)
        self.bias_grad = None if self.bias is None else np.zeros_like(self.bias)

    @classmethod
    def initialize(cls, in_dim: int, out_dim: int, rng: np.random.Generator,
                   use_bias: bool = True) -> "LinearLayer":
        """Uniform init in ±1/sqrt(fan_in)."""
        bound = 1.0 / np.sqrt(in_dim)
        weight = rng.uniform(-bound, bound, size=(out_dim, in_dim))
        bias = rng.uniform(-bound, bound, size=(out_dim,)) if use_bias else None
        return cls(weight, bias)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def forward(self, x, training=False, rng=None):
        return linear_forward(self, x), x

    def backward(self, cache, upstream, accumulate=True):
        return linear_backward(self, cache, upstream, accumulate=accumulate)

    def named_parameters(self, prefix=""):
        yield f"{prefix}weight", self.weight, self.weight_grad
        if self.bias is not None:
            yield f"{prefix}bias", self.bias, self.bias_grad


def linear_forward(layer: LinearLayer, x: TensorF) -> TensorF:
    if x.shape[-1] != layer.in_dim:
        raise ShapeError(
            f"Linear input inner dimension mismatch: input shape {tuple(x.shape)}, "
            f"weight shape {tuple(layer.weight.shape)}"
        )
    out = x @ layer.weight.T
    if layer.bias is not None:
        out = out + layer.bias
    return out


def linear_backward(layer: LinearLayer, x: TensorF, upstream: TensorF,
                    accumulate: bool = True) -> TensorF:
    """Return dL/dx and (optionally) add dL/dW, dL/db into the accumulators."""
    expected = tuple(x.shape[:-1]) + (layer.out_dim,)
    if tuple(upstream.shape) != expected:
        raise ShapeError.mismatch("linear upstream gradient", expected, upstream.shape)

    if accumulate:
        flat_up = upstream.reshape(-1, layer.out_dim)
        flat_x = x.reshape(-1, layer.in_dim)
        layer.weight_grad += flat_up.T @ flat_x
        if layer.bias is not None:
            layer.bias_grad += flat_up.sum(axis=0)
    return upstream @ layer.weight


def activation_forward(kind: str, x: TensorF) -> TensorF:
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "gelu":
        # tanh approximation
        inner = SQRT_2_OVER_PI * (x + GELU_COEF * x ** 3)
        return 0.5 * x * (1.0 + np.tanh(inner))
    raise ConfigError(f"Unknown activation: {kind}")


def activation_backward(kind: str, x: TensorF, upstream: TensorF) -> TensorF:
    if kind == "relu":
        return upstream * (x > 0.0)
    if kind == "gelu":
        inner = SQRT_2_OVER_PI * (x + GELU_COEF * x ** 3)
        tanh_inner = np.tanh(inner)
        d_inner = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_COEF * x ** 2)
        derivative = 0.5 * (1.0 + tanh_inner) + 0.5 * x * (1.0 - tanh_inner ** 2) * d_inner
        return upstream * derivative
    raise ConfigError(f"Unknown activation: {kind}")


class Activation(Module):
    def __init__(self, kind: str = "gelu"):
        if kind not in ("relu", "gelu"):
            raise ConfigError(f"Unknown activation: {kind}")
        self.kind = kind

    def forward(self, x, training=False, rng=None):
        return activation_forward(self.kind, x), x

    def backward(self, cache, upstream, accumulate=True):
        return activation_backward(self.kind, cache, upstream)


class Dropout(Module):
    """Inverted dropout; identity unless training with rate > 0."""

    def __init__(self, rate: float = 0.1):
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"Dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, training=False, rng=None):
        if not training or self.rate == 0.0:
            return x, None
        if rng is None:
            raise ConfigError("Dropout in training mode needs a random generator")
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * mask, mask

    def backward(self, cache, upstream, accumulate=True):
        return upstream if cache is None else upstream * cache


class Sequential(Module):
    """Ordered stack of modules."""

    def __init__(self, modules: List[Module]):
        self.modules = list(modules)

    def forward(self, x, training=False, rng=None):
        caches = []
        for module in self.modules:
            x, cache = module.forward(x, training=training, rng=rng)
            caches.append(cache)
        return x, caches

    def backward(self, cache, upstream, accumulate=True):
        grad = upstream
        for module, module_cache in zip(reversed(self.modules), reversed(cache)):
            grad = module.backward(module_cache, grad, accumulate=accumulate)
        return grad

    def named_parameters(self, prefix=""):
        for index, module in enumerate(self.modules):
            yield from module.named_parameters(f"{prefix}{index}.")

    @property
    def linear_layers(self) -> List[LinearLayer]:
        return [m for m in self.modules if isinstance(m, LinearLayer)]


def build_mlp(dims: List[int], rng: np.random.Generator, activation: str = "gelu",
              dropout: float = 0.0) -> Sequential:
    """
    Linear stack through `dims` with activation (+ dropout) between layers.

    build_mlp([7, 32, 32]) -> Linear(7,32), act, dropout, Linear(32,32)
    """
    modules: List[Module] = []
    for index in range(len(dims) - 1):
        modules.append(LinearLayer.initialize(dims[index], dims[index + 1], rng))
        if index < len(dims) - 2:
            modules.append(Activation(activation))
            if dropout > 0.0:
                modules.append(Dropout(dropout))
    return Sequential(modules)


def parameter_checksum(module: Module) -> str:
    """SHA-256 over parameter names and raw little-endian bytes."""
    digest = hashlib.sha256()
    for name, value, _ in module.named_parameters():
        digest.update(name.encode("utf-8"))
        digest.update(np.ascontiguousarray(value, dtype="<f8").tobytes())
    return digest.hexdigest()
