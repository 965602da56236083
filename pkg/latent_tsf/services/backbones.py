#!/usr/bin/env python3
"""
Backbones - temporal forecasters mapping (batch, channels, L) to (batch, channels, T)

Temporal weights are shared across channels (channel independence), so the
same backbone class serves latent inputs (D channels) and raw observations
(C channels).
"""

import logging
from abc import abstractmethod
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from latent_tsf.services.layers import LinearLayer, Module, Sequential, TensorF, as_tensor, build_mlp
from latent_tsf.utils.config import BACKBONE_KINDS
from latent_tsf.utils.errors import ConfigError, ShapeError

logger = logging.getLogger(__name__)


def _check_kernel(kernel: int, length: int) -> None:
    if kernel < 1 or kernel % 2 == 0:
        raise ConfigError(f"Moving-average kernel must be odd and >= 1, got {kernel}")
    if kernel > length:
        raise ConfigError(f"Moving-average kernel {kernel} exceeds series length {length}")


def dlinear_decompose(series: TensorF, kernel: int) -> Tuple[TensorF, TensorF]:
    """
    Split a series into (trend, seasonal) along the last axis.

    trend is the centered moving average with edge values replicated;
    seasonal = series - trend.
    """
    series = as_tensor(series)
    _check_kernel(kernel, series.shape[-1])
    half = (kernel - 1) // 2
    front = np.repeat(series[..., :1], half, axis=-1)
    end = np.repeat(series[..., -1:], half, axis=-1)
    padded = np.concatenate([front, series, end], axis=-1)
    trend = sliding_window_view(padded, kernel, axis=-1).mean(axis=-1)
    return trend, series - trend


def moving_average_matrix(length: int, kernel: int) -> TensorF:
    """A with (x @ A.T) equal to the replicate-padded moving average of x."""
    _check_kernel(kernel, length)
    half = (kernel - 1) // 2
    rows = np.repeat(np.arange(length), kernel)
    cols = np.clip(np.arange(length)[:, None] + np.arange(-half, half + 1), 0, length - 1).ravel()
    matrix = np.zeros((length, length))
    np.add.at(matrix, (rows, cols), 1.0 / kernel)
    return matrix


class Backbone(Module):
    """Forecaster over the last axis: (B, channels, L) -> (B, channels, T)."""

    kind = ""

    def __init__(self, seq_len: int, pred_len: int):
        self.seq_len = seq_len
        self.pred_len = pred_len

    def check_input(self, x: TensorF) -> None:
        if x.ndim != 3 or x.shape[-1] != self.seq_len:
            raise ShapeError.mismatch(f"{self.kind} backbone input", ("B", "channels", self.seq_len), x.shape)

    @abstractmethod
    def hidden_features(self, x: TensorF) -> TensorF:
        """Eval-mode internal representation per sample, shape (B, features)."""

    @abstractmethod
    def spec(self) -> Dict[str, Any]:
        """Architecture record stored in checkpoint headers."""


class DLinearBackbone(Backbone):
    """
    Seasonal and trend linear heads over a moving-average decomposition.

    Evaluated through the equivalent single map
    W_eff = W_seasonal (I - A) + W_trend A, with A the moving-average operator.
    """

    kind = "dlinear"

    def __init__(self, seq_len: int, pred_len: int, kernel: int = 25, use_bias: bool = True,
                 rng: Optional[np.random.Generator] = None):
        super().__init__(seq_len, pred_len)
        self.kernel = kernel
        self.use_bias = use_bias
        self.average = moving_average_matrix(seq_len, kernel)
        self.remainder = np.eye(seq_len) - self.average

        # heads start as a flat average over the lookback
        weight = np.full((pred_len, seq_len), 1.0 / seq_len)
        bound = 1.0 / np.sqrt(seq_len)
        rng = rng or np.random.default_rng(0)
        seasonal_bias = rng.uniform(-bound, bound, size=pred_len) if use_bias else None
        trend_bias = rng.uniform(-bound, bound, size=pred_len) if use_bias else None
        self.seasonal = LinearLayer(weight.copy(), seasonal_bias)
        self.trend = LinearLayer(weight.copy(), trend_bias)

    def effective_weight(self) -> TensorF:
        return self.seasonal.weight @ self.remainder + self.trend.weight @ self.average

    def forward(self, x, training=False, rng=None):
        self.check_input(x)
        out = x @ self.effective_weight().T
        if self.use_bias:
            out = out + self.seasonal.bias + self.trend.bias
        return out, x

    def backward(self, cache, upstream, accumulate=True):
        x = cache
        expected = x.shape[:-1] + (self.pred_len,)
        if upstream.shape != expected:
            raise ShapeError.mismatch("dlinear upstream gradient", expected, upstream.shape)
        if accumulate:
            flat_up = upstream.reshape(-1, self.pred_len)
            grad_eff = flat_up.T @ x.reshape(-1, self.seq_len)
            self.seasonal.weight_grad += grad_eff @ self.remainder.T
            self.trend.weight_grad += grad_eff @ self.average.T
            if self.use_bias:
                bias_grad = flat_up.sum(axis=0)
                self.seasonal.bias_grad += bias_grad
                self.trend.bias_grad += bias_grad
        return upstream @ self.effective_weight()

    def named_parameters(self, prefix=""):
        yield from self.seasonal.named_parameters(f"{prefix}seasonal.")
        yield from self.trend.named_parameters(f"{prefix}trend.")

    def heads(self, x: TensorF) -> Tuple[TensorF, TensorF]:
        """Seasonal and trend head outputs, each (B, channels, T)."""
        self.check_input(x)
        trend_in = x @ self.average.T
        return self.seasonal(x - trend_in), self.trend(trend_in)

    def hidden_features(self, x):
        seasonal, trend = self.heads(x)
        return np.concatenate([seasonal[..., 0], trend[..., 0]], axis=-1)

    def spec(self):
        return {"kind": self.kind, "seq_len": self.seq_len, "pred_len": self.pred_len,
                "moving_avg": self.kernel, "use_bias": self.use_bias}


class MLPBackbone(Backbone):
    """Per-channel temporal MLP: L -> d_ff (x hidden_layers) -> T."""

    kind = "mlp"

    def __init__(self, seq_len: int, pred_len: int, d_ff: int, rng: np.random.Generator,
                 hidden_layers: int = 1, dropout: float = 0.1, activation: str = "gelu"):
        super().__init__(seq_len, pred_len)
        self.d_ff = d_ff
        self.hidden_layers = hidden_layers
        self.dropout = dropout
        self.activation = activation
        self.network: Sequential = build_mlp([seq_len] + [d_ff] * hidden_layers + [pred_len], rng,
                                             activation=activation, dropout=dropout)

    def forward(self, x, training=False, rng=None):
        self.check_input(x)
        return self.network.forward(x, training=training, rng=rng)

    def backward(self, cache, upstream, accumulate=True):
        return self.network.backward(cache, upstream, accumulate=accumulate)

    def named_parameters(self, prefix=""):
        yield from self.network.named_parameters(f"{prefix}network.")

    def hidden_features(self, x):
        self.check_input(x)
        # first linear + activation
        hidden = Sequential(self.network.modules[:2])(x)
        return hidden.reshape(hidden.shape[0], -1)

    def spec(self):
        return {"kind": self.kind, "seq_len": self.seq_len, "pred_len": self.pred_len, "d_ff": self.d_ff,
                "hidden_layers": self.hidden_layers, "dropout": self.dropout, "activation": self.activation}


def forecast_latent(backbone: Backbone, z_x: TensorF) -> TensorF:
    """Eval-mode forecast: (B, D, L) -> (B, D, T)."""
    return backbone.forward(as_tensor(z_x), training=False)[0]


def mlp_forward(backbone: MLPBackbone, z_x: TensorF, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> TensorF:
    return backbone.forward(as_tensor(z_x), training=training, rng=rng)[0]


def build_backbone(kind: str, seq_len: int, pred_len: int, rng: np.random.Generator, *,
                   moving_avg: int = 25, d_ff: int = 64, hidden_layers: int = 1,
                   dropout: float = 0.1, use_bias: bool = True) -> Backbone:
    if kind not in BACKBONE_KINDS:
        raise ConfigError(f"Unknown backbone kind: {kind}")
    if kind == "dlinear":
        backbone = DLinearBackbone(seq_len, pred_len, kernel=moving_avg, use_bias=use_bias, rng=rng)
    else:
        backbone = MLPBackbone(seq_len, pred_len, d_ff, rng, hidden_layers=hidden_layers, dropout=dropout)
    logger.info(f"🏗️ Built {kind} backbone L={seq_len} T={pred_len} ({backbone.parameter_count()} parameters)")
    return backbone


def backbone_from_spec(spec: Dict[str, Any], rng: np.random.Generator) -> Backbone:
    """Rebuild a backbone from a checkpoint architecture record."""
    return build_backbone(
        spec["kind"], int(spec["seq_len"]), int(spec["pred_len"]), rng,
        moving_avg=int(spec.get("moving_avg", 25)),
        d_ff=int(spec.get("d_ff", 64)),
        hidden_layers=int(spec.get("hidden_layers", 1)),
        dropout=float(spec.get("dropout", 0.1)),
        use_bias=bool(spec.get("use_bias", True)),
    )
