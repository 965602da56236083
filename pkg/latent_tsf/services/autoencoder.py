#!/usr/bin/env python3
"""
AutoEncoder Service - point-wise expanding MLP AutoEncoder (Stage 1)

Each observation vector x_t in R^C is mapped independently to z_t in R^D
(D > C) and back. Public encode/decode take channel-major blocks (C x L or
batch x C x L, channel axis -2) or single vectors; the Module forward/backward
work time-major on the last axis like every other layer.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from latent_tsf.services.early_stopping import BestTracker
from latent_tsf.services.layers import Module, Sequential, TensorF, as_tensor, build_mlp
from latent_tsf.services.objectives import loss_rec
from latent_tsf.services.optimizer import AdamOptimizer, ParamGroup
from latent_tsf.utils.errors import ConfigError, ShapeError, TrainingDivergenceError

logger = logging.getLogger(__name__)


class PointwiseAutoEncoder(Module):
    """Encoder C -> hidden -> D and decoder D -> C, applied per time step."""

    def __init__(self, encoder: Sequential, decoder: Sequential, in_dim: int, latent_dim: int,
                 architecture: Optional[Dict[str, Any]] = None):
        if latent_dim <= in_dim:
            raise ConfigError(f"Latent dimension D={latent_dim} must exceed channel count C={in_dim}")
        self.encoder = encoder
        self.decoder = decoder
        self.in_dim = in_dim
        self.latent_dim = latent_dim
        self.architecture = dict(architecture or {})
        self.encoder_trainable = True
        self.decoder_trainable = True

    @classmethod
    def build(cls, in_dim: int, latent_dim: int, rng: np.random.Generator, hidden_dim: Optional[int] = None,
              encoder_layers: int = 2, decoder_layers: int = 1, activation: str = "gelu",
              dropout: float = 0.1) -> "PointwiseAutoEncoder":
        """
        Build a freshly initialized AutoEncoder.

        Args:
            in_dim: channel count C
            latent_dim: latent dimension D (> C)
            rng: generator used for weight init
            hidden_dim: width of hidden layers (defaults to D)
            encoder_layers / decoder_layers: linear layer counts
            activation: 'gelu' or 'relu'
            dropout: rate between encoder layers (pretraining only)
        """
        if latent_dim <= in_dim:
            raise ConfigError(f"Latent dimension D={latent_dim} must exceed channel count C={in_dim}")
        hidden = hidden_dim or latent_dim
        encoder_dims = [in_dim] + [hidden] * (encoder_layers - 1) + [latent_dim]
        decoder_dims = [latent_dim] + [hidden] * (decoder_layers - 1) + [in_dim]
        architecture = {
            "in_dim": in_dim,
            "latent_dim": latent_dim,
            "hidden_dim": hidden,
            "encoder_layers": encoder_layers,
            "decoder_layers": decoder_layers,
            "activation": activation,
            "dropout": dropout,
        }
        encoder = build_mlp(encoder_dims, rng, activation=activation, dropout=dropout)
        decoder = build_mlp(decoder_dims, rng, activation=activation)
        return cls(encoder, decoder, in_dim, latent_dim, architecture)

    @classmethod
    def from_architecture(cls, architecture: Dict[str, Any], rng: np.random.Generator) -> "PointwiseAutoEncoder":
        """Rebuild the layer stack described by a checkpoint header."""
        return cls.build(
            in_dim=int(architecture["in_dim"]),
            latent_dim=int(architecture["latent_dim"]),
            rng=rng,
            hidden_dim=int(architecture["hidden_dim"]),
            encoder_layers=int(architecture["encoder_layers"]),
            decoder_layers=int(architecture["decoder_layers"]),
            activation=architecture["activation"],
            dropout=float(architecture["dropout"]),
        )

    @property
    def frozen(self) -> bool:
        return not (self.encoder_trainable or self.decoder_trainable)

    def freeze(self) -> "PointwiseAutoEncoder":
        self.encoder_trainable = False
        self.decoder_trainable = False
        logger.info(f"🧊 AutoEncoder frozen ({self.parameter_count()} parameters)")
        return self

    def set_trainable(self, encoder: bool, decoder: bool) -> None:
        self.encoder_trainable = encoder
        self.decoder_trainable = decoder

    # time-major Module interface: (..., C) -> (..., C)

    def forward(self, x, training=False, rng=None):
        z, enc_cache = self.encoder.forward(x, training=training, rng=rng)
        x_hat, dec_cache = self.decoder.forward(z, training=training, rng=rng)
        return x_hat, (enc_cache, dec_cache)

    def backward(self, cache, upstream, accumulate=True):
        enc_cache, dec_cache = cache
        grad_z = self.decoder.backward(dec_cache, upstream, accumulate=accumulate and self.decoder_trainable)
        return self.encoder.backward(enc_cache, grad_z, accumulate=accumulate and self.encoder_trainable)

    def named_parameters(self, prefix=""):
        yield from self.encoder.named_parameters(f"{prefix}encoder.")
        yield from self.decoder.named_parameters(f"{prefix}decoder.")

    # channel-major public interface

    def encode(self, x: TensorF) -> TensorF:
        """x: (C,), (C, L) or (B, C, L) -> same layout with D channels."""
        return _pointwise(self.encoder, as_tensor(x), self.in_dim, "encoder input")

    def decode(self, z: TensorF) -> TensorF:
        """z: (D,), (D, T) or (B, D, T) -> same layout with C channels."""
        return _pointwise(self.decoder, as_tensor(z), self.latent_dim, "decoder input")

    def encode_forward(self, x: TensorF) -> Tuple[TensorF, Any]:
        """Eval-mode encode that keeps the cache for encode_backward."""
        _check_channels(x, self.in_dim, "encoder input")
        z, cache = self.encoder.forward(np.swapaxes(x, -1, -2), training=False)
        return np.swapaxes(z, -1, -2), cache

    def encode_backward(self, cache: Any, upstream: TensorF) -> TensorF:
        grad = self.encoder.backward(cache, np.swapaxes(upstream, -1, -2), accumulate=self.encoder_trainable)
        return np.swapaxes(grad, -1, -2)

    def decode_forward(self, z: TensorF) -> Tuple[TensorF, Any]:
        """Eval-mode decode that keeps the cache for decode_backward."""
        _check_channels(z, self.latent_dim, "decoder input")
        y, cache = self.decoder.forward(np.swapaxes(z, -1, -2), training=False)
        return np.swapaxes(y, -1, -2), cache

    def decode_backward(self, cache: Any, upstream: TensorF) -> TensorF:
        """Gradient w.r.t. the latent input; decoder grads accumulate only when trainable."""
        grad = self.decoder.backward(cache, np.swapaxes(upstream, -1, -2), accumulate=self.decoder_trainable)
        return np.swapaxes(grad, -1, -2)

    def reconstruct(self, x: TensorF) -> TensorF:
        return self.decode(self.encode(x))


def _check_channels(x: TensorF, expected: int, what: str) -> None:
    axis = -1 if x.ndim == 1 else -2
    if x.shape[axis] != expected:
        raise ShapeError(f"{what}: expected {expected} channels on axis {axis}, got shape {tuple(x.shape)}")


def _pointwise(module: Sequential, x: TensorF, expected: int, what: str) -> TensorF:
    _check_channels(x, expected, what)
    if x.ndim == 1:
        return module(x)
    return np.swapaxes(module(np.swapaxes(x, -1, -2)), -1, -2)


@dataclass
class PretrainResult:
    """Per-epoch reconstruction curve; index 0 is the untrained model."""

    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    best_epoch: int = 0
    epochs_run: int = 0
    stopped_early: bool = False

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
            "epochs_run": self.epochs_run,
            "stopped_early": self.stopped_early,
        }


def reconstruction_loss(ae: PointwiseAutoEncoder, values: TensorF, batch_rows: int = 65536) -> float:
    """Eval-mode L_Rec over a time-major (N, C) array, accumulated in fixed chunk order."""
    total = 0.0
    for start in range(0, len(values), batch_rows):
        chunk = values[start:start + batch_rows]
        x_hat = ae(chunk)
        total += float(np.sum(np.abs(x_hat - chunk)))
    return total / values.size


def _window_starts(n_points: int, chunk_len: int) -> Tuple[np.ndarray, int]:
    """Stride-1 window starts; a series shorter than chunk_len is one window."""
    span = min(chunk_len, n_points)
    return np.arange(n_points - span + 1), span


def pretrain(ae: PointwiseAutoEncoder, train_values: TensorF, val_values: TensorF, *,
             lr: float, epochs: int, patience: int, batch_size: int, chunk_len: int,
             shuffle_rng: np.random.Generator, dropout_rng: np.random.Generator,
             grad_clip: Optional[float] = None, scheduler: str = "cosine") -> PretrainResult:
    """
    Minimize L_Rec on the train split with Adam and keep the best-validation weights.

    Samples are stride-1 windows of `chunk_len` consecutive time steps, so
    one epoch makes about N / batch_size optimizer steps; `batch_size`
    counts windows and every step sees batch_size * chunk_len points.
    """
    if ae.frozen:
        raise ConfigError("Cannot pretrain a frozen AutoEncoder")
    if train_values.ndim != 2 or train_values.shape[1] != ae.in_dim:
        raise ShapeError.mismatch("pretraining data", ("N", ae.in_dim), train_values.shape)

    optimizer = AdamOptimizer([ParamGroup.from_module("autoencoder", ae, lr)], scheduler=scheduler,
                              total_epochs=epochs)
    starts, span = _window_starts(len(train_values), chunk_len)
    offsets = np.arange(span)
    result = PretrainResult()
    tracker = BestTracker(patience=patience)

    result.train_loss.append(reconstruction_loss(ae, train_values))
    tracker.update(reconstruction_loss(ae, val_values), ae.state_dict)
    logger.info(f"📊 AE epoch 0: train L_Rec={result.train_loss[0]:.6f} val L_Rec={tracker.history[0]:.6f}")

    for epoch in range(1, epochs + 1):
        optimizer.set_epoch(epoch - 1)
        order = shuffle_rng.permutation(starts)
        epoch_sum = 0.0
        epoch_count = 0
        for start in range(0, len(order), batch_size):
            rows = order[start:start + batch_size, None] + offsets
            x = train_values[rows.reshape(-1)]
            optimizer.zero_grads()
            x_hat, cache = ae.forward(x, training=True, rng=dropout_rng)
            loss, grad = loss_rec(x, x_hat)
            if not np.isfinite(loss):
                raise TrainingDivergenceError(f"Non-finite AE reconstruction loss at epoch {epoch}")
            ae.backward(cache, grad)
            if grad_clip:
                optimizer.clip_grad_norm(grad_clip)
            optimizer.step()
            epoch_sum += loss * x.size
            epoch_count += x.size

        result.train_loss.append(epoch_sum / epoch_count)
        val_loss = reconstruction_loss(ae, val_values)
        if not np.isfinite(val_loss):
            raise TrainingDivergenceError(f"Non-finite AE validation loss at epoch {epoch}")
        improved = tracker.update(val_loss, ae.state_dict)
        result.epochs_run = epoch
        logger.info(
            f"📊 AE epoch {epoch}: train L_Rec={result.train_loss[-1]:.6f} "
            f"val L_Rec={val_loss:.6f}{' ✅ best' if improved else ''}"
        )
        if tracker.should_stop():
            result.stopped_early = True
            logger.info(f"⏹️ AE early stop at epoch {epoch} (best epoch {tracker.best_epoch})")
            break

    ae.load_state_dict(tracker.best_state)
    result.val_loss = list(tracker.history)
    result.best_epoch = tracker.best_epoch
    logger.info(f"✅ AE pretraining done: best val L_Rec={result.best_val_loss:.6f} at epoch {result.best_epoch}")
    return result
