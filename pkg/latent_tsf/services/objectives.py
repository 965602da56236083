#!/usr/bin/env python3
"""
Objectives - latent prediction, alignment, contrastive, perceptual and reconstruction losses

Every loss returns its scalar value together with the gradient w.r.t. the
prediction argument. Arrays with three or more axes carry a leading batch
axis; a 2-D block is treated as a single sample.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from latent_tsf.services.layers import TensorF
from latent_tsf.utils.config import ALIGN_KINDS, PRED_NORMALIZATIONS
from latent_tsf.utils.errors import ConfigError, ShapeError

logger = logging.getLogger(__name__)

NORM_EPS = 1e-12


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 10.0
    beta: float = 15.0
    perc: float = 0.0
    align_kind: str = "cosine"
    temperature: float = 0.1
    pred_normalization: str = "sum"

    def __post_init__(self):
        if min(self.alpha, self.beta, self.perc) < 0:
            raise ConfigError(f"Loss weights must be >= 0, got alpha={self.alpha}, beta={self.beta}, perc={self.perc}")
        if self.alpha + self.beta + self.perc == 0:
            raise ConfigError("Loss weights must not all be zero")
        if self.align_kind not in ALIGN_KINDS:
            raise ConfigError(f"Unknown align kind: {self.align_kind}")
        if self.temperature <= 0:
            raise ConfigError(f"InfoNCE temperature must be > 0, got {self.temperature}")
        if self.pred_normalization not in PRED_NORMALIZATIONS:
            raise ConfigError(f"Unknown L_Pred normalization: {self.pred_normalization}")

    @classmethod
    def from_section(cls, section) -> "LossWeights":
        return cls(
            alpha=section.alpha,
            beta=section.beta,
            perc=section.perc,
            align_kind=section.align_kind,
            temperature=section.temperature,
            pred_normalization=section.pred_normalization,
        )


@dataclass
class LossBreakdown:
    """Weighted total plus each raw component and the gradients it produced."""

    total: float
    pred: float
    align: float
    perc: Optional[float]
    grad_z_hat: TensorF
    grad_y_hat: Optional[TensorF] = None
    mi_bound: Optional[float] = None


def _check_same_shape(what: str, a: TensorF, b: TensorF) -> None:
    if a.shape != b.shape:
        raise ShapeError.mismatch(what, a.shape, b.shape)


def _per_sample(x: TensorF) -> TensorF:
    """View as (batch, features); 1-D and 2-D inputs are a single sample."""
    if x.ndim >= 3:
        return x.reshape(x.shape[0], -1)
    return x.reshape(1, -1)


def loss_pred(z_y: TensorF, z_hat: TensorF, normalization: str = "sum") -> Tuple[float, TensorF]:
    """
    Batch mean of per-sample squared Frobenius error.

    normalization="mean" additionally divides by the block size D*T.
    """
    _check_same_shape("L_Pred prediction", z_y, z_hat)
    if normalization not in PRED_NORMALIZATIONS:
        raise ConfigError(f"Unknown L_Pred normalization: {normalization}")

    diff = _per_sample(z_hat) - _per_sample(z_y)
    scale = diff.shape[0] if normalization == "sum" else diff.shape[0] * diff.shape[1]
    value = float(np.sum(diff * diff)) / scale
    grad = (2.0 / scale) * diff
    return value, grad.reshape(z_hat.shape)


def loss_align(z_y: TensorF, z_hat: TensorF) -> Tuple[float, TensorF]:
    """
    Batch mean of 1 - cos(Z, Z_hat) over each flattened sample block.

    A sample with a zero-norm side contributes 1 with zero gradient.
    """
    _check_same_shape("L_Align prediction", z_y, z_hat)
    a = _per_sample(z_y)
    b = _per_sample(z_hat)
    batch = a.shape[0]

    norm_a = np.linalg.norm(a, axis=1)
    norm_b = np.linalg.norm(b, axis=1)
    valid = (norm_a > NORM_EPS) & (norm_b > NORM_EPS)
    if not np.all(valid):
        logger.warning(f"⚠️ L_Align: {int(np.sum(~valid))} sample(s) with zero norm; contributing 1 with zero gradient")

    safe_a = np.where(valid, norm_a, 1.0)
    safe_b = np.where(valid, norm_b, 1.0)
    cos = np.where(valid, np.sum(a * b, axis=1) / (safe_a * safe_b), 0.0)
    value = float(np.sum(1.0 - np.clip(cos, -1.0, 1.0))) / batch

    grad = -(a / (safe_a * safe_b)[:, None] - cos[:, None] * b / (safe_b ** 2)[:, None])
    grad = np.where(valid[:, None], grad, 0.0) / batch
    return value, grad.reshape(z_hat.shape)


def _unit_rows(x: TensorF) -> Tuple[TensorF, TensorF]:
    norms = np.maximum(np.linalg.norm(x, axis=1), NORM_EPS)
    return x / norms[:, None], norms


def loss_align_nce(z_hat: TensorF, z_y: TensorF, temperature: float = 0.1) -> Tuple[float, TensorF, float]:
    """
    InfoNCE over in-batch negatives with cosine scores.

    Returns:
        (loss, grad w.r.t. z_hat, mutual-information bound log|B| - loss)
    """
    _check_same_shape("InfoNCE prediction", z_y, z_hat)
    if z_hat.ndim < 2 or z_hat.shape[0] < 2:
        raise ConfigError(f"InfoNCE needs a batch of at least 2 samples, got shape {tuple(z_hat.shape)}")
    if temperature <= 0:
        raise ConfigError(f"InfoNCE temperature must be > 0, got {temperature}")

    batch = z_hat.shape[0]
    u, norm_u = _unit_rows(z_hat.reshape(batch, -1))
    v, _ = _unit_rows(z_y.reshape(batch, -1))

    logits = (u @ v.T) / temperature
    log_norm = logsumexp(logits, axis=1)
    loss = float(np.mean(log_norm - np.diag(logits)))

    # dL/dS = (softmax - I) / (tau * B)
    grad_scores = (softmax(logits, axis=1) - np.eye(batch)) / (temperature * batch)
    grad_u = grad_scores @ v
    grad = (grad_u - np.sum(grad_u * u, axis=1, keepdims=True) * u) / norm_u[:, None]

    mi_bound = math.log(batch) - loss
    return loss, grad.reshape(z_hat.shape), mi_bound


def loss_perceptual(y: TensorF, y_hat: TensorF) -> Tuple[float, TensorF]:
    """Element-mean squared error on decoded forecasts."""
    _check_same_shape("perceptual prediction", y, y_hat)
    diff = y_hat - y
    value = float(np.mean(diff * diff))
    return value, (2.0 / diff.size) * diff


def loss_rec(x: TensorF, x_hat: TensorF) -> Tuple[float, TensorF]:
    """Element-mean absolute reconstruction error."""
    _check_same_shape("reconstruction", x, x_hat)
    diff = x_hat - x
    value = float(np.mean(np.abs(diff)))
    return value, np.sign(diff) / diff.size


def loss_total(weights: LossWeights, z_y: TensorF, z_hat: TensorF,
               y: Optional[TensorF] = None, y_hat: Optional[TensorF] = None) -> LossBreakdown:
    """alpha * L_Pred + beta * L_Align (or InfoNCE) + perc * L_Perc."""
    if weights.perc > 0 and (y is None or y_hat is None):
        raise ConfigError("Perceptual weight is nonzero but no decoded forecasts were supplied")

    pred, grad_pred = loss_pred(z_y, z_hat, weights.pred_normalization)
    mi_bound = None
    if weights.align_kind == "infonce":
        align, grad_align, mi_bound = loss_align_nce(z_hat, z_y, weights.temperature)
    else:
        align, grad_align = loss_align(z_y, z_hat)

    total = weights.alpha * pred + weights.beta * align
    grad_z_hat = weights.alpha * grad_pred + weights.beta * grad_align

    perc = None
    grad_y_hat = None
    if y is not None and y_hat is not None:
        perc, grad_perc = loss_perceptual(y, y_hat)
        if weights.perc > 0:
            total += weights.perc * perc
            grad_y_hat = weights.perc * grad_perc

    return LossBreakdown(
        total=total,
        pred=pred,
        align=align,
        perc=perc,
        grad_z_hat=grad_z_hat,
        grad_y_hat=grad_y_hat,
        mi_bound=mi_bound,
    )


def metric_mse(y: TensorF, y_hat: TensorF) -> float:
    _check_same_shape("MSE prediction", y, y_hat)
    diff = y_hat - y
    return float(np.mean(diff * diff))


def metric_mae(y: TensorF, y_hat: TensorF) -> float:
    _check_same_shape("MAE prediction", y, y_hat)
    return float(np.mean(np.abs(y_hat - y)))
