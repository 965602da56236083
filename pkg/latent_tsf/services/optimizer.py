#!/usr/bin/env python3
"""
Optimizer Service - Adam with parameter groups, cosine schedule, global-norm clipping
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from latent_tsf.services.layers import Module, TensorF
from latent_tsf.utils.errors import ConfigError, ShapeError, TrainingDivergenceError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First/second moments per parameter plus the shared step counter."""

    m: Dict[str, TensorF] = field(default_factory=dict)
    v: Dict[str, TensorF] = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(params: Dict[str, TensorF], grads: Dict[str, TensorF], state: AdamState, lr: float) -> None:
    """
    One bias-corrected Adam update, in place.

    Args:
        params: name -> parameter array (updated in place)
        grads: name -> gradient array, same shapes as params
        state: AdamState (moments created lazily, t incremented by one)
        lr: step size, must be > 0
    """
    if lr <= 0:
        raise ConfigError(f"Learning rate must be > 0, got {lr}")

    for name, grad in grads.items():
        if name not in params:
            raise ShapeError(f"Gradient for unknown parameter '{name}'")
        if grad.shape != params[name].shape:
            raise ShapeError.mismatch(f"gradient of '{name}'", params[name].shape, grad.shape)
        if not np.all(np.isfinite(grad)):
            raise TrainingDivergenceError(f"Non-finite gradient in parameter '{name}' at step {state.t + 1}")

    state.t += 1
    bias1 = 1.0 - state.beta1 ** state.t
    bias2 = 1.0 - state.beta2 ** state.t

    for name, value in params.items():
        grad = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad

        m_hat = m / bias1
        v_hat = v / bias2
        value -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


def cosine_lr(base_lr: float, epoch: int, total_epochs: int) -> float:
    """Cosine annealing from base_lr at epoch 0 toward 0 at total_epochs."""
    if total_epochs <= 0 or not 0 <= epoch < total_epochs:
        raise ConfigError(f"cosine_lr needs 0 <= epoch < total_epochs, got epoch={epoch}, total={total_epochs}")
    return base_lr * (1.0 + math.cos(math.pi * epoch / total_epochs)) / 2.0


@dataclass
class ParamGroup:
    name: str
    base_lr: float
    params: Dict[str, TensorF] = field(default_factory=dict)
    grads: Dict[str, TensorF] = field(default_factory=dict)
    state: AdamState = field(default_factory=AdamState)

    @classmethod
    def from_module(cls, name: str, module: Module, base_lr: float) -> "ParamGroup":
        group = cls(name=name, base_lr=base_lr)
        for param_name, value, grad in module.named_parameters(f"{name}."):
            group.params[param_name] = value
            group.grads[param_name] = grad
        return group


class AdamOptimizer:
    """Adam over named parameter groups, each with its own base learning rate."""

    def __init__(self, groups: List[ParamGroup], scheduler: str = "cosine", total_epochs: int = 1):
        if scheduler not in ("cosine", "constant"):
            raise ConfigError(f"Unknown scheduler: {scheduler}")
        self.groups = [g for g in groups if g.base_lr > 0]
        skipped = [g.name for g in groups if g.base_lr <= 0]
        if skipped:
            logger.info(f"🧊 Parameter groups with zero learning rate are frozen: {', '.join(skipped)}")
        self.scheduler = scheduler
        self.total_epochs = max(1, total_epochs)
        self.epoch = 0

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def current_lr(self, group: ParamGroup) -> float:
        if self.scheduler == "constant":
            return group.base_lr
        return cosine_lr(group.base_lr, min(self.epoch, self.total_epochs - 1), self.total_epochs)

    def zero_grads(self) -> None:
        for group in self.groups:
            for grad in group.grads.values():
                grad.fill(0.0)

    def clip_grad_norm(self, max_norm: float) -> float:
        """
        Scale all group gradients so their joint L2 norm is at most max_norm.

        Returns:
            The norm before clipping
        """
        total_sq = 0.0
        for group in self.groups:
            for grad in group.grads.values():
                total_sq += float(np.sum(grad * grad))
        total_norm = math.sqrt(total_sq)
        if not math.isfinite(total_norm):
            raise TrainingDivergenceError(f"Non-finite gradient norm at step {self.step_count + 1}")
        if max_norm > 0 and total_norm > max_norm:
            scale = max_norm / (total_norm + 1e-12)
            for group in self.groups:
                for grad in group.grads.values():
                    grad *= scale
        return total_norm

    def step(self) -> None:
        for group in self.groups:
            adam_step(group.params, group.grads, group.state, self.current_lr(group))

    @property
    def step_count(self) -> int:
        return self.groups[0].state.t if self.groups else 0

    def describe(self) -> List[Tuple[str, float]]:
        return [(g.name, g.base_lr) for g in self.groups]
