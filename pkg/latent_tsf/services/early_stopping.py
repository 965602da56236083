#!/usr/bin/env python3
"""
Early Stopping - patience rule and best-checkpoint tracking shared by both training stages

history[0] is the evaluation at initialization; history[k] is after epoch k.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence

from latent_tsf.services.layers import TensorF
from latent_tsf.utils.errors import ConfigError

logger = logging.getLogger(__name__)


class StopDecision(str, Enum):
    CONTINUE = "continue"
    STOP = "stop"


def best_index(history: Sequence[float]) -> int:
    """Index of the first occurrence of the minimum."""
    best = 0
    for index, value in enumerate(history):
        if value < history[best]:
            best = index
    return best


def early_stop_check(history: Sequence[float], patience: int) -> StopDecision:
    """Stop iff the best value occurred more than `patience` entries ago."""
    if not history:
        raise ConfigError("early_stop_check needs a non-empty history")
    if len(history) - 1 - best_index(history) > patience:
        return StopDecision.STOP
    return StopDecision.CONTINUE


@dataclass
class BestTracker:
    """Keeps the lowest validation value seen and a copy of the model state that produced it."""

    patience: int
    history: List[float] = field(default_factory=list)
    best_state: Optional[Dict[str, Dict[str, TensorF]]] = None

    def update(self, value: float, snapshot: Callable[[], Dict[str, Dict[str, TensorF]]]) -> bool:
        """Record a validation value; returns True when it is a new best."""
        self.history.append(value)
        improved = best_index(self.history) == len(self.history) - 1
        if improved:
            self.best_state = snapshot()
        return improved

    @property
    def best_epoch(self) -> int:
        return best_index(self.history)

    @property
    def best_value(self) -> float:
        return self.history[self.best_epoch]

    def should_stop(self) -> bool:
        return early_stop_check(self.history, self.patience) == StopDecision.STOP
