#!/usr/bin/env python3
"""
Latent TSF Error Types
Every error knows the CLI exit code it maps to (see handler_registry.py)
"""

from typing import Sequence


class LatentTSFError(Exception):
    """Base class for all expected failures."""

    exit_code = 1


class ConfigError(LatentTSFError, ValueError):
    """Invalid or unknown configuration."""

    exit_code = 2


class ShapeError(LatentTSFError, ValueError):
    """Dimension mismatch between two tensors or a tensor and a layer."""

    exit_code = 2

    @classmethod
    def mismatch(cls, what: str, expected: Sequence[int], actual: Sequence[int]) -> "ShapeError":
        return cls(f"{what}: expected shape {tuple(expected)}, got {tuple(actual)}")


class DataLoadError(LatentTSFError, IOError):
    """Dataset file missing, empty or unparsable."""

    exit_code = 3


class CheckpointError(LatentTSFError, IOError):
    """Checkpoint file corrupt, truncated or of the wrong kind."""

    exit_code = 3


class TrainingDivergenceError(LatentTSFError, ArithmeticError):
    """Non-finite loss or gradient during optimization."""

    exit_code = 4


class FreezeViolationError(LatentTSFError, AssertionError):
    """A frozen AutoEncoder was modified during Stage 2."""

    exit_code = 4
