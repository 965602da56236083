#!/usr/bin/env python3
"""
Shared flags and config loading for the training subcommands
"""

import argparse
import logging
from typing import List, Optional, Tuple

from latent_tsf.services.data_service import PreparedData, Standardizer, prepare_data
from latent_tsf.utils.config import ExperimentConfig
from latent_tsf.utils.errors import ConfigError
from latent_tsf.utils.handler_registry import CommandContext

logger = logging.getLogger(__name__)


def parse_pred_lens(raw: str) -> List[int]:
    try:
        values = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"--pred-lens must be comma-separated integers, got '{raw}'") from e
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"--pred-lens needs positive horizons, got '{raw}'")
    return values


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--seed", type=int, default=None, help="run seed (overrides training.seed)")
    parser.add_argument("--epochs", type=int, default=None, help="override the epoch count")
    parser.add_argument("--output-dir", default=None, help="run directory")
    parser.add_argument("--strict", action="store_true", help="acceptance mode: --seed is mandatory")


def load_experiment(context: CommandContext, stage: str) -> Tuple[ExperimentConfig, int]:
    """Load the config file and apply command-line overrides."""
    args = context.args
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config.training.seed = args.seed
    if args.epochs is not None:
        if args.epochs < 0:
            raise ConfigError(f"--epochs must be >= 0, got {args.epochs}")
        if stage == "stage1":
            config.autoencoder.epochs = args.epochs
        else:
            config.training.epochs = args.epochs
    if getattr(args, "pred_lens", None):
        config.data.pred_lens = list(args.pred_lens)
    config.validate()
    return config, config.training.seed


def load_data(config: ExperimentConfig, standardizer: Optional[Standardizer] = None,
              seq_len: Optional[int] = None) -> PreparedData:
    return prepare_data(
        config.data.path,
        config.data.dataset,
        seq_len or config.data.seq_len,
        ratios=config.data.split_ratios,
        standardizer=standardizer,
    )


def seed_warning(context: CommandContext) -> List[str]:
    if getattr(context.args, "seed", None) is None:
        return ["No --seed given; used training.seed from the config file"]
    return []
