#!/usr/bin/env python3
"""
Eval Handler - recompute test metrics from a saved backbone checkpoint
"""

import logging
from pathlib import Path

from latent_tsf.handlers.experiment_args import load_data
from latent_tsf.services.training_service import evaluate_forecaster, load_forecaster
from latent_tsf.utils.config import ExperimentConfig
from latent_tsf.utils.handler_registry import EXIT_OK, BaseHandler, CommandContext

logger = logging.getLogger(__name__)


class EvalHandler(BaseHandler):
    def __init__(self):
        super().__init__(
            name="eval",
            description="Recompute test MSE/MAE for a backbone checkpoint",
            usage="eval --checkpoint CKPT --config CFG [--output FILE]",
        )
        self.add_alias("evaluate")

    def add_arguments(self, parser):
        parser.add_argument("--checkpoint", required=True, help="backbone checkpoint (backbone_T*.ckpt)")
        parser.add_argument("--config", required=True, help="experiment config (JSON)")
        parser.add_argument("--output", default=None, help="metrics JSON path")

    def handle(self, context: CommandContext) -> int:
        args = context.args
        checkpoint_path = Path(args.checkpoint)
        forecaster, standardizer, metadata = load_forecaster(checkpoint_path)
        config = ExperimentConfig.load(args.config)
        data = load_data(config, standardizer=standardizer, seq_len=forecaster.seq_len)

        metrics = evaluate_forecaster(forecaster, data.windows("test", forecaster.pred_len))
        report = {
            "checkpoint": str(checkpoint_path),
            "dataset": config.data.dataset,
            "mode": forecaster.mode,
            "pred_len": forecaster.pred_len,
            "test_mse": metrics.mse,
            "test_mae": metrics.mae,
        }

        recorded = metadata.get("test_mse")
        if recorded is not None and config.data.dataset == metadata.get("dataset"):
            if recorded == metrics.mse and metadata.get("test_mae") == metrics.mae:
                logger.info("✅ Metrics match the values recorded at training time")
            else:
                logger.warning(f"⚠️ Metrics differ from training time: MSE {recorded} -> {metrics.mse}")

        output = Path(args.output) if args.output else checkpoint_path.with_name(
            f"eval_T{forecaster.pred_len}.json")
        self.write_json(output, report)
        print(f"📊 T={forecaster.pred_len}: test MSE={metrics.mse:.6f} MAE={metrics.mae:.6f}")
        return EXIT_OK
