#!/usr/bin/env python3
"""
Pretrain Handler - Stage 1: fit and freeze the point-wise AutoEncoder
"""

import logging

from latent_tsf.handlers.experiment_args import add_run_arguments, load_data, load_experiment, seed_warning
from latent_tsf.services.training_service import run_stage1, save_autoencoder
from latent_tsf.utils.handler_registry import EXIT_OK, BaseHandler, CommandContext

logger = logging.getLogger(__name__)


class PretrainHandler(BaseHandler):
    def __init__(self):
        super().__init__(
            name="pretrain-ae",
            description="Pretrain the point-wise AutoEncoder (Stage 1) and save a frozen checkpoint",
            usage="pretrain-ae --config CFG [--seed N] [--epochs N] [--output-dir DIR] [--strict]",
        )
        self.add_alias("pretrain")

    def add_arguments(self, parser):
        add_run_arguments(parser)

    def handle(self, context: CommandContext) -> int:
        config, seed = load_experiment(context, stage="stage1")
        data = load_data(config)
        ae, record = run_stage1(config, data, seed)
        record.warnings = seed_warning(context) + record.warnings

        run_dir = self.resolve_run_dir(context, config.data.dataset, seed)
        config.save(run_dir / "resolved_config.json")
        checkpoint_path = save_autoencoder(
            run_dir / "autoencoder.ckpt",
            ae,
            data.standardizer,
            metadata={
                "dataset": config.data.dataset,
                "seed": seed,
                "final_rec": record.best_val,
                "best_epoch": record.best_epoch,
            },
        )
        self.write_json(run_dir / "run.json", record.to_dict())
        self.write_json(run_dir / "metrics.json", {**record.metrics(), "final_rec": record.best_val})

        print(f"✅ AutoEncoder C={ae.in_dim} -> D={ae.latent_dim}: best val L_Rec={record.best_val:.6f} "
              f"(epoch {record.best_epoch})")
        print(f"💾 Checkpoint: {checkpoint_path}")
        return EXIT_OK
