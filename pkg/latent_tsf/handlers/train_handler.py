#!/usr/bin/env python3
"""
Train Handler - Stage 2 latent training (or the observation-space baseline), one backbone per horizon
"""

import logging
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from latent_tsf.handlers.experiment_args import (
    add_run_arguments, load_data, load_experiment, parse_pred_lens, seed_warning,
)
from latent_tsf.services.diagnostics import export_embeddings, raw_observation_trace
from latent_tsf.services.training_service import (
    PROGRESS_TAGS, TrainOutcome, load_autoencoder, run_baseline, run_stage2, save_forecaster,
)
from latent_tsf.utils.config import TAP_POINTS, ExperimentConfig
from latent_tsf.utils.errors import ConfigError
from latent_tsf.utils.handler_registry import EXIT_OK, BaseHandler, CommandContext

logger = logging.getLogger(__name__)


class TrainHandler(BaseHandler):
    def __init__(self):
        super().__init__(
            name="train",
            description="Train a forecasting backbone in latent space (--ae) or observation space (--baseline)",
            usage="train --config CFG (--ae CKPT | --baseline) [--pred-lens 96,192] [--seed N] "
                  "[--epochs N] [--export-embeddings] [--output-dir DIR] [--strict]",
        )

    def add_arguments(self, parser):
        add_run_arguments(parser)
        arm = parser.add_mutually_exclusive_group()
        arm.add_argument("--ae", default=None, help="pretrained AutoEncoder checkpoint")
        arm.add_argument("--baseline", action="store_true", help="train directly on observations (no AutoEncoder)")
        parser.add_argument("--pred-lens", type=parse_pred_lens, default=None, help="comma-separated horizons")
        parser.add_argument("--export-embeddings", action="store_true",
                            help="write 0/50/100%% progress embeddings for the first horizon")

    def handle(self, context: CommandContext) -> int:
        args = context.args
        config, seed = load_experiment(context, stage="stage2")

        standardizer = None
        if not args.baseline and config.autoencoder.mode != "scratch":
            if not args.ae:
                raise ConfigError(
                    f"train needs --ae CKPT for autoencoder.mode={config.autoencoder.mode} (or pass --baseline)"
                )
            _, standardizer, _ = load_autoencoder(Path(args.ae))
        data = load_data(config, standardizer=standardizer)

        run_dir = self.resolve_run_dir(context, config.data.dataset, seed)
        config.save(run_dir / "resolved_config.json")
        export = args.export_embeddings or config.diagnostics.export_embeddings

        outcomes: List[TrainOutcome] = []
        for index, pred_len in enumerate(config.data.pred_lens):
            if args.baseline:
                outcome = run_baseline(config, data, pred_len, seed)
            else:
                # each horizon starts from the pretrained weights
                ae = load_autoencoder(Path(args.ae))[0] if args.ae and config.autoencoder.mode != "scratch" else None
                outcome = run_stage2(config, data, pred_len, seed, ae=ae)
            outcome.record.warnings = seed_warning(context) + outcome.record.warnings

            save_forecaster(
                run_dir / f"backbone_T{pred_len}.ckpt",
                outcome.forecaster,
                data.standardizer,
                metadata={
                    "dataset": config.data.dataset,
                    "seed": seed,
                    "seq_len": config.data.seq_len,
                    "pred_len": pred_len,
                    "n_channels": data.n_channels,
                    "test_mse": outcome.record.test_mse,
                    "test_mae": outcome.record.test_mae,
                },
            )
            if export and index == 0:
                self._export(outcome, config, data, run_dir, seed, baseline=args.baseline)
            outcomes.append(outcome)

        self.write_json(run_dir / "run.json", {"runs": [o.record.to_dict() for o in outcomes]})
        metrics = self._metrics(config, seed, args.baseline, outcomes)
        self.write_json(run_dir / "metrics.json", metrics)

        for row in metrics["horizons"]:
            print(f"📊 T={row['pred_len']}: test MSE={row['mse']:.6f} MAE={row['mae']:.6f}")
        print(f"📊 avg: test MSE={metrics['avg']['mse']:.6f} MAE={metrics['avg']['mae']:.6f}")
        print(f"💾 Run directory: {run_dir}")
        return EXIT_OK

    @staticmethod
    def _metrics(config: ExperimentConfig, seed: int, baseline: bool, outcomes: List[TrainOutcome]) -> Dict[str, Any]:
        horizons = [
            {"pred_len": o.record.pred_len, "mse": o.record.test_mse, "mae": o.record.test_mae}
            for o in outcomes
        ]
        return {
            "dataset": config.data.dataset,
            "seed": seed,
            "mode": "baseline" if baseline else config.autoencoder.mode,
            "backbone": config.backbone.kind,
            "horizons": horizons,
            "avg": {
                "mse": float(np.mean([row["mse"] for row in horizons])),
                "mae": float(np.mean([row["mae"] for row in horizons])),
            },
            "runs": [o.record.metrics() for o in outcomes],
        }

    def _export(self, outcome: TrainOutcome, config: ExperimentConfig, data, run_dir: Path,
                seed: int, baseline: bool) -> None:
        """One trace per progress snapshot and tap over the head of the test split."""
        forecaster = outcome.forecaster
        windows = data.windows("test", forecaster.pred_len)
        slice_length = config.diagnostics.slice_length
        base_meta = {
            "model": "baseline" if baseline else "latent_tsf",
            "backbone": config.backbone.kind,
            "dataset": config.data.dataset,
            "pred_len": forecaster.pred_len,
            "seed": seed,
        }
        embeddings_dir = run_dir / "embeddings"
        raw_observation_trace(windows, slice_length, base_meta).save(embeddings_dir / "raw_observations.csv")
        for tag in PROGRESS_TAGS:
            forecaster.load_state(outcome.snapshots[tag])
            for tap in TAP_POINTS:
                trace = export_embeddings(forecaster, windows, tap, slice_length,
                                          metadata={**base_meta, "progress": f"{tag}%"})
                trace.save(embeddings_dir / f"{tap}_{tag}.csv")
        forecaster.load_state(outcome.snapshots["100"])
