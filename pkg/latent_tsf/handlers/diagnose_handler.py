#!/usr/bin/env python3
"""
Diagnose Handler - compare the embedding locality and spectra of two runs
"""

import logging
from pathlib import Path

from latent_tsf.services.diagnostics import EmbeddingTrace, compare_runs
from latent_tsf.utils.config import TAP_POINTS, Config, ExperimentConfig
from latent_tsf.utils.errors import ConfigError
from latent_tsf.utils.handler_registry import EXIT_OK, BaseHandler, CommandContext

logger = logging.getLogger(__name__)


class DiagnoseHandler(BaseHandler):
    def __init__(self):
        super().__init__(
            name="diagnose",
            description="Compare adjacent-step distance and spectra of exported embeddings from two runs",
            usage="diagnose RUN_A RUN_B [--tap decoder_pre|backbone_hidden] [--tag 100] [--output-dir DIR]",
        )

    def add_arguments(self, parser):
        parser.add_argument("run_a", help="first run directory (e.g. LatentTSF)")
        parser.add_argument("run_b", help="second run directory (e.g. baseline)")
        parser.add_argument("--tap", choices=TAP_POINTS, default=None,
                            help="embedding tap point (default: diagnostics.tap of RUN_A)")
        parser.add_argument("--tag", default="100", choices=("0", "50", "100"), help="training-progress snapshot")
        parser.add_argument("--output-dir", default=None, help="where to write the comparison")

    @staticmethod
    def _default_tap(run_dir: Path) -> str:
        resolved = run_dir / "resolved_config.json"
        if resolved.is_file():
            return ExperimentConfig.load(str(resolved)).diagnostics.tap
        return "decoder_pre"

    @staticmethod
    def _trace_path(run_dir: Path, tap: str, tag: str) -> Path:
        path = run_dir / "embeddings" / f"{tap}_{tag}.csv"
        if not path.is_file():
            raise ConfigError(f"Missing '{tap}' embedding export in {run_dir} (expected {path}); "
                              f"rerun train with --export-embeddings")
        return path

    def handle(self, context: CommandContext) -> int:
        args = context.args
        run_a, run_b = Path(args.run_a), Path(args.run_b)
        tap = args.tap or self._default_tap(run_a)
        trace_a = EmbeddingTrace.load(self._trace_path(run_a, tap, args.tag))
        trace_b = EmbeddingTrace.load(self._trace_path(run_b, tap, args.tag))

        raw_path = run_a / "embeddings" / "raw_observations.csv"
        raw = EmbeddingTrace.load(raw_path) if raw_path.is_file() else None
        if raw is None:
            logger.warning(f"⚠️ No raw-observation trace in {run_a}; peak alignment skipped")

        report = compare_runs(trace_a, trace_b, raw)

        output_dir = Path(args.output_dir) if args.output_dir else (
            Path(Config.OUTPUT_DIR) / f"diagnose_{run_a.name}_vs_{run_b.name}")
        output_dir.mkdir(parents=True, exist_ok=True)
        result = {"run_a": str(run_a), "run_b": str(run_b), "tap": tap, "tag": args.tag, **report.to_dict()}
        self.write_json(output_dir / "comparison.json", result)
        report.spectrum_a.to_frame().to_csv(output_dir / "spectrum_a.csv", index=False)
        report.spectrum_b.to_frame().to_csv(output_dir / "spectrum_b.csv", index=False)
        if report.raw_spectrum is not None:
            report.raw_spectrum.to_frame().to_csv(output_dir / "spectrum_raw.csv", index=False)

        print(f"📊 adjacent distance: a={report.distance_a:.6f} b={report.distance_b:.6f} "
              f"difference={report.difference:+.6f} (sign {report.sign:+d})")
        print(f"💾 Comparison: {output_dir / 'comparison.json'}")
        return EXIT_OK
