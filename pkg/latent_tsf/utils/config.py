#!/usr/bin/env python3
"""
Latent TSF Configuration Module
Environment settings, logging setup and the experiment config file
"""

import os
import json
import logging
import logging.handlers
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from typing import Dict, Any, Optional, List

from dotenv import load_dotenv

from latent_tsf.utils.errors import ConfigError

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)


class Config:
    """Environment configuration for Latent TSF."""

    # Environment
    ENVIRONMENT = os.getenv("ENVIRONMENT", "development")
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_DIR = os.getenv("LOG_DIR", "logs")

    # File Paths
    DATA_DIR = os.getenv("LATENT_TSF_DATA_DIR", "dataset")
    OUTPUT_DIR = os.getenv("LATENT_TSF_OUTPUT_DIR", "runs")

    @classmethod
    def validate_config(cls) -> bool:
        """
        Validate environment settings.

        Returns:
            True if configuration is valid, raises ConfigError if not
        """
        if not hasattr(logging, cls.LOG_LEVEL.upper()):
            raise ConfigError(f"Unknown LOG_LEVEL: {cls.LOG_LEVEL}")

        output_dir = Path(cls.OUTPUT_DIR)
        if output_dir.exists() and not output_dir.is_dir():
            raise ConfigError(f"LATENT_TSF_OUTPUT_DIR is not a directory: {output_dir}")

        logger.debug("✅ Configuration validation passed")
        return True

    @classmethod
    def is_development(cls) -> bool:
        return cls.ENVIRONMENT.upper() in ["DEV", "DEVELOPMENT", "DEBUG"]

    @classmethod
    def setup_logging(cls) -> logging.Logger:
        """
        Setup logging with rotating main and error logs.

        Returns:
            Configured logger instance
        """
        logs_dir = Path(cls.LOG_DIR)
        logs_dir.mkdir(parents=True, exist_ok=True)

        log_level = getattr(logging, cls.LOG_LEVEL.upper(), logging.INFO)

        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        root_logger = logging.getLogger()
        root_logger.setLevel(log_level)

        # Clear existing handlers to avoid duplicates
        root_logger.handlers.clear()

        # 1. Console handler (quiet outside development)
        console_handler = logging.StreamHandler()
        console_handler.setLevel(log_level if cls.is_development() else logging.WARNING)
        console_handler.setFormatter(formatter)
        root_logger.addHandler(console_handler)

        # 2. Main rotating file handler: 5MB x 20 files
        log_file = logs_dir / "latent_tsf.log"
        main_handler = logging.handlers.RotatingFileHandler(
            filename=log_file,
            maxBytes=5 * 1024 * 1024,
            backupCount=20,
            encoding='utf-8'
        )
        main_handler.setLevel(log_level)
        main_handler.setFormatter(formatter)
        root_logger.addHandler(main_handler)

        # 3. Error-only file handler
        error_log_file = logs_dir / "latent_tsf_errors.log"
        error_handler = logging.handlers.RotatingFileHandler(
            filename=error_log_file,
            maxBytes=2 * 1024 * 1024,
            backupCount=5,
            encoding='utf-8'
        )
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(formatter)
        root_logger.addHandler(error_handler)

        app_logger = logging.getLogger("latent_tsf")
        app_logger.debug(f"🔧 Logging initialized: level={cls.LOG_LEVEL}, main log={log_file}")
        return app_logger

    @classmethod
    def get_config_summary(cls) -> str:
        """
        Get a summary of current configuration (for debugging).

        Returns:
            Formatted configuration summary
        """
        summary = []
        summary.append("🔧 Latent TSF Configuration Summary")
        summary.append(f"Environment: {cls.ENVIRONMENT}")
        summary.append(f"Log Level: {cls.LOG_LEVEL}")
        summary.append(f"Log Dir: {cls.LOG_DIR}")
        summary.append(f"Data Dir: {cls.DATA_DIR}")
        summary.append(f"Output Dir: {cls.OUTPUT_DIR}")
        summary.append(f"Registered datasets: {', '.join(sorted(DATASET_PRESETS))}")
        return "\n".join(summary)


# Per-dataset architecture and optimization presets
DATASET_PRESETS: Dict[str, Dict[str, Any]] = {
    "ETTh1": {"enc_in": 7, "d_model": 32, "d_ff": 64, "batch_size": 256, "lr": 3e-4},
    "ETTh2": {"enc_in": 7, "d_model": 64, "d_ff": 128, "batch_size": 256, "lr": 3e-4},
    "ETTm1": {"enc_in": 7, "d_model": 32, "d_ff": 64, "batch_size": 256, "lr": 3e-4},
    "ETTm2": {"enc_in": 7, "d_model": 64, "d_ff": 128, "batch_size": 256, "lr": 3e-4},
    "Electricity": {"enc_in": 321, "d_model": 512, "d_ff": 1024, "batch_size": 32, "lr": 1e-3},
    "Traffic": {"enc_in": 862, "d_model": 512, "d_ff": 1024, "batch_size": 32, "lr": 1e-3},
    # No tuned preset; mirrors ETTh2/ETTm2
    "Weather": {"enc_in": 21, "d_model": 64, "d_ff": 128, "batch_size": 256, "lr": 3e-4},
}

DEFAULT_BATCH_SIZE = 256
DEFAULT_LR = 3e-4
DEFAULT_AE_LR = 1e-3
# Loss weight for L_Perc when a trainable decoder needs a training signal
DEFAULT_DECODER_PERC = 10.0

AE_MODES = ("frozen_pretrained", "finetune", "scratch")
BACKBONE_KINDS = ("dlinear", "mlp")
ALIGN_KINDS = ("cosine", "infonce")
PRED_NORMALIZATIONS = ("sum", "mean")
ACTIVATIONS = ("gelu", "relu")
SCHEDULERS = ("cosine", "constant")
TAP_POINTS = ("decoder_pre", "backbone_hidden")


@dataclass
class DataSection:
    dataset: str = ""
    path: Optional[str] = None
    seq_len: int = 720
    pred_lens: List[int] = field(default_factory=lambda: [96])
    split_ratios: Optional[List[float]] = None


@dataclass
class AutoEncoderSection:
    latent_dim: Optional[int] = None
    hidden_dim: Optional[int] = None
    encoder_layers: int = 2
    decoder_layers: Optional[int] = None
    activation: str = "gelu"
    dropout: float = 0.1
    chunk_len: int = 24
    lr: Optional[float] = None
    batch_size: Optional[int] = None
    epochs: int = 100
    patience: int = 5
    mode: str = "frozen_pretrained"
    enc_lr: float = 0.0
    dec_lr: float = 0.0


@dataclass
class BackboneSection:
    kind: str = "dlinear"
    moving_avg: int = 25
    d_ff: Optional[int] = None
    hidden_layers: int = 1
    dropout: float = 0.1


@dataclass
class LossSection:
    alpha: float = 10.0
    beta: float = 15.0
    perc: Optional[float] = None
    align_kind: str = "cosine"
    temperature: float = 0.1
    pred_normalization: str = "sum"


@dataclass
class TrainingSection:
    epochs: int = 100
    patience: int = 5
    batch_size: Optional[int] = None
    lr: Optional[float] = None
    seed: int = 2021
    grad_clip: Optional[float] = 5.0
    scheduler: str = "cosine"


@dataclass
class DiagnosticsSection:
    tap: str = "decoder_pre"
    slice_length: int = 256
    export_embeddings: bool = False


SECTION_TYPES = {
    "data": DataSection,
    "autoencoder": AutoEncoderSection,
    "backbone": BackboneSection,
    "losses": LossSection,
    "training": TrainingSection,
    "diagnostics": DiagnosticsSection,
}


def _build_section(name: str, raw: Any):
    section_cls = SECTION_TYPES[name]
    if raw is None:
        return section_cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"Section '{name}' must be an object, got {type(raw).__name__}")

    known = {f.name for f in fields(section_cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"Unknown config key: '{name}.{key}'")
    return section_cls(**raw)


@dataclass
class ExperimentConfig:
    """Resolved experiment configuration (one dataclass per file section)."""

    data: DataSection = field(default_factory=DataSection)
    autoencoder: AutoEncoderSection = field(default_factory=AutoEncoderSection)
    backbone: BackboneSection = field(default_factory=BackboneSection)
    losses: LossSection = field(default_factory=LossSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("Config document must be a JSON object")
        for key in raw:
            if key not in SECTION_TYPES:
                raise ConfigError(f"Unknown config section: '{key}'")

        config = cls(**{name: _build_section(name, raw.get(name)) for name in SECTION_TYPES})
        config.resolve()
        config.validate()
        return config

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        """
        Load and resolve a JSON experiment config.

        Args:
            path: Config file path

        Returns:
            Resolved ExperimentConfig
        """
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigError(f"Config file not found: {config_path}")
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in config file {config_path}: {e}") from e

        config = cls.from_dict(raw)
        logger.info(f"✅ Loaded experiment config from {config_path} (dataset={config.data.dataset})")
        return config

    @property
    def preset(self) -> Dict[str, Any]:
        return DATASET_PRESETS.get(self.data.dataset, {})

    @property
    def trains_decoder(self) -> bool:
        ae = self.autoencoder
        return ae.mode != "frozen_pretrained" and ae.dec_lr > 0

    def resolve(self) -> None:
        """Fill dataset-dependent defaults left unset in the file."""
        preset = self.preset
        ae = self.autoencoder
        if ae.latent_dim is None:
            ae.latent_dim = preset.get("d_model")
        if ae.hidden_dim is None:
            ae.hidden_dim = ae.latent_dim
        if ae.decoder_layers is None:
            ae.decoder_layers = 2 if ae.mode == "scratch" else 1
        if ae.lr is None:
            ae.lr = DEFAULT_AE_LR
        if ae.batch_size is None:
            ae.batch_size = preset.get("batch_size", DEFAULT_BATCH_SIZE)

        if self.backbone.d_ff is None:
            self.backbone.d_ff = preset.get("d_ff", 2 * ae.latent_dim if ae.latent_dim else None)

        if self.training.batch_size is None:
            self.training.batch_size = preset.get("batch_size", DEFAULT_BATCH_SIZE)
        if self.training.lr is None:
            self.training.lr = preset.get("lr", DEFAULT_LR)

        if self.losses.perc is None:
            self.losses.perc = DEFAULT_DECODER_PERC if self.trains_decoder else 0.0

        if self.data.path is None and self.data.dataset:
            self.data.path = str(Path(Config.DATA_DIR) / f"{self.data.dataset}.csv")

    def validate(self) -> bool:
        """Range checks on every resolved field; raises ConfigError on the first violation."""
        data, ae, bb, losses, tr, diag = (
            self.data, self.autoencoder, self.backbone, self.losses, self.training, self.diagnostics
        )

        if not data.dataset:
            raise ConfigError("data.dataset is required")
        _require(data.seq_len >= 1, "data.seq_len must be >= 1")
        _require(len(data.pred_lens) > 0 and all(int(t) >= 1 for t in data.pred_lens),
                 "data.pred_lens must be a non-empty list of positive horizons")
        if data.split_ratios is not None:
            _require(len(data.split_ratios) == 3 and all(r > 0 for r in data.split_ratios)
                     and abs(sum(data.split_ratios) - 1.0) < 1e-9,
                     "data.split_ratios must be three positive ratios summing to 1")
        elif data.dataset not in DATASET_PRESETS:
            raise ConfigError(f"Dataset '{data.dataset}' has no registered split; set data.split_ratios")

        if ae.latent_dim is None:
            raise ConfigError(f"autoencoder.latent_dim is required for dataset '{data.dataset}'")
        enc_in = self.preset.get("enc_in")
        if enc_in is not None:
            _require(ae.latent_dim > enc_in,
                     f"autoencoder.latent_dim ({ae.latent_dim}) must exceed channel count ({enc_in})")
        _require(ae.hidden_dim >= 1, "autoencoder.hidden_dim must be >= 1")
        _require(ae.encoder_layers >= 1 and ae.decoder_layers >= 1, "autoencoder layer counts must be >= 1")
        _require(ae.activation in ACTIVATIONS, f"autoencoder.activation must be one of {ACTIVATIONS}")
        _require(0.0 <= ae.dropout < 1.0, "autoencoder.dropout must be in [0, 1)")
        _require(ae.chunk_len >= 1, "autoencoder.chunk_len must be >= 1")
        _require(ae.lr > 0, "autoencoder.lr must be > 0")
        _require(ae.batch_size >= 1, "autoencoder.batch_size must be >= 1")
        _require(ae.epochs >= 0 and ae.patience >= 1, "autoencoder.epochs >= 0 and patience >= 1 required")
        _require(ae.mode in AE_MODES, f"autoencoder.mode must be one of {AE_MODES}")
        _require(ae.enc_lr >= 0 and ae.dec_lr >= 0, "autoencoder.enc_lr and dec_lr must be >= 0")

        _require(bb.kind in BACKBONE_KINDS, f"backbone.kind must be one of {BACKBONE_KINDS}")
        _require(bb.moving_avg >= 1 and bb.moving_avg % 2 == 1, "backbone.moving_avg must be odd and >= 1")
        if bb.kind == "dlinear":
            _require(bb.moving_avg <= data.seq_len,
                     f"backbone.moving_avg ({bb.moving_avg}) must not exceed data.seq_len ({data.seq_len})")
        _require(bb.d_ff is not None and bb.d_ff >= 1, "backbone.d_ff must be >= 1")
        _require(bb.hidden_layers >= 1, "backbone.hidden_layers must be >= 1")
        _require(0.0 <= bb.dropout < 1.0, "backbone.dropout must be in [0, 1)")

        _require(min(losses.alpha, losses.beta, losses.perc) >= 0, "loss weights must be >= 0")
        _require(losses.alpha + losses.beta + losses.perc > 0, "loss weights must not all be zero")
        if self.trains_decoder:
            _require(losses.perc > 0, f"autoencoder.dec_lr > 0 in mode={ae.mode} needs losses.perc > 0; "
                                      "the decoder is only trained through L_Perc")
        _require(losses.align_kind in ALIGN_KINDS, f"losses.align_kind must be one of {ALIGN_KINDS}")
        _require(losses.temperature > 0, "losses.temperature must be > 0")
        _require(losses.pred_normalization in PRED_NORMALIZATIONS,
                 f"losses.pred_normalization must be one of {PRED_NORMALIZATIONS}")

        _require(tr.epochs >= 0 and tr.patience >= 1, "training.epochs >= 0 and patience >= 1 required")
        _require(tr.batch_size >= 1, "training.batch_size must be >= 1")
        _require(tr.lr > 0, "training.lr must be > 0")
        _require(tr.grad_clip is None or tr.grad_clip >= 0, "training.grad_clip must be >= 0 or null")
        _require(tr.scheduler in SCHEDULERS, f"training.scheduler must be one of {SCHEDULERS}")
        _require(isinstance(tr.seed, int) and tr.seed >= 0, "training.seed must be a non-negative integer")

        _require(diag.tap in TAP_POINTS, f"diagnostics.tap must be one of {TAP_POINTS}")
        _require(diag.slice_length >= 2, "diagnostics.slice_length must be >= 2")
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {name: asdict(getattr(self, name)) for name in SECTION_TYPES}

    def save(self, path: Path) -> None:
        """Write the fully resolved config beside run outputs."""
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2)
        logger.info(f"📄 Resolved config written to {path}")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)
