#!/usr/bin/env python3
"""
Training Service - the two-stage latent pipeline and the observation-space baseline

Stage 1 pretrains the point-wise AutoEncoder. Stage 2 trains a backbone on
encoded windows against the detached target E(Y), validating on decoded
forecasts in observation space. The baseline trains the same backbone on raw
windows with MSE. All randomness derives from one run seed.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from latent_tsf.services.autoencoder import PointwiseAutoEncoder, pretrain
from latent_tsf.services.backbones import Backbone, backbone_from_spec, build_backbone
from latent_tsf.services.checkpoint_store import Checkpoint, load_checkpoint, save_checkpoint
from latent_tsf.services.data_service import PreparedData, Standardizer, WindowedSeries
from latent_tsf.services.early_stopping import BestTracker, StopDecision, early_stop_check  # noqa: F401 (re-exported)
from latent_tsf.services.layers import TensorF, parameter_checksum
from latent_tsf.services.objectives import LossWeights, loss_perceptual, loss_total
from latent_tsf.services.optimizer import AdamOptimizer, ParamGroup
from latent_tsf.utils.config import TAP_POINTS, ExperimentConfig
from latent_tsf.utils.errors import ConfigError, FreezeViolationError, ShapeError, TrainingDivergenceError

logger = logging.getLogger(__name__)

# fixed so that eval reproduces training-time metrics bit-for-bit
EVAL_BATCH_SIZE = 256

PROGRESS_TAGS = ("0", "50", "100")


@dataclass
class SeedStreams:
    """Independent generators for init, shuffling and dropout, all from one seed."""

    seed: int
    init: np.random.Generator
    dropout: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "SeedStreams":
        init_seq, dropout_seq = np.random.SeedSequence(seed).spawn(2)
        return cls(seed=seed, init=np.random.default_rng(init_seq), dropout=np.random.default_rng(dropout_seq))

    def shuffle_for_epoch(self, epoch: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(2, epoch)))


class WarningCollector(logging.Handler):
    """Copies package warnings emitted during a run into the run record."""

    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.messages: List[str] = []

    def emit(self, record: logging.LogRecord) -> None:
        self.messages.append(record.getMessage())

    def __enter__(self) -> "WarningCollector":
        logging.getLogger("latent_tsf").addHandler(self)
        return self

    def __exit__(self, *exc) -> None:
        logging.getLogger("latent_tsf").removeHandler(self)


@dataclass
class RunRecord:
    """Everything one training run produced, serialized as run.json."""

    stage: str
    dataset: str
    seed: int
    config: Dict[str, Any]
    pred_len: Optional[int] = None
    history: List[Dict[str, Any]] = field(default_factory=list)
    best_epoch: int = 0
    epochs_run: int = 0
    stopped_early: bool = False
    best_val: Optional[float] = None
    test_mse: Optional[float] = None
    test_mae: Optional[float] = None
    wall_clock_seconds: float = 0.0
    warnings: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    def metrics(self) -> Dict[str, Any]:
        """Reproducible subset (no timing)."""
        return {
            "stage": self.stage,
            "dataset": self.dataset,
            "seed": self.seed,
            "pred_len": self.pred_len,
            "best_epoch": self.best_epoch,
            "best_val": self.best_val,
            "test_mse": self.test_mse,
            "test_mae": self.test_mae,
            "history": self.history,
        }

    def to_dict(self) -> Dict[str, Any]:
        record = self.metrics()
        record.update({
            "config": self.config,
            "epochs_run": self.epochs_run,
            "stopped_early": self.stopped_early,
            "wall_clock_seconds": self.wall_clock_seconds,
            "warnings": self.warnings,
        })
        record.update(self.extra)
        return record


@dataclass
class EvalMetrics:
    mse: float
    mae: float
    latent_pred: Optional[float] = None


class ObservationForecaster:
    """Backbone applied directly to raw windows (the baseline arm)."""

    mode = "baseline"

    def __init__(self, backbone: Backbone):
        self.backbone = backbone

    @property
    def seq_len(self) -> int:
        return self.backbone.seq_len

    @property
    def pred_len(self) -> int:
        return self.backbone.pred_len

    def predict(self, x: TensorF) -> TensorF:
        return self.backbone(x)

    def predict_with_latent(self, x: TensorF, y: TensorF) -> Tuple[TensorF, Optional[float]]:
        return self.predict(x), None

    def embed(self, x: TensorF, tap: str) -> TensorF:
        """Without a decoder both taps read the backbone's internal representation."""
        if tap not in TAP_POINTS:
            raise ConfigError(f"Unknown tap point: {tap}")
        return self.backbone.hidden_features(x)

    def state(self) -> Dict[str, Dict[str, TensorF]]:
        return {"backbone": self.backbone.state_dict()}

    def load_state(self, state: Dict[str, Dict[str, TensorF]]) -> None:
        self.backbone.load_state_dict(state["backbone"])


class LatentForecaster:
    """Encode -> latent backbone -> decode."""

    mode = "latent"

    def __init__(self, ae: PointwiseAutoEncoder, backbone: Backbone):
        self.ae = ae
        self.backbone = backbone

    @property
    def seq_len(self) -> int:
        return self.backbone.seq_len

    @property
    def pred_len(self) -> int:
        return self.backbone.pred_len

    def predict(self, x: TensorF) -> TensorF:
        return self.ae.decode(self.backbone(self.ae.encode(x)))

    def predict_with_latent(self, x: TensorF, y: TensorF) -> Tuple[TensorF, Optional[float]]:
        """Decoded forecast plus the summed latent squared error against E(y)."""
        z_hat = self.backbone(self.ae.encode(x))
        diff = z_hat - self.ae.encode(y)
        return self.ae.decode(z_hat), float(np.sum(diff * diff))

    def embed(self, x: TensorF, tap: str) -> TensorF:
        z_x = self.ae.encode(x)
        if tap == "decoder_pre":
            return self.backbone(z_x)[..., 0]
        if tap == "backbone_hidden":
            return self.backbone.hidden_features(z_x)
        raise ConfigError(f"Unknown tap point: {tap}")

    def state(self) -> Dict[str, Dict[str, TensorF]]:
        return {
            "backbone": self.backbone.state_dict(),
            "encoder": self.ae.encoder.state_dict(),
            "decoder": self.ae.decoder.state_dict(),
        }

    def load_state(self, state: Dict[str, Dict[str, TensorF]]) -> None:
        self.backbone.load_state_dict(state["backbone"])
        self.ae.encoder.load_state_dict(state["encoder"])
        self.ae.decoder.load_state_dict(state["decoder"])


def evaluate_forecaster(forecaster, windows: WindowedSeries, with_latent: bool = False) -> EvalMetrics:
    """MSE/MAE over every window, summed batch by batch in chronological order."""
    if len(windows) == 0:
        raise ShapeError(f"No evaluation windows (series too short for L={windows.seq_len}, T={windows.pred_len})")
    sq_sum = 0.0
    abs_sum = 0.0
    latent_sum = 0.0
    count = 0
    latent_count = 0
    for x, y in windows.iter_batches(EVAL_BATCH_SIZE):
        if with_latent:
            y_hat, latent = forecaster.predict_with_latent(x, y)
        else:
            y_hat, latent = forecaster.predict(x), None
        diff = y_hat - y
        sq_sum += float(np.sum(diff * diff))
        abs_sum += float(np.sum(np.abs(diff)))
        count += diff.size
        if latent is not None:
            latent_sum += latent
            latent_count += x.shape[0]
    latent_pred = latent_sum / latent_count if latent_count else None
    return EvalMetrics(mse=sq_sum / count, mae=abs_sum / count, latent_pred=latent_pred)


@dataclass
class TrainOutcome:
    """Forecaster at its best-validation state, its run record and progress snapshots."""

    forecaster: Any
    record: RunRecord
    snapshots: Dict[str, Dict[str, Dict[str, TensorF]]] = field(default_factory=dict)


def _fit(forecaster, groups: List[ParamGroup], batch_step: Callable, data: PreparedData,
         config: ExperimentConfig, streams: SeedStreams, record: RunRecord) -> Dict[str, Dict]:
    """
    Shared epoch loop: shuffled train batches, clipping, Adam, observation-space
    validation with early stopping, best-state restore and progress snapshots.
    """
    tr = config.training
    train_windows = data.windows("train", forecaster.pred_len)
    val_windows = data.windows("val", forecaster.pred_len)
    if len(train_windows) == 0:
        raise ShapeError(f"No training windows for L={forecaster.seq_len}, T={forecaster.pred_len}")

    with_latent = forecaster.mode == "latent"
    # InfoNCE needs in-batch negatives
    min_batch = 2 if with_latent and config.losses.align_kind == "infonce" else 1
    optimizer = AdamOptimizer(groups, scheduler=tr.scheduler, total_epochs=tr.epochs)
    tracker = BestTracker(patience=tr.patience)

    val = evaluate_forecaster(forecaster, val_windows, with_latent)
    tracker.update(val.mse, forecaster.state)
    snapshots = {"0": forecaster.state()}
    record.history.append({"epoch": 0, "val_mse": val.mse, "val_mae": val.mae, "val_latent_pred": val.latent_pred})
    logger.info(f"📊 Epoch 0: val MSE={val.mse:.6f} MAE={val.mae:.6f}")

    mid_epoch = tr.epochs // 2
    if mid_epoch == 0:
        snapshots["50"] = forecaster.state()

    for epoch in range(1, tr.epochs + 1):
        optimizer.set_epoch(epoch - 1)
        sums: Dict[str, float] = {}
        seen = 0
        for x, y in train_windows.iter_batches(tr.batch_size, streams.shuffle_for_epoch(epoch), min_batch):
            optimizer.zero_grads()
            components = batch_step(x, y)
            if not np.isfinite(components["total"]):
                raise TrainingDivergenceError(f"Non-finite training loss at epoch {epoch}")
            if tr.grad_clip:
                grad_norm = optimizer.clip_grad_norm(tr.grad_clip)
                logger.debug(f"epoch {epoch} step {optimizer.step_count + 1}: grad norm {grad_norm:.4f}")
            optimizer.step()
            for name, value in components.items():
                if value is not None:
                    sums[name] = sums.get(name, 0.0) + value * x.shape[0]
            seen += x.shape[0]

        if seen == 0:
            raise ConfigError(f"No training batch of at least {min_batch} windows (have {len(train_windows)})")
        val = evaluate_forecaster(forecaster, val_windows, with_latent)
        if not np.isfinite(val.mse):
            raise TrainingDivergenceError(f"Non-finite validation MSE at epoch {epoch}")
        improved = tracker.update(val.mse, forecaster.state)
        entry = {"epoch": epoch, "lr": [optimizer.current_lr(g) for g in optimizer.groups]}
        entry.update({f"train_{name}": total / seen for name, total in sums.items()})
        entry.update({"val_mse": val.mse, "val_mae": val.mae, "val_latent_pred": val.latent_pred})
        record.history.append(entry)
        record.epochs_run = epoch
        logger.info(
            f"📊 Epoch {epoch}: train loss={entry['train_total']:.6f} val MSE={val.mse:.6f}"
            f"{' ✅ best' if improved else ''}"
        )
        if "train_mi_bound" in entry:
            logger.info(f"📊 Epoch {epoch}: InfoNCE mutual-information bound {entry['train_mi_bound']:.4f}")

        if epoch == mid_epoch:
            snapshots["50"] = forecaster.state()
        if tracker.should_stop():
            record.stopped_early = True
            logger.info(f"⏹️ Early stop at epoch {epoch} (best epoch {tracker.best_epoch})")
            break

    snapshots.setdefault("50", forecaster.state())
    forecaster.load_state(tracker.best_state)
    snapshots["100"] = tracker.best_state
    record.best_epoch = tracker.best_epoch
    record.best_val = tracker.best_value

    test = evaluate_forecaster(forecaster, data.windows("test", forecaster.pred_len))
    record.test_mse = test.mse
    record.test_mae = test.mae
    logger.info(f"✅ T={forecaster.pred_len}: test MSE={test.mse:.6f} MAE={test.mae:.6f} (best epoch {record.best_epoch})")
    return snapshots


def run_stage1(config: ExperimentConfig, data: PreparedData, seed: int) -> Tuple[PointwiseAutoEncoder, RunRecord]:
    """Pretrain the AutoEncoder on the train split and freeze it."""
    started = time.perf_counter()
    ae_cfg = config.autoencoder
    streams = SeedStreams.from_seed(seed)
    record = RunRecord(stage="stage1", dataset=config.data.dataset, seed=seed, config=config.to_dict())

    with WarningCollector() as collector:
        ae = PointwiseAutoEncoder.build(
            in_dim=data.n_channels,
            latent_dim=ae_cfg.latent_dim,
            rng=streams.init,
            hidden_dim=ae_cfg.hidden_dim,
            encoder_layers=ae_cfg.encoder_layers,
            decoder_layers=ae_cfg.decoder_layers,
            activation=ae_cfg.activation,
            dropout=ae_cfg.dropout,
        )
        logger.info(f"🚀 Stage 1: C={ae.in_dim} -> D={ae.latent_dim}, lr={ae_cfg.lr}, seed={seed}")
        result = pretrain(
            ae,
            data.splits.part("train"),
            data.splits.part("val"),
            lr=ae_cfg.lr,
            epochs=ae_cfg.epochs,
            patience=ae_cfg.patience,
            batch_size=ae_cfg.batch_size,
            chunk_len=ae_cfg.chunk_len,
            shuffle_rng=streams.shuffle_for_epoch(0),
            dropout_rng=streams.dropout,
            grad_clip=config.training.grad_clip,
            scheduler=config.training.scheduler,
        )
        ae.freeze()

    record.history = [
        {"epoch": epoch, "train_rec": train, "val_rec": val}
        for epoch, (train, val) in enumerate(zip(result.train_loss, result.val_loss))
    ]
    record.best_epoch = result.best_epoch
    record.best_val = result.best_val_loss
    record.epochs_run = result.epochs_run
    record.stopped_early = result.stopped_early
    record.extra = {"final_rec": result.best_val_loss, "latent_dim": ae.latent_dim, "in_dim": ae.in_dim}
    record.warnings = collector.messages
    record.wall_clock_seconds = time.perf_counter() - started
    return ae, record


def prepare_autoencoder(config: ExperimentConfig, n_channels: int, ae: Optional[PointwiseAutoEncoder],
                        streams: SeedStreams) -> PointwiseAutoEncoder:
    """Apply the configured AE mode: frozen, finetuned per half, or from scratch."""
    ae_cfg = config.autoencoder
    if ae_cfg.mode == "scratch":
        if ae is not None:
            logger.warning("⚠️ autoencoder.mode=scratch ignores the supplied AutoEncoder checkpoint")
        ae = PointwiseAutoEncoder.build(
            in_dim=n_channels,
            latent_dim=ae_cfg.latent_dim,
            rng=streams.init,
            hidden_dim=ae_cfg.hidden_dim,
            encoder_layers=ae_cfg.encoder_layers,
            decoder_layers=ae_cfg.decoder_layers,
            activation=ae_cfg.activation,
            dropout=ae_cfg.dropout,
        )
    elif ae is None:
        raise ConfigError(f"autoencoder.mode={ae_cfg.mode} needs a pretrained AutoEncoder checkpoint (--ae)")

    if ae.in_dim != n_channels:
        raise ShapeError(f"AutoEncoder expects {ae.in_dim} channels but the dataset has {n_channels}")

    if ae_cfg.mode == "frozen_pretrained":
        ae.freeze()
    else:
        ae.set_trainable(encoder=ae_cfg.enc_lr > 0, decoder=ae_cfg.dec_lr > 0)
        if ae_cfg.mode == "scratch" and ae_cfg.enc_lr == 0:
            logger.warning("⚠️ autoencoder.mode=scratch with enc_lr=0 keeps a random encoder fixed")
    return ae


def _frozen_checksums(ae: PointwiseAutoEncoder) -> Dict[str, str]:
    sums = {}
    if not ae.encoder_trainable:
        sums["encoder"] = parameter_checksum(ae.encoder)
    if not ae.decoder_trainable:
        sums["decoder"] = parameter_checksum(ae.decoder)
    return sums


def run_stage2(config: ExperimentConfig, data: PreparedData, pred_len: int, seed: int,
               ae: Optional[PointwiseAutoEncoder] = None) -> TrainOutcome:
    """
    Train a latent backbone for one horizon.

    Per batch: Z_X = E(X), Z_hat = F(Z_X), target E(Y) detached; the loss is
    alpha*L_Pred + beta*L_Align (+ perc*L_Perc through the decoder).
    """
    started = time.perf_counter()
    streams = SeedStreams.from_seed(seed)
    weights = LossWeights.from_section(config.losses)
    record = RunRecord(stage="stage2", dataset=config.data.dataset, seed=seed, config=config.to_dict(),
                       pred_len=pred_len)

    with WarningCollector() as collector:
        ae = prepare_autoencoder(config, data.n_channels, ae, streams)
        bb_cfg = config.backbone
        backbone = build_backbone(bb_cfg.kind, config.data.seq_len, pred_len, streams.init,
                                  moving_avg=bb_cfg.moving_avg, d_ff=bb_cfg.d_ff,
                                  hidden_layers=bb_cfg.hidden_layers, dropout=bb_cfg.dropout)
        forecaster = LatentForecaster(ae, backbone)

        groups = [ParamGroup.from_module("backbone", backbone, config.training.lr)]
        if ae.encoder_trainable:
            groups.append(ParamGroup.from_module("encoder", ae.encoder, config.autoencoder.enc_lr))
        if ae.decoder_trainable:
            groups.append(ParamGroup.from_module("decoder", ae.decoder, config.autoencoder.dec_lr))

        def batch_step(x: TensorF, y: TensorF) -> Dict[str, Optional[float]]:
            z_x, enc_cache = ae.encode_forward(x)
            z_y = ae.encode(y)
            z_hat, bb_cache = backbone.forward(z_x, training=True, rng=streams.dropout)
            y_hat = dec_cache = None
            if weights.perc > 0:
                y_hat, dec_cache = ae.decode_forward(z_hat)
            breakdown = loss_total(weights, z_y, z_hat, y, y_hat)

            grad_z_hat = breakdown.grad_z_hat
            if breakdown.grad_y_hat is not None:
                grad_z_hat = grad_z_hat + ae.decode_backward(dec_cache, breakdown.grad_y_hat)
            grad_z_x = backbone.backward(bb_cache, grad_z_hat)
            if ae.encoder_trainable:
                ae.encode_backward(enc_cache, grad_z_x)
            return {
                "total": breakdown.total,
                "pred": breakdown.pred,
                "align": breakdown.align,
                "perc": breakdown.perc,
                "mi_bound": breakdown.mi_bound,
            }

        checksums = _frozen_checksums(ae)
        logger.info(
            f"🚀 Stage 2: {bb_cfg.kind} L={config.data.seq_len} T={pred_len} D={ae.latent_dim} "
            f"mode={config.autoencoder.mode} alpha={weights.alpha} beta={weights.beta} "
            f"align={weights.align_kind} seed={seed}"
        )
        snapshots = _fit(forecaster, groups, batch_step, data, config, streams, record)

        for half, before in checksums.items():
            after = parameter_checksum(getattr(ae, half))
            if after != before:
                raise FreezeViolationError(f"Frozen AutoEncoder {half} changed during Stage 2 ({before} -> {after})")
        if checksums:
            logger.info(f"🧊 Frozen AutoEncoder halves unchanged: {', '.join(checksums)}")

    record.extra = {"ae_mode": config.autoencoder.mode, "frozen_checksums": checksums}
    record.warnings = collector.messages
    record.wall_clock_seconds = time.perf_counter() - started
    return TrainOutcome(forecaster=forecaster, record=record, snapshots=snapshots)


def run_baseline(config: ExperimentConfig, data: PreparedData, pred_len: int, seed: int) -> TrainOutcome:
    """Train the same backbone directly on X -> Y with MSE (no AutoEncoder)."""
    started = time.perf_counter()
    streams = SeedStreams.from_seed(seed)
    record = RunRecord(stage="baseline", dataset=config.data.dataset, seed=seed, config=config.to_dict(),
                       pred_len=pred_len)

    with WarningCollector() as collector:
        bb_cfg = config.backbone
        backbone = build_backbone(bb_cfg.kind, config.data.seq_len, pred_len, streams.init,
                                  moving_avg=bb_cfg.moving_avg, d_ff=bb_cfg.d_ff,
                                  hidden_layers=bb_cfg.hidden_layers, dropout=bb_cfg.dropout)
        forecaster = ObservationForecaster(backbone)
        groups = [ParamGroup.from_module("backbone", backbone, config.training.lr)]

        def batch_step(x: TensorF, y: TensorF) -> Dict[str, Optional[float]]:
            y_hat, cache = backbone.forward(x, training=True, rng=streams.dropout)
            loss, grad = loss_perceptual(y, y_hat)
            backbone.backward(cache, grad)
            return {"total": loss}

        logger.info(f"🚀 Baseline: {bb_cfg.kind} L={config.data.seq_len} T={pred_len} seed={seed}")
        snapshots = _fit(forecaster, groups, batch_step, data, config, streams, record)

    record.warnings = collector.messages
    record.wall_clock_seconds = time.perf_counter() - started
    return TrainOutcome(forecaster=forecaster, record=record, snapshots=snapshots)


def _standardizer_section(standardizer: Standardizer) -> Dict[str, TensorF]:
    return {"mean": standardizer.mean, "std": standardizer.std}


def save_autoencoder(path: Path, ae: PointwiseAutoEncoder, standardizer: Standardizer,
                     metadata: Dict[str, Any]) -> Path:
    checkpoint = Checkpoint(
        kind="autoencoder",
        sections={
            "encoder": ae.encoder.state_dict(),
            "decoder": ae.decoder.state_dict(),
            "standardizer": _standardizer_section(standardizer),
        },
        metadata={"architecture": ae.architecture, "C": ae.in_dim, "D": ae.latent_dim, **metadata},
    )
    return save_checkpoint(path, checkpoint)


def _load_ae_sections(checkpoint: Checkpoint) -> PointwiseAutoEncoder:
    architecture = checkpoint.metadata.get("architecture")
    if not architecture:
        raise ConfigError(f"{checkpoint.kind} checkpoint carries no AutoEncoder architecture")
    ae = PointwiseAutoEncoder.from_architecture(architecture, np.random.default_rng(0))
    ae.encoder.load_state_dict(checkpoint.section("encoder"))
    ae.decoder.load_state_dict(checkpoint.section("decoder"))
    return ae


def _load_standardizer(checkpoint: Checkpoint) -> Standardizer:
    section = checkpoint.section("standardizer")
    return Standardizer.from_arrays(section["mean"], section["std"])


def load_autoencoder(path: Path) -> Tuple[PointwiseAutoEncoder, Standardizer, Dict[str, Any]]:
    checkpoint = load_checkpoint(path, expected_kind="autoencoder")
    return _load_ae_sections(checkpoint), _load_standardizer(checkpoint), checkpoint.metadata


def save_forecaster(path: Path, forecaster, standardizer: Standardizer, metadata: Dict[str, Any]) -> Path:
    """Backbone checkpoint; latent forecasters also carry their (possibly finetuned) AutoEncoder."""
    sections = {"backbone": forecaster.backbone.state_dict(), "standardizer": _standardizer_section(standardizer)}
    meta = {"mode": forecaster.mode, "backbone": forecaster.backbone.spec(), **metadata}
    if forecaster.mode == "latent":
        sections["encoder"] = forecaster.ae.encoder.state_dict()
        sections["decoder"] = forecaster.ae.decoder.state_dict()
        meta["architecture"] = forecaster.ae.architecture
    return save_checkpoint(path, Checkpoint(kind="backbone", sections=sections, metadata=meta))


def load_forecaster(path: Path) -> Tuple[Any, Standardizer, Dict[str, Any]]:
    checkpoint = load_checkpoint(path, expected_kind="backbone")
    spec = checkpoint.metadata.get("backbone")
    if not spec:
        raise ConfigError(f"Backbone checkpoint {path} carries no backbone spec")
    backbone = backbone_from_spec(spec, np.random.default_rng(0))
    backbone.load_state_dict(checkpoint.section("backbone"))
    if checkpoint.metadata.get("mode") == "latent":
        forecaster = LatentForecaster(_load_ae_sections(checkpoint), backbone)
        forecaster.ae.freeze()
    else:
        forecaster = ObservationForecaster(backbone)
    return forecaster, _load_standardizer(checkpoint), checkpoint.metadata
