import math

import numpy as np
import pytest

from latent_tsf.services.data_service import PreparedData, prepare_data
from latent_tsf.services.layers import parameter_checksum
from latent_tsf.services.training_service import (
    PROGRESS_TAGS, ObservationForecaster, SeedStreams, evaluate_forecaster, load_autoencoder, load_forecaster,
    run_baseline, run_stage1, run_stage2, save_autoencoder, save_forecaster,
)
from latent_tsf.utils.config import ExperimentConfig
from latent_tsf.utils.errors import ConfigError, ShapeError

pytestmark = pytest.mark.slow


def _data(config: ExperimentConfig) -> PreparedData:
    return prepare_data(config.data.path, config.data.dataset, config.data.seq_len, ratios=config.data.split_ratios)


@pytest.fixture
def data(tiny_config):
    return _data(tiny_config)


@pytest.fixture
def pretrained(tiny_config, data):
    ae, record = run_stage1(tiny_config, data, seed=7)
    return ae, record


def _config(factory, **overrides):
    return ExperimentConfig.from_dict(factory(**overrides))


def _changed(before, after) -> bool:
    return any(not np.array_equal(before[name], after[name]) for name in before)


def test_seed_streams_are_reproducible():
    a = SeedStreams.from_seed(7)
    b = SeedStreams.from_seed(7)
    assert a.init.random() == b.init.random()
    assert a.dropout.random() == b.dropout.random()
    assert a.shuffle_for_epoch(3).permutation(10).tolist() == b.shuffle_for_epoch(3).permutation(10).tolist()
    assert a.shuffle_for_epoch(1).random() != a.shuffle_for_epoch(2).random()


class TestStage1:
    def test_returns_frozen_autoencoder(self, pretrained, tiny_config):
        ae, record = pretrained
        assert ae.frozen
        assert (ae.in_dim, ae.latent_dim) == (3, 8)
        assert len(record.history) == record.epochs_run + 1
        assert record.extra["final_rec"] == record.best_val
        assert record.history[0]["epoch"] == 0

    def test_deterministic(self, tiny_config, data):
        _, first = run_stage1(tiny_config, data, seed=11)
        _, second = run_stage1(tiny_config, data, seed=11)
        assert first.metrics() == second.metrics()


class TestStage2:
    def test_frozen_autoencoder_is_untouched(self, tiny_config, data, pretrained):
        ae, _ = pretrained
        before = parameter_checksum(ae)
        outcome = run_stage2(tiny_config, data, 8, seed=7, ae=ae)
        assert parameter_checksum(ae) == before
        assert set(outcome.record.extra["frozen_checksums"]) == {"encoder", "decoder"}
        assert set(outcome.snapshots) == set(PROGRESS_TAGS)
        assert math.isfinite(outcome.record.test_mse)

    def test_restores_best_validation_state(self, tiny_config, data, pretrained):
        ae, _ = pretrained
        outcome = run_stage2(tiny_config, data, 8, seed=7, ae=ae)
        val = evaluate_forecaster(outcome.forecaster, data.windows("val", 8), with_latent=True)
        assert val.mse == outcome.record.best_val
        assert outcome.record.history[outcome.record.best_epoch]["val_mse"] == outcome.record.best_val

    def test_bit_identical_repeat(self, tiny_config, data, pretrained):
        ae, _ = pretrained
        path_state = ae.state_dict()
        first = run_stage2(tiny_config, data, 8, seed=7, ae=ae)
        ae.load_state_dict(path_state)
        second = run_stage2(tiny_config, data, 8, seed=7, ae=ae)
        assert first.record.metrics() == second.record.metrics()

    def test_frozen_mode_needs_autoencoder(self, tiny_config, data):
        with pytest.raises(ConfigError):
            run_stage2(tiny_config, data, 8, seed=7)

    def test_channel_mismatch(self, tiny_config_dict_factory, tmp_path, pretrained):
        from conftest import periodic_series, write_series_csv

        ae, _ = pretrained
        other_csv = write_series_csv(tmp_path / "wide.csv", periodic_series(400, 5))
        config = _config(tiny_config_dict_factory, data={"path": other_csv})
        with pytest.raises(ShapeError):
            run_stage2(config, _data(config), 8, seed=7, ae=ae)

    def test_finetune_decoder_only(self, tiny_config_dict_factory, data, pretrained):
        ae, _ = pretrained
        config = _config(tiny_config_dict_factory, autoencoder={"mode": "finetune", "enc_lr": 0.0, "dec_lr": 1e-3})
        assert config.losses.perc == 10.0
        encoder_before = parameter_checksum(ae.encoder)
        decoder_before = ae.decoder.state_dict()
        outcome = run_stage2(config, data, 8, seed=7, ae=ae)
        assert parameter_checksum(ae.encoder) == encoder_before
        assert outcome.record.extra["frozen_checksums"].keys() == {"encoder"}
        assert _changed(decoder_before, outcome.snapshots["50"]["decoder"])

    def test_finetune_both_halves_move_with_default_losses(self, tiny_config_dict_factory, data, pretrained):
        ae, _ = pretrained
        config = _config(tiny_config_dict_factory, autoencoder={"mode": "finetune", "enc_lr": 5e-5, "dec_lr": 1e-5},
                         training={"patience": 10})
        encoder_before = ae.encoder.state_dict()
        decoder_before = ae.decoder.state_dict()
        outcome = run_stage2(config, data, 8, seed=7, ae=ae)
        assert outcome.record.extra["frozen_checksums"] == {}
        assert len(outcome.record.history[1]["lr"]) == 3
        assert outcome.record.history[1]["train_perc"] > 0
        middle = outcome.snapshots["50"]
        assert _changed(encoder_before, middle["encoder"])
        assert _changed(decoder_before, middle["decoder"])

    def test_zero_rate_finetune_matches_frozen(self, tiny_config, tiny_config_dict_factory, data, pretrained):
        ae, _ = pretrained
        state = ae.state_dict()
        frozen = run_stage2(tiny_config, data, 8, seed=7, ae=ae)
        ae.load_state_dict(state)
        config = _config(tiny_config_dict_factory, autoencoder={"mode": "finetune", "enc_lr": 0.0, "dec_lr": 0.0})
        finetuned = run_stage2(config, data, 8, seed=7, ae=ae)
        assert frozen.record.metrics()["history"] == finetuned.record.metrics()["history"]
        assert frozen.record.test_mse == finetuned.record.test_mse

    def test_scratch_mode_builds_its_own(self, tiny_config_dict_factory, data):
        config = _config(tiny_config_dict_factory, autoencoder={"mode": "scratch", "enc_lr": 1e-3, "dec_lr": 1e-3})
        outcome = run_stage2(config, data, 8, seed=7)
        ae = outcome.forecaster.ae
        assert ae.latent_dim == 8
        assert [type(m).__name__ for m in ae.decoder.modules] == ["LinearLayer", "Activation", "LinearLayer"]
        assert _changed(outcome.snapshots["0"]["decoder"], outcome.snapshots["50"]["decoder"])
        assert math.isfinite(outcome.record.test_mse)

    def test_infonce_alignment(self, tiny_config_dict_factory, data, pretrained):
        ae, _ = pretrained
        config = _config(tiny_config_dict_factory, losses={"align_kind": "infonce"})
        outcome = run_stage2(config, data, 8, seed=7, ae=ae)
        assert "train_mi_bound" in outcome.record.history[1]

    def test_mlp_backbone(self, tiny_config_dict_factory, data, pretrained):
        ae, _ = pretrained
        config = _config(tiny_config_dict_factory, backbone={"kind": "mlp"})
        outcome = run_stage2(config, data, 8, seed=7, ae=ae)
        assert outcome.forecaster.backbone.kind == "mlp"


class TestBaseline:
    def test_zero_epochs_evaluates_initialization(self, tiny_config_dict_factory, data):
        config = _config(tiny_config_dict_factory, training={"epochs": 0})
        outcome = run_baseline(config, data, 8, seed=7)
        assert outcome.record.best_epoch == 0
        assert outcome.record.epochs_run == 0
        assert math.isfinite(outcome.record.test_mse)
        assert outcome.snapshots["0"]["backbone"].keys() == outcome.snapshots["50"]["backbone"].keys()

    def test_history_entries(self, tiny_config, data):
        outcome = run_baseline(tiny_config, data, 8, seed=7)
        assert isinstance(outcome.forecaster, ObservationForecaster)
        first_epoch = outcome.record.history[1]
        assert {"epoch", "lr", "train_total", "val_mse", "val_mae"} <= set(first_epoch)
        assert first_epoch["val_latent_pred"] is None


class TestCheckpoints:
    def test_autoencoder_roundtrip(self, tmp_path, pretrained, data):
        ae, _ = pretrained
        path = save_autoencoder(tmp_path / "ae.ckpt", ae, data.standardizer, {"dataset": "synthetic"})
        loaded, standardizer, metadata = load_autoencoder(path)
        assert parameter_checksum(loaded) == parameter_checksum(ae)
        np.testing.assert_array_equal(standardizer.mean, data.standardizer.mean)
        assert (metadata["C"], metadata["D"], metadata["dataset"]) == (3, 8, "synthetic")

    @pytest.mark.parametrize("baseline", [False, True])
    def test_forecaster_eval_reproduces_training_metrics(self, tmp_path, tiny_config, data, pretrained, baseline):
        ae, _ = pretrained
        outcome = run_baseline(tiny_config, data, 8, seed=7) if baseline else run_stage2(
            tiny_config, data, 8, seed=7, ae=ae)
        path = save_forecaster(tmp_path / "backbone_T8.ckpt", outcome.forecaster, data.standardizer, {})
        forecaster, standardizer, metadata = load_forecaster(path)
        fresh = prepare_data(tiny_config.data.path, "synthetic", 24, ratios=[0.7, 0.1, 0.2], standardizer=standardizer)
        metrics = evaluate_forecaster(forecaster, fresh.windows("test", 8))
        assert metrics.mse == outcome.record.test_mse
        assert metrics.mae == outcome.record.test_mae
        assert metadata["mode"] == ("baseline" if baseline else "latent")

    def test_empty_evaluation_split(self, rng):
        from latent_tsf.services.backbones import DLinearBackbone
        from latent_tsf.services.data_service import WindowedSeries

        windows = WindowedSeries(rng.standard_normal((10, 2)), 24, 8)
        with pytest.raises(ShapeError):
            evaluate_forecaster(ObservationForecaster(DLinearBackbone(24, 8, kernel=5)), windows)
