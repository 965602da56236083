"""Shared fixtures: generators, finite differences, synthetic datasets and a tiny experiment config."""

import json

import numpy as np
import pandas as pd
import pytest

from latent_tsf.utils.config import Config, ExperimentConfig

FD_STEP = 1e-5


def central_difference(f, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Numerical gradient of scalar f at x, perturbing x in place."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    flat_grad = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = f()
        flat[i] = original - h
        minus = f()
        flat[i] = original
        flat_grad[i] = (plus - minus) / (2.0 * h)
    return grad


def assert_grad_close(analytic: np.ndarray, numeric: np.ndarray, rel: float = 1e-4) -> None:
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    assert np.linalg.norm(analytic - numeric) <= rel * scale + 1e-9, (analytic, numeric)


@pytest.fixture
def fd():
    """(central_difference, assert_grad_close) pair."""
    return central_difference, assert_grad_close


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def periodic_series(n_points: int, n_channels: int, period: int = 24, noise: float = 0.05,
                    seed: int = 0) -> np.ndarray:
    generator = np.random.default_rng(seed)
    t = np.arange(n_points)[:, None]
    phases = np.linspace(0.0, np.pi, n_channels)[None, :]
    amplitudes = 1.0 + np.arange(n_channels)[None, :]
    values = amplitudes * np.sin(2 * np.pi * t / period + phases) + 0.3 * np.cos(2 * np.pi * t / (period / 2))
    return values + noise * generator.standard_normal(values.shape)


def write_series_csv(path, values: np.ndarray) -> str:
    frame = pd.DataFrame(values, columns=[f"ch{i}" for i in range(values.shape[1])])
    frame.insert(0, "date", [f"2020-01-01 step {i}" for i in range(len(values))])
    frame.to_csv(path, index=False)
    return str(path)


@pytest.fixture
def synthetic_csv(tmp_path):
    return write_series_csv(tmp_path / "synthetic.csv", periodic_series(400, 3))


def tiny_config_dict(csv_path: str) -> dict:
    return {
        "data": {"dataset": "synthetic", "path": csv_path, "seq_len": 24, "pred_lens": [8],
                 "split_ratios": [0.7, 0.1, 0.2]},
        "autoencoder": {"latent_dim": 8, "hidden_dim": 8, "epochs": 3, "patience": 3, "batch_size": 4,
                        "lr": 3e-3},
        "backbone": {"kind": "dlinear", "moving_avg": 5, "d_ff": 16},
        "losses": {"alpha": 10.0, "beta": 15.0},
        "training": {"epochs": 3, "patience": 3, "batch_size": 16, "lr": 1e-3, "seed": 7},
        "diagnostics": {"slice_length": 32},
    }


@pytest.fixture
def tiny_config_dict_factory(synthetic_csv):
    def factory(**overrides):
        raw = tiny_config_dict(synthetic_csv)
        for section, values in overrides.items():
            raw[section].update(values)
        return raw
    return factory


@pytest.fixture
def tiny_config(tiny_config_dict_factory):
    return ExperimentConfig.from_dict(tiny_config_dict_factory())


@pytest.fixture
def config_file(tmp_path, tiny_config_dict_factory):
    def factory(name: str = "config.json", **overrides):
        path = tmp_path / name
        path.write_text(json.dumps(tiny_config_dict_factory(**overrides)), encoding="utf-8")
        return str(path)
    return factory


@pytest.fixture
def isolated_dirs(tmp_path, monkeypatch):
    """Point logs and run outputs at the test's temp directory."""
    monkeypatch.setattr(Config, "LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setattr(Config, "OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.setattr(Config, "ENVIRONMENT", "development")
    return tmp_path
