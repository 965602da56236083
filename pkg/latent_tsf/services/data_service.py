#!/usr/bin/env python3
"""
Data Service - benchmark CSV loading, chronological splits, standardization, sliding windows

Val/test windows may reach back into the preceding split for their lookback
context; their targets always lie inside their own split.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.preprocessing import StandardScaler

from latent_tsf.services.layers import TensorF, as_tensor
from latent_tsf.utils.errors import ConfigError, DataLoadError, ShapeError

logger = logging.getLogger(__name__)

# (train, val, test) time points per benchmark
DATASET_SPLITS: Dict[str, Tuple[int, int, int]] = {
    "ETTh1": (8545, 2881, 2881),
    "ETTh2": (8545, 2881, 2881),
    "ETTm1": (34465, 11521, 11521),
    "ETTm2": (34465, 11521, 11521),
    "Electricity": (18317, 2633, 5261),
    "Traffic": (12185, 1757, 3509),
    "Weather": (36792, 5271, 10540),
}

DATASET_CHANNELS: Dict[str, int] = {
    "ETTh1": 7, "ETTh2": 7, "ETTm1": 7, "ETTm2": 7,
    "Electricity": 321, "Traffic": 862, "Weather": 21,
}

SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class SeriesDataset:
    """Time-major multivariate series (N x C)."""

    name: str
    values: TensorF
    channel_names: List[str]
    split_sizes: Optional[Tuple[int, int, int]] = None

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class WindowPair:
    """One sample: lookback x (C x L) immediately followed by target y (C x T)."""

    x: TensorF
    y: TensorF
    start_index: int


def load_csv(path: str, name: Optional[str] = None) -> SeriesDataset:
    """
    Load a benchmark CSV: one header row, optional leading 'date' column.

    Args:
        path: CSV file path
        name: dataset name (defaults to the file stem)

    Returns:
        SeriesDataset with values of shape (N, C)
    """
    csv_path = Path(path)
    if not csv_path.is_file():
        raise DataLoadError(f"Dataset file not found: {csv_path}")

    try:
        frame = pd.read_csv(csv_path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise DataLoadError(f"Dataset file is empty: {csv_path}") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataLoadError(f"Could not parse {csv_path}: {e}") from e

    if len(frame.columns) > 0 and str(frame.columns[0]).strip().lower() == "date":
        frame = frame.iloc[:, 1:]
    if frame.shape[1] == 0:
        raise DataLoadError(f"No numeric columns in {csv_path}")
    if frame.shape[0] == 0:
        raise DataLoadError(f"Dataset file has a header but no data rows: {csv_path}")

    stripped = frame.apply(lambda column: column.str.strip())
    numeric = stripped.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().to_numpy()
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        cell = stripped.iat[row, col]
        # header is file line 1
        reason = "missing value" if cell == "" or cell.lower() == "nan" else f"unparsable value '{cell}'"
        raise DataLoadError(f"{reason} in {csv_path} at row {row + 2}, column '{frame.columns[col]}'")

    values = as_tensor(numeric.to_numpy(dtype=np.float64))
    if not np.all(np.isfinite(values)):
        row, col = (int(i) for i in np.argwhere(~np.isfinite(values))[0])
        raise DataLoadError(f"Non-finite value in {csv_path} at row {row + 2}, column '{frame.columns[col]}'")

    dataset_name = name or csv_path.stem
    dataset = SeriesDataset(
        name=dataset_name,
        values=values,
        channel_names=[str(c) for c in frame.columns],
        split_sizes=DATASET_SPLITS.get(dataset_name),
    )
    logger.info(f"✅ Loaded {dataset_name}: {dataset.n_points} points x {dataset.n_channels} channels from {csv_path}")
    return dataset


@dataclass(frozen=True)
class SeriesSplits:
    """Chronological train/val/test borders over one dataset."""

    dataset: SeriesDataset
    sizes: Tuple[int, int, int]

    @property
    def borders(self) -> Tuple[int, int, int]:
        train, val, test = self.sizes
        return train, train + val, train + val + test

    def part(self, which: str) -> TensorF:
        """The split's own time points (no lookback context)."""
        start, end = self._bounds(which)
        return self.dataset.values[start:end]

    def window_view(self, which: str, seq_len: int) -> Tuple[TensorF, int]:
        """
        Series slice to window over, with lookback context borrowed from the
        preceding split for val/test.

        Returns:
            (view, offset) where offset is the absolute index of view[0]
        """
        start, end = self._bounds(which)
        if which != "train":
            start = max(0, start - seq_len)
        return self.dataset.values[start:end], start

    def _bounds(self, which: str) -> Tuple[int, int]:
        if which not in SPLIT_NAMES:
            raise ConfigError(f"Unknown split '{which}', expected one of {SPLIT_NAMES}")
        train_end, val_end, test_end = self.borders
        return {
            "train": (0, train_end),
            "val": (train_end, val_end),
            "test": (val_end, test_end),
        }[which]


def split(ds: SeriesDataset, ratios: Optional[Sequence[float]] = None) -> SeriesSplits:
    """
    Chronological split by registered sizes, or by (train, val, test) ratios.

    Ratios follow the usual loader arithmetic: train = floor(N*r0),
    test = floor(N*r2), val takes the remainder.
    """
    if ratios is not None:
        if len(ratios) != 3:
            raise ConfigError(f"Split ratios need three values, got {list(ratios)}")
        n = ds.n_points
        train = int(np.floor(n * ratios[0] + 1e-9))
        test = int(np.floor(n * ratios[2] + 1e-9))
        sizes = (train, n - train - test, test)
    elif ds.split_sizes is not None:
        sizes = tuple(ds.split_sizes)
        if sum(sizes) > ds.n_points:
            raise DataLoadError(
                f"{ds.name} has {ds.n_points} points but its registered split needs {sum(sizes)}"
            )
        if sum(sizes) < ds.n_points:
            logger.info(f"📊 {ds.name}: {ds.n_points - sum(sizes)} trailing points unused by the registered split")
    else:
        raise ConfigError(f"Dataset '{ds.name}' has no registered split; supply split ratios")

    if min(sizes) <= 0:
        raise ConfigError(f"Split of {ds.name} produced an empty part: {sizes}")
    logger.info(f"📊 Split {ds.name}: train={sizes[0]}, val={sizes[1]}, test={sizes[2]}")
    return SeriesSplits(dataset=ds, sizes=sizes)


def window_count(length: int, seq_len: int, pred_len: int, stride: int = 1) -> int:
    if length < seq_len + pred_len:
        return 0
    return (length - seq_len - pred_len) // stride + 1


def make_windows(view: TensorF, seq_len: int, pred_len: int, stride: int = 1,
                 offset: int = 0) -> List[WindowPair]:
    """
    Enumerate chronological (x, y) windows over a time-major view.

    Returns an empty list (with a warning) when the view is too short.
    """
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    count = window_count(len(view), seq_len, pred_len, stride)
    if count == 0:
        logger.warning(
            f"⚠️ Series of length {len(view)} too short for seq_len={seq_len} + pred_len={pred_len}; no windows"
        )
        return []

    windows = []
    for k in range(count):
        s = k * stride
        windows.append(WindowPair(
            x=view[s:s + seq_len].T,
            y=view[s + seq_len:s + seq_len + pred_len].T,
            start_index=offset + s,
        ))
    return windows


class WindowedSeries:
    """Batched access to every stride-1 window of a view, as (B, C, L) / (B, C, T) arrays."""

    def __init__(self, view: TensorF, seq_len: int, pred_len: int, offset: int = 0):
        self.view = as_tensor(view)
        self.seq_len = seq_len
        self.pred_len = pred_len
        self.offset = offset
        self.count = window_count(len(view), seq_len, pred_len)
        if self.count == 0:
            logger.warning(
                f"⚠️ Series of length {len(view)} too short for seq_len={seq_len} + pred_len={pred_len}; no windows"
            )

    def __len__(self) -> int:
        return self.count

    @property
    def n_channels(self) -> int:
        return self.view.shape[1]

    def start_indices(self) -> np.ndarray:
        return self.offset + np.arange(self.count)

    def batch(self, indices: np.ndarray) -> Tuple[TensorF, TensorF]:
        indices = np.asarray(indices, dtype=np.int64)
        x_rows = indices[:, None] + np.arange(self.seq_len)
        y_rows = indices[:, None] + self.seq_len + np.arange(self.pred_len)
        x = np.ascontiguousarray(self.view[x_rows].transpose(0, 2, 1))
        y = np.ascontiguousarray(self.view[y_rows].transpose(0, 2, 1))
        return x, y

    def iter_batches(self, batch_size: int, rng: Optional[np.random.Generator] = None, min_batch: int = 1):
        """Yield (x, y) batches; shuffled when rng is given, chronological otherwise.

        A trailing batch smaller than min_batch is dropped.
        """
        order = np.arange(self.count)
        if rng is not None:
            order = rng.permutation(self.count)
        for start in range(0, self.count, batch_size):
            indices = order[start:start + batch_size]
            if len(indices) < min_batch:
                break
            yield self.batch(indices)


class Standardizer:
    """Per-channel z-score fitted on the train split (population sigma, sigma=0 -> 1)."""

    def __init__(self, scaler: StandardScaler):
        self.scaler = scaler

    @classmethod
    def fit(cls, train_values: TensorF) -> "Standardizer":
        if len(train_values) == 0:
            raise DataLoadError("Cannot fit a standardizer on an empty train split")
        scaler = StandardScaler()
        scaler.fit(np.asarray(train_values, dtype=np.float64))
        return cls(scaler)

    @classmethod
    def from_arrays(cls, mean: Sequence[float], std: Sequence[float]) -> "Standardizer":
        mean = as_tensor(mean)
        std = as_tensor(std)
        if mean.shape != std.shape:
            raise ShapeError.mismatch("standardizer std", mean.shape, std.shape)
        scaler = StandardScaler()
        scaler.mean_ = mean
        scaler.scale_ = std
        scaler.var_ = std ** 2
        scaler.n_features_in_ = mean.shape[0]
        scaler.n_samples_seen_ = 0
        return cls(scaler)

    @property
    def mean(self) -> TensorF:
        return self.scaler.mean_

    @property
    def std(self) -> TensorF:
        return self.scaler.scale_

    def apply(self, values: TensorF) -> TensorF:
        self._check(values)
        return as_tensor(self.scaler.transform(values))

    def invert(self, values: TensorF) -> TensorF:
        self._check(values)
        return as_tensor(self.scaler.inverse_transform(values))

    def _check(self, values: TensorF) -> None:
        if values.ndim != 2 or values.shape[1] != self.mean.shape[0]:
            raise ShapeError.mismatch("standardizer input", ("N", self.mean.shape[0]), values.shape)


def standardize_fit_apply(ds: SeriesDataset, train_size: int) -> Tuple[SeriesDataset, Standardizer]:
    """Fit on the first train_size points and apply to the whole series."""
    standardizer = Standardizer.fit(ds.values[:train_size])
    standardized = replace(ds, values=standardizer.apply(ds.values))
    logger.info(f"✅ Standardized {ds.name} using {train_size} train points")
    return standardized, standardizer


@dataclass
class PreparedData:
    """Standardized dataset with its splits, ready for windowing."""

    dataset: SeriesDataset
    standardizer: Standardizer
    splits: SeriesSplits
    seq_len: int
    _cache: Dict[Tuple[str, int], WindowedSeries] = field(default_factory=dict, repr=False)

    @property
    def n_channels(self) -> int:
        return self.dataset.n_channels

    def windows(self, which: str, pred_len: int) -> WindowedSeries:
        key = (which, pred_len)
        if key not in self._cache:
            view, offset = self.splits.window_view(which, self.seq_len)
            self._cache[key] = WindowedSeries(view, self.seq_len, pred_len, offset=offset)
        return self._cache[key]


def prepare_data(path: str, name: str, seq_len: int, ratios: Optional[Sequence[float]] = None,
                 standardizer: Optional[Standardizer] = None) -> PreparedData:
    """
    Load -> split -> standardize (train statistics) in one call.

    A saved standardizer (from a checkpoint) is reused instead of refitting.
    """
    raw = load_csv(path, name=name)
    splits = split(raw, ratios)
    if standardizer is None:
        standardized, standardizer = standardize_fit_apply(raw, splits.sizes[0])
    else:
        standardized = replace(raw, values=standardizer.apply(raw.values))
    return PreparedData(
        dataset=standardized,
        standardizer=standardizer,
        splits=SeriesSplits(dataset=standardized, sizes=splits.sizes),
        seq_len=seq_len,
    )
