import logging

import numpy as np
import pytest

from latent_tsf.services.data_service import (
    DATASET_SPLITS, SeriesDataset, Standardizer, WindowedSeries, load_csv, make_windows, prepare_data,
    split, window_count,
)
from latent_tsf.utils.errors import ConfigError, DataLoadError, ShapeError


def _dataset(name, n_points, n_channels=7, registered=True):
    return SeriesDataset(
        name=name,
        values=np.zeros((n_points, n_channels)),
        channel_names=[f"c{i}" for i in range(n_channels)],
        split_sizes=DATASET_SPLITS.get(name) if registered else None,
    )


class TestLoadCsv:
    def test_three_rows_two_channels(self, tmp_path):
        path = tmp_path / "toy.csv"
        path.write_text("date,a,b\n2020-01-01,1,2\n2020-01-02,3,4\n2020-01-03,5,6\n")
        ds = load_csv(str(path))
        assert ds.values.shape == (3, 2)
        assert ds.channel_names == ["a", "b"]
        assert ds.name == "toy"
        np.testing.assert_array_equal(ds.values[:, 1], [2.0, 4.0, 6.0])

    def test_registered_name_carries_split(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a\n1\n")
        assert load_csv(str(path), name="ETTh1").split_sizes == (8545, 2881, 2881)

    def test_missing_value_reports_row_and_column(self, tmp_path):
        path = tmp_path / "gap.csv"
        path.write_text("date,a,b\nd0,1,2\nd1,,3\n")
        with pytest.raises(DataLoadError, match=r"missing value .* row 3, column 'a'"):
            load_csv(str(path))

    def test_unparsable_value(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n3,oops\n")
        with pytest.raises(DataLoadError, match=r"unparsable value 'oops' .* row 3, column 'b'"):
            load_csv(str(path))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataLoadError, match="empty"):
            load_csv(str(path))

    def test_header_only(self, tmp_path):
        path = tmp_path / "header.csv"
        path.write_text("date,a,b\n")
        with pytest.raises(DataLoadError, match="no data rows"):
            load_csv(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataLoadError, match="not found"):
            load_csv(str(tmp_path / "nope.csv"))

    def test_exit_code(self):
        assert DataLoadError("x").exit_code == 3


class TestSplit:
    def test_etth1_sizes(self):
        assert split(_dataset("ETTh1", 14307)).sizes == (8545, 2881, 2881)

    def test_ettm1_sizes(self):
        assert split(_dataset("ETTm1", 57507)).sizes == (34465, 11521, 11521)

    def test_ratios(self):
        assert split(_dataset("synthetic", 100, 2, registered=False), [0.7, 0.1, 0.2]).sizes == (70, 10, 20)

    def test_unknown_dataset_without_ratios(self):
        with pytest.raises(ConfigError):
            split(_dataset("synthetic", 100, 2, registered=False))

    def test_registered_dataset_too_short(self):
        with pytest.raises(DataLoadError):
            split(_dataset("ETTh1", 1000))

    def test_val_and_test_views_borrow_lookback(self):
        ds = SeriesDataset("s", np.arange(100, dtype=float)[:, None], ["v"])
        splits = split(ds, [0.7, 0.1, 0.2])
        view, offset = splits.window_view("val", 24)
        assert offset == 70 - 24
        assert len(view) == 24 + 10
        view, offset = splits.window_view("train", 24)
        assert (offset, len(view)) == (0, 70)
        np.testing.assert_array_equal(splits.part("test")[:, 0], np.arange(80, 100))

    def test_unknown_split_name(self):
        ds = SeriesDataset("s", np.zeros((10, 1)), ["v"])
        with pytest.raises(ConfigError):
            split(ds, [0.6, 0.2, 0.2]).part("holdout")


class TestWindows:
    def test_count_example(self):
        assert window_count(8545, 720, 96) == 7730

    @pytest.mark.parametrize("pred_len", [96, 192, 336, 720])
    def test_counts_match_enumeration(self, pred_len):
        length, seq_len = 8545, 720
        enumerated = sum(1 for start in range(length) if start + seq_len + pred_len <= length)
        assert window_count(length, seq_len, pred_len) == enumerated

    def test_boundaries(self, caplog):
        view = np.zeros((12, 2))
        assert len(make_windows(view, 8, 4)) == 1
        with caplog.at_level(logging.WARNING):
            assert make_windows(view, 8, 5) == []
        assert "too short" in caplog.text

    def test_window_contents_are_channel_major(self):
        view = np.arange(20, dtype=float).reshape(10, 2)
        windows = make_windows(view, 3, 2, offset=100)
        first = windows[0]
        np.testing.assert_array_equal(first.x, [[0, 2, 4], [1, 3, 5]])
        np.testing.assert_array_equal(first.y, [[6, 8], [7, 9]])
        assert [w.start_index for w in windows] == list(range(100, 106))

    def test_stride(self):
        assert len(make_windows(np.zeros((20, 1)), 4, 2, stride=3)) == window_count(20, 4, 2, stride=3) == 5

    def test_windowed_series_matches_make_windows(self, rng):
        view = rng.standard_normal((40, 3))
        windowed = WindowedSeries(view, 8, 4, offset=5)
        pairs = make_windows(view, 8, 4, offset=5)
        assert len(windowed) == len(pairs)
        x, y = windowed.batch(np.array([0, 7]))
        np.testing.assert_array_equal(x[1], pairs[7].x)
        np.testing.assert_array_equal(y[1], pairs[7].y)
        np.testing.assert_array_equal(windowed.start_indices(), [p.start_index for p in pairs])

    def test_iter_batches_covers_every_window(self, rng):
        windowed = WindowedSeries(rng.standard_normal((30, 2)), 5, 3)
        sizes = [x.shape[0] for x, _ in windowed.iter_batches(4, np.random.default_rng(0))]
        assert sum(sizes) == len(windowed)

    def test_iter_batches_min_batch_drops_tail(self, rng):
        windowed = WindowedSeries(rng.standard_normal((13, 1)), 2, 2)
        assert len(windowed) == 10
        sizes = [x.shape[0] for x, _ in windowed.iter_batches(3, min_batch=2)]
        assert sizes == [3, 3, 3]


class TestStandardizer:
    def test_constant_channel_maps_to_zero(self):
        values = np.full((6, 1), 5.0)
        np.testing.assert_array_equal(Standardizer.fit(values).apply(values), np.zeros((6, 1)))

    def test_population_sigma(self):
        values = np.array([[0.0], [2.0]])
        standardizer = Standardizer.fit(values)
        np.testing.assert_array_equal(standardizer.apply(values), [[-1.0], [1.0]])
        np.testing.assert_allclose(standardizer.invert(standardizer.apply(values)), values)

    def test_from_arrays_matches_fit(self, rng):
        values = rng.standard_normal((50, 3)) * 4 + 2
        fitted = Standardizer.fit(values)
        restored = Standardizer.from_arrays(fitted.mean, fitted.std)
        np.testing.assert_array_equal(restored.apply(values), fitted.apply(values))

    def test_channel_mismatch(self, rng):
        standardizer = Standardizer.fit(rng.standard_normal((10, 3)))
        with pytest.raises(ShapeError):
            standardizer.apply(rng.standard_normal((10, 2)))


def test_prepare_data_uses_train_statistics(synthetic_csv):
    data = prepare_data(synthetic_csv, "synthetic", seq_len=24, ratios=[0.7, 0.1, 0.2])
    train = data.splits.part("train")
    np.testing.assert_allclose(train.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(train.std(axis=0), 1.0, atol=1e-12)
    assert data.n_channels == 3
    assert data.windows("test", 8) is data.windows("test", 8)
    assert len(data.windows("test", 8)) == window_count(80 + 24, 24, 8)


def test_prepare_data_reuses_saved_standardizer(synthetic_csv):
    first = prepare_data(synthetic_csv, "synthetic", seq_len=24, ratios=[0.7, 0.1, 0.2])
    second = prepare_data(synthetic_csv, "synthetic", seq_len=24, ratios=[0.7, 0.1, 0.2],
                          standardizer=Standardizer.from_arrays(first.standardizer.mean, first.standardizer.std))
    np.testing.assert_array_equal(first.dataset.values, second.dataset.values)
