"""CSV dataset I/O, preprocessing and splitting."""

import numpy as np
import pandas as pd
import pytest

from core.exceptions import CsvParseError, DomainError, EncodingError, FileSystemError, SchemaError
from models.domain_models import Season
from services.channel_service import sweep_scenario
from services.dataset_service import (
    CANONICAL_COLUMNS, DEFAULT_FEATURE_COLUMNS, FULL_FEATURE_COLUMNS, RECEIVED_POWER_COLUMN, SEASON_COLUMN,
    TARGET_COLUMN, FeatureScaling, check_schema, decode_season, drop_ignored_columns, empty_frame, encode_season,
    encode_season_column, prepare_training_data, read_csv, records_to_frame, split, standardize, to_features,
    write_csv
)

@pytest.fixture
def frame(small_scenario):
    return records_to_frame(sweep_scenario(small_scenario))

@pytest.fixture
def csv_path(frame, tmp_path):
    path = tmp_path / "dataset.csv"
    write_csv(frame, path)
    return path

class TestCsv:

    def test_header_is_canonical(self, csv_path):
        header = csv_path.read_text(encoding="utf-8").splitlines()[0]
        assert header.split(",") == list(CANONICAL_COLUMNS)

    def test_read_back_equal(self, frame, csv_path):
        pd.testing.assert_frame_equal(read_csv(csv_path), frame)

    def test_empty_dataset_is_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_csv(empty_frame(), path)
        assert path.read_text(encoding="utf-8") == ",".join(CANONICAL_COLUMNS) + "\n"
        assert len(read_csv(path)) == 0

    def test_write_into_missing_directory(self, frame, tmp_path):
        with pytest.raises(FileSystemError):
            write_csv(frame, tmp_path / "absent" / "dataset.csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileSystemError, match="file not found"):
            read_csv(tmp_path / "absent.csv")

    def test_random_frames_read_back_equal(self, tmp_path):
        rng = np.random.default_rng(21)
        labels = [season.value for season in Season]
        numeric = [c for c in CANONICAL_COLUMNS if c != SEASON_COLUMN]
        for case in range(100):
            n = int(rng.integers(1, 30))
            values = rng.normal(size=(n, len(numeric))) * 10.0 ** rng.integers(-6, 7, size=(n, len(numeric)))
            frame = pd.DataFrame(values, columns=numeric)
            frame.insert(CANONICAL_COLUMNS.index(SEASON_COLUMN), SEASON_COLUMN, rng.choice(labels, size=n))
            path = tmp_path / f"case{case}.csv"
            write_csv(frame, path)
            pd.testing.assert_frame_equal(read_csv(path), frame)

    def test_ragged_row_reports_line(self, csv_path):
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        lines[3] = lines[3] + ",extra"
        csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(CsvParseError) as info:
            read_csv(csv_path)
        assert 4 in info.value.rows

    def test_missing_value_reports_row(self, csv_path):
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        cells = lines[2].split(",")
        cells[0] = ""
        lines[2] = ",".join(cells)
        csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(CsvParseError, match="missing values") as info:
            read_csv(csv_path)
        assert info.value.rows == [3]

    def test_non_numeric_value(self, csv_path):
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        cells = lines[1].split(",")
        cells[1] = "soon"
        lines[1] = ",".join(cells)
        csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(CsvParseError, match="non-numeric") as info:
            read_csv(csv_path)
        assert info.value.rows == [2]

    def test_ignored_columns_accepted(self, frame, tmp_path):
        extended = frame.copy()
        extended.insert(0, "Simulation Number", np.arange(len(frame), dtype=float))
        extended["Data Source"] = "NYUSIM"
        path = tmp_path / "kaggle.csv"
        extended.to_csv(path, index=False)
        loaded = read_csv(path)
        pd.testing.assert_frame_equal(drop_ignored_columns(loaded), frame)

class TestSchema:

    def test_missing_column(self, frame):
        with pytest.raises(SchemaError, match="missing columns") as info:
            check_schema(frame.drop(columns=[TARGET_COLUMN]))
        assert info.value.missing == [TARGET_COLUMN]

    def test_unexpected_column(self, frame):
        with pytest.raises(SchemaError, match="unexpected columns"):
            check_schema(frame.assign(Humidity=1.0))

    def test_misordered_columns(self, frame):
        with pytest.raises(SchemaError, match="out of order"):
            check_schema(frame[list(reversed(CANONICAL_COLUMNS))])

class TestSeasonEncoding:

    def test_alphabetical_codes(self):
        assert [encode_season(s) for s in ("Fall", "Spring", "Summer", "Winter")] == [0, 1, 2, 3]

    def test_decode_inverts_encode(self):
        for label in ("Fall", "Spring", "Summer", "Winter"):
            assert decode_season(encode_season(label)) == label

    @pytest.mark.parametrize("label", ["winter", "Autumn", ""])
    def test_unknown_label(self, label):
        with pytest.raises(EncodingError):
            encode_season(label)

    @pytest.mark.parametrize("code", [-1, 4, 1.5])
    def test_unknown_code(self, code):
        with pytest.raises(EncodingError):
            decode_season(code)

    def test_column_encoding(self, frame):
        encoded = encode_season_column(frame)
        assert set(encoded[SEASON_COLUMN]) == {3}
        assert set(frame[SEASON_COLUMN]) == {"Winter"}

class TestPreprocessing:

    def test_split_sizes_and_disjointness(self, frame):
        train, test = split(frame, 0.8, 42)
        assert len(train) == int(np.floor(0.8 * len(frame) + 1e-9))
        assert len(train) + len(test) == len(frame)
        assert set(train.index).isdisjoint(test.index)

    def test_split_is_seeded(self, frame):
        a, _ = split(frame, 0.8, 3)
        b, _ = split(frame, 0.8, 3)
        c, _ = split(frame, 0.8, 4)
        assert list(a.index) == list(b.index)
        assert list(a.index) != list(c.index)

    def test_random_splits_partition_the_rows(self):
        rng = np.random.default_rng(22)
        checked = 0
        for _ in range(300):
            n = int(rng.integers(2, 60))
            fraction = float(rng.uniform(0.01, 0.99))
            frame = pd.DataFrame({"x": np.arange(n, dtype=float)})
            try:
                train, test = split(frame, fraction, int(rng.integers(0, 1000)))
            except DomainError:
                continue
            checked += 1
            assert len(train) == int(np.floor(fraction * n + 1e-9))
            assert set(train.index).isdisjoint(test.index)
            assert set(train.index) | set(test.index) == set(frame.index)
        assert checked > 100

    @pytest.mark.parametrize("fraction", [0.0, 1.0, 1.2])
    def test_split_fraction_domain(self, frame, fraction):
        with pytest.raises(DomainError):
            split(frame, fraction, 0)

    def test_split_needs_two_rows(self, frame):
        with pytest.raises(DomainError):
            split(frame.iloc[:1], 0.5, 0)

    def test_split_rejects_empty_training_set(self, frame):
        with pytest.raises(DomainError):
            split(frame.iloc[:4], 0.2, 0)

    def test_standardize_uses_training_statistics(self):
        train = np.array([[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]])
        test = np.array([[7.0, 9.0]])
        train_scaled, test_scaled, scaling = standardize(train, test)
        np.testing.assert_allclose(train_scaled.mean(axis=0), [0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(train_scaled[:, 0].std(), 1.0)
        np.testing.assert_allclose(test_scaled, [[(7.0 - 3.0) / np.sqrt(8.0 / 3.0), 0.0]])
        assert scaling.std[1] == 0.0

    def test_scaling_rejects_empty_training_set(self):
        with pytest.raises(DomainError):
            FeatureScaling.fit(np.empty((0, 3)))

    def test_default_features_exclude_received_power(self, frame):
        X, y, names = to_features(frame)
        assert names == DEFAULT_FEATURE_COLUMNS
        assert RECEIVED_POWER_COLUMN not in names
        assert X.shape == (len(frame), 10)
        np.testing.assert_array_equal(y, frame[TARGET_COLUMN].to_numpy())

    def test_received_power_can_be_included(self, frame):
        X, _, names = to_features(frame, include_received_power=True)
        assert names == FULL_FEATURE_COLUMNS
        assert X.shape[1] == 11

    def test_prepare_training_data(self, frame):
        data = prepare_training_data(frame, 0.75, seed=1)
        assert len(data.y_train) + len(data.y_test) == len(frame)
        assert data.X_train.shape[1] == data.X_test.shape[1] == 10
