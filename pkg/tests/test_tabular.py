import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drglm import Column, Dataset, read_csv, write_csv
from drglm.errors import DataError
from drglm.tabular import override_exposure


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestReadCsv:
    def test_numeric_columns(self, tmp_path):
        ds = read_csv(write(tmp_path, "x,y\n1,2\n3,4.5\n-1e3,0\n"))
        assert ds.n_rows == 3
        assert ds.names == ["x", "y"]
        assert all(ds[c].is_numeric for c in ds)
        np.testing.assert_array_equal(ds.values("x"), [1.0, 3.0, -1000.0])

    def test_labelled_codes_become_categorical(self, tmp_path):
        ds = read_csv(write(tmp_path, "smoke,age\n1. Yes,20\n0. No,31\n1. Yes,25\n"))
        assert ds["smoke"].kind == "categorical"
        assert ds["smoke"].levels == ("0. No", "1. Yes")

    def test_quoted_fields(self, tmp_path):
        ds = read_csv(write(tmp_path, 'race,v\n"3. Other, mixed",1\n"1. White",2\n'))
        assert ds["race"].levels == ("1. White", "3. Other, mixed")

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataError, match="empty"):
            read_csv(write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(DataError, match="no data rows"):
            read_csv(write(tmp_path, "x,y\n"))

    def test_ragged_row(self, tmp_path):
        with pytest.raises(DataError, match="line 3"):
            read_csv(write(tmp_path, "x,y\n1,2\n3\n"))

    @pytest.mark.parametrize("cell", ["", "NA", "NaN"])
    def test_missing_cells_rejected(self, tmp_path, cell):
        with pytest.raises(DataError, match="missing"):
            read_csv(write(tmp_path, f"x,y\n1,2\n{cell},4\n"))

    def test_numeric_hint_names_row_and_column(self, tmp_path):
        p = write(tmp_path, "x,y\n1,2\n3,oops\n")
        with pytest.raises(DataError, match=r"'y', row 2"):
            read_csv(p, {"y": "numeric"})

    def test_categorical_hint_overrides(self, tmp_path):
        ds = read_csv(write(tmp_path, "g,y\n1,2\n2,3\n"), {"g": "categorical"})
        assert ds["g"].levels == ("1", "2")

    def test_duplicate_header(self, tmp_path):
        with pytest.raises(DataError):
            read_csv(write(tmp_path, "x,x\n1,2\n"))

    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=30))
    def test_round_trip_bit_exact(self, tmp_path_factory, values):
        path = tmp_path_factory.mktemp("rt") / "r.csv"
        ds = Dataset.from_dict({"a": np.array(values), "b": np.arange(len(values), dtype=float)})
        write_csv(ds, path)
        back = read_csv(path)
        assert back.values("a").tobytes() == ds.values("a").tobytes()


class TestColumnsAndDataset:
    def test_numeric_rejects_non_finite(self):
        with pytest.raises(DataError):
            Column.numeric([1.0, np.nan])
        with pytest.raises(DataError):
            Column.numeric([1.0, np.inf])

    def test_values_read_only(self):
        ds = Dataset.from_dict({"x": [1.0, 2.0]})
        with pytest.raises(ValueError):
            ds.values("x")[0] = 5.0

    def test_unequal_lengths(self):
        with pytest.raises(DataError):
            Dataset({"a": Column.numeric([1.0]), "b": Column.numeric([1.0, 2.0])})

    def test_take_keeps_levels(self):
        ds = Dataset.from_dict({"g": np.array(["a", "b", "c"])})
        sub = ds.take([0, 0])
        assert sub["g"].levels == ("a", "b", "c")
        assert sub.n_rows == 2

    def test_declared_levels_must_cover(self):
        with pytest.raises(DataError):
            Column.categorical(["a", "z"], levels=["a", "b"])


class TestOverrideExposure:
    @pytest.fixture
    def ds(self):
        return Dataset.from_dict({"x": [0.0, 1.0, 1.0], "z": [0.5, -1.0, 2.0]})

    def test_set_to_one(self, ds):
        np.testing.assert_array_equal(override_exposure(ds, "x", 1).values("x"), [1, 1, 1])

    def test_set_to_zero(self, ds):
        np.testing.assert_array_equal(override_exposure(ds, "x", 0).values("x"), [0, 0, 0])

    def test_idempotent(self, ds):
        once = override_exposure(ds, "x", 1)
        twice = override_exposure(once, "x", 1)
        np.testing.assert_array_equal(once.values("x"), twice.values("x"))

    def test_only_one_column_changes(self, ds):
        out = override_exposure(ds, "x", 0)
        assert out.n_rows == ds.n_rows
        assert out.names == ds.names
        assert out["z"] is ds["z"]
        np.testing.assert_array_equal(ds.values("x"), [0, 1, 1])

    def test_non_binary_rejected(self, ds):
        with pytest.raises(DataError):
            override_exposure(ds, "z", 1)

    def test_bad_value(self, ds):
        with pytest.raises(DataError):
            override_exposure(ds, "x", 2)
