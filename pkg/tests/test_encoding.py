import numpy as np
import pytest

from noduleml import schema
from noduleml.dataset import Dataset
from noduleml.encoding import decode_row, encode
from noduleml.errors import DataError
from noduleml.synth import synthesize

from .test_dataset import make_record


class TestEncode:
    def test_location_two_indicator_columns(self):
        ds = synthesize(20, seed=1)
        m = encode(ds)
        assert len(m.var_columns["location"]) == 2
        names = [m.column_names[j] for j in m.var_columns["location"]]
        assert names == ["location=left", "location=isthmus"]  # right is reference

    def test_var_columns_partition(self):
        ds = synthesize(20, seed=1)
        m = encode(ds)
        assert len(m.var_columns) == 18
        all_cols = sorted(j for cols in m.var_columns.values() for j in cols)
        assert all_cols == list(range(m.n_cols))
        # disjoint: no column appears twice
        assert len(all_cols) == len(set(all_cols))

    def test_standardize_age_hand_arithmetic(self):
        # sample SD of {40, 50, 60} is 10, so z-scores are exactly {-1, 0, 1}
        records = tuple(
            make_record(f"P{i}", age=a, location="right", ft3=4.0 + i,
                        ft4=14.0 + i, tsh=1.0 + i, tpo=0.5 + i, tgab=2.0 + i,
                        size=1.0 + i)
            for i, a in enumerate([40.0, 50.0, 60.0]))
        m = encode(Dataset(records=records), standardize=True)
        (j,) = m.var_columns["age"]
        assert m.values[:, j] == pytest.approx([-1.0, 0.0, 1.0])

    def test_constant_column_clamped_with_warning(self):
        records = tuple(make_record(f"P{i}") for i in range(3))
        with pytest.warns(UserWarning, match="constant column"):
            m = encode(Dataset(records=records), standardize=True)
        (j,) = m.var_columns["age"]
        assert np.all(np.isfinite(m.values[:, j]))

    def test_labels_and_groups_aligned(self):
        ds = synthesize(15, seed=4)
        m = encode(ds)
        assert m.labels.size == m.n_rows == len(m.groups)
        assert set(np.unique(m.labels)) <= {0, 1}

    def test_incomplete_records_rejected(self):
        ds = Dataset(records=(make_record("P1", tsh=None),))
        with pytest.raises(DataError):
            encode(ds)


class TestRoundTrip:
    @pytest.mark.parametrize("standardize", [False, True])
    def test_decode_reconstructs_records(self, standardize):
        ds = synthesize(30, seed=7)
        m = encode(ds, standardize=standardize)
        for i, rec in enumerate(ds.records):
            decoded = decode_row(m, i)
            for field in schema.PREDICTOR_FIELDS:
                assert decoded[field] == getattr(rec, field), (i, field)

    def test_standardized_view_consistent(self):
        ds = synthesize(25, seed=8)
        raw_m = encode(ds, standardize=False)
        std_m = encode(ds, standardize=True)
        np.testing.assert_array_equal(raw_m.standardized_values(), std_m.values)
        np.testing.assert_array_equal(std_m.raw_values(), raw_m.values)
