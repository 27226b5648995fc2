import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from drforest.core import (
    AsymmetryTooLarge,
    Dataset,
    DimensionMismatch,
    MatrixIOError,
    NegativeEntry,
    NonFiniteEntry,
    NonNumericCell,
    NonSquare,
    NonzeroDiagonal,
    RaggedRows,
    load_matrix_csv,
    validate_distance_matrix,
    write_matrix_csv,
)


class TestValidateDistanceMatrix:
    def test_single_point(self):
        D = validate_distance_matrix([[0.0]])
        assert D.shape == (1, 1) and D[0, 0] == 0

    def test_symmetric_pair(self):
        np.testing.assert_array_equal(validate_distance_matrix([[0, 1], [1, 0]]), [[0, 1], [1, 0]])

    def test_negative_entry(self):
        with pytest.raises(NegativeEntry):
            validate_distance_matrix([[0, -1], [-1, 0]])

    def test_non_square(self):
        with pytest.raises(NonSquare):
            validate_distance_matrix(np.zeros((2, 3)))

    def test_nonzero_diagonal(self):
        with pytest.raises(NonzeroDiagonal):
            validate_distance_matrix([[1e-6, 1], [1, 0]])

    def test_non_finite(self):
        with pytest.raises(NonFiniteEntry):
            validate_distance_matrix([[0, np.inf], [np.inf, 0]])

    def test_large_asymmetry_rejected(self):
        with pytest.raises(AsymmetryTooLarge):
            validate_distance_matrix([[0, 1], [1.001, 0]])

    def test_small_asymmetry_repaired_by_averaging(self):
        D = validate_distance_matrix([[0, 1.0], [1.0 + 5e-10, 0]])
        assert D[0, 1] == D[1, 0] == pytest.approx(1.0 + 2.5e-10, abs=1e-15)

    def test_result_is_read_only(self):
        D = validate_distance_matrix([[0, 1], [1, 0]])
        with pytest.raises(ValueError):
            D[0, 1] = 3

    @settings(max_examples=50, deadline=None)
    @given(hnp.arrays(np.float64, (6, 3), elements=st.floats(-100, 100)))
    def test_idempotent(self, pts):
        D = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
        D = D + np.triu(np.full_like(D, 1e-10), 1)  # tiny asymmetry to force a repair
        once = validate_distance_matrix(D)
        twice = validate_distance_matrix(once)
        assert once.tobytes() == twice.tobytes()


class TestCsv:
    def test_plain(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("0,1\n1,0")
        np.testing.assert_array_equal(load_matrix_csv(p), [[0, 1], [1, 0]])

    def test_header_skipped(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("a,b\n0,1\n1,0\n")
        np.testing.assert_array_equal(load_matrix_csv(p), [[0, 1], [1, 0]])

    def test_ragged(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("0,1\n1")
        with pytest.raises(RaggedRows):
            load_matrix_csv(p)

    def test_non_numeric_outside_header(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("0,1\n1,x\n")
        with pytest.raises(NonNumericCell):
            load_matrix_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MatrixIOError):
            load_matrix_csv(tmp_path / "nope.csv")

    def test_expected_cols(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("0,1\n1,0\n")
        with pytest.raises(DimensionMismatch):
            load_matrix_csv(p, expected_cols=3)

    @settings(max_examples=50, deadline=None)
    @given(hnp.arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 4)),
                      elements=st.floats(allow_nan=False, allow_infinity=False)))
    def test_round_trip_17_digits(self, tmp_path_factory, M):
        p = tmp_path_factory.mktemp("rt") / "m.csv"
        write_matrix_csv(p, M)
        back = load_matrix_csv(p)
        assert back.tobytes() == M.tobytes()


def test_dataset_row_counts():
    with pytest.raises(DimensionMismatch):
        Dataset(inputs=np.zeros((3, 2)), responses=np.zeros((2, 1)))
    ds = Dataset(inputs=np.zeros((2, 2)), distances=[[0, 1], [1, 0]])
    assert ds.n == 2
