import numpy as np
import pytest

from drforest.core import DimensionMismatch
from drforest.metrics import (
    PredictionNotInTrainingSet,
    emse,
    error_vectors_projection,
    evaluate,
    match_rate,
)


def test_emse_basics():
    Y = np.random.default_rng(0).normal(size=(10, 3))
    assert emse(Y, Y) == 0.0
    assert emse([[0.0, 0.0]], [[3.0, 4.0]]) == 25.0
    with pytest.raises(DimensionMismatch):
        emse(Y, Y[:, :2])


def test_emse_sums_coordinates_and_averages_samples():
    T = np.zeros((2, 32))
    P = np.zeros((2, 32))
    P[0] = 0.5
    assert emse(T, P) == pytest.approx(32 * 0.25 / 2)


def test_emse_permutation_and_union():
    rng = np.random.default_rng(1)
    T, P = rng.normal(size=(30, 4)), rng.normal(size=(30, 4))
    perm = rng.permutation(30)
    assert emse(T[perm], P[perm]) == pytest.approx(emse(T, P), rel=1e-14)
    a, b = slice(0, 12), slice(12, 30)
    union = (12 * emse(T[a], P[a]) + 18 * emse(T[b], P[b])) / 30
    assert union == pytest.approx(emse(T, P), rel=1e-13)


def test_error_vectors_projection():
    T = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    P = T + np.array([[0.5, 9.0, -1.0], [0.0, 0.0, 0.0]])
    tab = error_vectors_projection(T, P)
    np.testing.assert_array_equal(tab, [[1, 3, 0.5, -1], [4, 6, 0, 0]])
    np.testing.assert_array_equal(error_vectors_projection(T, T)[:, 2:], 0.0)
    with pytest.raises(DimensionMismatch):
        error_vectors_projection(T, P, dims=(0, 3))


def test_match_rate():
    Ytr = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
    labels = np.array([7, 8, 9])
    pred = Ytr[[2, 0, 0, 1]]
    assert match_rate(pred, Ytr, labels, [9, 7, 7, 8]) == 1.0
    rate = match_rate(pred, Ytr, labels, [9, 7, 8, 8])
    assert rate == 0.75 and rate + 0.25 == 1.0
    with pytest.raises(PredictionNotInTrainingSet):
        match_rate(pred + 1e-9, Ytr, labels, [9, 7, 7, 8])


def test_evaluate_report():
    T = np.array([[3.0, 0.0, 0.0]])
    P = np.array([[0.0, 1.0, 2.0]])
    rep = evaluate(T, P, t_true=[3.0])
    assert rep.emse == 9 + 1 + 4
    assert rep.mean_radial_error == pytest.approx(2.0 - 3.0)
    s = rep.scalars()
    assert s["n_test"] == 1 and "match_rate" not in s
