import numpy as np
import pytest
from scipy.stats import pearsonr

from drforest.core import ValidationError
from drforest.distances import euclidean_distances, isomap_distances
from drforest.simulate import DEFAULT_NOISE_SD, gen_swiss_roll, radial_error, square_to_disk


def test_noise_free_radius_identity():
    s = gen_swiss_roll(200, noise_sd=0.0, seed=1)
    np.testing.assert_allclose(s.Y[:, 0] ** 2 + s.Y[:, 2] ** 2, s.t**2, rtol=1e-13)
    np.testing.assert_array_equal(s.Y, s.Y_clean)


def test_ranges_and_shapes():
    s = gen_swiss_roll(500, seed=2)
    assert s.X.shape == (500, 6) and s.Y.shape == (500, 3)
    assert np.all((s.t >= np.pi) & (s.t <= 3 * np.pi))
    assert np.all((s.u >= 0) & (s.u <= 21))
    np.testing.assert_array_equal(s.Y_clean[:, 1], s.u)
    np.testing.assert_array_equal(s.latents, np.column_stack([s.t, s.u]))


def test_inputs_in_unit_disk():
    s = gen_swiss_roll(1000, seed=3)
    assert np.all(s.X[:, 0] ** 2 + s.X[:, 1] ** 2 <= 1.0 + 1e-12)
    g = np.linspace(-1, 1, 41)
    a, b = np.meshgrid(g, g)
    x, y = square_to_disk(a, b)
    r2 = x**2 + y**2
    assert r2.max() == pytest.approx(1.0, abs=1e-12)
    assert np.all(r2 <= 1 + 1e-12)


def test_noise_scale():
    s = gen_swiss_roll(4000, seed=4)
    assert DEFAULT_NOISE_SD**2 == pytest.approx(0.5)
    assert np.std(s.Y - s.Y_clean) == pytest.approx(DEFAULT_NOISE_SD, rel=0.03)


def test_deterministic():
    a, b = gen_swiss_roll(50, seed=7), gen_swiss_roll(50, seed=7)
    assert a.X.tobytes() == b.X.tobytes() and a.Y.tobytes() == b.Y.tobytes()
    assert gen_swiss_roll(50, seed=8).X.tobytes() != a.X.tobytes()


def test_bad_arguments():
    with pytest.raises(ValidationError):
        gen_swiss_roll(0)
    with pytest.raises(ValidationError):
        gen_swiss_roll(5, noise_sd=-1.0)


def test_radial_error():
    assert radial_error([2 * np.cos(2.0), 5.0, 2 * np.sin(2.0)], 2.0) == pytest.approx(0.0, abs=1e-15)
    assert radial_error([0.0, 4.0, 0.0], 7.5) == -7.5
    s = gen_swiss_roll(20, noise_sd=0.0, seed=5)
    np.testing.assert_allclose(radial_error(s.Y, s.t), 0.0, atol=1e-13)


def test_isomap_unrolls_noise_free_roll():
    s = gen_swiss_roll(600, noise_sd=0.0, seed=6)
    # arc length of the spiral r = t from pi to t
    def arc(t):
        return 0.5 * (t * np.sqrt(1 + t * t) + np.arcsinh(t))
    flat = np.column_stack([arc(s.t) - arc(np.pi), s.u])
    iu = np.triu_indices(600, 1)
    r, _ = pearsonr(isomap_distances(s.Y, 7)[iu], euclidean_distances(flat)[iu])
    assert r >= 0.99
