import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from sphex.errors import InvalidParameterError
from sphex.sampling import SphereRNG, as_points, derive_trial_seed, sample_uniform_sphere


def test_seed_derivation_frozen():
    # first SplitMix64 output from state 0
    assert derive_trial_seed(0, 0) == 0xE220A8397B1DCDAF
    assert derive_trial_seed(12345, 7) == 7959005890829367068


def test_stream_frozen():
    assert SphereRNG(0).uniform(2).tolist() == [0.011546754286331562, 0.24154919656271812]
    np.testing.assert_array_equal(sample_uniform_sphere(3, 2, 0).points, [
        [-0.9863450286916012, 0.16350815590533838, 0.019712111195913477],
        [-0.8768243407675932, -0.3020162213939719, -0.37411933584403667],
    ])


def test_seed_derivation_distinct():
    seeds = np.fromiter((derive_trial_seed(99, i) for i in range(10**6)), dtype=np.uint64, count=10**6)
    assert np.unique(seeds).size == 10**6
    assert derive_trial_seed(5, 0) != derive_trial_seed(6, 0)


@pytest.mark.parametrize("d", [2, 3, 5, 9])
def test_unit_norm(d):
    pts = sample_uniform_sphere(d, 5000, 1).points
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("d", [3, 4])
def test_moments(d):
    n = 100_000
    pts = sample_uniform_sphere(d, n, 2).points
    assert np.max(np.abs(pts.mean(axis=0))) <= 4 / math.sqrt(n)
    np.testing.assert_allclose(pts.T @ pts / n, np.eye(d) / d, atol=0.01)


def test_determinism():
    a = sample_uniform_sphere(4, 100, 77)
    b = sample_uniform_sphere(4, 100, 77)
    assert a == b and a.points.tobytes() == b.points.tobytes()
    assert not np.array_equal(a.points, sample_uniform_sphere(4, 100, 78).points)
    # prefix property of the sequential stream
    np.testing.assert_array_equal(sample_uniform_sphere(4, 10, 77).points, a.points[:10])


def test_points_read_only():
    pts = sample_uniform_sphere(3, 4, 0).points
    with pytest.raises(ValueError):
        pts[0, 0] = 1.0


def _marginal_cdf(d):
    # density of one coordinate: (1 - t^2)^((d-3)/2) / B(1/2, (d-1)/2)
    norm = special.beta(0.5, (d - 1) / 2)

    def cdf(t):
        t = np.atleast_1d(t)
        return np.array([integrate.quad(lambda u: (1 - u * u) ** ((d - 3) / 2), -1, x)[0] / norm for x in t])
    return cdf


@pytest.mark.parametrize("d", [3, 4, 6])
def test_marginal_ks(d):
    x = sample_uniform_sphere(d, 2000, 3).points[:, 0]
    assert stats.kstest(x, _marginal_cdf(d)).pvalue > 1e-3


def test_rotation_invariance_in_law():
    # a signed permutation of coordinates must leave the law unchanged
    pts = sample_uniform_sphere(3, 4000, 4).points
    moved = pts[:, [2, 0, 1]] * np.array([-1, 1, -1])
    assert stats.ks_2samp(pts[:, 0], moved[:, 0]).pvalue > 1e-3


def test_invalid():
    with pytest.raises(InvalidParameterError):
        sample_uniform_sphere(3, 0, 0)
    with pytest.raises(InvalidParameterError):
        sample_uniform_sphere(1, 5, 0)
    with pytest.raises(InvalidParameterError):
        as_points([[1.0, 1.0, 0.0]], 3)
    with pytest.raises(InvalidParameterError):
        as_points([[1.0, 0.0]], 3)
