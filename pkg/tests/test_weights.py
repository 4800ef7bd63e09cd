import math

import numpy as np
import pytest

from exceptions import ModelError
from indicators.Weights import weight_path
from levy_core import LevyTriplet
from measures import Merton
from simulate import SamplePath, sample_path

LOG2 = math.log(2.0)


@pytest.fixture()
def doubling_path():
    return SamplePath(
        grid=np.array([0.0, 0.5, 1.0]),
        log_x=np.array([0.0, LOG2, LOG2]),
        jump_times=np.array([0.5]),
        jump_sizes=np.array([LOG2]),
        jump_pre_log=np.array([0.0]),
        seed=0,
        path_index=0,
        small_jump_sigma=0.0,
        delta=0.0,
        drift=0.0,
        diffusion=0.0,
    )


def test_weights_of_a_single_jump(doubling_path):
    weights = weight_path(doubling_path, 0.0)
    np.testing.assert_allclose(weights.big_theta, [1.0, 1.0, 1.0])
    np.testing.assert_allclose(weights.phi, [1.0, 2.0, 2.0])
    np.testing.assert_allclose(weights.phi_bar, [1.0, 3.0, 3.0])


def test_unit_exponent_gives_the_price(doubling_path):
    weights = weight_path(doubling_path, 1.0)
    np.testing.assert_array_equal(weights.big_theta, 1.0)
    np.testing.assert_allclose(weights.phi, doubling_path.prices())


def test_weight_lines_on_simulated_paths():
    triplet = LevyTriplet(0.0, 0.2, Merton(intensity=3.0, mu=-0.1, delta=0.15))
    for index in range(10):
        path = sample_path(triplet, 1.0, m=256, seed=8, path_index=index)
        weights = weight_path(path, 0.5)
        assert np.all(np.diff(weights.big_theta) >= 0.0)
        assert np.all(weights.phi_bar >= weights.phi)
        assert np.all(weights.big_theta >= path.prices() ** -0.5 * (1.0 - 1e-12))


def test_lookup_at_arbitrary_times(doubling_path):
    weights = weight_path(doubling_path, 0.0)
    np.testing.assert_allclose(weights.at([0.25, 0.5, 0.75]), [1.0, 3.0, 3.0])
    np.testing.assert_allclose(weights.at([0.25], line="phi"), [1.0])


def test_exponent_range():
    path = SamplePath(np.array([0.0, 1.0]), np.zeros(2), np.empty(0), np.empty(0), np.empty(0), 0, 0, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(ModelError):
        weight_path(path, 1.5)
