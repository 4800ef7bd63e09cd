import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from levy_core import LevyTriplet, solve_gamma
from measures import CGMY, NIG, Kou, Merton, Zero

settings.register_profile("fast", max_examples=10, deadline=None)
settings.register_profile(
    "ci", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))

np.seterr(all="warn")

GAMMA_S = -0.02


def triplet_with_drift(sigma, nu, gamma_s=GAMMA_S):
    return LevyTriplet(solve_gamma(sigma, nu, gamma_s), sigma, nu)


@pytest.fixture()
def merton():
    """Finite-activity model of the rate experiment"""
    return triplet_with_drift(0.2, Merton(intensity=0.3, mu=-0.1, delta=0.15))


@pytest.fixture()
def black_scholes():
    return LevyTriplet(-0.02, 0.2, Zero())


@pytest.fixture()
def kou():
    return triplet_with_drift(0.15, Kou(intensity=1.0, p=0.4, eta_up=10.0, eta_down=5.0))


@pytest.fixture()
def cgmy():
    return triplet_with_drift(0.0, CGMY(C=0.5, G=5.0, M=5.0, Y=0.5))


@pytest.fixture()
def nig():
    return triplet_with_drift(0.1, NIG(alpha=15.0, beta=-3.0, delta=0.5))


@pytest.fixture()
def model_zoo(merton, kou, cgmy, nig, black_scholes):
    return {"merton": merton, "kou": kou, "cgmy": cgmy, "nig": nig, "zero": black_scholes}
