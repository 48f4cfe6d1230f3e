import numpy as np
import pytest

from ncres.boundary import phi_total
from ncres.scalar import DU_NAMES, DV_NAMES, RING, U_NAMES, V_NAMES, XIN, XiRational, gaussian


@pytest.fixture
def rng():
    """Return a seeded random generator."""
    return np.random.default_rng(20240611)


@pytest.fixture
def random_gaussian_poly(rng):
    """Return a factory for random polynomials in xin with small Gaussian integer coefficients."""

    def make(degree):
        num = RING.zero
        for k in range(degree + 1):
            re_part, im_part = (int(v) for v in rng.integers(-5, 6, size=2))
            num += XIN**k * gaussian(re_part, im_part)
        return num

    return make


@pytest.fixture
def random_proper(rng, random_gaussian_poly):
    """Return a factory for random XiRationals decaying at least like xin^-2."""

    def make():
        p, q = (int(v) for v in rng.integers(1, 4, size=2))
        degree = int(rng.integers(0, p + q - 1))
        return XiRational(random_gaussian_poly(degree), p, q)

    return make


@pytest.fixture
def zero_fields():
    """Return substitutions that switch off both vector fields and their derivatives."""
    return {name: 0 for name in U_NAMES + V_NAMES + DU_NAMES + DV_NAMES}


@pytest.fixture(scope="session")
def pairing_a_report():
    """Return the pairing A boundary report."""
    return phi_total("A")


@pytest.fixture(scope="session")
def pairing_b_report():
    """Return the pairing B boundary report."""
    return phi_total("B")
