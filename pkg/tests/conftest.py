import math

import numpy as np
import pytest
from hypothesis import settings

from ricci_forge.curvature import INF, WeightedWarpedSpec
from ricci_forge.profiles import Polynomial, Profile, TrigCos, transform

settings.register_profile("ci", max_examples=40, deadline=None, derandomize=True)
settings.load_profile("ci")

LO, HI = 0.2, 1.2


def random_spec(seed: int, a: int | None = None, b: int | None = None, q: float | None = None) -> WeightedWarpedSpec:
    """A smooth doubly warped spec with strictly positive warping functions on ``[LO, HI]``."""
    rng = np.random.default_rng(seed)
    a = int(rng.integers(1, 4)) if a is None else a
    b = int(rng.integers(1, 4)) if b is None else b
    q = [1.0, 3.0, INF][int(rng.integers(0, 3))] if q is None else q
    alpha = Profile([Polynomial(LO, HI, coeffs=(1.0 + rng.uniform(0, 0.5), *rng.uniform(-0.3, 0.3, 3)), center=0.7)])
    wave = TrigCos(0.0, 10.0, amplitude=rng.uniform(0.1, 0.3), frequency=rng.uniform(0.5, 2.0), phase=rng.uniform(0, 3))
    beta = Profile([transform(wave, offset=1.0 + rng.uniform(0, 0.5))]).restrict(LO, HI)
    f = Profile([Polynomial(LO, HI, coeffs=tuple(rng.uniform(-0.5, 0.5, 4)), center=0.0)])
    return WeightedWarpedSpec(a, b, alpha, beta, f, q)


def interior_points(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.sort(rng.uniform(LO + 0.05, HI - 0.05, n))


def rel_close(x, y, tol):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return np.all(np.abs(x - y) <= tol * (1 + np.abs(x)))


@pytest.fixture
def spec_factory():
    return random_spec


@pytest.fixture(scope="session")
def half_pi():
    return math.pi / 2
