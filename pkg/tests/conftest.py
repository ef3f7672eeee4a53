import numpy as np
import pytest

from anisotm.fields import RadialProfile, parse_domain
from anisotm.gauge import Gauge


def random_profile(rng, interior_nodes=9, min_gap=0.04, amplitude=1.2,
                   monotone=True):
    """Random piecewise-linear test profile with zero trace and node gaps
    bounded below, so its kink circles stay grid-resolvable."""
    while True:
        t = np.concatenate([[0.0],
                            np.sort(rng.uniform(min_gap, 1.0 - min_gap,
                                                interior_nodes)), [1.0]])
        if np.min(np.diff(t)) >= min_gap / 2:
            break
    vals = rng.uniform(0.0, amplitude, size=len(t))
    if monotone:
        vals = np.sort(vals)[::-1].copy()
    vals[-1] = 0.0
    return RadialProfile(t, vals)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def euclid2():
    return Gauge.euclidean(2)


@pytest.fixture(scope="session")
def unit_disk():
    return parse_domain("disk:1")


@pytest.fixture(scope="session")
def smooth_gauges():
    return [
        Gauge.euclidean(2),
        Gauge.pnorm(1.5, 2),
        Gauge.pnorm(4.0, 2),
        Gauge.quadratic([[4.0, 1.0], [1.0, 2.0]]),
        Gauge.quadratic([[4.0, 0.0], [0.0, 1.0]]),
    ]
