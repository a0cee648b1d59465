import numpy as np
import pytest


def f1d(x):
    """The oscillating 1-D benchmark target."""
    return np.exp(-1.4 * np.asarray(x)) * np.cos(3.5 * np.pi * np.asarray(x))


def random_spd(rng, n, scale=1.0):
    """A well-conditioned random SPD matrix."""
    Q = rng.normal(size=(n, n))
    return scale * (Q @ Q.T + n * np.eye(n))


def separated_points(rng, m, d, min_gap=0.04):
    """Random points in the unit cube with a minimum pairwise distance.

    Keeps kernel matrices away from the jitter ladder so interpolation
    tolerances are meaningful.  The gap shrinks automatically when the
    requested packing cannot fit.
    """
    gap = min(min_gap, 0.8 / m ** (1.0 / d))
    pts = []
    tries = 0
    while len(pts) < m:
        cand = rng.random(d)
        tries += 1
        if all(np.linalg.norm(cand - p) >= gap for p in pts):
            pts.append(cand)
            tries = 0
        elif tries > 2000:
            gap *= 0.7
            tries = 0
    return np.array(pts)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
