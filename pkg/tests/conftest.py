import numpy as np
import pytest

from mfl_lab import build_grid, normalize, uniform_density

TWO_PI = 2.0 * np.pi


@pytest.fixture
def circle64():
    return build_grid(1, 64, TWO_PI)


@pytest.fixture
def circle128():
    return build_grid(1, 128, TWO_PI)


@pytest.fixture
def circle256():
    return build_grid(1, 256, TWO_PI)


@pytest.fixture
def torus16():
    return build_grid(2, 16, TWO_PI)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cos_density256(circle256):
    return normalize(circle256, np.exp(-np.cos(circle256.axis_coords())))


@pytest.fixture
def uniform256(circle256):
    return uniform_density(circle256)


def random_smooth_density(grid, rng, amp=0.4, max_mode=3):
    """Random log-density from a handful of low Fourier modes."""
    x = grid.coords()
    pot = np.zeros(grid.shape)
    for _ in range(max_mode):
        w = rng.integers(-max_mode, max_mode + 1, size=grid.dim)
        if not np.any(w):
            continue
        phase = rng.uniform(0, TWO_PI)
        pot += rng.normal(0, amp) * np.cos(np.tensordot(w.astype(float), x, axes=(0, 0)) + phase)
    return normalize(grid, np.exp(pot))


def random_mean_zero(grid, nu, rng):
    """Random node field projected to zero nu-mean."""
    f = rng.normal(size=grid.shape)
    from mfl_lab import integrate
    return f - integrate(grid, f, nu.values)
