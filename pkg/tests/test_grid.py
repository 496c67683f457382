import numpy as np
import pytest

from mfl_lab import (build_grid, face_difference, gradient, inner, integrate,
                     normalize, uniform_density, weighted_divergence)

TWO_PI = 2.0 * np.pi


class TestBuildGrid:
    def test_spacing(self):
        g = build_grid(1, 8, TWO_PI)
        assert g.spacing == pytest.approx(np.pi / 4)
        assert g.spacing * g.n == pytest.approx(g.period, abs=0)

    def test_node_count_2d(self):
        g = build_grid(2, 16, TWO_PI)
        assert g.size == 256
        assert g.shape == (16, 16)

    @pytest.mark.parametrize("dim,n,period", [(3, 16, 1.0), (0, 16, 1.0),
                                              (1, 7, 1.0), (1, 16, 0.0),
                                              (1, 16, -2.0)])
    def test_rejects_bad_inputs(self, dim, n, period):
        with pytest.raises(ValueError):
            build_grid(dim, n, period)

    def test_coords_wrap(self):
        g = build_grid(1, 8, TWO_PI)
        x = g.axis_coords()
        assert x[0] == 0.0
        assert x[-1] == pytest.approx(g.period - g.spacing)


class TestGradient:
    def test_constant_field(self, circle128):
        f = np.full(circle128.shape, 3.7)
        assert np.max(np.abs(gradient(circle128, f))) == 0.0

    def test_sin_derivative(self):
        g = build_grid(1, 256, TWO_PI)
        x = g.axis_coords()
        err = np.max(np.abs(gradient(g, np.sin(x))[0] - np.cos(x)))
        assert err < 1.5e-4  # O(h^2): h^2/6 at h ~ 0.025

    def test_cos_2x_derivative(self):
        g = build_grid(1, 256, TWO_PI)
        x = g.axis_coords()
        err = np.max(np.abs(gradient(g, np.cos(2 * x))[0] + 2 * np.sin(2 * x)))
        assert err < 1e-3

    def test_second_order_convergence(self):
        errs = []
        for n in (64, 128, 256):
            g = build_grid(1, n, TWO_PI)
            x = g.axis_coords()
            errs.append(np.max(np.abs(gradient(g, np.sin(x))[0] - np.cos(x))))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders >= 1.9)

    def test_2d_components(self, torus16):
        xy = torus16.coords()
        f = np.sin(xy[0]) * np.cos(xy[1])
        d = gradient(torus16, f)
        assert np.max(np.abs(d[0] - np.cos(xy[0]) * np.cos(xy[1]))) < 0.03
        assert np.max(np.abs(d[1] + np.sin(xy[0]) * np.sin(xy[1]))) < 0.03

    def test_shape_mismatch(self, circle128):
        with pytest.raises(ValueError):
            gradient(circle128, np.zeros(5))


class TestWeightedDivergence:
    def test_zero_field(self, circle128):
        nu = uniform_density(circle128)
        out = weighted_divergence(circle128, nu.values, np.zeros((1,) + circle128.shape))
        assert np.max(np.abs(out)) == 0.0

    def test_uniform_constant_flux(self, circle128):
        nu = uniform_density(circle128)
        phi = np.full((1,) + circle128.shape, 2.5)
        out = weighted_divergence(circle128, nu.values, phi)
        assert np.max(np.abs(out)) < 1e-13

    def test_integrates_to_zero(self, circle128, rng):
        nu = normalize(circle128, np.exp(np.sin(circle128.axis_coords())))
        for _ in range(5):
            phi = rng.normal(size=(1,) + circle128.shape)
            total = integrate(circle128, weighted_divergence(circle128, nu.values, phi),
                              nu.values)
            assert abs(total) < 1e-12

    def test_rejects_nonpositive_density(self, circle128):
        bad = np.ones(circle128.shape)
        bad[3] = 0.0
        with pytest.raises(ValueError):
            weighted_divergence(circle128, bad, np.ones((1,) + circle128.shape))


class TestAdjointness:
    def test_1d(self, circle128, rng):
        nu = normalize(circle128, np.exp(np.cos(circle128.axis_coords())))
        for _ in range(10):
            f = rng.normal(size=circle128.shape)
            phi = rng.normal(size=(1,) + circle128.shape)
            lhs = inner(circle128, gradient(circle128, f), phi, nu.values)
            rhs = -inner(circle128, f,
                         weighted_divergence(circle128, nu.values, phi), nu.values)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    def test_2d(self, torus16, rng):
        xy = torus16.coords()
        nu = normalize(torus16, np.exp(0.5 * np.cos(xy[0]) + 0.3 * np.sin(xy[1])))
        for _ in range(5):
            f = rng.normal(size=torus16.shape)
            phi = rng.normal(size=(2,) + torus16.shape)
            lhs = inner(torus16, gradient(torus16, f), phi, nu.values)
            rhs = -inner(torus16, f, weighted_divergence(torus16, nu.values, phi), nu.values)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


class TestIntegrate:
    def test_density_mass(self, circle128):
        nu = normalize(circle128, np.exp(-np.cos(circle128.axis_coords())))
        assert integrate(circle128, np.ones(circle128.shape), nu.values) == pytest.approx(1.0, abs=1e-12)

    def test_lebesgue_period(self, circle128):
        assert integrate(circle128, np.ones(circle128.shape)) == pytest.approx(TWO_PI, abs=1e-12)

    def test_full_period_cosine(self):
        g = build_grid(1, 64, TWO_PI)
        assert abs(integrate(g, np.cos(g.axis_coords()))) < 1e-12


def test_face_difference_is_exact_on_increments(circle128):
    f = np.sin(circle128.axis_coords())
    d = face_difference(circle128, f)[0]
    manual = (np.roll(f, -1) - f) / circle128.spacing
    assert np.array_equal(d, manual)
