import math

import numpy as np
import pytest

from anisotm.gauge import (Gauge, GaugeError, WulffBall, aniso_perimeter,
                           parse_gauge, unit_ball_volume)


class TestValues:
    def test_euclidean_value(self):
        assert Gauge.euclidean(2).value([3.0, 4.0]) == pytest.approx(5.0)

    def test_max_norm_value(self):
        assert Gauge.pnorm(math.inf, 2).value([1.0, -2.0]) == pytest.approx(2.0)

    def test_quadratic_value(self):
        g = Gauge.quadratic([[4.0, 0.0], [0.0, 1.0]])
        assert g.value([1.0, 0.0]) == pytest.approx(2.0)

    def test_dimension_mismatch(self):
        with pytest.raises(GaugeError):
            Gauge.euclidean(2).value([1.0, 2.0, 3.0])

    def test_non_spd_matrix_rejected(self):
        with pytest.raises(GaugeError):
            Gauge.quadratic([[1.0, 2.0], [2.0, 1.0]])


class TestPolar:
    def test_euclidean_self_polar(self):
        assert Gauge.euclidean(2).polar([3.0, 4.0]) == pytest.approx(5.0)

    def test_max_norm_polar_is_l1(self):
        # K = {max-norm <= 1} is the side-2 square; support function = l1
        g = Gauge.pnorm(math.inf, 2)
        assert g.polar([1.0, -2.0]) == pytest.approx(3.0)

    def test_max_norm_polar_brute_force(self, rng):
        # sup over dense samples of the square K of <x, xi>
        g = Gauge.pnorm(math.inf, 2)
        s = np.linspace(-1, 1, 201)
        XX, YY = np.meshgrid(s, s)
        K = np.stack([XX.ravel(), YY.ravel()], axis=-1)
        for x in rng.normal(size=(20, 2)):
            brute = np.max(K @ x)
            assert g.polar(x) == pytest.approx(brute, rel=1e-9)

    def test_quadratic_polar(self):
        g = Gauge.quadratic([[4.0, 0.0], [0.0, 1.0]])
        assert g.polar([1.0, 0.0]) == pytest.approx(0.5)

    def test_polytope_square_polar(self):
        g = Gauge.polytope([[1, 1], [-1, 1], [-1, -1], [1, -1]])
        assert g.polar([1.0, -2.0]) == pytest.approx(3.0)


class TestGradients:
    def test_euclidean_grad(self):
        np.testing.assert_allclose(Gauge.euclidean(2).grad([3.0, 4.0]),
                                   [0.6, 0.8], rtol=1e-12)

    def test_quadratic_grad(self):
        g = Gauge.quadratic([[4.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(g.grad([1.0, 0.0]), [2.0, 0.0], rtol=1e-12)

    def test_p4_grad(self):
        g = Gauge.pnorm(4.0, 2)
        np.testing.assert_allclose(g.grad([1.0, 1.0]),
                                   [2 ** -0.75, 2 ** -0.75], rtol=1e-12)

    def test_grad_at_origin_raises(self):
        with pytest.raises(GaugeError):
            Gauge.euclidean(2).grad([0.0, 0.0])

    def test_polytope_grad_euler(self):
        g = Gauge.polytope([[1, 0], [0.5, 1], [-0.5, 1], [-1, 0],
                            [-0.5, -1], [0.5, -1]])
        x = np.array([0.3, 0.7])
        gr = g.grad(x)
        assert float(x @ gr) == pytest.approx(float(g.value(x)), rel=1e-12)


class TestInvariants:
    N_POINTS = 200

    def test_homogeneity(self, smooth_gauges, rng):
        for g in smooth_gauges:
            x = rng.normal(size=(self.N_POINTS, 2))
            t = rng.uniform(-3, 3, size=self.N_POINTS)
            f = g.value(x)
            err = np.abs(g.value(x * t[:, None]) - np.abs(t) * f)
            assert np.all(err <= 1e-10 * np.maximum(f, 1e-12))

    def test_polarity_involution(self, smooth_gauges, rng):
        # polar of the polar recovers the gauge (brute-force dual evaluation)
        th = np.linspace(0, 2 * math.pi, 32768, endpoint=False)
        circle = np.stack([np.cos(th), np.sin(th)], axis=-1)
        for g in smooth_gauges:
            dual_sphere = circle / g.polar(circle)[:, None]  # dense {F°=1}
            x = rng.normal(size=(self.N_POINTS, 2))
            bipolar = np.max(x @ dual_sphere.T, axis=1)
            np.testing.assert_allclose(bipolar, g.value(x), rtol=1e-6)

    def test_gradient_duality(self, smooth_gauges, rng):
        for g in smooth_gauges:
            x = rng.normal(size=(self.N_POINTS, 2))
            x = x[g.value(x) > 1e-6]
            assert np.max(np.abs(g.polar(g.grad(x)) - 1.0)) < 1e-8
            assert np.max(np.abs(g.value(g.grad(x, polar=True)) - 1.0)) < 1e-8

    def test_euler_identity(self, smooth_gauges, rng):
        for g in smooth_gauges:
            x = rng.normal(size=(self.N_POINTS, 2))
            x = x[g.value(x) > 1e-6]
            f = g.value(x)
            err = np.abs(np.einsum("ij,ij->i", x, g.grad(x)) - f)
            assert np.all(err <= 1e-8 * f)

    def test_isoperimetric_on_random_convex_polygons(self, smooth_gauges, rng):
        for trial in range(100):
            g = smooth_gauges[trial % len(smooth_gauges)]
            m = rng.integers(3, 12)
            th = np.sort(rng.uniform(0, 2 * math.pi, size=m))
            if len(np.unique(th)) < 3:
                continue
            r = rng.uniform(0.3, 2.0)
            verts = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1) \
                + rng.normal(scale=0.1, size=2)
            hull_area = 0.5 * abs(np.dot(verts[:, 0], np.roll(verts[:, 1], -1))
                                  - np.dot(verts[:, 1], np.roll(verts[:, 0], -1)))
            if hull_area < 1e-3:
                continue
            per = aniso_perimeter(verts, g)
            bound = 2 * math.sqrt(g.kappa()) * math.sqrt(hull_area)
            assert per >= bound - 1e-9


class TestKappa:
    def test_euclidean(self):
        assert Gauge.euclidean(2).kappa() == pytest.approx(math.pi, rel=1e-12)

    def test_max_norm_analytic_and_grid(self):
        g = Gauge.pnorm(math.inf, 2)
        assert g.kappa() == pytest.approx(2.0, rel=1e-12)
        # brute-force cell count of {|x|_1 <= 1}
        s = np.linspace(-1, 1, 2001)
        XX, YY = np.meshgrid(s, s)
        frac = np.mean(np.abs(XX) + np.abs(YY) <= 1.0)
        assert g.kappa() == pytest.approx(frac * 4.0, rel=2e-3)

    def test_quadratic_ellipse(self):
        g = Gauge.quadratic([[4.0, 0.0], [0.0, 1.0]])
        assert g.kappa() == pytest.approx(2 * math.pi, rel=1e-12)

    def test_polytope_square(self):
        g = Gauge.polytope([[1, 1], [-1, 1], [-1, -1], [1, -1]])
        assert g.kappa() == pytest.approx(2.0, rel=1e-12)

    def test_euclidean_3d(self):
        assert Gauge.euclidean(3).kappa() == pytest.approx(
            unit_ball_volume(3), rel=1e-12)


class TestPerimeter:
    def test_unit_square(self, euclid2):
        sq = [[0, 0], [1, 0], [1, 1], [0, 1]]
        assert aniso_perimeter(sq, euclid2) == pytest.approx(4.0)

    def test_triangle_with_isoperimetric_bound(self, euclid2):
        tri = [[0, 0], [1, 0], [0, 1]]
        per = aniso_perimeter(tri, euclid2)
        assert per == pytest.approx(2 + math.sqrt(2), rel=1e-12)
        assert per >= 2 * math.sqrt(math.pi) * math.sqrt(0.5)

    def test_fine_polygon_limit(self, euclid2):
        th = np.linspace(0, 2 * math.pi, 4096, endpoint=False)
        poly = np.stack([np.cos(th), np.sin(th)], axis=-1)
        assert aniso_perimeter(poly, euclid2) == pytest.approx(
            2 * math.pi, rel=1e-4)

    def test_wulff_shape_equality_case(self):
        # perimeter of a fine Wulff-shape discretization meets the bound
        g = Gauge.quadratic([[2.0, 0.5], [0.5, 1.0]])
        th = np.linspace(0, 2 * math.pi, 4096, endpoint=False)
        circle = np.stack([np.cos(th), np.sin(th)], axis=-1)
        wulff = circle / g.polar(circle)[:, None]
        per = aniso_perimeter(wulff, g)
        area = 0.5 * abs(np.dot(wulff[:, 0], np.roll(wulff[:, 1], -1))
                         - np.dot(wulff[:, 1], np.roll(wulff[:, 0], -1)))
        bound = 2 * math.sqrt(g.kappa()) * math.sqrt(area)
        assert per == pytest.approx(bound, rel=1e-3)

    def test_self_intersecting_rejected(self, euclid2):
        bow = [[0, 0], [1, 1], [1, 0], [0, 1]]
        with pytest.raises(GaugeError):
            aniso_perimeter(bow, euclid2)


class TestWulffBall:
    def test_membership_and_volume(self):
        g = Gauge.quadratic([[4.0, 0.0], [0.0, 1.0]])
        ball = WulffBall(g, [0.5, 0.5], 0.7)
        assert ball.contains([0.5, 0.5])
        assert ball.volume() == pytest.approx(g.kappa() * 0.7 ** 2, rel=1e-12)


class TestParse:
    @pytest.mark.parametrize("spec", [
        "euclidean", "pnorm:3", "pnorm:inf", "quadratic:4,1,2",
        "polytope:1,1;-1,1;-1,-1;1,-1",
    ])
    def test_round_trip(self, spec, rng):
        g = parse_gauge(spec)
        g2 = parse_gauge(g.spec_string())
        x = rng.normal(size=(50, 2))
        np.testing.assert_allclose(g.value(x), g2.value(x), rtol=1e-12)

    def test_unknown_rejected(self):
        with pytest.raises(GaugeError):
            parse_gauge("mystery:1")

    def test_asymmetric_polytope_rejected(self):
        with pytest.raises(GaugeError):
            parse_gauge("polytope:1,0;0,1;-1,-0.5")
