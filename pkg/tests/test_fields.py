import math

import numpy as np
import pytest

from anisotm.fields import (PolygonDomain, RadialProfile, SampledField,
                            WulffBallDomain, parse_domain,
                            random_smooth_field)
from anisotm.gauge import Gauge


class TestDomains:
    def test_disk_area(self):
        dom = parse_domain("disk:1")
        fld = SampledField.from_domain(dom, 1 / 64)
        assert fld.total_area() == pytest.approx(math.pi, rel=1e-3)

    def test_rect_parse_and_area(self):
        dom = parse_domain("rect:0,0,2,0.5")
        assert dom.area() == pytest.approx(1.0)
        fld = SampledField.from_domain(dom, 1 / 64)
        assert fld.total_area() == pytest.approx(1.0, rel=1e-3)

    def test_polygon_membership(self):
        dom = PolygonDomain([[0, 0], [2, 0], [2, 1], [0, 1]])
        assert dom.inside(np.array([[1.0, 0.5]]))[0]
        assert not dom.inside(np.array([[3.0, 0.5]]))[0]
        assert dom.area() == pytest.approx(2.0)

    def test_wulff_domain(self):
        g = Gauge.quadratic([[4.0, 0.0], [0.0, 1.0]])
        dom = WulffBallDomain(g, [0, 0], 0.5)
        assert dom.area() == pytest.approx(g.kappa() * 0.25, rel=1e-12)
        fld = SampledField.from_domain(dom, 1 / 128)
        assert fld.total_area() == pytest.approx(dom.area(), rel=1e-3)

    def test_transformed_domain(self):
        dom = parse_domain("disk:1")
        T = np.array([[0.5, 0.0], [0.0, 1.0]])
        td = dom.transformed(T)
        assert td.inside(np.array([[0.45, 0.0]]))[0]
        assert not td.inside(np.array([[0.55, 0.0]]))[0]
        assert td.area() == pytest.approx(math.pi * 0.5, rel=1e-12)


class TestSampledField:
    def test_gradient_of_linear_function(self):
        dom = parse_domain("rect:0,0,1,1")
        fld = SampledField.from_domain(dom, 1 / 50,
                                       fn=lambda p: 3.0 * p[:, 0] - 2.0 * p[:, 1])
        gx, gy = fld.gradient()
        assert np.nanmax(np.abs(gx[fld.mask] - 3.0)) < 1e-9
        assert np.nanmax(np.abs(gy[fld.mask] + 2.0)) < 1e-9

    def test_integrate(self):
        dom = parse_domain("rect:0,0,1,1")
        fld = SampledField.from_domain(dom, 1 / 100, fn=lambda p: p[:, 0])
        assert fld.integrate() == pytest.approx(0.5, rel=1e-4)

    def test_csv_round_trip(self, tmp_path):
        dom = parse_domain("disk:0.8")
        fld = random_smooth_field(dom, 1 / 32, seed=7)
        path = tmp_path / "field.csv"
        fld.to_csv(path)
        back = SampledField.from_csv(path)
        assert back.mask.sum() == fld.mask.sum()
        np.testing.assert_allclose(np.sort(back.values[back.mask]),
                                   np.sort(fld.values[fld.mask]), rtol=1e-12)

    def test_interpolate(self):
        dom = parse_domain("rect:0,0,1,1")
        fld = SampledField.from_domain(dom, 1 / 64,
                                       fn=lambda p: p[:, 0] + p[:, 1])
        pts = np.array([[0.3, 0.4], [0.51, 0.22]])
        np.testing.assert_allclose(fld.interpolate(pts), [0.7, 0.73],
                                   atol=1e-12)


class TestRadialProfile:
    def test_energy_cone(self):
        prof = RadialProfile([0.0, 1.0], [1.0, 0.0])
        # 2 pi int_0^1 1 * t dt = pi for n = 2
        assert prof.energy(2, math.pi) == pytest.approx(math.pi, rel=1e-14)

    def test_zero_trace_enforced(self):
        with pytest.raises(ValueError):
            RadialProfile([0.0, 1.0], [1.0, 0.5])
        RadialProfile([0.0, 1.0], [1.0, 0.5], allow_nonzero_trace=True)

    def test_nodes_must_increase(self):
        with pytest.raises(ValueError):
            RadialProfile([0.0, 0.5, 0.5, 1.0], [1, 1, 1, 0])

    def test_csv_round_trip(self, tmp_path):
        prof = RadialProfile([0.0, 0.3, 1.0], [2.0, 1.0, 0.0])
        path = tmp_path / "prof.csv"
        prof.to_csv(path)
        back = RadialProfile.from_csv(path)
        np.testing.assert_allclose(back.nodes, prof.nodes, rtol=1e-15)
        np.testing.assert_allclose(back.values, prof.values, rtol=1e-15)

    def test_call_interpolates(self):
        prof = RadialProfile([0.0, 0.5, 1.0], [2.0, 1.0, 0.0])
        assert prof(0.25) == pytest.approx(1.5)
        assert prof(0.75) == pytest.approx(0.5)


class TestRandomField:
    def test_seed_reproducible(self):
        dom = parse_domain("disk:1")
        a = random_smooth_field(dom, 1 / 32, seed=3)
        b = random_smooth_field(dom, 1 / 32, seed=3)
        np.testing.assert_array_equal(a.values[a.mask], b.values[b.mask])

    def test_boundary_clearance(self):
        dom = parse_domain("disk:1")
        fld = random_smooth_field(dom, 1 / 64, seed=5, boundary_clearance=0.15)
        pts = fld.cell_centers()
        rim = np.linalg.norm(pts, axis=1) > 0.97
        assert np.max(np.abs(fld.values[fld.mask][rim])) < 1e-10
