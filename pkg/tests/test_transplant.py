import math

import numpy as np
import pytest

from anisotm.constants import concentration_level
from anisotm.fields import RadialProfile
from anisotm.functionals import FunctionalSpec, tm_functional
from anisotm.green import green_disk_images, green_wulff_ball
from anisotm.transplant import dirichlet_energy, mass_comparison, transplant


from conftest import random_profile


def _random_profile(rng, nodes=10, monotone=True):
    return random_profile(rng, interior_nodes=nodes, amplitude=1.5,
                          monotone=monotone)


@pytest.fixture(scope="module")
def offset_green():
    return green_disk_images([0.5, 0.0], h=1 / 256)


class TestTransplantMap:
    def test_ball_to_itself_is_radial_composition(self, euclid2):
        gb = green_wulff_ball(euclid2, [0, 0], 1.0)
        prof = RadialProfile([0.0, 0.4, 1.0], [1.2, 0.5, 0.0])
        u = transplant(prof, gb, h=1 / 64)
        pts = np.array([[0.3, 0.1], [-0.2, 0.5], [0.0, 0.9]])
        expected = prof(np.linalg.norm(pts, axis=1))
        np.testing.assert_allclose(u.evaluate(pts), expected, rtol=1e-12)

    def test_zero_profile_gives_zero(self, offset_green):
        prof = RadialProfile([0.0, 1.0], [0.0, 0.0])
        u = transplant(prof, offset_green, h=1 / 64)
        assert np.max(np.abs(u.samples.values[u.samples.mask])) == 0.0

    def test_nonzero_trace_rejected(self, offset_green):
        prof = RadialProfile([0.0, 1.0], [1.0, 0.5], allow_nonzero_trace=True)
        with pytest.raises(ValueError):
            transplant(prof, offset_green)

    def test_level_set_area_matches_green_superlevel(self, offset_green):
        # {u > U(s)} = {h < s} = {G > Gamma-level}; compare cell areas
        gf = offset_green
        prof = RadialProfile([0.0, 1.0], [1.0, 0.0])  # U = 1 - t, invertible
        h = 1 / 256
        u = transplant(prof, gf, h=h)
        fld = u.samples
        pts = fld.cell_centers()
        areas = fld.areas[fld.mask]
        G = gf.G_at(pts)
        for s in (0.3, 0.6, 0.85):
            g_level = -math.log(1.0 - s) / (2 * math.pi)
            a_u = float(np.sum(areas[u.evaluate(pts) > s]))
            a_g = float(np.sum(areas[G > g_level]))
            rho_level = gf.rho * (1.0 - s)
            cell_layer = 2 * math.pi * rho_level * h
            assert abs(a_u - a_g) <= cell_layer + 1e-12


class TestDirichletEnergy:
    def test_cone_on_unit_disk(self, euclid2):
        gb = green_wulff_ball(euclid2, [0, 0], 1.0)
        prof = RadialProfile([0.0, 1.0], [1.0, 0.0])
        u = transplant(prof, gb, h=1 / 256)
        assert dirichlet_energy(u, euclid2, p=2) == pytest.approx(
            math.pi, rel=1e-3)

    def test_scaling_homogeneity(self, offset_green, euclid2, rng):
        prof = _random_profile(rng)
        u1 = transplant(prof, offset_green, h=1 / 128)
        u3 = transplant(prof.scaled(3.0), offset_green, h=1 / 128)
        e1 = dirichlet_energy(u1, euclid2, p=2)
        e3 = dirichlet_energy(u3, euclid2, p=2)
        assert e3 == pytest.approx(9.0 * e1, rel=1e-12)

    def test_energy_identity_offset_disk(self, offset_green, euclid2, rng):
        prof = _random_profile(rng, nodes=8)
        u = transplant(prof, offset_green, h=1 / 256)
        e_omega = dirichlet_energy(u, euclid2, p=2)
        e_ball = prof.energy(2, math.pi)
        assert e_omega == pytest.approx(e_ball, rel=1e-2)

    def test_energy_identity_refinement(self, offset_green, euclid2):
        # the conformal-energy identity error shrinks under refinement
        rng = np.random.default_rng(7)
        profs = [_random_profile(rng, monotone=(k % 2 == 0)) for k in range(10)]
        errs = {}
        for h in (1 / 128, 1 / 256):
            worst = []
            for prof in profs:
                u = transplant(prof, offset_green, h=h)
                e_omega = dirichlet_energy(u, euclid2, p=2)
                worst.append(abs(e_omega / prof.energy(2, math.pi) - 1.0))
            errs[h] = np.mean(worst)
        assert errs[1 / 256] < 0.7 * errs[1 / 128]

    def test_p_out_of_range(self, offset_green, euclid2, rng):
        u = transplant(_random_profile(rng), offset_green, h=1 / 64)
        with pytest.raises(ValueError):
            dirichlet_energy(u, euclid2, p=3.0)


class TestMassComparison:
    def test_ball_to_itself_equality(self, euclid2):
        gb = green_wulff_ball(euclid2, [0, 0], 1.0)
        prof = RadialProfile([0.0, 0.5, 1.0], [1.0, 0.6, 0.0])
        rec = mass_comparison(prof, gb, lambda u: u ** 2, h=1 / 256)
        assert rec["omega_integral"] == pytest.approx(
            rec["ball_integral"], rel=1e-3)

    def test_offset_disk_strict_gain(self, offset_green, rng):
        prof = _random_profile(rng, nodes=6)
        rec = mass_comparison(prof, offset_green, lambda u: u ** 2, h=1 / 128)
        assert rec["gap"] >= -1e-4 * max(rec["ball_integral"], 1.0)
        assert rec["gap"] > 0

    def test_zero_map(self, offset_green):
        prof = RadialProfile([0.0, 1.0], [1.0, 0.0])
        rec = mass_comparison(prof, offset_green, lambda u: 0.0 * u, h=1 / 64)
        assert rec["omega_integral"] == 0.0
        assert rec["ball_integral"] == 0.0


class TestConcentrationWitness:
    def test_transplanted_cap_profiles_witness_the_level(self, offset_green,
                                                         euclid2):
        # lower-bound witness: transplanting concentrating radial profiles
        # through the offset-disk Green pushes the functional above
        # (1 - delta) * rho^n * kappa * e^{sum 1/k}
        from anisotm.green import green_wulff_ball
        from anisotm.sequences import build_psi
        gb = green_wulff_ball(euclid2, [0, 0], 1.0)
        spec = FunctionalSpec(n=2, kappa=math.pi)
        target = concentration_level(math.pi, offset_green.rho, 2, 0.0)
        psi = build_psi(gb, 1e-3)
        t = np.concatenate([[0.0], np.geomspace(1e-6, 1.0, 4000)])
        prof = RadialProfile(t, np.maximum(psi.evaluate(
            np.stack([t, np.zeros_like(t)], axis=-1)), 0.0),
            allow_nonzero_trace=True)
        vals = prof.values.copy()
        vals[-1] = 0.0
        prof = RadialProfile(t, vals)
        u = transplant(prof, offset_green, h=1 / 256)
        phi = tm_functional(u, spec, gauge=euclid2)
        assert phi >= (1 - 5e-2) * target
