import math

import numpy as np
import pytest

from fnslab.initial import (
    InitialSpec,
    lacunary,
    make_initial,
    random_band_limited,
    single_mode,
    taylor_green,
)
from fnslab.norms import sobolev_ladder_norm
from fnslab.spectral import GridSpec, to_physical


def well_formed(u):
    return u.check_hermitian() and u.check_divergence_free() and u.mean_free and u.divergence_free


class TestGenerators:
    def test_taylor_green_samples(self, grid16):
        x, y, z = grid16.points()
        u = to_physical(taylor_green(grid16, 2.0).coeffs)
        assert np.allclose(u[0], 2 * np.sin(x) * np.cos(y) * np.cos(z), atol=1e-14)
        assert np.allclose(u[1], -2 * np.cos(x) * np.sin(y) * np.cos(z), atol=1e-14)
        assert np.max(np.abs(u[2])) < 1e-15

    def test_taylor_green_energy(self, tg16):
        # |u|^2 averages to 1/4 over the torus
        assert sobolev_ladder_norm(tg16, 0) == pytest.approx(0.25 * (2 * math.pi) ** 3, rel=1e-14)

    def test_single_mode_coefficients(self, grid16):
        u = single_mode(grid16, (1, 2, 0), 3.0, (0.0, 0.0, 1.0))
        assert u.coeff((1, 2, 0), 2) == pytest.approx(1.5)
        assert u.coeff((-1, -2, 0), 2) == pytest.approx(1.5)
        assert np.count_nonzero(u.coeffs) == 2

    def test_single_mode_polarization_projected(self, grid16):
        u = single_mode(grid16, (1, 0, 0), 1.0, (1.0, 1.0, 0.0))
        assert u.coeff((1, 0, 0), 0) == 0
        assert u.coeff((1, 0, 0), 1) == pytest.approx(0.5)

    @pytest.mark.parametrize("mode, pol", [((0, 0, 0), (0, 1, 0)), ((1, 0, 0), (2, 0, 0)),
                                           ((6, 0, 0), (0, 1, 0))])
    def test_single_mode_rejections(self, grid16, mode, pol):
        with pytest.raises(ValueError):
            single_mode(grid16, mode, 1.0, pol)

    @pytest.mark.parametrize("seed", range(3))
    def test_random_fields_well_formed(self, grid16, seed):
        assert well_formed(random_band_limited(grid16, seed=seed))

    def test_random_is_seeded(self, grid16):
        a, b = random_band_limited(grid16, seed=7), random_band_limited(grid16, seed=7)
        assert np.array_equal(a.coeffs, b.coeffs)
        assert not np.array_equal(a.coeffs, random_band_limited(grid16, seed=8).coeffs)

    def test_random_band_respected(self, grid16):
        u = random_band_limited(grid16, seed=1, kmin=2.0, kmax=3.0)
        kmag = grid16.kmag[np.any(u.coeffs != 0, axis=0)]
        assert kmag.min() >= 2.0 and kmag.max() <= 3.0

    def test_random_energy_normalisation(self, grid16):
        u = random_band_limited(grid16, seed=1, energy=2.5)
        assert sobolev_ladder_norm(u, 0) == pytest.approx(2.5, rel=1e-13)

    def test_random_spectrum_slope(self):
        g = GridSpec(32)
        u = random_band_limited(g, seed=0, slope=5 / 3)
        kint = np.rint(g.kmag).astype(int)
        power = np.sum(np.abs(u.coeffs) ** 2, axis=0)
        shells = np.arange(2, 10)
        e = np.array([power[kint == k].sum() for k in shells])
        slope = np.polyfit(np.log(shells), np.log(e), 1)[0]
        assert slope == pytest.approx(-5 / 3, abs=0.3)

    def test_lacunary_well_formed(self):
        assert well_formed(lacunary(GridSpec(64), 0.4, 5))

    def test_lacunary_octave_shells(self):
        g = GridSpec(64)
        u = lacunary(g, 0.4, 5, seed=2)
        kmag = g.kmag[np.any(np.abs(u.coeffs) > 1e-12, axis=0)]
        assert set(np.round(kmag, 12)) == {1.0, 2.0, 4.0, 8.0, 16.0}

    def test_lacunary_rejects_out_of_band(self):
        with pytest.raises(ValueError):
            lacunary(GridSpec(32), 0.4, 5)


class TestMakeInitial:
    @pytest.mark.parametrize("kind", InitialSpec.KINDS)
    def test_every_kind(self, grid16, kind):
        spec = InitialSpec(kind=kind, octaves=3)
        u = make_initial(grid16, spec)
        assert u.divergence_free and u.mean_free

    def test_zero(self, grid16):
        assert not np.any(make_initial(grid16, InitialSpec(kind="zero")).coeffs)

    def test_amplitude_scales_random(self, grid16):
        a = make_initial(grid16, InitialSpec(kind="random", amplitude=1.0, seed=4))
        b = make_initial(grid16, InitialSpec(kind="random", amplitude=3.0, seed=4))
        assert np.allclose(b.coeffs, 3.0 * a.coeffs, rtol=1e-15, atol=0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            InitialSpec(kind="vortex-ring")
