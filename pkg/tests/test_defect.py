import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from fnslab.defect import (
    EpsilonSweep,
    Mollifier,
    UnresolvedDefectWarning,
    defect_identity,
    defect_integral,
    defect_structure,
    defect_term,
    epsilon_ladder,
    epsilon_sweep,
    lebedev26,
    radial_rule,
    sphere_rule,
)
from fnslab.initial import random_band_limited, single_mode, taylor_green
from fnslab.norms import sobolev_ladder_norm
from fnslab.spectral import GridSpec, SpectralField

KERNELS = ["bump", "gaussian"]


class TestMollifier:
    @pytest.mark.parametrize("kernel", KERNELS)
    def test_unit_mass(self, kernel):
        assert Mollifier(0.3, kernel).mass() == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("kernel", KERNELS)
    def test_mass_by_adaptive_quadrature(self, kernel):
        m = Mollifier(1.0, kernel)
        val, _ = integrate.quad(lambda r: 4 * math.pi * r * r * m.profile(np.array(r)), 0, 1,
                                epsabs=1e-13, epsrel=1e-13, limit=200)
        assert val == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("kernel", KERNELS)
    def test_transform_at_zero_is_mass(self, kernel):
        assert Mollifier(1.0, kernel).transform(0.0) == pytest.approx(1.0, abs=1e-8)

    def test_transform_against_quadrature(self):
        m = Mollifier(1.0, "bump")
        for kappa in (0.5, 3.0, 11.0):
            val, _ = integrate.quad(lambda r: 4 * math.pi * r * r * m.profile(np.array(r))
                                    * np.sinc(kappa * r / math.pi), 0, 1, epsabs=1e-14, limit=200)
            assert m.transform(kappa) == pytest.approx(val, abs=1e-12)

    def test_edge_values(self):
        assert Mollifier(1.0, "bump").edge_value == 0.0
        g = Mollifier(1.0, "gaussian")
        assert g.edge_value == pytest.approx(g.profile(np.array([1 - 1e-12]))[0], rel=1e-9)

    @pytest.mark.parametrize("kwargs", [{"epsilon": 0.0}, {"epsilon": 0.1, "kernel": "box"}])
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            Mollifier(**kwargs)


class TestQuadratureRules:
    def test_lebedev_moments(self):
        pts, w = lebedev26()
        assert w.sum() == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
        x, y, z = pts.T
        assert w @ x**2 == pytest.approx(1 / 3, abs=1e-15)
        assert w @ x**4 == pytest.approx(1 / 5, abs=1e-15)
        assert w @ (x**2 * y**2) == pytest.approx(1 / 15, abs=1e-15)
        assert w @ (x**2 * y**2 * z**2) == pytest.approx(1 / 105, abs=1e-15)
        assert w @ (x**6) == pytest.approx(1 / 7, abs=1e-15)

    @pytest.mark.parametrize("n", [2, 4, 9])
    def test_sphere_rule_degree(self, n):
        pts, w = sphere_rule(n)
        x, y, z = pts.T
        deg = 2 * n - 1
        even = deg - deg % 2
        # average of z^{2j} over the sphere is 1 / (2j + 1)
        assert w @ z**even == pytest.approx(1 / (even + 1), abs=1e-14)
        if deg >= 4:
            assert w @ (x**2 * y**2) == pytest.approx(1 / 15, abs=1e-14)

    @pytest.mark.parametrize("kernel", KERNELS)
    @pytest.mark.parametrize("nodes", [3, 8])
    def test_radial_rule_moments(self, kernel, nodes):
        r, w = radial_rule(kernel, nodes)
        m = Mollifier(1.0, kernel)
        for j in range(2 * nodes):
            exact, _ = integrate.quad(lambda x: -m.dprofile(np.array(x)) * x * x * x**j, 0, 1,
                                      epsabs=1e-14, epsrel=1e-12, limit=200)
            assert w @ r**j == pytest.approx(exact, rel=1e-9, abs=1e-13)
        assert np.all(w > 0) and np.all((r > 0) & (r < 1))

    def test_radial_rule_bounds(self):
        with pytest.raises(ValueError):
            radial_rule("bump", 0)


class TestDefect:
    def test_zero_field(self, grid16):
        u = SpectralField(grid16, np.zeros((3, 16, 16, 16)), True)
        for method in ("identity", "structure"):
            assert not np.any(defect_term(u, Mollifier(1.0), method).values)

    @pytest.mark.parametrize("kernel", KERNELS)
    def test_single_mode_cross_check(self, grid16, kernel):
        u = single_mode(grid16, (1, 2, 0), 1.0, (0, 0, 1))
        m = Mollifier(1.0, kernel)
        a = defect_identity(u, m).on_grid(16)
        b = defect_structure(u, m).values
        assert np.max(np.abs(a - b)) < 1e-6

    @pytest.mark.parametrize("kernel", KERNELS)
    @pytest.mark.parametrize("seed", range(2))
    def test_random_cross_check(self, kernel, seed):
        g = GridSpec(8)
        u = random_band_limited(g, seed=seed)
        m = Mollifier(1.6, kernel)
        a = defect_identity(u, m).on_grid(8)
        b = defect_structure(u, m).values
        scale = sobolev_ladder_norm(u, 0) ** 1.5
        assert np.max(np.abs(a - b)) / scale < 1e-6

    def test_cubic_homogeneity(self, tg16):
        m = Mollifier(1.0)
        a = defect_identity(tg16, m).values
        b = defect_identity(tg16 * 2.0, m).values
        assert np.allclose(b, 8.0 * a, rtol=1e-12, atol=1e-14)

    def test_lebedev_option(self, tg16):
        res = defect_structure(tg16, Mollifier(1.0), radial_nodes=8, angular="lebedev26")
        assert res.values.shape == (16, 16, 16) and np.all(np.isfinite(res.values))

    def test_unresolved_flagged(self, tg16):
        with pytest.warns(UnresolvedDefectWarning):
            res = defect_identity(tg16, Mollifier(0.5))
        assert not res.resolved

    def test_unknown_method(self, tg16):
        with pytest.raises(ValueError):
            defect_term(tg16, Mollifier(1.0), "spectral")

    def test_defect_integral(self, tg16):
        res = defect_identity(tg16, Mollifier(1.0))
        assert defect_integral(res) == res.integral
        assert defect_integral(res, np.ones(res.values.shape)) == pytest.approx(res.integral)
        with pytest.raises(ValueError):
            defect_integral(res, np.ones((4, 4, 4)))

    def test_on_grid_needs_multiple(self, tg16):
        res = defect_identity(tg16, Mollifier(1.0), on_base=False)
        if res.size % 16:
            with pytest.raises(ValueError):
                res.on_grid(16)


class TestEpsilonSweep:
    def test_ladder(self):
        assert np.allclose(epsilon_ladder(1.0, 4), [1.0, 0.5, 0.25, 0.125])

    def test_slope_and_extrapolation_on_synthetic_data(self):
        eps = epsilon_ladder(1.0, 5)
        vals = 0.3 + 2.0 * eps**1.5
        sweep = EpsilonSweep("bump", eps, vals, np.ones(5, dtype=bool))
        assert sweep.extrapolate(order=1.5) == pytest.approx(0.3, rel=1e-12)
        pure = EpsilonSweep("bump", eps, 2.0 * eps**1.5, np.ones(5, dtype=bool))
        assert pure.slope() == pytest.approx(1.5, rel=1e-12)
        assert pure.slope_resolved() == pytest.approx(1.5, rel=1e-12)

    def test_extrapolation_needs_two_resolved(self):
        sweep = EpsilonSweep("bump", np.array([1.0, 0.5]), np.ones(2), np.array([True, False]))
        with pytest.raises(ValueError):
            sweep.extrapolate()

    def test_smooth_field_quadratic(self):
        g = GridSpec(32)
        u = taylor_green(g)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sweep = epsilon_sweep(u, [0.8, 0.4, 0.2, 0.08])
        assert sweep.slope() >= 1.9
