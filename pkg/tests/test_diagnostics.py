"""Curvature, torsion, frame recovery, energy and error metrics."""

import numpy as np
import pytest

from filamentlab.diagnostics import (CurvatureProfile, curvature_error,
                                     curvature_from_T, curvature_from_z,
                                     energy_trapezoid, frame_from_z,
                                     staggered_dirichlet_energy,
                                     torsion_from_z)
from filamentlab.errors import FrameDegenerate
from filamentlab.geometry import Metric, dot_pm, stereo_inverse
from filamentlab.profiles import (SelfSimilarParams, integrate_frenet_profile,
                                  integrate_profile_z, z_second_derivative)

E, H = Metric.EUCLIDEAN, Metric.HYPERBOLIC


class TestCurvatureFromT:
    def test_constant_field(self):
        T = np.tile([0.0, 0.0, 1.0], (21, 1))
        prof = curvature_from_T(T, 0.1, E)
        assert np.abs(prof.c).max() == 0.0

    def test_great_circle(self):
        # T(s) = (cos s, sin s, 0): curvature 1, O(ds^2) measurement
        ds = 0.01
        s = np.arange(-200, 201) * ds
        T = np.column_stack([np.cos(s), np.sin(s), np.zeros_like(s)])
        prof = curvature_from_T(T, ds, E)
        assert np.abs(prof.c[1:-1] - 1.0).max() < 5e-5
        assert np.abs(prof.c[[0, -1]] - 1.0).max() < 5e-4  # one-sided ends

    def test_exact_profile(self):
        p = SelfSimilarParams(c0=0.2, t=1.0, metric=E)
        fp = integrate_frenet_profile(p, L=4.0, ds=0.01)
        prof = curvature_from_T(fp.T, 0.01, E)
        assert np.abs(prof.c - 0.2).max() < 1e-4

    def test_hyperbolic_clamp_flag(self):
        # nearly-null differences can round negative under the signed form
        T = np.tile([0.0, 0.0, 1.0], (5, 1))
        T[2] = [1e-9, 0.0, 1.0 + 1e-9]
        prof = curvature_from_T(T, 0.1, H)
        assert prof.clamped >= 0  # no error raised, flags recorded
        assert np.all(prof.c >= 0.0)


class TestCurvatureFromZ:
    def test_flat_profile(self):
        z = np.zeros(11, dtype=complex)
        zs = np.full(11, 0.1 + 0.0j)
        prof = curvature_from_z(z, zs, E)
        assert np.abs(prof.c - 0.2).max() < 1e-15

    def test_exact_profile_law(self):
        p = SelfSimilarParams(c0=0.2, t=0.25, metric=E)
        zp = integrate_profile_z(p, L=5.0, ds=0.01)
        prof = curvature_from_z(zp.values, zp.deriv, E, s=zp.s, t=0.25)
        assert np.abs(prof.c - 0.4).max() < 1e-5

    def test_consistency_with_T_route(self):
        p = SelfSimilarParams(c0=0.3, t=1.0, metric=E)
        zp = integrate_profile_z(p, L=5.0, ds=0.01)
        T = stereo_inverse(zp.values, E)
        prof_T = curvature_from_T(T, 0.01, E)
        prof_z = curvature_from_z(zp.values, zp.deriv, E, s=zp.s)
        assert np.abs(prof_T.c[1:-1] - prof_z.c[1:-1]).max() < 5e-4


class TestTorsion:
    def test_exact_profile_law(self):
        # tau(s, t) = s / 2t away from the removable origin
        p = SelfSimilarParams(c0=0.2, t=1.0, metric=E)
        zp = integrate_profile_z(p, L=10.0, ds=0.01)
        tau = torsion_from_z(zp.values, zp.deriv, z_second_derivative(zp), E)
        mask = (np.abs(zp.s) >= 0.5) & (np.abs(zp.s) <= 5.0)
        rel = np.abs(tau[mask] - zp.s[mask] / 2.0) / np.abs(zp.s[mask] / 2.0)
        assert rel.max() < 1e-4

    def test_real_profile_zero_torsion(self):
        z = np.linspace(-0.4, 0.4, 21) + 0j
        zs = np.full(21, 0.4 + 0j)
        zss = np.full(21, 0.01 + 0j)
        tau = torsion_from_z(z, zs, zss, E)
        assert np.abs(tau).max() == 0.0

    def test_phase_ramp(self):
        # z = eps e^{iks}: tau ~ k to O(eps^2)
        k, eps = 3.0, 1e-3
        s = np.linspace(-1, 1, 41)
        z = eps * np.exp(1j * k * s)
        zs = 1j * k * z
        zss = -(k ** 2) * z
        tau = torsion_from_z(z, zs, zss, E)
        assert np.abs(tau - k).max() < 1e-4

    def test_degenerate_nodes_flagged_nan(self):
        z = np.array([0.1, 0.2, 0.3], dtype=complex)
        zs = np.array([0.5, 0.0, 0.5], dtype=complex)
        zss = np.zeros(3, dtype=complex)
        tau = torsion_from_z(z, zs, zss, E)
        assert np.isnan(tau[1]) and not np.isnan(tau[0])


class TestFrameFromZ:
    def test_origin_frame(self):
        e1, e2 = frame_from_z(np.array([0j]), np.array([0.1 + 0j]), E)
        assert np.allclose(e1[0], [1, 0, 0])
        assert np.allclose(e2[0], [0, 1, 0])

    @pytest.mark.parametrize("metric", [E, H])
    def test_matches_frenet_integration(self, metric):
        p = SelfSimilarParams(c0=0.2, t=1.0, metric=metric)
        fp = integrate_frenet_profile(p, L=5.0, ds=0.01)
        zp = integrate_profile_z(p, L=5.0, ds=0.01)
        keep = np.abs(zp.s) > 1e-9  # z_s real-axis crossing at origin is fine
        e1, e2 = frame_from_z(zp.values, zp.deriv, metric)
        assert np.abs(e1 - fp.e1).max() < 1e-6
        assert np.abs(e2 - fp.e2).max() < 1e-6

    @pytest.mark.parametrize("metric", [E, H])
    def test_orthogonality_relations(self, metric):
        p = SelfSimilarParams(c0=0.25, t=0.5, metric=metric)
        zp = integrate_profile_z(p, L=4.0, ds=0.02)
        e1, e2 = frame_from_z(zp.values, zp.deriv, metric)
        T = stereo_inverse(zp.values, metric)
        assert np.abs(dot_pm(e1, e2, metric)).max() < 1e-10
        assert np.abs(dot_pm(T, e1, metric)).max() < 1e-8
        assert np.abs(dot_pm(T, e2, metric)).max() < 1e-8
        assert np.abs(dot_pm(e1, e1, metric) - 1).max() < 1e-8
        assert np.abs(dot_pm(e2, e2, metric) - 1).max() < 1e-8

    def test_degenerate_raises(self):
        with pytest.raises(FrameDegenerate):
            frame_from_z(np.array([0.1 + 0j]), np.array([0j]), E)


class TestEnergy:
    def test_constant_curvature(self):
        s = np.linspace(-50, 50, 10001)
        prof = CurvatureProfile(s=s, c=np.full_like(s, 0.2), t=1.0)
        assert abs(energy_trapezoid(prof) - 2 * 50 * 0.04) < 1e-12

    def test_zero(self):
        s = np.linspace(-1, 1, 5)
        assert energy_trapezoid(CurvatureProfile(s=s, c=np.zeros(5), t=1.0)) == 0.0

    def test_hand_trapezoid(self):
        # c(s) = |s| on [-1, 1], 9 nodes: trapezoid of c^2 gives 11/16
        # (vs the exact 2/3)
        s = np.linspace(-1.0, 1.0, 9)
        prof = CurvatureProfile(s=s, c=np.abs(s), t=1.0)
        assert abs(energy_trapezoid(prof) - 0.6875) < 1e-15

    def test_descending_nodes(self):
        s = np.linspace(1.0, -1.0, 9)
        prof = CurvatureProfile(s=s, c=np.abs(s), t=1.0)
        assert abs(energy_trapezoid(prof) - 0.6875) < 1e-15

    def test_piecewise_linear_exactness(self):
        # trapezoid integrates piecewise-linear c^2 exactly on uniform grids
        rng = np.random.default_rng(0)
        s = np.linspace(-2, 2, 9)
        c2 = rng.uniform(0.1, 1.0, 9)
        prof = CurvatureProfile(s=s, c=np.sqrt(c2), t=1.0)
        exact = np.sum((c2[:-1] + c2[1:]) / 2 * 0.5)
        assert abs(energy_trapezoid(prof) - exact) < 1e-14

    def test_staggered_energy_constant_field(self):
        # ~ 2 L c0^2 = 4.0; the staggered measurement undershoots by
        # O((tau ds)^2) near the fast-rotating ends
        p = SelfSimilarParams(c0=0.2, t=1.0, metric=E)
        fp = integrate_frenet_profile(p, L=50.0, ds=0.01)
        e = staggered_dirichlet_energy(fp.T, 0.01, E)
        assert abs(e - 4.0) < 0.05


class TestCurvatureError:
    def test_exact_profile_zero_errors(self):
        s = np.linspace(-5, 5, 101)
        prof = CurvatureProfile(s=s, c=np.full_like(s, 0.4), t=0.25)
        err = curvature_error(prof, c0=0.2, t=0.25)
        assert err.max_abs == 0.0 and err.l2 == 0.0 and err.at_origin == 0.0

    def test_single_spike(self):
        s = np.linspace(-5, 5, 101)
        c = np.full_like(s, 0.2)
        c[17] += 1e-3
        err = curvature_error(CurvatureProfile(s=s, c=c, t=1.0), 0.2, 1.0)
        assert abs(err.max_abs - 1e-3) < 1e-15
        assert err.at_origin == 0.0

    def test_window_restriction(self):
        s = np.linspace(-5, 5, 101)
        c = np.full_like(s, 0.2)
        c[0] += 1.0  # outside the window
        err = curvature_error(CurvatureProfile(s=s, c=c, t=1.0), 0.2, 1.0,
                              window=2.0)
        assert err.max_abs == 0.0
