import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parad.geometry import (AcquisitionGeometry, cutoff_window, nu_angle_2d, nu_angle_3d,
                            smoothstep6, spatial_mask, standard_geometry_2d, standard_geometry_3d,
                            support_interval, valid_tau_upper)

OPEN_2D = standard_geometry_2d()
FULL_2D = AcquisitionGeometry(dim=2, mu="full")


def test_support_interval():
    t0, t1 = support_interval(OPEN_2D, np.array([0.0, 1.0]))
    assert (t0, t1) == (-1.0, 1.0)
    t0m, t1m = support_interval(OPEN_2D, np.array([0.0, -1.0]))
    assert t1m == -t0 and 0.5 * (t0 + t1) - t0 == 1.0


class TestValidTau:
    def test_three_quarter_pi(self):
        u = valid_tau_upper(OPEN_2D, 3 * math.pi / 4)
        assert u == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-15)
        assert u + 1 == pytest.approx(2 - 1 / math.sqrt(2), abs=1e-15)

    def test_branch_continuity_at_half_pi(self):
        mu = math.pi / 4
        assert -math.cos(mu - math.pi / 2) + math.sin(mu) == pytest.approx(0.0, abs=1e-15)
        assert -math.cos(mu + math.pi / 2) - math.sin(mu) == pytest.approx(0.0, abs=1e-15)
        assert valid_tau_upper(OPEN_2D, math.pi / 2) == pytest.approx(0.0, abs=1e-15)

    def test_excluded_direction(self):
        assert valid_tau_upper(OPEN_2D, 0.0) is None
        assert np.isnan(valid_tau_upper(OPEN_2D, np.array([0.0, 1.0]))[0])

    def test_full_aperture(self):
        np.testing.assert_array_equal(valid_tau_upper(FULL_2D, np.linspace(0, math.pi, 9)), 0.0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.05, math.pi / 2 - 0.05), st.floats(1e-6, math.pi - 1e-6))
    def test_direct_and_mirrored_cover(self, mu, nu):
        g = AcquisitionGeometry(dim=2, mu=mu)
        assert valid_tau_upper(g, nu) >= -valid_tau_upper(g, math.pi - nu) - 1e-12


def test_nu_angles():
    assert nu_angle_2d(-math.pi / 2) == pytest.approx(0.0)
    assert nu_angle_2d(math.pi / 2) == pytest.approx(math.pi)
    assert nu_angle_3d(-1.0) == pytest.approx(0.0)
    assert nu_angle_3d(0.0) == pytest.approx(math.pi / 2)


class TestCutoff:
    def test_values(self):
        assert cutoff_window(1.0) == 1.0
        assert cutoff_window(1.5) == 0.0
        assert cutoff_window(1.35) == pytest.approx(0.5, abs=1e-14)
        assert cutoff_window(1.3) == 1.0 and cutoff_window(1.4) == 0.0

    def test_smoothstep_antisymmetry(self):
        x = np.linspace(0, 1, 41)
        np.testing.assert_allclose(smoothstep6(x) + smoothstep6(1 - x), 1.0, atol=1e-14)

    def test_six_derivatives_continuous(self):
        # one-sided difference quotients of order k <= 6 agree across t = 1.3 up to
        # O(h^(7-k)): halving h must shrink the mismatch by about 2^(7-k)
        def mismatch(order, h):
            coeff = np.array([math.comb(order, j) * (-1) ** (order - j) for j in range(order + 1)])
            right = coeff @ cutoff_window(1.3 + h * np.arange(order + 1)) / h**order
            left = coeff @ cutoff_window(1.3 - h * np.arange(order + 1)[::-1]) / h**order
            return abs(right - left)

        for order in range(1, 7):
            ratio = mismatch(order, 4e-4) / mismatch(order, 2e-4)
            assert ratio > 0.8 * 2 ** (7 - order)

    def test_point_symmetry_carries_smoothness_to_far_edge(self):
        # chi(1.35 + s) = 1 - chi(1.35 - s), so the joint at 1.4 mirrors the one at 1.3
        s = np.linspace(0, 0.1, 101)
        np.testing.assert_allclose(cutoff_window(1.35 + s), 1 - cutoff_window(1.35 - s), rtol=0, atol=1e-11)

    def test_c5_ramp_is_rejected_by_the_same_check(self):
        # control: a ramp with a jump in the first derivative does not converge
        def ramp(t):
            return np.clip((1.4 - t) / 0.1, 0.0, 1.0)
        h = 1e-3
        right = (ramp(1.3 + h) - ramp(1.3)) / h
        left = (ramp(1.3) - ramp(1.3 - h)) / h
        assert abs(right - left) == pytest.approx(10.0)


class TestMask:
    def test_2d(self):
        g = standard_geometry_2d()
        m = spatial_mask(g)
        assert m[g.n_psi // 4] == 0.0  # psi = pi/2
        assert m[0] == 1.0
        # cap edges psi = pi/4 and 3pi/4 are grid nodes and are masked
        assert m[g.n_psi // 8] == 0.0 and m[3 * g.n_psi // 8] == 0.0
        assert m[g.n_psi // 8 - 1] == 1.0 and m[3 * g.n_psi // 8 + 1] == 1.0

    def test_3d(self):
        g = standard_geometry_3d(n_theta=16, n_phi=21)
        m = spatial_mask(g)
        phi = np.arccos(g.cos_phi)
        assert np.all(m[:, phi <= math.pi / 4] == 0.0)
        assert np.all(m[:, phi > math.pi / 4] == 1.0)
        assert m[0, 0] == 1.0  # node nearest the south pole

    def test_full(self):
        assert np.all(spatial_mask(FULL_2D) == 1.0)


def test_geometry_json_roundtrip(tmp_path):
    for g in (OPEN_2D, FULL_2D, standard_geometry_3d(n_theta=8, n_phi=5, n_t=33)):
        assert AcquisitionGeometry.from_json(g.to_json()) == g
        g.save(tmp_path / "g.json")
        assert AcquisitionGeometry.load(tmp_path / "g.json") == g


def test_invalid_geometry():
    with pytest.raises(ValueError):
        AcquisitionGeometry(dim=4)
    with pytest.raises(ValueError):
        AcquisitionGeometry(dim=2, mu=2.0)


def test_detector_positions_on_unit_sphere():
    g = standard_geometry_3d(n_theta=8, n_phi=7)
    np.testing.assert_allclose(np.linalg.norm(g.detector_positions(), axis=-1), 1.0, atol=1e-15)
    assert g.support_bound == pytest.approx(0.0, abs=1e-15)
