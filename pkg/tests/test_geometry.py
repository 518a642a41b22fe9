"""Geometry layer: TDF values, smoothing kernels, analytic gradients."""

import numpy as np
import pytest

from morphcomp.geometry import (
    Component,
    Regularization,
    component_tdf,
    component_tdf_gradient,
    pack_design,
    smoothed_delta,
    smoothed_heaviside,
    structure_tdf,
    unpack_design,
)


def fd_tdf_gradient(comp, point, step=1e-6, exponent=6):
    """Central finite differences of component_tdf in the five variables."""
    base = comp.as_array()
    grad = np.empty(5)
    for k in range(5):
        lo, hi = base.copy(), base.copy()
        lo[k] -= step
        hi[k] += step
        f_lo = component_tdf(Component(*lo), point, exponent)
        f_hi = component_tdf(Component(*hi), point, exponent)
        grad[k] = (f_hi - f_lo) / (2.0 * step)
    return grad


class TestComponentTdf:
    def test_center_is_one(self):
        comp = Component(0.5, 0.5, 1.0, 0.2, 0.0)
        assert component_tdf(comp, (0.5, 0.5)) == 1.0

    def test_axis_endpoint_is_zero(self):
        comp = Component(0.5, 0.5, 1.0, 0.2, 0.0)
        assert component_tdf(comp, (1.0, 0.5)) == pytest.approx(0.0, abs=1e-14)

    def test_center_of_rotated_component(self):
        comp = Component(0.53, 0.95, 1.50, 0.20, 0.04)
        assert component_tdf(comp, (0.53, 0.95)) == 1.0

    def test_sign_structure_along_rays(self):
        # phi must cross zero exactly once going outward from the center.
        rng = np.random.default_rng(7)
        comp = Component(0.2, -0.1, 1.3, 0.35, 0.55)
        for _ in range(50):
            ang = rng.uniform(0, 2 * np.pi)
            d = np.array([np.cos(ang), np.sin(ang)])
            c = np.array([comp.center_x, comp.center_y])
            r_in, r_out = 0.0, 5.0
            assert component_tdf(comp, c + r_out * d) < 0
            for _ in range(80):
                mid = 0.5 * (r_in + r_out)
                if component_tdf(comp, c + mid * d) > 0:
                    r_in = mid
                else:
                    r_out = mid
            assert r_out - r_in < 1e-12
            assert component_tdf(comp, c + r_in * d) > 0
            assert component_tdf(comp, c + r_out * d) <= 0

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(3)
        comp = Component(0.1, 0.4, 0.9, 0.25, -0.3)
        pts = rng.uniform(-1, 2, size=(40, 2))
        batch = component_tdf(comp, pts)
        assert batch.shape == (40,)
        for k in range(40):
            assert batch[k] == component_tdf(comp, pts[k])

    def test_far_field_query_is_finite(self):
        comp = Component(0.0, 0.0, 1.0, 0.1, 0.0)
        with np.errstate(over="raise"):
            val = component_tdf(comp, (1e12, -1e12))
        assert np.isfinite(val) and val < 0

    def test_rotation_equivariance(self):
        # Rotating the component and the query point together about the
        # center leaves the field unchanged.
        rng = np.random.default_rng(11)
        for _ in range(200):
            th1 = rng.uniform(-0.6, 0.6)
            dth = rng.uniform(-0.8, 0.8)
            if abs(th1 + dth) >= 1.4:
                continue
            cx, cy = rng.uniform(-1, 1, size=2)
            comp_a = Component(cx, cy, 1.2, 0.3, np.sin(th1))
            comp_b = Component(cx, cy, 1.2, 0.3, np.sin(th1 + dth))
            r, ang = rng.uniform(0, 1.0), rng.uniform(0, 2 * np.pi)
            pa = (cx + r * np.cos(ang), cy + r * np.sin(ang))
            pb = (cx + r * np.cos(ang + dth), cy + r * np.sin(ang + dth))
            assert component_tdf(comp_b, pb) == pytest.approx(
                component_tdf(comp_a, pa), rel=1e-12, abs=1e-12)

    def test_translation_equivariance_exact(self):
        # Dyadic shifts so the float subtraction is exact -> bitwise equality.
        rng = np.random.default_rng(23)
        for _ in range(100):
            cx, cy, px, py, dx, dy = rng.integers(-256, 256, size=6) / 64.0
            comp = Component(cx, cy, 0.75, 0.2, 0.125)
            shifted = Component(cx + dx, cy + dy, 0.75, 0.2, 0.125)
            assert component_tdf(shifted, (px + dx, py + dy)) == \
                component_tdf(comp, (px, py))


class TestStructureTdf:
    def test_single_component(self):
        comp = Component(0.5, 0.5, 1.0, 0.2, 0.0)
        pts = np.array([[0.5, 0.5], [0.9, 0.52], [2.0, 2.0]])
        sample = structure_tdf([comp], pts)
        assert np.array_equal(sample.phi_structure, component_tdf(comp, pts))
        assert np.all(sample.argmax_component == 0)

    def test_tie_breaks_to_lowest_index(self):
        comp = Component(0.5, 0.5, 1.0, 0.2, 0.0)
        sample = structure_tdf([comp, comp], (0.7, 0.5))
        assert sample.argmax_component == 0
        assert sample.phi_structure == component_tdf(comp, (0.7, 0.5))

    def test_outside_everything_is_negative(self):
        comps = [Component(0.0, 0.0, 1.0, 0.2, 0.0),
                 Component(1.0, 1.0, 0.8, 0.3, 0.5)]
        sample = structure_tdf(comps, (40.0, -7.0))
        assert sample.phi_structure < 0

    def test_max_dominance(self):
        # Adding a component never lowers the structure field anywhere.
        rng = np.random.default_rng(5)
        comps = []
        pts = rng.uniform(-2, 2, size=(150, 2))
        prev = np.full(150, -np.inf)
        for _ in range(6):
            comps.append(Component(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                   rng.uniform(0.3, 1.5), rng.uniform(0.05, 0.4),
                                   rng.uniform(-0.9, 0.9)))
            cur = structure_tdf(comps, pts).phi_structure
            assert np.all(cur >= prev - 1e-15)
            prev = cur

    def test_per_component_values_and_shapes(self):
        comps = [Component(0.0, 0.0, 1.0, 0.2, 0.0),
                 Component(0.3, 0.1, 0.6, 0.3, 0.2),
                 Component(-0.5, 0.4, 1.1, 0.15, -0.4)]
        pts = np.zeros((7, 2))
        sample = structure_tdf(comps, pts)
        assert sample.phi_per_component.shape == (3, 7)
        assert np.all(sample.phi_structure >=
                      sample.phi_per_component.max(axis=0) - 1e-15)
        single = structure_tdf(comps, (0.0, 0.0))
        assert single.phi_per_component.shape == (3,)
        assert isinstance(single.phi_structure, float)

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            structure_tdf([], (0.0, 0.0))


class TestSmoothedHeaviside:
    reg = Regularization(exponent=6, bandwidth=0.04, density_floor=1e-3)

    def test_band_edges_and_midpoint(self):
        eps, alpha = self.reg.bandwidth, self.reg.density_floor
        assert smoothed_heaviside(eps, self.reg) == pytest.approx(1.0)
        assert smoothed_heaviside(-eps, self.reg) == pytest.approx(alpha)
        assert smoothed_heaviside(0.0, self.reg) == pytest.approx((1 + alpha) / 2)
        assert smoothed_heaviside(10.0, self.reg) == 1.0
        assert smoothed_heaviside(-10.0, self.reg) == alpha

    def test_monotone_and_bounded(self):
        rng = np.random.default_rng(19)
        phi = np.sort(rng.uniform(-0.2, 0.2, size=500))
        h = smoothed_heaviside(phi, self.reg)
        assert np.all(np.diff(h) >= 0)
        assert h.min() >= self.reg.density_floor
        assert h.max() <= 1.0

    def test_c1_at_band_edges(self):
        eps = self.reg.bandwidth
        for edge in (eps, -eps):
            inner = smoothed_heaviside(edge * (1 - 1e-9), self.reg)
            outer = smoothed_heaviside(edge * (1 + 1e-9), self.reg)
            assert inner == pytest.approx(outer, abs=1e-12)
        # slope tends to zero at the edges, matching the flat branches
        assert smoothed_delta(eps * (1 - 1e-9), self.reg) < 1e-6
        assert smoothed_delta(-eps * (1 - 1e-9), self.reg) < 1e-6


class TestSmoothedDelta:
    reg = Regularization(exponent=6, bandwidth=0.04, density_floor=1e-3)

    def test_support_and_peak(self):
        eps, alpha = self.reg.bandwidth, self.reg.density_floor
        assert smoothed_delta(eps, self.reg) == 0.0
        assert smoothed_delta(-eps, self.reg) == 0.0
        assert smoothed_delta(0.0, self.reg) == pytest.approx(
            3 * (1 - alpha) / (4 * eps))

    def test_even_symmetry(self):
        rng = np.random.default_rng(2)
        phi = rng.uniform(-0.1, 0.1, size=200)
        np.testing.assert_array_equal(smoothed_delta(phi, self.reg),
                                      smoothed_delta(-phi, self.reg))

    def test_matches_heaviside_derivative(self):
        eps = self.reg.bandwidth
        step = 1e-6
        # stay away from the kinks at +-eps where the FD straddles branches
        for phi in np.linspace(-0.9 * eps, 0.9 * eps, 41):
            fd = (smoothed_heaviside(phi + step, self.reg)
                  - smoothed_heaviside(phi - step, self.reg)) / (2 * step)
            an = smoothed_delta(phi, self.reg)
            assert an == pytest.approx(fd, rel=1e-6)


class TestTdfGradient:
    def test_zero_at_center(self):
        comp = Component(0.4, -0.2, 1.1, 0.3, 0.6)
        np.testing.assert_array_equal(
            component_tdf_gradient(comp, (0.4, -0.2)), np.zeros(5))

    def test_against_finite_differences_single(self):
        comp = Component(0.0, 0.0, 1.0, 0.2, 0.3)
        point = (0.2, 0.1)
        an = component_tdf_gradient(comp, point)
        fd = fd_tdf_gradient(comp, point, step=1e-6)
        for k in range(5):
            denom = max(abs(an[k]), abs(fd[k]))
            assert abs(an[k] - fd[k]) <= 1e-6 * denom, f"variable {k}"

    def test_length_derivative_at_axis_endpoint(self):
        n, length = 6, 1.0
        comp = Component(0.0, 0.0, length, 0.2, 0.0)
        grad = component_tdf_gradient(comp, (0.5, 0.0))
        assert grad[2] == pytest.approx(n / length, rel=1e-13)
        # on the axis the transverse, thickness and angle terms all vanish
        assert grad[1] == 0.0 and grad[3] == 0.0 and grad[4] == 0.0
        assert grad[0] != 0.0

    def test_against_finite_differences_random(self):
        # 1000 random (component, point) pairs, points drawn near the
        # component so the field is not flat there.
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 1000:
            comp = Component(rng.uniform(-1, 1), rng.uniform(-1, 1),
                             rng.uniform(0.3, 2.0), rng.uniform(0.05, 0.6),
                             rng.uniform(-0.9, 0.9))
            u = rng.uniform(-1.2, 1.2)
            v = rng.uniform(-1.2, 1.2)
            q, p = comp.cos_angle, comp.sin_angle
            lx = u * 0.5 * comp.length
            ly = v * 0.5 * comp.thickness
            point = (comp.center_x + q * lx - p * ly,
                     comp.center_y + p * lx + q * ly)
            an = component_tdf_gradient(comp, point)
            fd = fd_tdf_gradient(comp, point, step=1e-6)
            err = np.abs(an - fd) / np.maximum(1.0, np.maximum(np.abs(an),
                                                               np.abs(fd)))
            assert err.max() <= 1e-5, (comp, point, err)
            checked += 1

    def test_vectorized_matches_scalar(self):
        comp = Component(0.2, 0.3, 1.4, 0.25, -0.45)
        pts = np.random.default_rng(8).uniform(-1, 1, size=(30, 2))
        batch = component_tdf_gradient(comp, pts)
        assert batch.shape == (30, 5)
        for k in range(30):
            np.testing.assert_array_equal(batch[k],
                                          component_tdf_gradient(comp, pts[k]))

    def test_far_field_gradient_is_zero(self):
        comp = Component(0.0, 0.0, 1.0, 0.1, 0.2)
        with np.errstate(over="raise"):
            grad = component_tdf_gradient(comp, (1e12, 3e11))
        np.testing.assert_array_equal(grad, np.zeros(5))


class TestValidationAndPacking:
    def test_component_rejects_bad_values(self):
        with pytest.raises(ValueError):
            Component(0, 0, -1.0, 0.2, 0.0)
        with pytest.raises(ValueError):
            Component(0, 0, 1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            Component(0, 0, 1.0, 0.2, 0.9999)
        with pytest.raises(ValueError):
            Component(0, 0, np.nan, 0.2, 0.0)

    def test_regularization_rejects_bad_values(self):
        with pytest.raises(ValueError):
            Regularization(exponent=5)
        with pytest.raises(ValueError):
            Regularization(exponent=0)
        with pytest.raises(ValueError):
            Regularization(bandwidth=0.0)
        with pytest.raises(ValueError):
            Regularization(density_floor=0.5)
        with pytest.raises(ValueError):
            Regularization(density_floor=0.0)

    def test_pack_unpack_round_trip(self):
        comps = [Component(0.1, 0.2, 1.0, 0.3, 0.4),
                 Component(-0.5, 0.9, 0.7, 0.12, -0.8)]
        vec = pack_design(comps)
        assert vec.shape == (10,)
        back = unpack_design(vec)
        assert back == comps

    def test_unpack_rejects_bad_length(self):
        with pytest.raises(ValueError):
            unpack_design(np.zeros(7))
        with pytest.raises(ValueError):
            unpack_design(np.zeros(0))
        with pytest.raises(ValueError):
            pack_design([])
