import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toroidbeam.errors import ConfigError
from toroidbeam.fields import (
    FieldStack,
    PotentialProfile,
    ToroidFieldParams,
    axial_potential_profile,
    electrode_field,
    toroid_contribution,
    uniform_axial_field,
)

B0 = 2.70e-3


def ideal_toroid(current=0.0):
    return ToroidFieldParams(
        z_center=0.135,
        core_perturbation_amplitude=0.0,
        leakage_coefficient=0.0,
        toroid_current=current,
    )


class TestUniformAxialField:
    def test_paper_field_value_everywhere(self):
        contrib = uniform_axial_field(B0)
        pts = np.array([[0.0, 0.0, 0.0], [0.01, -0.02, 0.25]])
        e, b = contrib.evaluate_many(pts)
        assert np.array_equal(b, [[0.0, 0.0, B0], [0.0, 0.0, B0]])
        assert np.array_equal(e, np.zeros((2, 3)))

    def test_uniformity_two_points(self):
        contrib = uniform_axial_field(1.0)
        _, b = contrib.evaluate_many(np.array([[1.0, 2.0, 3.0], [-5.0, 0.1, 9.0]]))
        assert np.array_equal(b[0], b[1])

    def test_additive_identity_with_ideal_toroid(self):
        stack = FieldStack((uniform_axial_field(B0),))
        stack2 = FieldStack(
            (uniform_axial_field(B0), toroid_contribution(ideal_toroid(5.0), B0))
        )
        pts = np.array([[0.001, 0.002, 0.1], [0.0, 0.0, 0.135]])
        e1, b1 = stack.evaluate_many(pts)
        e2, b2 = stack2.evaluate_many(pts)
        assert np.array_equal(b1, b2)
        assert np.array_equal(e1, e2)

    def test_nonpositive_b0_rejected(self):
        with pytest.raises(ConfigError):
            uniform_axial_field(0.0)
        with pytest.raises(ConfigError):
            uniform_axial_field(-1e-3)


class TestToroidContribution:
    def test_quarter_dip_at_center(self):
        params = ToroidFieldParams(z_center=0.135, core_perturbation_amplitude=0.25)
        contrib = toroid_contribution(params, B0)
        _, b = contrib.evaluate_many(np.array([[0.0, 0.0, 0.135]]))
        assert b[0, 2] == pytest.approx(-0.25 * B0, rel=1e-12)
        assert b[0, 0] == 0.0 and b[0, 1] == 0.0  # on-axis: no radial part

    def test_ideal_toroid_contributes_nothing(self):
        contrib = toroid_contribution(ideal_toroid(current=7.0), B0)
        rng = np.random.default_rng(3)
        pts = rng.uniform(-0.3, 0.3, size=(50, 3))
        e, b = contrib.evaluate_many(pts)
        assert not np.any(e)
        assert not np.any(b)

    def test_leakage_linear_in_current(self):
        def leak_mag(current, eps=1e-3):
            params = ToroidFieldParams(
                z_center=0.135,
                core_perturbation_amplitude=0.0,
                leakage_coefficient=eps,
                toroid_current=current,
            )
            _, b = toroid_contribution(params, B0).evaluate_many(
                np.array([[0.0, 0.0, 0.135]])
            )
            return np.linalg.norm(b[0])

        assert leak_mag(2.0) == pytest.approx(2.0 * leak_mag(1.0), rel=1e-12)
        assert leak_mag(1.0, eps=2e-3) == pytest.approx(
            2.0 * leak_mag(1.0, eps=1e-3), rel=1e-12
        )

    def test_flux_linear_in_current_and_forceless(self):
        p1 = ideal_toroid(current=1.0)
        p3 = ideal_toroid(current=3.0)
        assert p3.flux == pytest.approx(3.0 * p1.flux, rel=1e-12)
        # confined flux produces no field anywhere
        _, b = toroid_contribution(p3, B0).evaluate_many(np.array([[0.0, 0.0, 0.135]]))
        assert not np.any(b)

    def test_negative_leakage_rejected(self):
        with pytest.raises(ConfigError):
            ToroidFieldParams(z_center=0.1, leakage_coefficient=-0.1)

    def test_overunity_perturbation_rejected(self):
        with pytest.raises(ConfigError):
            ToroidFieldParams(z_center=0.1, core_perturbation_amplitude=1.5)

    def test_divergence_free_numerically(self):
        # central differences at random points, relative to the model's
        # natural gradient scale a*B0/w
        params = ToroidFieldParams(
            z_center=0.135,
            core_perturbation_amplitude=0.25,
            perturbation_width=0.01,
            leakage_coefficient=2e-3,
            toroid_current=1.5,
        )
        contrib = toroid_contribution(params, B0)
        rng = np.random.default_rng(42)
        pts = np.column_stack(
            [
                rng.uniform(-0.02, 0.02, 1000),
                rng.uniform(-0.02, 0.02, 1000),
                rng.uniform(0.10, 0.17, 1000),
            ]
        )
        h = 1e-6
        div = np.zeros(len(pts))
        for axis in range(3):
            dp = np.zeros(3)
            dp[axis] = h
            _, b_plus = contrib.evaluate_many(pts + dp)
            _, b_minus = contrib.evaluate_many(pts - dp)
            div += (b_plus[:, axis] - b_minus[:, axis]) / (2.0 * h)
        scale = 0.25 * B0 / params.perturbation_width
        assert np.max(np.abs(div)) / scale < 1e-6


class TestPotentialProfile:
    def test_flat_drift_no_field(self):
        profile = PotentialProfile((0.0, 1.0), (0.0, 0.0))
        assert np.all(profile.e_z(np.linspace(0.1, 0.9, 7)) == 0.0)

    def test_linear_ramp_field(self):
        # 0 to -10 V over 1 cm: E_z = -dV/dz = +1000 V/m inside the ramp
        profile = PotentialProfile((0.0, 0.01), (0.0, -10.0))
        assert profile.e_z(0.005)[0] == pytest.approx(1000.0, rel=1e-12)

    def test_continuity_at_breakpoints(self):
        profile = axial_potential_profile(
            source_potential=-1200.0,
            source_ramp=0.01,
            grid_z=0.27,
            grid_bias=-5.0,
            grid_ramp=0.002,
            plate_z=0.285,
        )
        zs = np.linspace(-0.01, 0.30, 1000)
        vs = np.asarray(profile.voltage(zs))
        # direct evaluation: jumps bounded by the steepest slope times dz
        max_slope = 1200.0 / 0.01
        assert np.max(np.abs(np.diff(vs))) <= max_slope * (zs[1] - zs[0]) * 1.01
        for zb in profile.nodes_z:
            below = float(profile.voltage(zb - 1e-12))
            above = float(profile.voltage(zb + 1e-12))
            assert below == pytest.approx(above, abs=1e-6)

    def test_overlapping_ramps_rejected(self):
        with pytest.raises(ConfigError):
            axial_potential_profile(
                source_potential=-100.0,
                source_ramp=0.27,  # reaches past the grid ramp
                grid_z=0.27,
                grid_bias=-5.0,
                grid_ramp=0.002,
                plate_z=0.285,
            )

    def test_nonmonotone_nodes_rejected(self):
        with pytest.raises(ConfigError):
            PotentialProfile((0.0, 0.0), (0.0, 1.0))

    def test_combine_sums_on_union(self):
        a = PotentialProfile((0.0, 1.0), (0.0, 10.0))
        b = PotentialProfile((0.5, 2.0), (-3.0, -3.0))
        c = PotentialProfile.combine([a, b])
        for z in (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0):
            assert float(c.voltage(z)) == pytest.approx(
                float(a.voltage(z)) + float(b.voltage(z)), abs=1e-12
            )


class TestFieldStack:
    def test_empty_stack_is_zero(self):
        e, b = FieldStack().evaluate([0.1, 0.2, 0.3])
        assert np.array_equal(e, np.zeros(3))
        assert np.array_equal(b, np.zeros(3))

    def test_single_contribution_passthrough(self):
        contrib = uniform_axial_field(B0)
        stack = FieldStack((contrib,))
        pts = np.array([[0.0, 0.0, 0.1]])
        e1, b1 = stack.evaluate_many(pts)
        e2, b2 = contrib.evaluate_many(pts)
        assert np.array_equal(b1, b2)
        assert np.array_equal(e1, e2)

    def test_superposition_against_manual_sum(self):
        profile = axial_potential_profile(-1200.0, 0.01, 0.27, -5.0, 0.002, 0.285)
        contribs = (
            uniform_axial_field(B0),
            toroid_contribution(
                ToroidFieldParams(
                    z_center=0.135,
                    leakage_coefficient=1e-3,
                    toroid_current=2.0,
                ),
                B0,
            ),
            electrode_field(profile),
        )
        stack = FieldStack(contribs)
        rng = np.random.default_rng(7)
        pts = np.column_stack(
            [
                rng.uniform(-0.02, 0.02, 100),
                rng.uniform(-0.02, 0.02, 100),
                rng.uniform(0.0, 0.285, 100),
            ]
        )
        e_sum = np.zeros_like(pts)
        b_sum = np.zeros_like(pts)
        for c in contribs:
            ce, cb = c.evaluate_many(pts)
            e_sum += ce
            b_sum += cb
        e, b = stack.evaluate_many(pts)
        assert np.array_equal(e, e_sum)
        assert np.array_equal(b, b_sum)

    def test_ideal_toroid_nullity_vs_current(self):
        pts = np.array([[0.0, 0.005, 0.135], [0.002, 0.0, 0.20]])
        reference = None
        for current in (0.0, 1.0, 5.0, 50.0):
            stack = FieldStack(
                (
                    uniform_axial_field(B0),
                    toroid_contribution(ideal_toroid(current), B0),
                )
            )
            _, b = stack.evaluate_many(pts)
            if reference is None:
                reference = b
            assert np.array_equal(b, reference)

    @settings(max_examples=50, deadline=None)
    @given(
        x=st.floats(-0.05, 0.05),
        y=st.floats(-0.05, 0.05),
        z=st.floats(-0.1, 0.4),
    )
    def test_evaluation_is_pure(self, x, y, z):
        stack = FieldStack(
            (
                uniform_axial_field(B0),
                toroid_contribution(
                    ToroidFieldParams(
                        z_center=0.135,
                        leakage_coefficient=1e-3,
                        toroid_current=1.0,
                    ),
                    B0,
                ),
            )
        )
        e1, b1 = stack.evaluate([x, y, z])
        e2, b2 = stack.evaluate([x, y, z])
        assert np.array_equal(e1, e2)
        assert np.array_equal(b1, b2)
