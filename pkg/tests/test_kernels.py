import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blurshift.kernels import (
    GaussianKernel,
    KernelConfigError,
    TabulatedKernel,
    TruncatedFlatKernel,
    kernel_from_config,
    kernel_to_config,
    verify_profile,
)

from oracles import gaussian_profile, stepped_profile


class TestGaussian:
    def test_frozen_values(self):
        k = GaussianKernel(tau=2.0)
        assert k.evaluate(0.0) == 1.0
        assert k.evaluate(2.0) == pytest.approx(math.exp(-0.5), rel=1e-15)
        assert k.evaluate(4.0) == pytest.approx(math.exp(-2.0), rel=1e-15)

    def test_scalar_returns_float(self):
        v = GaussianKernel(1.0).evaluate(1.5)
        assert isinstance(v, float)

    def test_array_shape_preserved(self):
        k = GaussianKernel(1.0)
        d = np.array([[0.0, 1.0], [2.0, 3.0]])
        assert k.evaluate(d).shape == (2, 2)

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            GaussianKernel(1.0).evaluate(-0.1)

    @pytest.mark.parametrize("tau", [0.0, -1.0, math.nan, math.inf])
    def test_bad_bandwidth_rejected(self, tau):
        with pytest.raises(ValueError):
            GaussianKernel(tau=tau)

    def test_bad_support_rejected(self):
        with pytest.raises(ValueError):
            GaussianKernel(1.0, support_radius=0.0)

    def test_cutoff_boundary_inclusive(self):
        k = GaussianKernel(tau=1.0, support_radius=3.0)
        assert k.evaluate(3.0) == pytest.approx(math.exp(-4.5), rel=1e-15)
        assert k.evaluate(3.0000001) == 0.0
        assert k.evaluate(10.0) == 0.0

    def test_evaluate_sq_matches_evaluate(self):
        k = GaussianKernel(tau=0.7, support_radius=2.0)
        d = np.linspace(0, 4, 57)
        assert np.allclose(k.evaluate_sq(d * d), k.evaluate(d), rtol=1e-13)

    @given(
        tau=st.floats(0.05, 50),
        d=st.lists(st.floats(0, 1e3), min_size=1, max_size=40),
    )
    @settings(max_examples=60, deadline=None)
    def test_bounds_and_monotonicity(self, tau, d):
        k = GaussianKernel(tau=tau)
        vals = k.evaluate(np.sort(np.asarray(d)))
        assert np.all(vals >= 0) and np.all(vals <= 1)
        assert np.all(np.diff(vals) <= 1e-15)


class TestTruncatedFlat:
    def test_halving_band_semantics(self):
        # 1 at the origin, 1/2 out to distance 1 inclusive, dead beyond
        k = TruncatedFlatKernel(levels=((0.0, 1.0), (1.0, 0.5)))
        got = k.evaluate(np.array([0.0, 0.25, 0.5, 1.0, 1.0000001, 1.5]))
        assert got.tolist() == [1.0, 0.5, 0.5, 0.5, 0.0, 0.0]
        assert k.support_radius == 1.0

    def test_multi_band(self):
        k = TruncatedFlatKernel(levels=((0.5, 0.9), (2.0, 0.4), (3.0, 0.1)))
        got = k.evaluate(np.array([0.0, 0.5, 0.6, 2.0, 2.5, 3.0, 3.1]))
        assert got.tolist() == [1.0, 0.9, 0.4, 0.4, 0.1, 0.1, 0.0]
        assert k.support_radius == 3.0

    def test_trailing_zero_band_shrinks_support(self):
        k = TruncatedFlatKernel(levels=((1.0, 0.5), (2.0, 0.0)))
        assert k.support_radius == 1.0
        assert k.evaluate(1.5) == 0.0

    def test_explicit_support_tightens(self):
        k = TruncatedFlatKernel(levels=((2.0, 0.5),), support_radius=1.0)
        assert k.evaluate(0.5) == 0.5
        assert k.evaluate(1.5) == 0.0
        assert k.support_radius == 1.0

    def test_zero_threshold_level_must_be_unit(self):
        with pytest.raises(ValueError):
            TruncatedFlatKernel(levels=((0.0, 0.9), (1.0, 0.5)))

    @pytest.mark.parametrize(
        "levels",
        [
            (),
            ((1.0, 0.5), (1.0, 0.4)),  # thresholds not strictly increasing
            ((2.0, 0.5), (1.0, 0.4)),
            ((1.0, 0.4), (2.0, 0.5)),  # values increase outward
            ((1.0, 1.5),),  # value above 1
            ((1.0, -0.1),),
            ((-1.0, 0.5),),  # negative threshold
        ],
    )
    def test_bad_levels_rejected(self, levels):
        with pytest.raises(ValueError):
            TruncatedFlatKernel(levels=levels)

    def test_matches_scalar_reference(self):
        levels = ((0.5, 0.8), (1.5, 0.3), (4.0, 0.05))
        k = TruncatedFlatKernel(levels=levels)
        ref = stepped_profile(levels)
        d = np.linspace(0, 5, 101)
        want = np.array([ref(float(v)) for v in d])
        assert np.array_equal(k.evaluate(d), want)


class TestTabulated:
    def test_linear_interpolation(self):
        k = TabulatedKernel(knots=((0.0, 1.0), (2.0, 0.5)))
        assert k.evaluate(1.0) == pytest.approx(0.75, abs=1e-15)
        assert k.evaluate(2.0) == 0.5
        # last value holds beyond the final knot
        assert k.evaluate(5.0) == 0.5
        assert math.isinf(k.support_radius)

    def test_terminal_zero_sets_support(self):
        k = TabulatedKernel(knots=((0.0, 1.0), (1.0, 0.25), (2.0, 0.0)))
        assert k.support_radius == 2.0
        assert k.evaluate(3.0) == 0.0

    def test_first_knot_must_be_unit_at_zero(self):
        with pytest.raises(ValueError):
            TabulatedKernel(knots=((0.0, 0.9), (1.0, 0.5)))
        with pytest.raises(ValueError):
            TabulatedKernel(knots=((0.5, 1.0), (1.0, 0.5)))

    def test_non_monotone_table_constructs(self):
        # construction does not police monotonicity; verify_profile does
        k = TabulatedKernel(knots=((0.0, 1.0), (1.0, 0.6), (2.0, 0.7)))
        assert k.evaluate(2.0) == 0.7


class TestVerifyProfile:
    def grid(self):
        return np.linspace(0.0, 6.0, 61)

    def test_gaussian_passes(self):
        rep = verify_profile(GaussianKernel(1.0), self.grid())
        assert rep.passed
        assert rep.identity_clause and rep.monotonicity_clause
        assert rep.first_violation is None

    def test_truncated_flat_passes(self):
        k = TruncatedFlatKernel(levels=((0.0, 1.0), (1.0, 0.5)))
        rep = verify_profile(k, np.array([0.0, 0.5, 1.5]))
        assert rep.passed

    def test_monotonicity_violation_located(self):
        k = TabulatedKernel(knots=((0.0, 1.0), (1.0, 0.6), (2.0, 0.7)))
        rep = verify_profile(k, np.array([0.0, 1.0, 2.0, 3.0]))
        assert not rep.passed
        assert not rep.nonincreasing
        assert rep.first_violation == 2.0

    def test_unit_plateau_violation(self):
        k = TabulatedKernel(knots=((0.0, 1.0), (1.0, 1.0), (2.0, 0.0)))
        rep = verify_profile(k, np.array([0.0, 0.5, 1.0, 2.0]))
        assert not rep.passed
        assert not rep.below_one_for_positive

    def test_grid_must_include_zero_and_two_positive(self):
        with pytest.raises(ValueError):
            verify_profile(GaussianKernel(1.0), np.array([0.5, 1.0, 2.0]))
        with pytest.raises(ValueError):
            verify_profile(GaussianKernel(1.0), np.array([0.0, 1.0]))


class TestConfigRoundTrip:
    @pytest.mark.parametrize(
        "kernel",
        [
            GaussianKernel(tau=1.5),
            GaussianKernel(tau=0.5, support_radius=1.5),
            TruncatedFlatKernel(levels=((0.0, 1.0), (1.0, 0.5))),
            TruncatedFlatKernel(levels=((0.5, 0.9), (2.0, 0.4)), support_radius=1.8),
            TabulatedKernel(knots=((0.0, 1.0), (1.0, 0.5), (3.0, 0.0))),
        ],
    )
    def test_round_trip(self, kernel):
        again = kernel_from_config(kernel_to_config(kernel))
        assert again == kernel

    def test_unknown_family(self):
        with pytest.raises(KernelConfigError):
            kernel_from_config({"family": "triweight", "tau": 1.0})

    def test_missing_parameter(self):
        with pytest.raises(KernelConfigError):
            kernel_from_config({"family": "gaussian"})

    def test_bad_parameter_wrapped(self):
        with pytest.raises(KernelConfigError):
            kernel_from_config({"family": "gaussian", "tau": -2.0})


def test_gaussian_agrees_with_scalar_reference():
    tau = 1.3
    k = GaussianKernel(tau=tau, support_radius=2.5)
    ref = gaussian_profile(tau, cutoff=2.5)
    d = np.linspace(0, 4, 81)
    want = np.array([ref(float(v)) for v in d])
    assert np.allclose(k.evaluate(d), want, rtol=1e-14, atol=0)
