import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ignifront.reaction import (
    ReactionField,
    eval_f0,
    homogeneous_medium,
    make_nonlinearity,
    sample_medium,
    shift_medium,
)

THETA0 = 0.25


class TestNonlinearity:
    def test_ignition_threshold(self, nl):
        assert eval_f0(nl, 0.25) == 0.0
        assert eval_f0(nl, 1.0) == 0.0

    def test_default_formula(self, nl):
        assert eval_f0(nl, 0.5) == pytest.approx(0.125, abs=1e-15)

    @pytest.mark.parametrize("family", ["quadratic", "smooth"])
    def test_support_and_positivity(self, family):
        n = make_nonlinearity(family, THETA0)
        u = np.linspace(-0.5, 1.5, 2001)
        vals = n.f0(u)
        inside = (u > THETA0) & (u < 1.0)
        assert np.all(vals[~inside] == 0.0)
        assert np.all(vals[inside] > 0.0)

    @pytest.mark.parametrize("family", ["quadratic", "smooth"])
    def test_lipschitz_and_slope_bounds(self, family):
        n = make_nonlinearity(family, THETA0)
        u = np.linspace(0.0, 1.0, 4001)
        vals = n.f0(u)
        pairwise = np.abs(np.diff(vals)) / np.diff(u)
        assert pairwise.max() <= n.lipschitz_K + 1e-9
        assert np.all(vals <= n.slope_M * u + 1e-15)

    def test_theta0_validation(self):
        with pytest.raises(ValueError, match="theta0"):
            make_nonlinearity("quadratic", 1.5)
        with pytest.raises(ValueError, match="family"):
            make_nonlinearity("cubic", 0.25)


class TestMedium:
    def test_degenerate_family_is_homogeneous(self):
        m = sample_medium(3, "iid-uniform", 1.0, 1.0)
        x = np.linspace(-100, 100, 5001)
        assert np.all(m.g(x) == 1.0)

    def test_query_order_independence(self):
        m = sample_medium(7, "iid-uniform", 1.0, 2.0)
        a = m.g(3.5)
        m.g(np.linspace(-1000, 1000, 1000))  # different window in between
        assert m.g(3.5) == a
        assert m.g(np.array([3.5]))[0] == a

    def test_cell_mean_matches_law(self):
        # law of large numbers for the per-cell sampler; oracle is the
        # direct average of the hash outputs
        m = sample_medium(7, "iid-uniform", 1.0, 2.0)
        vals = m.cell_values(np.arange(10_000))
        se = (2.0 - 1.0) / np.sqrt(12 * 10_000)
        assert abs(vals.mean() - 1.5) < 3 * se

    def test_bounds_validation(self):
        with pytest.raises(ValueError, match="g_min"):
            sample_medium(1, "iid-uniform", 0.0, 1.0)
        with pytest.raises(ValueError, match="g_min"):
            sample_medium(1, "iid-uniform", 2.0, 1.0)
        with pytest.raises(ValueError, match="family"):
            sample_medium(1, "pink-noise", 1.0, 2.0)

    @given(seed=st.integers(min_value=0, max_value=2**63 - 1))
    @settings(max_examples=25, deadline=None)
    def test_bounds_hold_over_window(self, seed):
        m = sample_medium(seed, "iid-uniform", 0.5, 3.0)
        x = np.linspace(-500, 500, 10_001)
        g = m.g(x)
        assert g.min() >= 0.5 and g.max() <= 3.0

    def test_lipschitz_in_x(self):
        m = sample_medium(11, "iid-uniform", 1.0, 2.0)
        x = np.arange(-200, 200, 0.001)
        g = m.g(x)
        slope = np.abs(np.diff(g)) / 0.001
        # family constant: 1.5 * (g_max - g_min) / blend width
        assert slope.max() <= 1.5 * 1.0 / 0.2 + 1e-6

    def test_shift_identity_and_definition(self):
        m = sample_medium(7, "iid-uniform", 1.0, 2.0)
        assert shift_medium(m, 0).g(12.3) == m.g(12.3)
        assert shift_medium(m, 5).g(0.0) == m.g(5.0)

    @given(h1=st.integers(-1000, 1000), h2=st.integers(-1000, 1000))
    @settings(max_examples=25, deadline=None)
    def test_shift_group_property(self, h1, h2):
        m = sample_medium(9, "iid-uniform", 1.0, 2.0)
        x = np.linspace(-5, 5, 101)
        lhs = shift_medium(shift_medium(m, h1), h2).g(x)
        rhs = shift_medium(m, h1 + h2).g(x)
        assert np.array_equal(lhs, rhs)

    def test_shift_stationarity_of_statistics(self):
        m = sample_medium(13, "iid-uniform", 1.0, 2.0)
        N, h = 10_000, 137
        a = m.cell_values(np.arange(0, N))
        b = m.cell_values(np.arange(h, N + h))
        bins = np.linspace(1.0, 2.0, 21)
        ha, _ = np.histogram(a, bins=bins, density=True)
        hb, _ = np.histogram(b, bins=bins, density=True)
        l1 = np.abs(ha - hb).mean() / 2
        assert l1 < 0.05

    def test_random_constant_family(self):
        m = sample_medium(21, "random-constant", 1.0, 2.0)
        vals = m.cell_values(np.arange(-50, 50))
        assert np.all(vals == vals[0])
        assert 1.0 <= vals[0] <= 2.0


class TestReactionField:
    def test_sandwich_exact(self, nl):
        field = ReactionField(nl, sample_medium(5, "iid-uniform", 1.0, 2.0))
        x = np.linspace(-50, 50, 100)
        u = np.linspace(0, 1, 100)
        for ui in u:
            f = field.f(x, ui)
            assert np.all(field.f_min(ui) - 1e-15 <= f)
            assert np.all(f <= field.f_max(ui) + 1e-15)

    def test_lipschitz_constant_scales_with_gmax(self, nl):
        field = ReactionField(nl, homogeneous_medium(2.0))
        assert field.lipschitz_K == pytest.approx(2.0 * nl.lipschitz_K)
