import numpy as np
import pytest

from ignifront.fronts import (
    QuenchedError,
    SaturatedError,
    front_stats,
    hitting_times,
    level_positions,
    track_interface,
)
from ignifront.solver import GridConfig, Snapshot, evolve, make_bump, make_step

THETA0 = 0.25


def snapshot_from(x0, dx, values, **kw):
    return Snapshot(t=0.0, x0=x0, dx=dx, values=np.asarray(values, float), **kw)


class TestTrackInterface:
    def test_exact_linear_crossing(self):
        x = np.arange(0.0, 6.0, 0.1)
        u = np.clip(THETA0 - (x - 3.0) * 0.1, 0.0, 0.9)
        s = snapshot_from(0.0, 0.1, u)
        assert track_interface(s, THETA0) == pytest.approx(3.0, abs=1e-12)

    def test_step_data_crossing_at_shift(self, grid):
        s = make_step(2.0, grid)
        # sharp step: last value >= theta0 sits one cell left of the shift
        assert track_interface(s, THETA0) == pytest.approx(2.0, abs=grid.dx)

    def test_quenched(self):
        s = snapshot_from(0.0, 0.1, np.full(50, 0.1))
        with pytest.raises(QuenchedError):
            track_interface(s, THETA0)

    def test_saturated(self):
        s = snapshot_from(0.0, 0.1, np.full(50, 0.9))
        with pytest.raises(SaturatedError):
            track_interface(s, THETA0)


class TestLevelPositions:
    def test_monotone_profile(self):
        x = np.arange(-10.0, 10.0, 0.05)
        u = 1.0 / (1.0 + np.exp(2.0 * x))  # decreasing through h and k
        s = snapshot_from(-10.0, 0.05, u)
        xhl, xkr = level_positions(s, -10.0, 0.9, 0.2, THETA0)
        assert xhl == pytest.approx(np.log(1 / 0.9 - 1) / 2.0, abs=1e-3)
        assert xkr == pytest.approx(np.log(1 / 0.2 - 1) / 2.0, abs=1e-3)
        assert xhl < xkr

    def test_nested_levels(self):
        x = np.arange(0.0, 20.0, 0.05)
        u = np.where(x <= 5.0, 1.0, np.maximum(1.0 - 0.2 * (x - 5.0), 0.0))
        s = snapshot_from(0.0, 0.05, u)
        for h in (0.9, 0.7, 0.5):
            xhl, _ = level_positions(s, 0.0, h, 0.2, THETA0)
            assert xhl == pytest.approx(5.0 + (1.0 - h) / 0.2, abs=1e-9)

    def test_absent_block_before_delay(self):
        x = np.arange(0.0, 10.0, 0.05)
        u = np.full(x.size, 0.5)
        u[:20] = 0.4  # origin value below h
        s = snapshot_from(0.0, 0.05, u)
        xhl, _ = level_positions(s, 0.0, 0.45, 0.2, THETA0)
        assert xhl is None

    def test_level_validation(self):
        s = snapshot_from(0.0, 0.1, np.linspace(1, 0, 30))
        with pytest.raises(ValueError, match="h"):
            level_positions(s, 0.0, 0.2, 0.2, THETA0)
        with pytest.raises(ValueError, match="k"):
            level_positions(s, 0.0, 0.9, 0.5, THETA0)

    def test_width_matches_wave_geometry(self, homog_field, grid, wave_g1):
        # evolved bump at large t vs shooting-profile width between levels
        init = make_bump(0.625, 0.0, homog_field, grid)
        traj = evolve(init, homog_field, grid, 60.0, levels=(0.9, THETA0), origin=0.0)
        rec = traj.records[-1]
        width = rec.X_k_r - rec.X_h_l
        expected = -wave_g1.position_of(0.9)  # k = theta0 sits at the interface
        assert width == pytest.approx(expected, rel=0.05)


@pytest.fixture(scope="module")
def homog_traj(homog_field, grid):
    init = make_bump(0.625, 0.0, homog_field, grid)
    return evolve(init, homog_field, grid, 60.0, levels=(0.9, THETA0), origin=0.0)


@pytest.fixture(scope="module")
def long_traj(homog_field, grid):
    # right interface starts at the origin, as in the hitting-time runs
    from ignifront.profiles import build_bump

    bump = build_bump(homog_field.nonlinearity, 1.0, 0.625)
    init = make_bump(0.625, -bump.z1, homog_field, grid)
    return evolve(init, homog_field, grid, 100.0)


class TestFrontStats:
    def test_speed_statistics_match_wave(self, homog_traj, wave_g1):
        # the front locks onto the wave speed well after the bump transient
        st = front_stats(homog_traj, 0.9, THETA0, burn_in=30.0)
        assert st.xdot_min == pytest.approx(wave_g1.speed, rel=0.02)
        assert st.xdot_max == pytest.approx(wave_g1.speed, rel=0.02)

    def test_speed_floor_from_early_burn_in(self, homog_traj, wave_g1):
        st = front_stats(homog_traj, 0.9, THETA0, burn_in=5.0)
        assert st.xdot_min >= 0.5 * wave_g1.speed
        assert st.xdot_max <= 2.0 * wave_g1.speed

    def test_steepness_and_time_slope(self, homog_traj):
        st = front_stats(homog_traj, 0.9, THETA0, burn_in=5.0)
        assert st.slope_at_X_max < 0.0
        assert st.ut_at_X_min > 0.0

    def test_burn_in_guard(self, homog_traj):
        with pytest.raises(ValueError, match="burn_in"):
            front_stats(homog_traj, 0.9, THETA0, burn_in=1e9)


class TestHittingTimes:
    @pytest.fixture()
    def traj(self, long_traj):
        return long_traj

    def test_strictly_increasing(self, traj):
        ht = hitting_times(traj, list(range(2, 50, 4)))
        assert np.all(np.diff(ht.times) > 0)

    def test_inverse_consistency(self, traj):
        t, X = traj.times(), traj.interface()
        xi = float(np.interp(5.0, t, X))
        ht = hitting_times(traj, [xi])
        assert ht.times[0] == pytest.approx(5.0, abs=1e-3)

    def test_rate_matches_wave(self, traj, wave_g1):
        ht = hitting_times(traj, [50])
        assert 50.0 / ht.times[0] == pytest.approx(wave_g1.speed, rel=0.02)

    def test_unreached_positions_marked(self, traj):
        ht = hitting_times(traj, [10, 10_000])
        assert np.isfinite(ht.times[0])
        assert np.isnan(ht.times[1])
