import numpy as np
import pytest

from ignifront.profiles import (
    build_bump,
    calibrate_supersolution,
    estimate_envelope,
    exp_supersolution_params,
    tw_speed_shoot,
    verify_supersolution,
)
from ignifront.reaction import IgnitionNonlinearity, ReactionField, homogeneous_medium, make_nonlinearity, sample_medium
from ignifront.solver import Snapshot, evolve, make_bump
from ignifront.fronts import front_frame_stack

THETA0 = 0.25


class TestBump:
    def test_ignition_crossing(self, nl):
        bump = build_bump(nl, 1.0, 0.625)
        assert bump.profile_hat(bump.z1) == pytest.approx(THETA0, abs=1e-6)
        assert 0 < bump.z1 < bump.z2

    def test_peak_and_symmetry(self, nl):
        bump = build_bump(nl, 1.0, 0.625)
        assert bump.profile_hat(0.0) == 0.625
        a = np.linspace(0, bump.z2, 200)
        assert np.array_equal(bump.zeta(a), bump.zeta(-a))

    def test_affine_tail_and_concave_core(self, nl):
        bump = build_bump(nl, 1.0, 0.625)
        xs = np.arange(bump.z1 + 0.05, bump.z2 - 0.05, 0.01)
        vals = bump.profile_hat(xs)
        second = np.diff(vals, 2) / 0.01 ** 2
        assert np.max(np.abs(second)) < 1e-6
        slope_tail = (vals[-1] - vals[0]) / (xs[-1] - xs[0])
        core = bump.profile_hat(np.arange(0, bump.z1, 0.01))
        second_core = np.diff(core, 2) / 0.01 ** 2
        assert np.all(second_core < 0)
        # tail slope matches the slope where the reaction switches off
        at_z1 = (bump.profile_hat(bump.z1 + 1e-4) - bump.profile_hat(bump.z1 - 1e-4)) / 2e-4
        assert slope_tail == pytest.approx(at_z1, rel=1e-4)

    def test_self_convergence(self, nl):
        coarse = build_bump(nl, 1.0, 0.625)
        fine = build_bump(nl, 1.0, 0.625, rk4_step=1e-4)
        assert coarse.z1 == pytest.approx(fine.z1, abs=1e-5)
        assert coarse.z2 == pytest.approx(fine.z2, abs=1e-5)

    def test_h0_validation(self, nl):
        with pytest.raises(ValueError, match="h0"):
            build_bump(nl, 1.0, 0.2)

    def test_evolved_bump_grows_in_any_medium(self, nl):
        # sub-solution property: one step up, never down
        from ignifront.solver import GridConfig

        grid = GridConfig()
        for seed in (1, 2, 3):
            field = ReactionField(nl, sample_medium(seed, "iid-uniform", 1.0, 2.0))
            init = make_bump(0.625, 0.0, field, grid)
            traj = evolve(init, field, grid, 1.0, snapshot_every=0.5)
            for snap in traj.snapshots:
                assert np.min(snap.values - init.interp(snap.x())) >= -1e-8


class TestShooting:
    def test_scaling_symmetry(self, nl, wave_g1):
        for a in (0.25, 4.0):
            w = tw_speed_shoot(nl, a)
            assert w.speed == pytest.approx(np.sqrt(a) * wave_g1.speed, abs=5e-6)

    def test_monotone_in_g(self, wave_g1, wave_g2):
        assert wave_g1.speed < wave_g2.speed

    @pytest.mark.slow
    def test_monotonicity_against_pde_oracle(self, nl, wave_g2):
        # long-run front speed at level 2 as the independent check
        from ignifront.solver import GridConfig, evolve, make_bump

        field = ReactionField(nl, homogeneous_medium(2.0))
        grid = GridConfig()
        init = make_bump(0.625, 0.0, field, grid)
        traj = evolve(init, field, grid, 80.0)
        t, X = traj.times(), traj.interface()
        sel = t >= 40.0
        slope = float(np.polyfit(t[sel], X[sel], 1)[0])
        assert slope == pytest.approx(wave_g2.speed, rel=0.01)

    def test_bracket_independence(self, nl, wave_g1):
        w = tw_speed_shoot(nl, 1.0, bracket=(0.3, 1.5))
        assert w.speed == pytest.approx(wave_g1.speed, abs=2e-6)

    def test_ode_residual_and_tail(self, wave_g1):
        assert wave_g1.residual() < 1e-6
        x = np.linspace(0, 5, 50)
        assert np.allclose(wave_g1.profile(x), THETA0 * np.exp(-wave_g1.speed * x), atol=1e-8)

    def test_profile_limits(self, wave_g1):
        assert wave_g1.profile(-30.0) > 0.999
        assert wave_g1.profile(30.0) < 1e-6
        assert wave_g1.profile(0.0) == pytest.approx(THETA0)

    def test_bad_bracket(self, nl):
        with pytest.raises(RuntimeError, match="bracket"):
            tw_speed_shoot(nl, 1.0, bracket=(5.0, 10.0))


class TestExpSupersolution:
    def test_equality_point(self):
        nl1 = IgnitionNonlinearity(theta0=0.25, lipschitz_K=1.0, slope_M=1.0)
        assert exp_supersolution_params(nl1, 1.0) == (1.0, 2.0)
        assert exp_supersolution_params(nl1, 4.0) == (2.0, 4.0)

    def test_dominates_evolution_in_random_medium(self, nl):
        from ignifront.solver import GridConfig

        grid = GridConfig()
        field = ReactionField(nl, sample_medium(17, "iid-uniform", 1.0, 2.0))
        lam, c = exp_supersolution_params(nl, field.g_max)
        init = make_bump(0.625, 0.0, field, grid)
        shift = 2.0
        x = init.x()
        assert np.all(init.values <= np.exp(-lam * (x - shift)) + 1e-12)
        traj = evolve(init, field, grid, 50.0, snapshot_every=5.0)
        for snap in traj.snapshots:
            psi = np.exp(-lam * (snap.x() - shift - c * snap.t))
            assert np.max(snap.values - psi) <= 1e-6


BACK_FROM = 70.0  # the back window [-30, 0] is fully burned past this age


@pytest.fixture(scope="module")
def homog_frames(homog_field):
    from ignifront.solver import GridConfig

    grid = GridConfig()
    offsets = grid.dx * np.arange(-round(30 / grid.dx), round(10 / grid.dx) + 1)
    init = make_bump(0.625, 0.0, homog_field, grid)
    traj = evolve(init, homog_field, grid, 110.0, snapshot_every=0.5)
    return [front_frame_stack(traj, offsets, THETA0, burn_in=5.0)]


class TestEnvelope:
    def test_matches_traveling_wave(self, homog_frames, wave_g1):
        env = estimate_envelope(homog_frames, THETA0, back_from=BACK_FROM)
        offsets = homog_frames[0].offsets
        sel = offsets <= 0
        assert np.max(np.abs(env.v(offsets[sel]) - wave_g1.profile(offsets[sel]))) < 0.02

    def test_normalization_and_monotonicity(self, homog_frames):
        env = estimate_envelope(homog_frames, THETA0, back_from=BACK_FROM)
        assert env.v(0.0) == pytest.approx(THETA0, abs=1e-12)
        vals = env.v(np.linspace(-25, 10, 500))
        assert np.all(np.diff(vals) <= 1e-12)

    def test_brackets_ensemble_exactly(self, homog_frames):
        env = estimate_envelope(homog_frames, THETA0, back_from=BACK_FROM)
        offsets = homog_frames[0].offsets
        back = offsets <= 0
        ahead = offsets > 0
        for fr in homog_frames:
            late = fr.values[fr.times >= BACK_FROM]
            assert np.min(late[:, back] - env.v(offsets[back])[None, :]) >= -1e-12
            assert np.max(fr.values[:, ahead] - env.v(offsets[ahead])[None, :]) <= 1e-12

    def test_empty_ensemble_rejected(self):
        with pytest.raises(ValueError, match="ensemble"):
            estimate_envelope([], THETA0)


@pytest.fixture(scope="module")
def homog_run(homog_field):
    from ignifront.solver import GridConfig

    grid = GridConfig()
    init = make_bump(0.625, 0.0, homog_field, grid)
    return evolve(init, homog_field, grid, 40.0, snapshot_every=1.0)


class TestSupersolutionHarness:
    def test_identity_at_zero_lift(self, homog_run, homog_field):
        from ignifront.profiles import SupersolutionSpec

        spec = SupersolutionSpec(q=0.0, s=0.08, eps=0.05, K=0.75, gamma0=5.0, gamma_rate=1.0)
        rep = verify_supersolution(homog_run, spec, homog_field)
        assert rep.min_residual == 0.0

    def test_calibrated_residual_nonnegative(self, homog_run, homog_field):
        spec = calibrate_supersolution(homog_run, q=0.05, s=0.08, field=homog_field, gamma0=5.0)
        assert spec.gamma_rate > 1.0
        rep = verify_supersolution(homog_run, spec, homog_field)
        assert rep.ok
        assert rep.beta > 0
        assert rep.eps_measured > 0

    def test_ahead_region_nonnegative(self, homog_run, homog_field):
        # where u <= s the residual reduces to (gamma_rate - 1) u_t >= 0
        spec = calibrate_supersolution(homog_run, q=0.05, s=0.08, field=homog_field, gamma0=5.0)
        nl = homog_field.nonlinearity
        for snap in homog_run.snapshots:
            if snap.t < spec.gamma0:
                continue
            u = snap.values
            sel = u <= spec.s
            g = homog_field.medium.g(snap.x())
            from ignifront.profiles import _ut_field

            ut = _ut_field(snap, g, nl.f0(u))
            resid = (spec.gamma_rate - 1.0) * ut[sel]
            assert resid.min() >= 0.0

    def test_q_validation(self, homog_run, homog_field):
        with pytest.raises(ValueError, match="q"):
            calibrate_supersolution(homog_run, q=0.2, s=0.08, field=homog_field, gamma0=5.0)
