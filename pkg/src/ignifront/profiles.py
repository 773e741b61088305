"""Analytic auxiliary solutions: bump sub-solution, homogeneous traveling
waves and their speeds, exponential super-solutions, the empirical front
envelope, and the lifted/time-dilated super-solution verification harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .reaction import IgnitionNonlinearity

__all__ = [
    "BumpSubsolution",
    "HomogeneousWave",
    "EnvelopeEstimate",
    "SupersolutionSpec",
    "SupersolutionReport",
    "build_bump",
    "tw_speed_shoot",
    "exp_supersolution_params",
    "estimate_envelope",
    "verify_supersolution",
    "calibrate_supersolution",
]

RK4_STEP = 1e-3
SHOOT_TOL = 1e-6
SHOOT_BRACKET = (1e-3, 1e3)


@njit(cache=True)
def _f0_jit(u, theta0, family):  # pragma: no cover - compiled
    if u <= theta0 or u >= 1.0:
        return 0.0
    if family == 0:
        return (u - theta0) * (1.0 - u)
    return (u - theta0) * (u - theta0) * (1.0 - u)


@njit(cache=True)
def _shoot_classify(c, g, theta0, family, ds, smax):  # pragma: no cover - compiled
    """Integrate W'' = c W' - g f0(W) from (theta0, c*theta0); forward in s = -x.

    Returns +1 if W exceeds 1 (speed too large), -1 if W' hits zero below 1
    (too small), 0 if undecided within smax.
    """
    w = theta0
    v = c * theta0
    s = 0.0
    while s < smax:
        k1w = v
        k1v = c * v - g * _f0_jit(w, theta0, family)
        w2 = w + 0.5 * ds * k1w
        v2 = v + 0.5 * ds * k1v
        k2w = v2
        k2v = c * v2 - g * _f0_jit(w2, theta0, family)
        w3 = w + 0.5 * ds * k2w
        v3 = v + 0.5 * ds * k2v
        k3w = v3
        k3v = c * v3 - g * _f0_jit(w3, theta0, family)
        w4 = w + ds * k3w
        v4 = v + ds * k3v
        k4w = v4
        k4v = c * v4 - g * _f0_jit(w4, theta0, family)
        w += ds * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        v += ds * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
        s += ds
        if w > 1.0:
            return 1
        if v <= 0.0:
            return -1
    return 0


@njit(cache=True)
def _shoot_profile(c, g, theta0, family, ds, smax):  # pragma: no cover - compiled
    nmax = int(smax / ds) + 2
    ws = np.empty(nmax)
    vs = np.empty(nmax)
    w = theta0
    v = c * theta0
    ws[0] = w
    vs[0] = v
    n = 1
    while n < nmax:
        k1w = v
        k1v = c * v - g * _f0_jit(w, theta0, family)
        w2 = w + 0.5 * ds * k1w
        v2 = v + 0.5 * ds * k1v
        k2w = v2
        k2v = c * v2 - g * _f0_jit(w2, theta0, family)
        w3 = w + 0.5 * ds * k2w
        v3 = v + 0.5 * ds * k2v
        k3w = v3
        k3v = c * v3 - g * _f0_jit(w3, theta0, family)
        w4 = w + ds * k3w
        v4 = v + ds * k3v
        k4w = v4
        k4v = c * v4 - g * _f0_jit(w4, theta0, family)
        w += ds * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        v += ds * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
        ws[n] = w
        vs[n] = v
        n += 1
        if w >= 1.0 - 1e-9 or v <= 0.0:
            break
    return ws[:n], vs[:n]


@dataclass(frozen=True)
class HomogeneousWave:
    """Traveling wave of ``u_t = u_xx + g f0(u)`` at a constant level g.

    The profile is decreasing with U(-inf)=1, U(0)=theta0 and the exact
    ignition tail ``U(x) = theta0 exp(-c x)`` for x >= 0.
    """

    speed: float
    level_g: float
    theta0: float
    x_back: np.ndarray  # nonpositive abscissas, increasing to 0
    u_back: np.ndarray  # profile values on x_back
    tol: float
    iterations: int
    family_code: int = 0

    def profile(self, x) -> np.ndarray:
        xa = np.asarray(x, dtype=float)
        ahead = self.theta0 * np.exp(-self.speed * np.clip(xa, 0.0, None))
        behind = np.interp(xa, self.x_back, self.u_back, left=1.0, right=self.theta0)
        out = np.where(xa >= 0.0, ahead, behind)
        return float(out) if np.ndim(x) == 0 else out

    def position_of(self, level: float) -> float:
        """Abscissa where the profile crosses ``level`` (profile is monotone)."""
        if level <= 0.0 or level >= 1.0:
            raise ValueError("level must be in (0, 1)")
        if level <= self.theta0:
            return np.log(self.theta0 / level) / self.speed
        # u_back decreases in x; invert by interpolation
        return float(np.interp(level, self.u_back[::-1], self.x_back[::-1]))

    def residual(self) -> float:
        """Max |U'' + c U' + g f0(U)| over the computed back profile (interior nodes)."""
        u = self.u_back
        x = self.x_back
        dx = x[1] - x[0]
        upp = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (dx * dx)
        up = (u[2:] - u[:-2]) / (2.0 * dx)
        mid = u[1:-1]
        ign = (mid > self.theta0) & (mid < 1.0)
        if self.family_code == 0:
            f0 = np.where(ign, (mid - self.theta0) * (1.0 - mid), 0.0)
        else:
            f0 = np.where(ign, (mid - self.theta0) ** 2 * (1.0 - mid), 0.0)
        return float(np.max(np.abs(upp + self.speed * up + self.level_g * f0)))


def tw_speed_shoot(
    nl: IgnitionNonlinearity,
    g: float,
    tol: float = SHOOT_TOL,
    bracket: tuple[float, float] = SHOOT_BRACKET,
) -> HomogeneousWave:
    """Unique ignition-wave speed by shooting with bisection on c.

    Starts from the exact exponential-tail matching condition
    ``(U, U') = (theta0, -c theta0)`` at the interface and integrates into
    the wave back; trajectories that overshoot u=1 mark speeds that are too
    large, stalling derivatives mark speeds that are too small.  The
    bracket is halved until its width is below ``tol``; the result does
    not depend on the bracket as long as it straddles the speed.

    Raises:
        RuntimeError: the bracket does not straddle a sign change
            (mis-specified nonlinearity).
    """
    if g <= 0:
        raise ValueError(f"reaction level g must be positive, got {g}")
    theta0 = nl.theta0
    fam = nl.family_code
    smax = 400.0
    lo, hi = bracket
    if _shoot_classify(lo, g, theta0, fam, RK4_STEP, smax) != -1 or _shoot_classify(hi, g, theta0, fam, RK4_STEP, smax) != 1:
        raise RuntimeError(f"shooting bracket {bracket} does not straddle the wave speed for g={g}")
    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        cls = _shoot_classify(mid, g, theta0, fam, RK4_STEP, smax)
        if cls == 1:
            hi = mid
        else:
            lo = mid
        iterations += 1
    c = 0.5 * (lo + hi)
    ws, _ = _shoot_profile(c, g, theta0, fam, RK4_STEP, smax)
    xs = -RK4_STEP * np.arange(ws.size)
    return HomogeneousWave(
        speed=float(c), level_g=float(g), theta0=theta0,
        x_back=xs[::-1].copy(), u_back=ws[::-1].copy(), tol=tol, iterations=iterations,
        family_code=fam,
    )


@dataclass(frozen=True)
class BumpSubsolution:
    """Compactly supported stationary sub-solution built on the minorant reaction.

    ``profile`` solves ``-z'' = g_min f0(z)`` from the even peak (h0, 0);
    z1 is the first positive ignition crossing, z2 the first zero.  On
    [z1, z2] the profile is exactly affine (the reaction is off there).
    """

    h0: float
    g_min: float
    theta0: float
    z1: float
    z2: float
    xs: np.ndarray  # dense nonnegative abscissas
    zs: np.ndarray  # profile values on xs (down to 0 at z2)

    def profile_hat(self, x) -> np.ndarray:
        """The even ODE solution (may be negative beyond z2 only by clamping: here table-limited)."""
        xa = np.abs(np.asarray(x, dtype=float))
        out = np.interp(xa, self.xs, self.zs, right=0.0)
        return float(out) if np.ndim(x) == 0 else out

    def zeta(self, x) -> np.ndarray:
        """max(profile_hat, 0): the sub-solution initial datum."""
        vals = self.profile_hat(x)
        return np.maximum(vals, 0.0)


def build_bump(nl: IgnitionNonlinearity, g_min: float, h0: float, rk4_step: float = RK4_STEP) -> BumpSubsolution:
    """Integrate the bump ODE with fixed-step RK4 (default step 1e-3) until it hits zero."""
    theta0 = nl.theta0
    if not theta0 < h0 < 1.0:
        raise ValueError(f"h0 must lie in (theta0, 1) = ({theta0}, 1), got {h0}")
    if g_min <= 0:
        raise ValueError(f"g_min must be positive, got {g_min}")
    ds = rk4_step
    fam = nl.family_code
    xs_list = [0.0]
    zs_list = [h0]
    z, v = h0, 0.0
    x = 0.0
    # crossing of theta0 (z1) and of zero (z2), linearly interpolated
    z1 = None
    while z > 0.0 and x < 1e3:
        k1z = v
        k1v = -g_min * _f0_jit(z, theta0, fam)
        z2_ = z + 0.5 * ds * k1z
        v2_ = v + 0.5 * ds * k1v
        k2z = v2_
        k2v = -g_min * _f0_jit(z2_, theta0, fam)
        z3_ = z + 0.5 * ds * k2z
        v3_ = v + 0.5 * ds * k2v
        k3z = v3_
        k3v = -g_min * _f0_jit(z3_, theta0, fam)
        z4_ = z + ds * k3z
        v4_ = v + ds * k3v
        k4z = v4_
        k4v = -g_min * _f0_jit(z4_, theta0, fam)
        z_new = z + ds * (k1z + 2 * k2z + 2 * k3z + k4z) / 6.0
        v = v + ds * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
        x += ds
        if z1 is None and z_new <= theta0 < z:
            z1 = x - ds + ds * (z - theta0) / (z - z_new)
        z = z_new
        xs_list.append(x)
        zs_list.append(z)
    if z > 0.0:
        raise RuntimeError("bump integration did not reach zero; check the nonlinearity")
    xs = np.array(xs_list)
    zs = np.array(zs_list)
    # interpolate the zero crossing and truncate the table there
    z2 = xs[-2] + ds * zs[-2] / (zs[-2] - zs[-1])
    xs[-1] = z2
    zs[-1] = 0.0
    return BumpSubsolution(h0=h0, g_min=g_min, theta0=theta0, z1=float(z1), z2=float(z2), xs=xs, zs=zs)


def exp_supersolution_params(nl: IgnitionNonlinearity, g_max: float) -> tuple[float, float]:
    """Decay rate and speed of the exponential super-solution.

    ``exp(-lam (x - c t))`` rides above any solution provided
    ``c * lam >= lam^2 + M g_max``; the returned pair is the equality point
    ``lam = sqrt(M g_max)``, ``c = 2 lam`` that minimizes the speed.
    """
    lam = float(np.sqrt(nl.slope_M * g_max))
    return lam, 2.0 * lam


@dataclass(frozen=True)
class EnvelopeEstimate:
    """Empirical front-frame envelope: a non-increasing bound profile.

    Behind the interface (x <= 0) the envelope is the pointwise minimum over
    the calibration ensemble; ahead it is the steepest exponential
    ``theta0 exp(-p_hat x)`` dominating every ensemble profile.
    """

    theta0: float
    p_hat: float
    offsets_back: np.ndarray  # nonpositive, increasing
    values_back: np.ndarray
    n_runs: int
    n_profiles: int

    def v(self, x) -> np.ndarray:
        xa = np.asarray(x, dtype=float)
        ahead = self.theta0 * np.exp(-self.p_hat * np.clip(xa, 0.0, None))
        behind = np.interp(xa, self.offsets_back, self.values_back)
        out = np.where(xa >= 0.0, ahead, behind)
        return float(out) if np.ndim(x) == 0 else out

    def inverse_back(self, level: float) -> float:
        """Leftmost offset where the back envelope reaches ``level`` (<= v(-R))."""
        vb = self.values_back
        if level > vb[0]:
            raise ValueError(f"level {level} above envelope maximum {vb[0]}")
        # values_back is non-increasing in x
        return float(np.interp(-level, -vb, self.offsets_back))


def estimate_envelope(frames: Sequence, theta0: float, back_from: float = 0.0) -> EnvelopeEstimate:
    """Build the envelope from front-frame profile stacks.

    Args:
        frames: :class:`~ignifront.fronts.FrameStack` per run, all sampled
            on the same offsets.
        theta0: ignition temperature (envelope value at the origin).
        back_from: earliest time contributing to the back (x <= 0) branch;
            the run must be old enough that the whole back window is burned,
            roughly ``|offset_min| / front speed``.  All rows contribute to
            the decay fit ahead, where the exponential bound holds from the
            start.

    Raises:
        ValueError: empty ensemble or no usable rows/offsets.
    """
    if not frames:
        raise ValueError("estimate_envelope requires a nonempty ensemble")
    offsets = np.asarray(frames[0].offsets, dtype=float)
    for fr in frames:
        if not np.array_equal(fr.offsets, offsets):
            raise ValueError("all frames must share the same offsets")
    all_rows = np.vstack([fr.values for fr in frames])
    back_rows = np.vstack([fr.values[fr.times >= back_from] for fr in frames])
    if back_rows.size == 0:
        raise ValueError(f"no rows at or past back_from={back_from}")
    back = offsets <= 0.0
    ahead = offsets > 0.0
    raw_min = back_rows[:, back].min(axis=0)
    # running minimum from the left: non-increasing, never above any profile
    values_back = np.minimum.accumulate(raw_min)
    xs_pos = offsets[ahead]
    max_ahead = all_rows[:, ahead].max(axis=0)
    usable = max_ahead > 1e-10
    if not np.any(usable):
        raise ValueError("no usable positive offsets for the decay fit")
    rates = -np.log(max_ahead[usable] / theta0) / xs_pos[usable]
    p_hat = float(rates.min())
    if p_hat <= 0:
        raise ValueError(f"fitted decay rate is not positive: {p_hat}")
    return EnvelopeEstimate(
        theta0=theta0, p_hat=p_hat,
        offsets_back=offsets[back].copy(), values_back=values_back,
        n_runs=len(frames), n_profiles=int(all_rows.shape[0]),
    )


# ---------------------------------------------------------------------------
# Super-solution harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SupersolutionSpec:
    """Parameters of the lifted, time-dilated super-solution.

    The candidate is ``min(1, u(gamma(t), x) + q)`` with
    ``gamma(t) = gamma0 + gamma_rate * t``; it is a super-solution when
    ``gamma_rate >= 1 + K q / eps`` for the Lipschitz constant K of the
    reaction and a positive floor eps on u_t over the interface zone
    ``{s <= u <= 1 - s}``.
    """

    q: float
    s: float
    eps: float
    K: float
    gamma0: float
    gamma_rate: float
    y_h: float = -15.0  # back cutoff of the interface zone, in the front frame

    @property
    def h(self) -> float:
        return 1.0 - self.q

    def __post_init__(self):
        if self.gamma_rate < 1.0:
            raise ValueError("gamma_rate must be >= 1")
        if self.y_h >= 0.0:
            raise ValueError("y_h must be negative (a distance behind the interface)")


@dataclass(frozen=True)
class SupersolutionReport:
    ok: bool
    min_residual: float
    argmin_t: float
    argmin_x: float
    beta: float
    eps_measured: float
    junction_min: float  # min of u + q at the back cutoff; >= 1 validates the splice to 1
    n_times: int
    n_points: int


RESIDUAL_TOL = 1e-6


def _ut_field(snap, g_nodes, f0_vals) -> np.ndarray:
    """PDE time derivative u_xx + g f0(u) with boundary ghosts."""
    u = snap.values
    dx = snap.dx
    ghost = np.concatenate([[snap.bc_left], u, [snap.bc_right]])
    uxx = (ghost[2:] - 2.0 * ghost[1:-1] + ghost[:-2]) / (dx * dx)
    return uxx + g_nodes * f0_vals


def verify_supersolution(run, spec: SupersolutionSpec, field) -> SupersolutionReport:
    """Check the super-solution residual of the lifted, dilated candidate.

    ``run`` must be a monotone trajectory with stored snapshots; every
    snapshot with ``t >= gamma0`` is interpreted as the dilated state at
    check time ``(t - gamma0) / gamma_rate``, where the residual reduces
    algebraically to ``(gamma_rate - 1) u_t + g (f0(u) - f0(u + q))`` on
    the set ``{u + q < 1}``.

    Also reports the measured interface-zone half-width and the measured
    floor of u_t over the zone (used to recalibrate eps when the check
    fails).
    """
    from .solver import _interp_crossing_right

    snaps = [s for s in run.snapshots if s.t >= spec.gamma0 - 1e-12]
    if not snaps:
        raise ValueError("trajectory has no snapshots at or past gamma0")
    nl = field.nonlinearity
    worst = np.inf
    arg_t = np.nan
    arg_x = np.nan
    beta = 0.0
    eps_m = np.inf
    junction = np.inf
    n_pts = 0
    for snap in snaps:
        u = snap.values
        x = snap.x()
        g_nodes = field.medium.g(x)
        f0u = nl.f0(u)
        ut = _ut_field(snap, g_nodes, f0u)
        X = _interp_crossing_right(snap.x0, snap.dx, u, field.theta0)
        lifted = u + spec.q
        # the candidate is identically 1 at and behind the back cutoff, so
        # the residual applies on {u + q < 1} ahead of it; the splice is
        # valid when the lift already reaches 1 at the cutoff
        offset = x - X
        active = (lifted < 1.0) & (offset > spec.y_h)
        junction_band = (offset <= spec.y_h) & (offset >= spec.y_h - 1.0)
        if np.any(junction_band):
            junction = min(junction, float(lifted[junction_band].min()))
        resid = (spec.gamma_rate - 1.0) * ut + g_nodes * (f0u - nl.f0(np.minimum(lifted, 1.0)))
        resid = np.where(active, resid, np.inf)
        i = int(np.argmin(resid))
        if resid[i] < worst:
            worst = float(resid[i])
            arg_t = snap.t
            arg_x = snap.x0 + i * snap.dx
        n_pts += int(active.sum())
        zone = (u >= spec.s) & (u <= 1.0 - spec.s) & (offset >= spec.y_h)
        if np.any(zone):
            beta = max(beta, float(np.max(np.abs(x[zone] - X))))
            eps_m = min(eps_m, float(ut[zone].min()))
    return SupersolutionReport(
        ok=bool(worst >= -RESIDUAL_TOL),
        min_residual=worst,
        argmin_t=arg_t,
        argmin_x=arg_x,
        beta=beta,
        eps_measured=eps_m,
        junction_min=junction,
        n_times=len(snaps),
        n_points=n_pts,
    )


def calibrate_supersolution(run, q: float, s: float, field, gamma0: float, y_h: float = -15.0) -> SupersolutionSpec:
    """Measure the u_t floor over the interface zone and set the dilation rate.

    The zone floor eps is taken over all stored snapshots with t >= gamma0,
    restricted to the right-front frame beyond the back cutoff ``y_h``; the
    returned spec uses ``gamma_rate = 1 + K q / eps`` with K the Lipschitz
    constant of the full reaction.
    """
    theta0 = field.theta0
    if not 0.0 < q < theta0 / 3.0:
        raise ValueError(f"q must lie in (0, theta0/3) = (0, {theta0 / 3:.4g}), got {q}")
    if not 0.0 < s < theta0 / 3.0:
        raise ValueError(f"s must lie in (0, theta0/3), got {s}")
    from .solver import _interp_crossing_right

    nl = field.nonlinearity
    eps = np.inf
    for snap in run.snapshots:
        if snap.t < gamma0 - 1e-12:
            continue
        u = snap.values
        X = _interp_crossing_right(snap.x0, snap.dx, u, theta0)
        zone = (u >= s) & (u <= 1.0 - s) & (snap.x() - X >= y_h)
        if not np.any(zone):
            continue
        g_nodes = field.medium.g(snap.x())
        ut = _ut_field(snap, g_nodes, nl.f0(u))
        eps = min(eps, float(ut[zone].min()))
    if not np.isfinite(eps) or eps <= 0:
        raise ValueError(f"measured u_t floor over the zone is not positive: {eps}")
    K = field.lipschitz_K
    return SupersolutionSpec(q=q, s=s, eps=eps, K=K, gamma0=gamma0, gamma_rate=1.0 + K * q / eps, y_h=y_h)
