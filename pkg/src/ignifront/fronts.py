"""Front diagnostics: interface position, level positions, width, steepness,
temporal slope, hitting times, and front-frame profile extraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .solver import Snapshot, Trajectory, _interp_crossing_right, _level_positions

__all__ = [
    "QuenchedError",
    "SaturatedError",
    "HittingTimes",
    "FrontStats",
    "FrameStack",
    "track_interface",
    "level_positions",
    "front_stats",
    "hitting_times",
    "front_frame_stack",
]


class QuenchedError(RuntimeError):
    """All sampled values are below the ignition temperature."""


class SaturatedError(RuntimeError):
    """All sampled values are above the ignition temperature (window too small)."""


def track_interface(s: Snapshot, theta0: float) -> float:
    """Rightmost ignition-level crossing, linearly interpolated.

    Raises:
        QuenchedError / SaturatedError: no crossing exists, distinguishing
            an extinguished field from a window the front has outrun.
    """
    u = s.values
    if u.max() < theta0:
        raise QuenchedError(f"max u = {u.max():.4g} < theta0 = {theta0} at t={s.t:.6g}")
    if u.min() >= theta0:
        raise SaturatedError(f"min u = {u.min():.4g} >= theta0 = {theta0} at t={s.t:.6g}")
    return float(_interp_crossing_right(s.x0, s.dx, u, theta0))


def level_positions(s: Snapshot, origin: float, h: float, k: float, theta0: float):
    """Left block position for level h and right clearance for level k.

    ``X_h_l`` is the supremum of x > origin with u > h on [origin, x); it is
    ``None`` when u(origin) <= h (legal early-time state).  ``X_k_r`` is the
    infimum of x with u < k to its right.  Both are linearly interpolated.
    """
    if not theta0 < h < 1.0:
        raise ValueError(f"h must lie in (theta0, 1), got {h}")
    if not 0.0 < k <= theta0:
        raise ValueError(f"k must lie in (0, theta0], got {k}")
    xhl, xkr = _level_positions(s, origin, h, k)
    return (None if np.isnan(xhl) else float(xhl)), (None if np.isnan(xkr) else float(xkr))


@dataclass(frozen=True)
class FrontStats:
    """Summary statistics of one monotone front run past burn-in."""

    burn_in: float
    h: float
    k: float
    width_max: float
    slope_at_X_max: float  # most positive (least steep) observed slope
    ut_at_X_min: float
    xdot_min: float
    xdot_max: float
    width_trend: float  # slope of width vs t
    width_trend_ci: float  # 95% half-width of the trend slope
    n_obs: int


def _finite(a: np.ndarray) -> np.ndarray:
    return a[np.isfinite(a)]


def front_stats(traj: Trajectory, h: float, k: float, burn_in: float) -> FrontStats:
    """Steepness, speed, and width statistics over t >= burn_in.

    The interface velocity is measured by centered finite differences of
    the interpolated position at the observer stride.

    Raises:
        ValueError: trajectory shorter than burn_in.
    """
    recs = [r for r in traj.records if r.t >= burn_in]
    if len(recs) < 3:
        raise ValueError(f"trajectory has {len(recs)} observations past burn_in={burn_in}; need >= 3")
    t = np.array([r.t for r in recs])
    X = np.array([r.X for r in recs])
    slope = np.array([r.slope_at_X for r in recs])
    ut = np.array([r.ut_at_X for r in recs])
    xhl = np.array([np.nan if r.X_h_l is None else r.X_h_l for r in recs])
    xkr = np.array([np.nan if r.X_k_r is None else r.X_k_r for r in recs])
    width = xkr - xhl
    xdot = (X[2:] - X[:-2]) / (t[2:] - t[:-2])

    wmask = np.isfinite(width)
    trend, ci = np.nan, np.nan
    if wmask.sum() >= 3:
        tw = t[wmask]
        ww = width[wmask]
        A = np.vstack([tw - tw.mean(), np.ones(tw.size)]).T
        coef, res, _, _ = np.linalg.lstsq(A, ww, rcond=None)
        trend = float(coef[0])
        dof = max(tw.size - 2, 1)
        sigma2 = float(res[0]) / dof if res.size else 0.0
        ci = 1.96 * np.sqrt(sigma2 / np.sum((tw - tw.mean()) ** 2))
    return FrontStats(
        burn_in=burn_in, h=h, k=k,
        width_max=float(np.max(_finite(width))) if wmask.any() else np.nan,
        slope_at_X_max=float(np.max(_finite(slope))),
        ut_at_X_min=float(np.min(_finite(ut))),
        xdot_min=float(np.min(_finite(xdot))),
        xdot_max=float(np.max(_finite(xdot))),
        width_trend=trend,
        width_trend_ci=float(ci),
        n_obs=len(recs),
    )


@dataclass(frozen=True)
class HittingTimes:
    """First times the right interface reaches each requested position.

    ``times[i]`` is nan when ``positions[i]`` was never reached within the
    trajectory horizon.
    """

    positions: np.ndarray
    times: np.ndarray
    provenance: dict

    def time_of(self, xi: float) -> float:
        i = int(np.searchsorted(self.positions, xi))
        if i >= self.positions.size or self.positions[i] != xi:
            raise KeyError(f"position {xi} not tracked")
        return float(self.times[i])


def hitting_times(traj: Trajectory, positions: Sequence[float]) -> HittingTimes:
    """Linear-in-time interpolation of the first up-crossing of each position."""
    t = traj.times()
    X = traj.interface()
    ok = np.isfinite(X)
    t, X = t[ok], X[ok]
    pos = np.asarray(sorted(positions), dtype=float)
    out = np.full(pos.size, np.nan)
    # running maximum makes the crossing search monotone in time
    runmax = np.maximum.accumulate(X)
    for i, xi in enumerate(pos):
        j = int(np.searchsorted(runmax, xi))
        if j >= runmax.size:
            continue
        if j == 0:
            out[i] = t[0]
            continue
        x_prev, x_here = runmax[j - 1], runmax[j]
        if x_here > x_prev:
            out[i] = t[j - 1] + (t[j] - t[j - 1]) * (xi - x_prev) / (x_here - x_prev)
        else:
            out[i] = t[j]
    return HittingTimes(positions=pos, times=out, provenance=dict(traj.provenance))


@dataclass(frozen=True)
class FrameStack:
    """Profiles in the frame of the right interface: ``values[i] = u(t_i, X(t_i) + offsets)``."""

    times: np.ndarray
    offsets: np.ndarray
    values: np.ndarray


def front_frame_stack(
    traj: Trajectory,
    offsets: np.ndarray,
    theta0: float,
    burn_in: float = 0.0,
    t_max: Optional[float] = None,
) -> FrameStack:
    """Sample stored snapshots in the frame of the right interface.

    Snapshots without a crossing are skipped.
    """
    offsets = np.asarray(offsets, dtype=float)
    rows = []
    ts = []
    for snap in traj.snapshots:
        if snap.t < burn_in or (t_max is not None and snap.t > t_max):
            continue
        X = _interp_crossing_right(snap.x0, snap.dx, snap.values, theta0)
        if not np.isfinite(X):
            continue
        rows.append(snap.interp(X + offsets))
        ts.append(snap.t)
    if not rows:
        raise ValueError("no usable snapshots past burn-in")
    return FrameStack(times=np.array(ts), offsets=offsets, values=np.vstack(rows))
