"""Ignition nonlinearities, random reaction-rate media, and reaction fields.

The reaction term has the product form ``f(x, u) = g(x) * f0(u)`` where
``f0`` is an ignition nonlinearity (zero below the ignition temperature
``theta0`` and above 1, positive in between) and ``g`` is a stationary
random field bounded between ``g_min`` and ``g_max``.

Media are lazy and defined on the whole line: the value of each unit cell
is a pure function of ``(seed, cell index)`` via a counter-based hash, so
any window can be queried in any order with bit-identical results, and
integer shifts of a medium are again media of the same family.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "IgnitionNonlinearity",
    "MediumRealization",
    "ReactionField",
    "make_nonlinearity",
    "eval_f0",
    "sample_medium",
    "shift_medium",
    "homogeneous_medium",
]

# Family codes shared with the compiled solver kernel.
FAMILY_QUADRATIC = 0
FAMILY_SMOOTH = 1

_NONLINEARITY_FAMILIES = {"quadratic": FAMILY_QUADRATIC, "smooth": FAMILY_SMOOTH}
MEDIUM_FAMILIES = ("iid-uniform", "random-constant")

# Blend fraction of each unit cell over which neighbouring cell values are
# joined with a C^1 smoothstep.
BLEND_WIDTH = 0.2


@dataclass(frozen=True)
class IgnitionNonlinearity:
    """An ignition-type reaction profile ``f0`` on [0, 1].

    Attributes:
        theta0: ignition temperature in (0, 1); ``f0`` vanishes at or
            below it.
        lipschitz_K: Lipschitz constant of ``f0`` (exact per family).
        slope_M: constant with ``f0(u) <= slope_M * u`` on [0, 1] (exact
            for the quadratic family, a valid analytic bound for the
            smooth family).
        family_tag: one of ``"quadratic"`` (default,
            ``f0(u) = (u - theta0)(1 - u)`` on the ignited range) or
            ``"smooth"`` (C^1 variant ``(u - theta0)^2 (1 - u)``).
    """

    theta0: float
    lipschitz_K: float
    slope_M: float
    family_tag: str = "quadratic"

    @property
    def family_code(self) -> int:
        return _NONLINEARITY_FAMILIES[self.family_tag]

    def f0(self, u):
        """Evaluate ``f0`` elementwise; accepts scalars or arrays."""
        arr = np.asarray(u, dtype=float)
        ignited = (arr > self.theta0) & (arr < 1.0)
        a = arr - self.theta0
        if self.family_tag == "quadratic":
            vals = a * (1.0 - arr)
        else:
            vals = a * a * (1.0 - arr)
        out = np.where(ignited, vals, 0.0)
        if np.isscalar(u) or np.ndim(u) == 0:
            return float(out)
        return out


def make_nonlinearity(family: str = "quadratic", theta0: float = 0.25) -> IgnitionNonlinearity:
    """Build a nonlinearity with analytically computed constants.

    For the quadratic family ``f0(u) = (u - theta0)(1 - u)`` the Lipschitz
    constant is ``1 - theta0`` and the tight slope bound is
    ``(1 - sqrt(theta0))^2`` (attained at ``u = sqrt(theta0)``).  For the
    smooth family ``f0(u) = (u - theta0)^2 (1 - u)`` the Lipschitz constant
    is ``(1 - theta0)^2`` (attained at ``u = 1``) and ``max f0 / theta0``
    is used as the (valid, non-tight) slope bound.

    Raises:
        ValueError: unknown family or theta0 outside (0, 1).
    """
    if family not in _NONLINEARITY_FAMILIES:
        raise ValueError(f"unknown nonlinearity family {family!r}; expected one of {sorted(_NONLINEARITY_FAMILIES)}")
    if not 0.0 < theta0 < 1.0:
        raise ValueError(f"theta0 must lie in (0, 1), got {theta0}")
    if family == "quadratic":
        lipschitz = 1.0 - theta0
        slope = (1.0 - np.sqrt(theta0)) ** 2
    else:
        lipschitz = (1.0 - theta0) ** 2
        u_peak = (2.0 + theta0) / 3.0
        f_max = (u_peak - theta0) ** 2 * (1.0 - u_peak)
        slope = f_max / theta0
    return IgnitionNonlinearity(theta0=theta0, lipschitz_K=lipschitz, slope_M=slope, family_tag=family)


def eval_f0(nl: IgnitionNonlinearity, u: float) -> float:
    """Pointwise reaction profile; zero for ``u <= theta0`` or ``u >= 1``."""
    return nl.f0(u)


# ---------------------------------------------------------------------------
# Counter-based hashing for per-cell medium values
# ---------------------------------------------------------------------------

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    z = (x + _SM_GAMMA).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _SM_MIX1
    z = (z ^ (z >> np.uint64(27))) * _SM_MIX2
    return z ^ (z >> np.uint64(31))


def _cell_uniform(seed: int, cells: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) variates, one per integer cell, as a pure hash of (seed, cell)."""
    key = _splitmix64(np.asarray([np.uint64(seed & 0xFFFFFFFFFFFFFFFF)]))[0]
    idx = cells.astype(np.int64).view(np.uint64) if cells.dtype != np.uint64 else cells
    h = _splitmix64(idx ^ key)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class MediumRealization:
    """One sample path of the reaction rate ``g(x)`` on the whole line.

    ``cell_value(j)`` is a pure function of ``(seed, j + offset)``; the
    continuous ``g`` joins neighbouring cell values with a C^1 smoothstep
    over a fraction ``BLEND_WIDTH`` of each cell, so ``g`` is Lipschitz
    with constant at most ``1.5 * (g_max - g_min) / BLEND_WIDTH``.
    """

    seed: int
    g_min: float
    g_max: float
    family_tag: str = "iid-uniform"
    offset: int = 0

    def cell_values(self, cells) -> np.ndarray:
        """Per-cell reaction levels in [g_min, g_max] for integer cell indices."""
        idx = np.asarray(cells, dtype=np.int64) + np.int64(self.offset)
        if self.g_min == self.g_max:
            return np.full(idx.shape, float(self.g_min))
        if self.family_tag == "random-constant":
            # One draw per realization: the whole line shares cell 0's level.
            idx = np.zeros_like(idx)
        u = _cell_uniform(self.seed, idx)
        return self.g_min + (self.g_max - self.g_min) * u

    def g(self, x) -> np.ndarray:
        """Evaluate the smoothed field at positions ``x`` (scalar or array)."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        nearest = np.round(xa)
        frac = xa - nearest  # in [-0.5, 0.5], distance to nearest cell boundary
        half = 0.5 * BLEND_WIDTH
        in_blend = np.abs(frac) < half
        base_cell = np.floor(xa).astype(np.int64)
        vals = self.cell_values(base_cell)
        if np.any(in_blend):
            b = nearest[in_blend].astype(np.int64)
            left = self.cell_values(b - 1)
            right = self.cell_values(b)
            t = (frac[in_blend] + half) / BLEND_WIDTH
            s = t * t * (3.0 - 2.0 * t)
            vals[in_blend] = left + (right - left) * s
        if np.isscalar(x) or np.ndim(x) == 0:
            return float(vals[0])
        return vals

    def shift(self, h: int) -> "MediumRealization":
        """The medium seen from ``x + h``: ``shifted.g(x) == self.g(x + h)`` bit-exactly."""
        if h != int(h):
            raise ValueError(f"only integer shifts are supported, got {h}")
        return replace(self, offset=self.offset + int(h))


def sample_medium(seed: int, family: str = "iid-uniform", g_min: float = 1.0, g_max: float = 2.0) -> MediumRealization:
    """Draw a medium realization.

    The default family assigns iid uniform levels on [g_min, g_max] per unit
    cell.  The ``random-constant`` family draws a single level per
    realization (useful as a non-ergodic control case).

    Raises:
        ValueError: ``g_min <= 0`` or ``g_min > g_max`` or unknown family.
    """
    if family not in MEDIUM_FAMILIES:
        raise ValueError(f"unknown medium family {family!r}; expected one of {MEDIUM_FAMILIES}")
    if g_min <= 0:
        raise ValueError(f"g_min must be positive, got {g_min}")
    if g_min > g_max:
        raise ValueError(f"g_min must not exceed g_max, got g_min={g_min} > g_max={g_max}")
    return MediumRealization(seed=int(seed), g_min=float(g_min), g_max=float(g_max), family_tag=family)


def shift_medium(medium: MediumRealization, h: int) -> MediumRealization:
    return medium.shift(h)


def homogeneous_medium(level: float = 1.0) -> MediumRealization:
    """The degenerate medium ``g(x) == level``."""
    return sample_medium(seed=0, family="iid-uniform", g_min=level, g_max=level)


@dataclass(frozen=True)
class ReactionField:
    """The full reaction term ``f(x, u) = g(x) * f0(u)``."""

    nonlinearity: IgnitionNonlinearity
    medium: MediumRealization

    @property
    def theta0(self) -> float:
        return self.nonlinearity.theta0

    @property
    def g_min(self) -> float:
        return self.medium.g_min

    @property
    def g_max(self) -> float:
        return self.medium.g_max

    @property
    def lipschitz_K(self) -> float:
        """Lipschitz constant of ``f(x, .)``, uniform in x."""
        return self.g_max * self.nonlinearity.lipschitz_K

    def f(self, x, u):
        return self.medium.g(x) * self.nonlinearity.f0(u)

    def f_min(self, u):
        """Minorant nonlinearity ``g_min * f0``."""
        return self.g_min * self.nonlinearity.f0(u)

    def f_max(self, u):
        """Majorant nonlinearity ``g_max * f0``."""
        return self.g_max * self.nonlinearity.f0(u)
