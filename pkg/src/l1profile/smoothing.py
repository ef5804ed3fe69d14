"""Kernel-weighted LAD smoothing: weighted medians, location and scale curves,
and the two-bandwidth jackknife bias correction.

Everything here is a pure function of its inputs.  The per-grid-point
windowed medians run in ``_backend`` (compiled if available).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import EmptyWindow, OutOfDomain, ValidationError
from .kernels import Kernel

SQRT2 = math.sqrt(2.0)
CURVE_KINDS = ("mu_raw", "mu_jackknife", "s_raw", "s_jackknife")


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CurveEstimate:
    """A smoothed curve sampled on an ascending grid.

    ``floor`` is the lower bound applied to scale curves (zero for
    location curves).
    """

    grid: np.ndarray
    values: np.ndarray
    bandwidth: float
    kind: str
    floor: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "grid", _readonly(self.grid))
        object.__setattr__(self, "values", _readonly(self.values))
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"bad curve kind {self.kind!r}")
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape or len(self.grid) == 0:
            raise ValueError("grid and values must be equal-length nonempty 1-d arrays")
        if len(self.grid) > 1 and not np.all(np.diff(self.grid) > 0):
            raise ValueError("curve grid must be strictly ascending")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("curve values must be finite")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    @property
    def is_scale(self) -> bool:
        return self.kind.startswith("s_")

    def __eq__(self, other):
        if not isinstance(other, CurveEstimate):
            return NotImplemented
        return (self.kind == other.kind and self.bandwidth == other.bandwidth
                and self.floor == other.floor
                and np.array_equal(self.grid, other.grid)
                and np.array_equal(self.values, other.values))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PooledData:
    """Centered points from all profiles, sorted by location.

    ``group[k]`` is the index of the profile that contributed point ``k``.
    """

    x: np.ndarray
    y: np.ndarray
    group: np.ndarray = field(default=None)
    n_groups: int = 1

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        group = (np.zeros(len(x), dtype=np.int_) if self.group is None
                 else np.asarray(self.group, dtype=np.int_))
        if not (x.shape == y.shape == group.shape) or x.ndim != 1:
            raise ValueError("x, y and group must be aligned 1-d arrays")
        if len(x) == 0:
            raise ValueError("pooled data is empty")
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "x", _readonly(x[order]))
        object.__setattr__(self, "y", _readonly(y[order]))
        object.__setattr__(self, "group", _readonly(group[order], dtype=np.int_))
        n_groups = max(self.n_groups, int(group.max()) + 1)
        object.__setattr__(self, "n_groups", n_groups)

    def with_y(self, y) -> "PooledData":
        """Same locations and groups, new (already x-ordered) values."""
        new = object.__new__(PooledData)
        object.__setattr__(new, "x", self.x)
        object.__setattr__(new, "y", _readonly(y))
        object.__setattr__(new, "group", self.group)
        object.__setattr__(new, "n_groups", self.n_groups)
        return new

    def without(self, g: int) -> "PooledData":
        keep = self.group != g
        return PooledData(self.x[keep], self.y[keep], self.group[keep], self.n_groups)


def weighted_median(values, weights) -> float:
    """Lower weighted median: the smallest sorted value whose cumulative
    weight reaches half the total.

    This is a minimizer of ``sum(w * |y - theta|)``; when the minimizer is an
    interval its left endpoint is returned.
    """
    y = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if y.shape != w.shape:
        raise ValueError("values and weights differ in length")
    if len(y) == 0:
        raise EmptyWindow()
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    order = np.argsort(y, kind="stable")
    cum = np.cumsum(w[order])
    total = cum[-1]
    if not total > 0:
        raise EmptyWindow()
    return float(y[order][np.searchsorted(cum, total * 0.5, side="left")])


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("grid must be a nonempty 1-d array")
    return np.ascontiguousarray(grid)


def _raise_empty(values, grid, bandwidth):
    bad = np.flatnonzero(np.isnan(values))
    if len(bad):
        raise EmptyWindow(float(grid[bad[0]]), bandwidth)


def lad_curve(data: PooledData, grid, kernel: Kernel, b: float) -> CurveEstimate:
    """Locally constant kernel LAD fit of the centered data at each grid point."""
    if not b > 0:
        raise ValueError("bandwidth must be positive")
    grid = _check_grid(grid)
    values = _backend.window_medians(data.x, data.y, grid, float(b), kernel.code)
    _raise_empty(values, grid, b)
    return CurveEstimate(grid, values, float(b), "mu_raw")


def residual_inputs(data: PooledData, mu_tilde: CurveEstimate, grid, residual_at="data"):
    """Values and per-grid offsets fed to the scale smoother.

    ``residual_at="data"`` uses ``|y - mu(x_ij)|`` at each observation's own
    location; ``"target"`` uses ``|y - mu(x)|`` at the grid point being
    estimated.
    """
    if residual_at == "data":
        resid = np.abs(data.y - evaluate_curve(mu_tilde, data.x))
        return resid, None, False
    if residual_at == "target":
        return np.asarray(data.y), np.ascontiguousarray(evaluate_curve(mu_tilde, grid)), True
    raise ValueError(f"residual_at must be 'data' or 'target', not {residual_at!r}")


def scale_curve(data: PooledData, mu_tilde: CurveEstimate, grid, kernel: Kernel, h: float,
                s_floor: float = 0.0, residual_at: str = "data") -> CurveEstimate:
    """Kernel-weighted median of absolute residuals about ``mu_tilde``."""
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    grid = _check_grid(grid)
    y, offset, absolute = residual_inputs(data, mu_tilde, grid, residual_at)
    values = _backend.window_medians(data.x, np.ascontiguousarray(y), grid, float(h),
                                     kernel.code, offset, absolute)
    _raise_empty(values, grid, h)
    return CurveEstimate(grid, np.maximum(values, s_floor), float(h), "s_raw", s_floor)


def jackknife(curve_b: CurveEstimate, curve_sqrt2b: CurveEstimate) -> CurveEstimate:
    """Combine fits at bandwidths ``b`` and ``sqrt(2) b`` as ``2 v_b - v_sqrt2b``.

    The leading O(b^2) smoothing bias cancels.  Scale curves are floored
    after combination.
    """
    if not np.array_equal(curve_b.grid, curve_sqrt2b.grid):
        raise ValidationError("jackknife inputs are on different grids")
    if curve_b.kind.split("_")[0] != curve_sqrt2b.kind.split("_")[0]:
        raise ValidationError("cannot combine a location curve with a scale curve")
    target = SQRT2 * curve_b.bandwidth
    if abs(curve_sqrt2b.bandwidth - target) > 1e-9 * max(1.0, target):
        raise ValidationError(
            f"second bandwidth {curve_sqrt2b.bandwidth!r} is not sqrt(2) x {curve_b.bandwidth!r}")
    values = 2.0 * curve_b.values - curve_sqrt2b.values
    if curve_b.is_scale:
        values = np.maximum(values, curve_b.floor)
        return CurveEstimate(curve_b.grid, values, curve_b.bandwidth, "s_jackknife", curve_b.floor)
    return CurveEstimate(curve_b.grid, values, curve_b.bandwidth, "mu_jackknife")


def evaluate_curve(curve: CurveEstimate, x):
    """Linear interpolation of ``curve`` at ``x`` (scalar or array).

    Exact at grid points; raises :class:`OutOfDomain` outside the grid range.
    """
    return interpolate(curve.grid, curve.values, x)


def interpolate(grid, vals, x):
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    bad = (xs < grid[0]) | (xs > grid[-1]) | np.isnan(xs)
    if np.any(bad):
        raise OutOfDomain(np.unique(xs[bad]), float(grid[0]), float(grid[-1]))
    j = np.searchsorted(grid, xs, side="right") - 1
    j = np.clip(j, 0, len(grid) - 1)
    out = vals[j].copy()
    inner = (xs > grid[j]) & (j < len(grid) - 1)
    if np.any(inner):
        jj = j[inner]
        t = (xs[inner] - grid[jj]) / (grid[jj + 1] - grid[jj])
        out[inner] = vals[jj] + t * (vals[jj + 1] - vals[jj])
    return float(out[0]) if scalar else out


def jackknife_location(data: PooledData, grid, kernel: Kernel, b: float) -> CurveEstimate:
    return jackknife(lad_curve(data, grid, kernel, b),
                     lad_curve(data, grid, kernel, SQRT2 * b))


def jackknife_scale(data: PooledData, mu_tilde: CurveEstimate, grid, kernel: Kernel, h: float,
                    s_floor: float, residual_at: str = "data") -> CurveEstimate:
    return jackknife(scale_curve(data, mu_tilde, grid, kernel, h, s_floor, residual_at),
                     scale_curve(data, mu_tilde, grid, kernel, SQRT2 * h, s_floor, residual_at))


def loo_jackknife(data: PooledData, y, grid, kernel: Kernel, b: float,
                  offset=None, absolute=False, floor=None):
    """Jackknifed leave-one-profile-out curves, one row per profile.

    Rows contain NaN wherever removing that profile empties a window.
    """
    grid = _check_grid(grid)
    y = np.ascontiguousarray(y, dtype=float)
    rows = []
    for bw in (float(b), SQRT2 * b):
        v = _backend.loo_window_medians(data.x, y, data.group, data.n_groups, grid, bw,
                                        kernel.code, offset, absolute)
        if floor is not None:
            v = np.maximum(v, floor)  # NaN propagates
        rows.append(v)
    out = 2.0 * rows[0] - rows[1]
    if floor is not None:
        out = np.maximum(out, floor)
    return out
