"""Phase I model fitting.

Profiles are centered by their (optionally density-weighted) medians, the
centered points are pooled, and the reference profile and reference
deviation curves are fitted by jackknifed kernel LAD with bandwidths chosen
by leave-one-profile-out L1 cross-validation.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import (DegenerateCenters, InsufficientProfiles, NoFeasibleBandwidth,
                     ValidationError)
from .kernels import KERNEL_CODES, Kernel
from .profiles import CenteredProfile, Profile, ProfileSet
from .smoothing import (CurveEstimate, PooledData, evaluate_curve, jackknife_location,
                        interpolate, jackknife_scale, loo_jackknife, residual_inputs, weighted_median)

FORMAT_VERSION = 1
SCALE_FLOOR_FACTOR = 1e-8


# ---------------------------------------------------------------- centers

def lower_median(values) -> float:
    v = np.sort(np.asarray(values, dtype=float))
    if len(v) == 0:
        raise ValueError("median of empty sequence")
    return float(v[(len(v) - 1) // 2])


def estimate_center(p: Profile, density=None) -> float:
    """Profile center: the lower sample median of ``y``, or, given a location
    density, the weighted median with weights ``density(x)``."""
    if density is None:
        return lower_median(p.y)
    w = np.asarray(density(p.x), dtype=float)
    if not np.all(w > 0):
        raise ValidationError(f"location density is not positive on profile {p.id!r}")
    return weighted_median(p.y, w)


def center_profile(p: Profile, density=None) -> CenteredProfile:
    delta = estimate_center(p, density)
    return CenteredProfile(p.id, delta, p.x, p.y - delta)


class LocationDensity:
    """Kernel density of pooled measurement locations on ``[a, b]``.

    Mass that would leak past either endpoint is reflected back, so the
    estimate integrates to one over the domain whenever the bandwidth does
    not exceed the domain width.
    """

    def __init__(self, locations, bandwidth, domain, kernel: Kernel = Kernel()):
        if not bandwidth > 0:
            raise ValueError("density bandwidth must be positive")
        self.a, self.b = map(float, domain)
        self.bandwidth = float(bandwidth)
        self.kernel = kernel
        x = np.sort(np.asarray(locations, dtype=float))
        self.n = len(x)
        pts = np.concatenate([x, 2 * self.a - x, 2 * self.b - x])
        lo, hi = self.a - self.bandwidth, self.b + self.bandwidth
        self._pts = np.sort(pts[(pts >= lo) & (pts <= hi)])

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        bw = self.bandwidth
        lo = np.searchsorted(self._pts, xs - bw, side="left")
        hi = np.searchsorted(self._pts, xs + bw, side="right")
        out = np.empty(len(xs))
        for k, (i, j) in enumerate(zip(lo, hi)):
            out[k] = self.kernel((self._pts[i:j] - xs[k]) / bw).sum()
        out /= self.n * bw
        return float(out[0]) if scalar else out


def default_density_bandwidth(locations, domain) -> float:
    """Silverman's rule rescaled to an Epanechnikov support half-width."""
    x = np.asarray(locations, dtype=float)
    sd = x.std(ddof=1) if len(x) > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) or sd
    h = 0.9 * spread * len(x) ** -0.2 * math.sqrt(5.0)
    width = domain[1] - domain[0]
    if not h > 0:
        h = width / 10 if width > 0 else 1.0
    return float(min(h, width)) if width > 0 else float(h)


def estimate_location_density(pset: ProfileSet, bandwidth: Optional[float] = None,
                              kernel: Kernel = Kernel()) -> LocationDensity:
    pooled = np.concatenate([p.x for p in pset])
    if bandwidth is None:
        bandwidth = default_density_bandwidth(pooled, pset.domain)
    return LocationDensity(pooled, bandwidth, pset.domain, kernel)


class GridDensity:
    """A location density tabulated on a grid, linearly interpolated."""

    def __init__(self, grid, values):
        self.grid = np.asarray(grid, dtype=float)
        self.values = np.asarray(values, dtype=float)

    def __call__(self, x):
        return interpolate(self.grid, self.values, x)


@dataclass(frozen=True, eq=False)
class CenterStats:
    deltas: np.ndarray
    mu_delta: float
    s_delta: float

    @classmethod
    def from_deltas(cls, deltas) -> "CenterStats":
        d = np.array(deltas, dtype=float)
        d.setflags(write=False)
        mu = lower_median(d)
        return cls(d, mu, lower_median(np.abs(d - mu)))

    def __eq__(self, other):
        return (isinstance(other, CenterStats) and np.array_equal(self.deltas, other.deltas)
                and self.mu_delta == other.mu_delta and self.s_delta == other.s_delta)

    __hash__ = None


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class BandwidthGrid:
    candidates: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.candidates)
        if not c:
            raise ValueError("bandwidth grid is empty")
        if any(not v > 0 for v in c) or list(c) != sorted(set(c)):
            raise ValueError("bandwidth candidates must be positive and strictly ascending")
        object.__setattr__(self, "candidates", c)

    @classmethod
    def default(cls, pset: ProfileSet, count: int = 12) -> "BandwidthGrid":
        """``count`` log-spaced values from twice the median location gap to
        a quarter of the domain width."""
        pooled = np.unique(np.concatenate([p.x for p in pset]))
        if len(pooled) < 2:
            raise InsufficientProfiles("need at least two distinct locations for smoothing")
        lo = 2.0 * float(np.median(np.diff(pooled)))
        hi = (pset.domain[1] - pset.domain[0]) / 4.0
        if not hi > lo:
            return cls((lo,))
        return cls(tuple(np.geomspace(lo, hi, count)))

    def check_resolution(self, pset: ProfileSet):
        pooled = np.unique(np.concatenate([p.x for p in pset]))
        if len(pooled) > 1:
            res = float(np.min(np.diff(pooled)))
            if self.candidates[0] <= res:
                raise ValidationError(
                    f"bandwidth {self.candidates[0]!r} does not exceed the data resolution {res!r}")


@dataclass(frozen=True)
class FitConfig:
    """Options for :func:`fit`.

    ``residual_at`` selects where the reference profile is evaluated when
    forming absolute residuals for the deviation curve: at each point's own
    location (``"data"``) or at the grid point being estimated
    (``"target"``).
    """

    kernel: str = "epanechnikov"
    bandwidth_mu: Optional[float] = None
    bandwidth_s: Optional[float] = None
    bandwidth_grid_mu: Optional[BandwidthGrid] = None
    bandwidth_grid_s: Optional[BandwidthGrid] = None
    uneven_locations: bool = False
    density_bandwidth: Optional[float] = None
    loo_scores: bool = False
    residual_at: str = "data"

    def __post_init__(self):
        for name in ("bandwidth_mu", "bandwidth_s", "density_bandwidth"):
            v = getattr(self, name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be a positive number")
        if self.residual_at not in ("data", "target"):
            raise ValidationError("residual_at must be 'data' or 'target'")
        if self.kernel not in KERNEL_CODES:
            raise ValidationError(f"unknown kernel {self.kernel!r}")


# ---------------------------------------------------------------- model

@dataclass(frozen=True, eq=False)
class FittedModel:
    center_stats: CenterStats
    mu_tilde: CurveEstimate
    s_tilde: CurveEstimate
    b_n: float
    h_n: float
    kernel: Kernel
    domain: tuple
    phase1_scores: tuple = ()
    s_floor: float = 0.0
    center_density: Optional[np.ndarray] = None
    residual_at: str = "data"
    phase1_scoring: str = "in_sample"

    def __post_init__(self):
        if not (self.b_n > 0 and self.h_n > 0):
            raise ValueError("bandwidths must be positive")
        if not np.array_equal(self.mu_tilde.grid, self.s_tilde.grid):
            raise ValueError("location and scale curves must share a grid")
        if self.phase1_scores and len(self.phase1_scores) != len(self.center_stats.deltas):
            raise ValueError("one Phase I score row per profile is required")
        if self.center_density is not None:
            d = np.array(self.center_density, dtype=float)
            d.setflags(write=False)
            object.__setattr__(self, "center_density", d)

    @property
    def grid(self):
        return self.mu_tilde.grid

    @property
    def n_profiles(self) -> int:
        return len(self.center_stats.deltas)

    @property
    def uneven_locations(self) -> bool:
        return self.center_density is not None

    def density(self):
        if self.center_density is None:
            return None
        return GridDensity(self.grid, self.center_density)

    def to_dict(self) -> dict:
        cs = self.center_stats
        return {
            "format_version": FORMAT_VERSION,
            "kernel": self.kernel.id,
            "support_halfwidth": self.kernel.support_halfwidth,
            "b_n": self.b_n,
            "h_n": self.h_n,
            "domain": list(self.domain),
            "s_floor": self.s_floor,
            "residual_at": self.residual_at,
            "phase1_scoring": self.phase1_scoring,
            "center_stats": {"deltas": cs.deltas.tolist(), "mu_delta": cs.mu_delta,
                             "s_delta": cs.s_delta},
            "grid": self.grid.tolist(),
            "mu_tilde": self.mu_tilde.values.tolist(),
            "s_tilde": self.s_tilde.values.tolist(),
            "center_density": (None if self.center_density is None
                               else self.center_density.tolist()),
            "phase1_scores": [{"id": pid, "D": d, "T1": t1, "T2": t2}
                              for pid, d, t1, t2 in self.phase1_scores],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FittedModel":
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValidationError(f"unsupported model format_version {doc.get('format_version')!r}")
        try:
            cs = doc["center_stats"]
            grid = np.array(doc["grid"], dtype=float)
            s_floor = float(doc["s_floor"])
            return cls(
                center_stats=CenterStats(np.array(cs["deltas"], dtype=float),
                                         float(cs["mu_delta"]), float(cs["s_delta"])),
                mu_tilde=CurveEstimate(grid, doc["mu_tilde"], float(doc["b_n"]), "mu_jackknife"),
                s_tilde=CurveEstimate(grid, doc["s_tilde"], float(doc["h_n"]), "s_jackknife",
                                      s_floor),
                b_n=float(doc["b_n"]),
                h_n=float(doc["h_n"]),
                kernel=Kernel(doc["kernel"], float(doc["support_halfwidth"])),
                domain=tuple(float(v) for v in doc["domain"]),
                phase1_scores=tuple((r["id"], float(r["D"]), float(r["T1"]), float(r["T2"]))
                                    for r in doc["phase1_scores"]),
                s_floor=s_floor,
                center_density=doc.get("center_density"),
                residual_at=doc.get("residual_at", "data"),
                phase1_scoring=doc.get("phase1_scoring", "in_sample"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed model document: {exc}") from exc


def model_to_json(model: FittedModel) -> str:
    return json.dumps(model.to_dict(), indent=1, sort_keys=True) + "\n"


def model_from_json(text: str) -> FittedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file is not valid JSON: {exc}") from exc
    return FittedModel.from_dict(doc)


def save_model(model: FittedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))


def load_model(path) -> FittedModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(fh.read())


def model_fingerprint(model: FittedModel) -> str:
    return hashlib.sha256(model_to_json(model).encode()).hexdigest()[:16]


# ---------------------------------------------------------------- preparation

@dataclass(frozen=True, eq=False)
class Prepared:
    """Centered, pooled Phase I data plus the evaluation grid."""

    centered: tuple
    data: PooledData
    grid: np.ndarray
    grid_index: np.ndarray  # grid position of every pooled point
    density: Optional[np.ndarray] = None
    s_floor: float = 0.0

    @property
    def deltas(self):
        return np.array([c.delta for c in self.centered])


def scale_floor(y) -> float:
    """Lower bound for the deviation curve: 1e-8 of the pooled IQR."""
    q75, q25 = np.percentile(np.asarray(y, dtype=float), [75, 25])
    iqr = float(q75 - q25)
    return SCALE_FLOOR_FACTOR * iqr if iqr > 0 else SCALE_FLOOR_FACTOR


def prepare(pset: ProfileSet, config: FitConfig = FitConfig()) -> Prepared:
    grid = np.unique(np.concatenate([p.x for p in pset]))
    density_vals = None
    density = None
    if config.uneven_locations:
        kde = estimate_location_density(pset, config.density_bandwidth, Kernel(config.kernel))
        density_vals = kde(grid)
        density = GridDensity(grid, density_vals)
    centered = tuple(center_profile(p, density) for p in pset)
    data = PooledData(np.concatenate([c.x for c in centered]),
                      np.concatenate([c.y for c in centered]),
                      np.concatenate([np.full(len(c.x), i) for i, c in enumerate(centered)]),
                      len(centered))
    return Prepared(centered, data, grid, np.searchsorted(grid, data.x), density_vals,
                    scale_floor(data.y))


# ---------------------------------------------------------------- bandwidth CV

def cv_objective_mu(prep: Prepared, b: float, kernel: Kernel) -> float:
    """Leave-one-profile-out L1 prediction error of the jackknifed reference
    profile; ``inf`` if some held-out fit has an empty window."""
    loo = loo_jackknife(prep.data, prep.data.y, prep.grid, kernel, b)
    pred = loo[prep.data.group, prep.grid_index]
    if np.isnan(pred).any():
        return math.inf
    return float(np.sum(np.abs(prep.data.y - pred)))


def cv_objective_s(prep: Prepared, mu_tilde: CurveEstimate, h: float, kernel: Kernel,
                   residual_at: str = "data") -> float:
    """Leave-one-profile-out L1 error of the jackknifed deviation curve
    against absolute residuals from the full-data reference profile."""
    resid = np.abs(prep.data.y - evaluate_curve(mu_tilde, prep.data.x))
    y, offset, absolute = residual_inputs(prep.data, mu_tilde, prep.grid, residual_at)
    loo = loo_jackknife(prep.data, y, prep.grid, kernel, h, offset, absolute,
                        floor=prep.s_floor)
    pred = loo[prep.data.group, prep.grid_index]
    if np.isnan(pred).any():
        return math.inf
    return float(np.sum(np.abs(resid - pred)))


def _argmin_candidates(objective, candidates, what):
    best, best_val = None, math.inf
    for c in candidates:
        val = objective(c)
        if val < best_val:
            best, best_val = c, val
    if best is None:
        raise NoFeasibleBandwidth(
            f"every {what} bandwidth candidate leaves an empty kernel window in some "
            f"leave-one-out fit (largest tried: {candidates[-1]!r})")
    return best


def _require_cv(pset):
    if len(pset) < 3:
        raise InsufficientProfiles(
            f"cross-validation needs at least 3 profiles, got {len(pset)}")


def select_bandwidth_mu(pset: ProfileSet, grid: Optional[BandwidthGrid] = None,
                        kernel: Kernel = Kernel(), config: FitConfig = FitConfig(),
                        prep: Optional[Prepared] = None) -> float:
    _require_cv(pset)
    grid = grid or BandwidthGrid.default(pset)
    grid.check_resolution(pset)
    prep = prep or prepare(pset, config)
    return _argmin_candidates(lambda b: cv_objective_mu(prep, b, kernel), grid.candidates, "mu")


def select_bandwidth_s(pset: ProfileSet, b_n: float, grid: Optional[BandwidthGrid] = None,
                       kernel: Kernel = Kernel(), config: FitConfig = FitConfig(),
                       prep: Optional[Prepared] = None) -> float:
    _require_cv(pset)
    grid = grid or BandwidthGrid.default(pset)
    grid.check_resolution(pset)
    prep = prep or prepare(pset, config)
    mu = jackknife_location(prep.data, prep.grid, kernel, b_n)
    return _argmin_candidates(
        lambda h: cv_objective_s(prep, mu, h, kernel, config.residual_at),
        grid.candidates, "s")


# ---------------------------------------------------------------- fit

def fit(pset: ProfileSet, config: FitConfig = FitConfig()) -> FittedModel:
    """Fit centers, bandwidths, reference profile and reference deviation,
    then score every Phase I profile against the result."""
    if len(pset) < 3:
        raise InsufficientProfiles(f"fitting needs at least 3 profiles, got {len(pset)}")
    return _fit(pset, config)


def _fit(pset: ProfileSet, config: FitConfig) -> FittedModel:
    kernel = Kernel(config.kernel)
    prep = prepare(pset, config)
    b_n = config.bandwidth_mu
    if b_n is None:
        b_n = select_bandwidth_mu(pset, config.bandwidth_grid_mu, kernel, config, prep)
    h_n = config.bandwidth_s
    if h_n is None:
        h_n = select_bandwidth_s(pset, b_n, config.bandwidth_grid_s, kernel, config, prep)
    model = _assemble(pset, prep, kernel, float(b_n), float(h_n), config)
    if config.loo_scores:
        scores = _loo_scores(pset, model, config)
        return replace(model, phase1_scores=scores, phase1_scoring="leave_one_out")
    return replace(model, phase1_scores=_in_sample_scores(pset, prep, model))


def _assemble(pset, prep, kernel, b_n, h_n, config) -> FittedModel:
    mu = jackknife_location(prep.data, prep.grid, kernel, b_n)
    s = jackknife_scale(prep.data, mu, prep.grid, kernel, h_n, prep.s_floor, config.residual_at)
    return FittedModel(
        center_stats=CenterStats.from_deltas(prep.deltas),
        mu_tilde=mu, s_tilde=s, b_n=b_n, h_n=h_n, kernel=kernel, domain=pset.domain,
        s_floor=prep.s_floor, center_density=prep.density, residual_at=config.residual_at)


def fit_fixed(pset: ProfileSet, model_like: FittedModel, config: FitConfig = FitConfig()):
    """Refit on ``pset`` reusing the bandwidths and options of ``model_like``.

    Used for leave-one-out scoring and refitting bootstrap resamples.  Phase
    I scores are filled in-sample.
    """
    config = replace(config, bandwidth_mu=model_like.b_n, bandwidth_s=model_like.h_n,
                     kernel=model_like.kernel.id, residual_at=model_like.residual_at,
                     uneven_locations=model_like.uneven_locations, loo_scores=False)
    if len(pset) < 2:
        raise InsufficientProfiles("refitting needs at least 2 profiles")
    return _fit(pset, config)


def _in_sample_scores(pset, prep, model) -> tuple:
    from .screening import shape_scores

    cs = model.center_stats
    rows = []
    for p, c in zip(pset, prep.centered):
        num = abs(c.delta - cs.mu_delta)
        if cs.s_delta > 0:
            d = num / cs.s_delta
        elif num == 0:
            d = 0.0
        else:
            raise DegenerateCenters(
                "more than half of the Phase I centers coincide; the center MAD is zero")
        t1, t2 = shape_scores(c.x, c.y, model)
        rows.append((p.id, d, t1, t2))
    return tuple(rows)


def _loo_scores(pset, model, config) -> tuple:
    from .screening import score_profile

    rows = []
    for i, p in enumerate(pset):
        others = pset.subset(j for j in range(len(pset)) if j != i)
        sub = fit_fixed(others, model, config)
        sc = score_profile(p, sub)
        rows.append((p.id, sc.D, sc.T1, sc.T2))
    return tuple(rows)
