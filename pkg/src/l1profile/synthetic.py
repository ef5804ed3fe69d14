"""Synthetic VDP-like profiles.

Each profile is ``delta_i + pi(x)' alpha + contamination(x) + e_i(x)`` where
``pi`` is a clamped quadratic B-spline basis with eight functions, ``delta_i``
is normal, and ``e_i`` is a stationary process with correlation
``exp(-rate |x - x'|)``: Gaussian, or a Gaussian copula with scaled t3
margins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

import numpy as np
from scipy import optimize, stats

from .errors import RankDeficient, ValidationError
from .phase1 import estimate_center
from .profiles import Profile, ProfileSet, make_grid

VDP_DOMAIN = (0.0, 0.626)
VDP_STEP = 0.002
VDP_INTERNAL_KNOTS = (0.06, 0.16, 0.31, 0.47, 0.56)
ERROR_KINDS = ("gaussian", "t3_scaled")


@dataclass(frozen=True)
class BSplineBasis:
    internal_knots: tuple = VDP_INTERNAL_KNOTS
    domain: tuple = VDP_DOMAIN
    order: int = 3  # quadratic

    @property
    def degree(self) -> int:
        return self.order - 1

    @property
    def knots(self) -> np.ndarray:
        a, b = self.domain
        return np.concatenate([[a] * self.order, self.internal_knots, [b] * self.order])

    @property
    def n_basis(self) -> int:
        return len(self.knots) - self.order


def bspline_eval(basis: BSplineBasis, x):
    """Evaluate all basis functions at ``x`` by the Cox-de Boor recursion.

    Returns shape ``(n_basis,)`` for scalar ``x`` and ``(len(x), n_basis)``
    otherwise.  The right endpoint belongs to the last knot span.
    """
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    a, b = basis.domain
    if np.any((xs < a) | (xs > b)) or np.any(np.isnan(xs)):
        raise ValidationError(f"B-spline argument outside [{a}, {b}]")
    t = basis.knots
    nk = len(t)
    # degree-0 indicators on half-open spans [t_k, t_k+1)
    B = ((t[None, :-1] <= xs[:, None]) & (xs[:, None] < t[None, 1:])).astype(float)
    last = np.flatnonzero(t[:-1] < t[1:])[-1]
    B[xs == b, :] = 0.0
    B[xs == b, last] = 1.0
    for d in range(1, basis.order):
        nxt = np.zeros((len(xs), nk - 1 - d))
        for k in range(nk - 1 - d):
            den1 = t[k + d] - t[k]
            den2 = t[k + d + 1] - t[k + 1]
            term = 0.0
            if den1 > 0:
                term = (xs - t[k]) / den1 * B[:, k]
            if den2 > 0:
                term = term + (t[k + d + 1] - xs) / den2 * B[:, k + 1]
            nxt[:, k] = term
        B = nxt
    B = B + 0.0  # drop negative zeros
    return B[0] if scalar else B


@dataclass(frozen=True)
class Contamination:
    """Deterministic shape distortion added to a profile.

    ``sine``: ``amplitude * sin(10 pi x)``.  ``spike``:
    ``amplitude * phi((x - center) / spread) / width`` with ``phi`` the
    standard normal density; ``spread=1`` reproduces the printed model,
    ``spread=width`` gives a localized bump.
    """

    kind: str = "none"
    amplitude: float = 0.0
    center: float = 0.3
    width: float = 0.005
    spread: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "sine", "spike"):
            raise ValidationError(f"unknown contamination {self.kind!r}")
        if self.kind == "spike" and not (self.width > 0 and self.spread > 0):
            raise ValidationError("spike width and spread must be positive")

    @classmethod
    def sine(cls, A: float) -> "Contamination":
        return cls("sine", float(A))

    @classmethod
    def spike(cls, B: float, center: float = 0.3, width: float = 0.005,
              spread: float = 1.0) -> "Contamination":
        return cls("spike", float(B), center, width, spread)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "sine":
            return self.amplitude * np.sin(10.0 * np.pi * x)
        if self.kind == "spike":
            return self.amplitude * stats.norm.pdf((x - self.center) / self.spread) / self.width
        return np.zeros_like(x)


@dataclass(frozen=True, eq=False)
class SyntheticSpec:
    locations: np.ndarray
    alpha0_coeffs: tuple
    sigma_delta: float
    sigma: float
    error_kind: str = "gaussian"
    corr_rate: float = 8.0
    contamination: Contamination = field(default_factory=Contamination)
    seed: int = 0
    basis: BSplineBasis = field(default_factory=BSplineBasis)

    def __post_init__(self):
        loc = np.array(self.locations, dtype=float)
        loc.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "alpha0_coeffs", tuple(float(c) for c in self.alpha0_coeffs))
        if len(self.alpha0_coeffs) != self.basis.n_basis:
            raise ValidationError(f"need exactly {self.basis.n_basis} spline coefficients")
        if len(loc) == 0 or (len(loc) > 1 and not np.all(np.diff(loc) > 0)):
            raise ValidationError("locations must be nonempty and strictly increasing")
        if not (self.sigma_delta >= 0 and self.sigma >= 0 and self.corr_rate > 0):
            raise ValidationError("need sigma_delta >= 0, sigma >= 0, corr_rate > 0")
        if self.error_kind not in ERROR_KINDS:
            raise ValidationError(f"error_kind must be one of {ERROR_KINDS}")

    def __eq__(self, other):
        if not isinstance(other, SyntheticSpec):
            return NotImplemented
        return self.to_config() == other.to_config()

    __hash__ = None

    def with_(self, **changes) -> "SyntheticSpec":
        return replace(self, **changes)

    def mean_curve(self, x=None) -> np.ndarray:
        x = self.locations if x is None else x
        return bspline_eval(self.basis, x) @ np.asarray(self.alpha0_coeffs)

    def to_config(self) -> list:
        """``key=value`` lines describing the spec (locations summarized)."""
        loc = self.locations
        steps = np.diff(loc)
        if len(loc) > 1 and np.allclose(steps, steps[0], rtol=0, atol=1e-9):
            loc_txt = f"grid:{float(loc[0])!r}:{float(loc[-1])!r}:{float(np.round(steps[0], 12))!r}"
        else:
            loc_txt = "list:" + " ".join(repr(v) for v in loc.tolist())
        c = self.contamination
        return [
            f"locations={loc_txt}",
            "alpha0_coeffs=" + " ".join(repr(v) for v in self.alpha0_coeffs),
            f"sigma_delta={self.sigma_delta!r}",
            f"sigma={self.sigma!r}",
            f"error_kind={self.error_kind}",
            f"corr_rate={self.corr_rate!r}",
            f"contamination={c.kind}",
            f"contamination_amplitude={c.amplitude!r}",
            f"contamination_center={c.center!r}",
            f"contamination_width={c.width!r}",
            f"contamination_spread={c.spread!r}",
            f"seed={self.seed}",
            "internal_knots=" + " ".join(repr(v) for v in self.basis.internal_knots),
            f"domain={self.basis.domain[0]!r} {self.basis.domain[1]!r}",
        ]

    @classmethod
    def from_config(cls, lines) -> "SyntheticSpec":
        kv = parse_key_values(lines)
        try:
            loc = kv["locations"]
            if loc.startswith("grid:"):
                a, b, step = (float(v) for v in loc[5:].split(":"))
                locations = make_grid(a, b, step)
            else:
                locations = [float(v) for v in loc[5:].split()]
            lo, hi = (float(v) for v in kv["domain"].split())
            basis = BSplineBasis(tuple(float(v) for v in kv["internal_knots"].split()), (lo, hi))
            cont = Contamination(kv["contamination"], float(kv["contamination_amplitude"]),
                                 float(kv["contamination_center"]),
                                 float(kv["contamination_width"]),
                                 float(kv["contamination_spread"]))
            return cls(locations, tuple(float(v) for v in kv["alpha0_coeffs"].split()),
                       float(kv["sigma_delta"]), float(kv["sigma"]), kv["error_kind"],
                       float(kv["corr_rate"]), cont, int(kv["seed"]), basis)
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"bad synthetic spec config: {exc}") from exc


def parse_key_values(lines) -> dict:
    kv = {}
    for ln in lines:
        ln = ln.strip()
        if ln.startswith("#"):
            ln = ln[1:].strip()
        if not ln or "=" not in ln:
            continue
        k, v = ln.split("=", 1)
        kv[k.strip()] = v.strip()
    return kv


# ---------------------------------------------------------------- error processes

def exp_corr_paths(locations, sigma: float, rate: float, rng: np.random.Generator,
                   n_paths: Optional[int] = None) -> np.ndarray:
    """Stationary Gaussian paths with covariance ``sigma^2 exp(-rate |x - x'|)``.

    On an ordered grid this covariance is Markov, so the exact sampler is the
    AR(1) recursion ``e_{j+1} = rho_j e_j + sqrt(1 - rho_j^2) sigma z`` with
    ``rho_j = exp(-rate (x_{j+1} - x_j))``.
    """
    x = np.asarray(locations, dtype=float)
    shape = (len(x),) if n_paths is None else (n_paths, len(x))
    z = rng.standard_normal(shape)
    if n_paths is None:
        z = z[None, :]
    rho = np.exp(-rate * np.diff(x))
    innov = np.sqrt(1.0 - rho * rho)
    e = np.empty_like(z)
    e[:, 0] = sigma * z[:, 0]
    for j in range(1, len(x)):
        e[:, j] = rho[j - 1] * e[:, j - 1] + innov[j - 1] * sigma * z[:, j]
    return e[0] if n_paths is None else e


def gaussian_to_t3(e, sigma: float) -> np.ndarray:
    """Map N(0, sigma^2) values through the normal CDF and the t3 quantile,
    scaled so the variance is ``sigma^2``.

    Computed on the upper tail for both signs, which keeps the map odd and
    strictly increasing for ``|z| <= 37``; beyond that the normal tail
    underflows, so ``z`` is clipped there to keep values finite.
    """
    e = np.asarray(e, dtype=float)
    if sigma == 0:
        return np.zeros_like(e)
    z = np.clip(e / sigma, -37.0, 37.0)
    t = np.sign(z) * stats.t.isf(stats.norm.sf(np.abs(z)), df=3)
    return t * (sigma / math.sqrt(3.0))


def sample_error_path(spec: SyntheticSpec, rng: np.random.Generator,
                      n_paths: Optional[int] = None) -> np.ndarray:
    e = exp_corr_paths(spec.locations, spec.sigma, spec.corr_rate, rng, n_paths)
    if spec.error_kind == "t3_scaled":
        e = gaussian_to_t3(e, spec.sigma)
    return e


def profile_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


def generate(spec: SyntheticSpec, n_profiles: int, stream: int = 0,
             id_prefix: str = "P") -> ProfileSet:
    """Draw ``n_profiles`` profiles; profile ``i`` uses the random stream
    keyed by ``(spec.seed, stream, i)``, so contaminated and clean twins
    with equal seeds share centers and error paths."""
    if n_profiles < 1:
        raise ValidationError("n_profiles must be at least 1")
    x = spec.locations
    base_mean = spec.mean_curve()
    bump = spec.contamination(x)
    width = max(3, len(str(n_profiles)))
    profiles = []
    for i in range(n_profiles):
        rng = profile_rng(spec.seed, i, stream)
        delta = spec.sigma_delta * rng.standard_normal()
        e = sample_error_path(spec, rng)
        y = delta + base_mean + e
        if spec.contamination.kind != "none":
            y = y + bump
        profiles.append(Profile(f"{id_prefix}{i + 1:0{width}d}", x, y))
    return ProfileSet(tuple(profiles), (float(x[0]), float(x[-1])))


# ---------------------------------------------------------------- calibration

def l1_regression(X, y) -> np.ndarray:
    """Least-absolute-deviation coefficients via the standard LP.

    minimize sum(u+ + u-) subject to X beta + u+ - u- = y, u+, u- >= 0.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    m, p = X.shape
    if np.linalg.matrix_rank(X) < p:
        raise RankDeficient("design matrix is rank deficient (a knot span holds no data?)")
    c = np.concatenate([np.zeros(p), np.ones(2 * m)])
    A = np.hstack([X, np.eye(m), -np.eye(m)])
    bounds = [(None, None)] * p + [(0, None)] * (2 * m)
    res = optimize.linprog(c, A_eq=A, b_eq=y, bounds=bounds, method="highs",
                           options={"primal_feasibility_tolerance": 1e-10,
                                    "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RankDeficient(f"L1 regression failed: {res.message}")
    return res.x[:p]


def calibrate_spec_from_phase1(pset: ProfileSet, basis: BSplineBasis = BSplineBasis(),
                               error_kind: str = "gaussian", seed: int = 0) -> SyntheticSpec:
    """Estimate spline coefficients, center spread and error SD from data.

    Each profile is L1-regressed on the basis; the coefficient vectors are
    averaged, the center variance is the sample variance of the profile
    medians, and ``sigma`` is the SD of the pooled regression residuals.
    """
    if len(pset) == 0:
        raise ValidationError("no profiles to calibrate from")
    coefs, resid, centers = [], [], []
    for p in pset:
        X = bspline_eval(basis, p.x)
        beta = l1_regression(X, p.y)
        coefs.append(beta)
        resid.append(p.y - X @ beta)
        centers.append(estimate_center(p))
    alpha = np.mean(coefs, axis=0)
    sigma_delta = float(np.std(centers, ddof=1)) if len(centers) > 1 else 0.0
    pooled = np.concatenate(resid)
    sigma = float(np.std(pooled, ddof=1)) if len(pooled) > 1 else 0.0
    locations = np.unique(np.concatenate([p.x for p in pset]))
    return SyntheticSpec(locations, tuple(alpha), sigma_delta, sigma, error_kind, seed=seed,
                         basis=basis)


# ---------------------------------------------------------------- pseudo-VDP fixture

FIXTURE = "pseudo_vdp.txt"


def read_fixture() -> dict:
    text = resources.files("l1profile").joinpath("data").joinpath(FIXTURE).read_text(encoding="utf-8")
    return parse_key_values(text.splitlines())


def pseudo_vdp_spec(error_kind: str = "gaussian", seed: int = 0,
                    contamination: Contamination = Contamination()) -> SyntheticSpec:
    """Synthetic spec with the coefficients and spreads recorded in the
    committed pseudo-VDP fixture, on the 314-point 0.002 grid."""
    kv = read_fixture()
    return SyntheticSpec(
        make_grid(*VDP_DOMAIN, VDP_STEP),
        tuple(float(v) for v in kv["calibrated.alpha0_coeffs"].split()),
        float(kv["calibrated.sigma_delta"]),
        float(kv["calibrated.sigma"]),
        error_kind, 8.0, contamination, seed)
