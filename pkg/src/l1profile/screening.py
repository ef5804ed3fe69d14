"""Deviation scores, control-limit calibration and screening verdicts.

Each profile gets three scores: ``D`` (standardized distance of its center
from the Phase I centers), ``T1`` (largest standardized residual about the
reference profile) and ``T2`` (sum of absolute standardized residuals).
Limits are upper empirical quantiles of the Phase I scores at a common
per-score level chosen so that fewer than ``n * alpha0`` Phase I profiles
are flagged overall.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (AlphaInfeasible, DegenerateCenters, FingerprintMismatch, FitError,
                     ValidationError)
from .phase1 import FittedModel, estimate_center, fit_fixed, model_fingerprint
from .profiles import Profile, ProfileSet
from .smoothing import evaluate_curve

METHODS = ("empirical", "bootstrap")
STATISTICS = ("D", "T1", "T2")


@dataclass(frozen=True)
class DeviationScores:
    D: float
    T1: float
    T2: float
    m_star: int


def shape_scores(x, y_centered, model: FittedModel):
    """``(T1, T2)`` for already-centered values at locations ``x``."""
    mu = evaluate_curve(model.mu_tilde, x)
    s = evaluate_curve(model.s_tilde, x)
    e = np.abs((np.asarray(y_centered) - mu) / s)
    return float(e.max()), float(e.sum())


def score_profile(p: Profile, model: FittedModel) -> DeviationScores:
    cs = model.center_stats
    if not cs.s_delta > 0:
        raise DegenerateCenters("Phase I center MAD is zero; D is undefined")
    delta = estimate_center(p, model.density())
    t1, t2 = shape_scores(p.x, p.y - delta, model)
    return DeviationScores(abs(delta - cs.mu_delta) / cs.s_delta, t1, t2, len(p))


def empirical_upper_quantile(scores, alpha: float) -> float:
    """The ``ceil(n (1 - alpha))``-th order statistic of ``scores``."""
    s = np.sort(np.asarray(scores, dtype=float))
    if len(s) == 0:
        raise ValueError("no scores")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    # rounding guards n*(1-alpha) landing a hair above an integer
    k = math.ceil(round(len(s) * (1.0 - alpha), 9))
    return float(s[min(max(k, 1), len(s)) - 1])


@dataclass(frozen=True)
class ControlLimits:
    alpha_star: float
    c0: float
    c1: float
    c2: float
    method: str
    alpha0: float
    seed: int = 0
    bootstrap_reps: int = 0
    model_fingerprint: str = ""
    refit: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not 0 < self.alpha_star <= self.alpha0:
            raise ValueError("need 0 < alpha_star <= alpha0")

    @property
    def limits(self) -> tuple:
        return (self.c0, self.c1, self.c2)

    def to_dict(self) -> dict:
        return {"format_version": 1, "alpha_star": self.alpha_star, "c0": self.c0,
                "c1": self.c1, "c2": self.c2, "method": self.method, "alpha0": self.alpha0,
                "seed": self.seed, "bootstrap_reps": self.bootstrap_reps,
                "model_fingerprint": self.model_fingerprint, "refit": self.refit}

    @classmethod
    def from_dict(cls, doc: dict) -> "ControlLimits":
        try:
            if doc.get("format_version") != 1:
                raise ValidationError("unsupported limits format_version")
            return cls(float(doc["alpha_star"]), float(doc["c0"]), float(doc["c1"]),
                       float(doc["c2"]), doc["method"], float(doc["alpha0"]), int(doc["seed"]),
                       int(doc["bootstrap_reps"]), doc["model_fingerprint"],
                       bool(doc.get("refit", False)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed limits document: {exc}") from exc


def save_limits(limits: ControlLimits, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(limits.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_limits(path) -> ControlLimits:
    with open(path, encoding="utf-8") as fh:
        try:
            return ControlLimits.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"limits file is not valid JSON: {exc}") from exc


def _score_matrix(model: FittedModel) -> np.ndarray:
    return np.array([[d, t1, t2] for _, d, t1, t2 in model.phase1_scores], dtype=float)


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def bootstrap_pools(model: FittedModel, reps: int, seed: int, refit: bool = False,
                    phase1: Optional[ProfileSet] = None) -> np.ndarray:
    """Pooled bootstrap score triples, shape ``(reps * n, 3)``.

    Resample ``i`` draws ``n`` whole profiles with replacement from a stream
    keyed by ``(seed, i)``.  By default the drawn profiles keep their scores
    against the original model; with ``refit`` the model is refitted on each
    resample (same bandwidths) and the resample is rescored in-sample.
    """
    scores = _score_matrix(model)
    n = len(scores)
    out = []
    for r in range(reps):
        idx = _rng(seed, r).integers(0, n, n)
        if not refit:
            out.append(scores[idx])
            continue
        if phase1 is None or len(phase1) != n:
            raise ValidationError("refit bootstrap needs the Phase I profiles the model was fitted on")
        resample = ProfileSet(tuple(Profile(f"{phase1[i].id}#{k}", phase1[i].x, phase1[i].y)
                                    for k, i in enumerate(idx)), phase1.domain)
        sub = fit_fixed(resample, model)
        out.append(_score_matrix(sub))
    return np.concatenate(out)


def alpha_candidates(n: int, alpha0: float) -> list:
    """``{k/n : k = 1..floor(n alpha0)} | {alpha0}``, descending."""
    kmax = math.floor(n * alpha0 + 1e-9)
    cands = {k / n for k in range(1, kmax + 1)} | {alpha0}
    return sorted((a for a in cands if a <= alpha0), reverse=True)


def flag_count(scores: np.ndarray, limits: Sequence[float]) -> int:
    c = np.asarray(limits, dtype=float)
    return int(np.sum(np.any(scores > c[None, :], axis=1)))


def calibrate_limits(model: FittedModel, alpha0: float, method: str = "empirical",
                     bootstrap_reps: int = 1000, seed: int = 0, refit: bool = False,
                     phase1: Optional[ProfileSet] = None) -> ControlLimits:
    """Choose the largest per-score level ``alpha*`` whose limits flag fewer
    than ``n * alpha0`` Phase I profiles, and return the limits at it."""
    if not model.phase1_scores:
        raise ValidationError("model carries no Phase I scores")
    if not (0 < alpha0 <= 1):
        raise ValidationError(f"alpha0 must lie in (0, 1], got {alpha0!r}")
    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}, got {method!r}")
    scores = _score_matrix(model)
    if not np.all(np.isfinite(scores)):
        raise DegenerateCenters("Phase I scores are not finite")
    n = len(scores)
    if method == "bootstrap":
        if bootstrap_reps < 1:
            raise ValidationError("bootstrap_reps must be at least 1")
        pools = bootstrap_pools(model, bootstrap_reps, seed, refit, phase1)
    else:
        bootstrap_reps = 0
        pools = scores
    budget = n * alpha0
    count, nonpositive = None, None
    for alpha in alpha_candidates(n, alpha0):
        c = [empirical_upper_quantile(pools[:, k], alpha) for k in range(3)]
        count = flag_count(scores, c)
        if count >= budget:
            continue
        if min(c) <= 0:
            # very large alpha can land on a zero score (the median center has D = 0)
            nonpositive = (alpha, c)
            continue
        return ControlLimits(alpha, c[0], c[1], c[2], method, alpha0, seed,
                             bootstrap_reps, model_fingerprint(model), refit)
    if nonpositive is not None:
        raise FitError(f"control limits are not positive at alpha={nonpositive[0]:g}: "
                       f"{nonpositive[1]}")
    raise AlphaInfeasible(count, alpha, budget)


@dataclass(frozen=True)
class ReportRow:
    id: str
    scores: DeviationScores
    flag_D: bool
    flag_T1: bool
    flag_T2: bool

    @property
    def outlier(self) -> bool:
        return self.flag_D or self.flag_T1 or self.flag_T2


@dataclass(frozen=True)
class ScreeningReport:
    rows: tuple
    limits: ControlLimits

    @property
    def n_outliers(self) -> int:
        return sum(r.outlier for r in self.rows)

    @property
    def outlier_ids(self) -> list:
        return [r.id for r in self.rows if r.outlier]

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("id,D,T1,T2,flag_D,flag_T1,flag_T2,outlier\n")
        for r in self.rows:
            s = r.scores
            out.write(f"{r.id},{s.D!r},{s.T1!r},{s.T2!r},{int(r.flag_D)},{int(r.flag_T1)},"
                      f"{int(r.flag_T2)},{int(r.outlier)}\n")
        return out.getvalue()

    def chart_csv(self, statistic: str) -> str:
        k = STATISTICS.index(statistic)
        return chart_csv([(r.id, getattr(r.scores, statistic)) for r in self.rows],
                         self.limits.limits[k])


def chart_csv(pairs, limit: float) -> str:
    """``id,score,limit`` rows for plotting one statistic against its limit."""
    out = io.StringIO()
    out.write("id,score,limit\n")
    for pid, score in pairs:
        out.write(f"{pid},{float(score)!r},{float(limit)!r}\n")
    return out.getvalue()


def phase1_chart_csv(model: FittedModel, limits: ControlLimits, statistic: str) -> str:
    k = STATISTICS.index(statistic)
    return chart_csv([(row[0], row[1 + k]) for row in model.phase1_scores], limits.limits[k])


def judge(pid: str, scores: DeviationScores, limits: ControlLimits) -> ReportRow:
    return ReportRow(pid, scores, scores.D > limits.c0, scores.T1 > limits.c1,
                     scores.T2 > limits.c2)


def screen(profiles, model: FittedModel, limits: ControlLimits) -> ScreeningReport:
    """Score each profile and flag strict exceedances of the limits."""
    if limits.model_fingerprint != model_fingerprint(model):
        raise FingerprintMismatch("control limits were calibrated on a different model")
    if isinstance(profiles, Profile):
        profiles = (profiles,)
    rows = tuple(judge(p.id, score_profile(p, model), limits) for p in profiles)
    return ScreeningReport(rows, limits)
