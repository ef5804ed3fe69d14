"""Nonparametric L1 location-scale profile control charts.

Fit a reference profile and reference deviation curve to Phase I profiles
with kernel-weighted least-absolute-deviation smoothing, then screen new
profiles with three deviation scores against empirically calibrated limits.
"""
from ._backend import BACKEND
from .errors import (AlphaInfeasible, DegenerateCenters, EmptyWindow, FingerprintMismatch,
                     FitError, InsufficientProfiles, L1ProfileError, NoFeasibleBandwidth,
                     OutOfDomain, ParseError, RankDeficient, ValidationError)
from .kernels import Kernel
from .phase1 import (BandwidthGrid, CenterStats, FitConfig, FittedModel, center_profile,
                     estimate_center, estimate_location_density, fit, load_model,
                     save_model, select_bandwidth_mu, select_bandwidth_s)
from .profiles import (CenteredProfile, Profile, ProfileSet, emit_profiles, make_grid,
                       parse_profiles)
from .screening import (ControlLimits, DeviationScores, ScreeningReport, calibrate_limits,
                        empirical_upper_quantile, load_limits, save_limits, score_profile,
                        screen)
from .smoothing import (CurveEstimate, PooledData, evaluate_curve, jackknife, lad_curve,
                        scale_curve, weighted_median)
from .synthetic import (BSplineBasis, Contamination, SyntheticSpec, bspline_eval,
                        calibrate_spec_from_phase1, generate, pseudo_vdp_spec,
                        sample_error_path)

__version__ = "0.1.0"
