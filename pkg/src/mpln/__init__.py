"""Poisson PCA for matrix-valued count data.

Method-of-moments estimation of the matrix Poisson log-normal model
(and its zero-inflated variant), latent rank selection by predictor
augmentation, and MAP latent scores.
"""
from .exceptions import EstimationError, MplnError, ParseError, SamplingError, ValidationError
from .model import (
    AugmentationCurve,
    CountTensor,
    GaussianParams,
    PlnParams,
    ScoreSet,
    SPair,
    ZeroInflationMask,
    canonicalize,
    require_valid,
    validate,
)
from .sampler import SeededStream, sample_gaussian, sample_iid, sample_pln, sample_zipln
from .moments import estimate_mu, estimate_pi, estimate_S, estimate_tau2, factorial_moments
from .spectral import eigen_sym, extract_loadings, gaussian_cov
from .latent import map_score, score_sample, zi_map_score
from .dimension import estimate_dim, phi_from_spectrum
from .asymptotics import asym_var_s11, mc_verify
from .pipeline import fit, fit_spair

__version__ = "0.1.0"
