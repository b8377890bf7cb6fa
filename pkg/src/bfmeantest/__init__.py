"""Bayes-factor and competitor tests for high-dimensional two-sample means."""

from .baselines import KRule, PbConfig, t_bs, t_cq, t_pb, t_sd
from .bf import (
    BayesFactorInputs,
    CorrectionSet,
    Form,
    TestOutcome,
    asymptotic_power,
    chi2_ratio_expectation,
    chi2_ratio_expectations,
    correction_coefficients,
    log_bayes_factor,
    log_multigamma,
    t_bf1,
    t_bf2,
)
from .core import (
    DegenerateVarianceError,
    InputError,
    TwoSampleSummary,
    pooled_summary,
    regularize_diag,
    trace_u,
    trace_u2_hat,
    trace_u_squared,
)
from .registry import TEST_IDS, evaluate

__version__ = "0.1.0"
