"""Bayes-factor two-sample mean tests.

``t_bf1`` is the large-sample statistic built from the diagonal-regularized
quadratic form ``n0 * D' Lambda_n D``; ``t_bf2`` adds per-coordinate
small-sample corrections obtained from chi-square ratio expectations.  The
closed-form log Bayes factor and the asymptotic power function are exposed
for diagnostics.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special, stats

from .core import (
    DegenerateVarianceError,
    InputError,
    TwoSampleSummary,
    normal_upper_tail,
    quadratic_form,
    regularize_diag,
    trace_u,
    trace_u2_hat,
    trace_u_squared,
)
from .quadrature import QuadratureError, integrate_batch

DEFAULT_K = 1.0
QUADRATURE_TOL = 1e-8


class FactorizationError(ArithmeticError):
    """A matrix expected to be positive definite failed to factorize."""


@dataclass(frozen=True)
class TestOutcome:
    """Value of one test statistic with its one-sided normal p-value."""

    __test__ = False  # keep pytest from collecting this class

    name: str
    statistic: float
    p_value: float
    log_p: float
    k_used: float | None = None
    corrected: bool = False
    meta: dict = field(default_factory=dict, compare=False)


def make_outcome(name, statistic, k_used=None, corrected=False, **meta) -> TestOutcome:
    p_value, log_p = normal_upper_tail(statistic)
    return TestOutcome(name=name, statistic=float(statistic), p_value=p_value,
                       log_p=log_p, k_used=k_used, corrected=corrected, meta=meta)


def t_bf1(summary: TwoSampleSummary, k: float = DEFAULT_K) -> TestOutcome:
    """Large-sample Bayes-factor statistic.

    ``(n0 D' Lambda_n D - tr(U_n)) / sqrt(2 * trU2_hat)`` with
    ``U_n = Lambda_n S_n`` and ``Lambda_n = (diag(S_n) + k I)^{-1}``.
    """
    if summary.n < 4:
        raise InputError("t_bf1 needs n1 + n2 >= 4")
    reg = regularize_diag(summary, k)
    var = trace_u2_hat(summary, reg)
    if not var > 0:
        raise DegenerateVarianceError(f"trace estimator is {var!r}, must be positive")
    stat = (quadratic_form(summary, reg) - trace_u(summary, reg)) / math.sqrt(2.0 * var)
    return make_outcome("BF1", stat, k_used=reg.k)


# ---------------------------------------------------------------------------
# chi-square ratio expectations


class Form(enum.Enum):
    INV_SHIFT = "inv_shift"   # E[(df + a) / (Y + a)]
    RATIO = "ratio"           # E[Y / (Y + a)]
    RATIO_SQ = "ratio_sq"     # E[(Y / (Y + a))^2]


_FORM_INDEX = {Form.INV_SHIFT: 0, Form.RATIO: 1, Form.RATIO_SQ: 2}


def _chi2_breakpoints(df: float) -> np.ndarray:
    spread = math.sqrt(2.0 * df)
    y = np.concatenate([df + spread * np.arange(-6.0, 9.0), df * np.array([0.125, 0.25, 0.5])])
    y = np.unique(y[y > 0])
    return np.concatenate([[0.0], y / (df + y), [1.0]])


def _chi2_integrand(df: float):
    # y = df * t / (1 - t) maps (0, 1) onto (0, inf)
    log_norm = 0.5 * df * math.log(2.0) + special.gammaln(0.5 * df) - math.log(df)

    def f(t, a):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            y = df * t / (1.0 - t)
            logw = (0.5 * df - 1.0) * np.log(y) - 0.5 * y - log_norm - 2.0 * np.log1p(-t)
            w = np.where(t < 1.0, np.exp(logw), 0.0)
            ratio = y / (y + a)
            out = np.stack([w * (df + a) / (y + a), w * ratio, w * ratio * ratio], axis=-1)
        return np.where(np.isfinite(out), out, 0.0)

    return f


def chi2_ratio_expectations(a, df: int, tol: float = QUADRATURE_TOL) -> np.ndarray:
    """All three ratio expectations for each shift in ``a``.

    Returns an array of shape ``(len(a), 3)`` with columns ordered
    ``INV_SHIFT, RATIO, RATIO_SQ``, computed by adaptive quadrature against
    the chi-square density with ``df`` degrees of freedom.  Exact zeros in
    ``a`` use the closed forms.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if df < 1 or int(df) != df:
        raise InputError(f"df must be a positive integer, got {df!r}")
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise InputError("shifts a must be finite and nonnegative")
    out = np.empty((a.size, 3))
    zero = a == 0
    if zero.any():
        if df <= 2:
            raise QuadratureError(f"E[df / Y] diverges for df = {df}")
        out[zero] = [df / (df - 2.0), 1.0, 1.0]
    if (~zero).any():
        vals, _ = integrate_batch(_chi2_integrand(float(df)), a[~zero],
                                  _chi2_breakpoints(float(df)), rtol=tol)
        out[~zero] = vals
    return out


def chi2_ratio_expectation(a: float, df: int, form: Form, tol: float = QUADRATURE_TOL) -> float:
    """One ratio expectation of ``Y ~ chi2(df)``; see :class:`Form`."""
    form = Form(form)
    return float(chi2_ratio_expectations([a], df, tol)[0, _FORM_INDEX[form]])


@dataclass(frozen=True)
class CorrectionSet:
    """Per-coordinate small-sample coefficients ``r1, r2, r3``."""

    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray
    quadrature_tol: float
    n_used: int
    k: float


def correction_coefficients(summary: TwoSampleSummary, k: float = DEFAULT_K,
                            tol: float = QUADRATURE_TOL) -> CorrectionSet:
    """Bias-correction coefficients with the plug-in shift
    ``a_j = k * (n - 2) * h / diagS_j``, ``h = (n - 4) / (n - 2)``.
    """
    n = summary.n
    if n < 5:
        raise InputError("small-sample corrections need n1 + n2 >= 5")
    if not k > 0:
        raise InputError(f"regularizer k must be positive, got {k}")
    s = summary.diagS
    if np.any(s <= 0):
        j = int(np.flatnonzero(s <= 0)[0])
        raise InputError(f"coordinate {j} has zero sample variance")
    N = n - 2
    h = (n - 4) / N
    a = k * N * h / s
    e = chi2_ratio_expectations(a, N, tol)
    r1 = e[:, 0]
    r2 = (N + a) / N * e[:, 1]
    r3 = N / (N - 1) * (N / (N + a)) ** 2 / e[:, 2]
    return CorrectionSet(r1=r1, r2=r2, r3=r3, quadrature_tol=tol, n_used=n, k=float(k))


def t_bf2(summary: TwoSampleSummary, k: float = DEFAULT_K,
          corrections: CorrectionSet | None = None) -> TestOutcome:
    """Small-sample corrected Bayes-factor statistic.

    The numerator rescales the quadratic form by ``R1^{-1}`` and the centering
    trace by ``R2^{-1}``; the variance uses the corrected kernel
    ``U_n* = R3 Lambda_n S_n``.
    """
    if corrections is None:
        corrections = correction_coefficients(summary, k)
    if corrections.n_used != summary.n or corrections.r1.shape[0] != summary.p:
        raise InputError("correction set does not match this summary")
    if corrections.k != k:
        raise InputError(f"correction set was built for k={corrections.k}, not k={k}")
    reg = regularize_diag(summary, k)
    lam, s, D = reg.lam, summary.diagS, summary.D
    num = (summary.n0 * np.sum(lam * D * D / corrections.r1)
           - np.sum(s * lam / corrections.r2))
    r3 = corrections.r3
    tr_star = float(np.sum(r3 * s * lam))
    var = trace_u_squared(summary, reg, weights=r3) - tr_star * tr_star / summary.dof
    if not var > 0:
        raise DegenerateVarianceError(f"corrected trace estimator is {var!r}")
    return make_outcome("BF2", num / math.sqrt(2.0 * var), k_used=reg.k, corrected=True)


# ---------------------------------------------------------------------------
# closed-form Bayes factor


def log_multigamma(p: int, x: float) -> float:
    """``log Gamma_p(x) = p(p-1)/4 log(pi) + sum_j log Gamma(x + (1 - j)/2)``."""
    if p < 1 or int(p) != p:
        raise InputError(f"p must be a positive integer, got {p!r}")
    if not x + (1 - p) / 2 > 0:
        raise InputError(f"log_multigamma({p}, {x}) hits a pole of the gamma function")
    j = np.arange(1, p + 1)
    return float(p * (p - 1) / 4 * math.log(math.pi) + np.sum(special.gammaln(x + (1 - j) / 2)))


@dataclass(frozen=True)
class BayesFactorInputs:
    """Inverse-Wishart prior settings: degrees of freedom and scale ``V = k' I``.

    ``m`` is the exponent parameter of the closed form; ``None`` means ``m1``.
    """

    m0: float
    m1: float
    k_prime: float
    m: float | None = None

    def exponent_m(self) -> float:
        return self.m1 if self.m is None else self.m


def log_bayes_factor(summary: TwoSampleSummary, inputs: BayesFactorInputs) -> float:
    p, n, n0 = summary.p, summary.n, summary.n0
    if not inputs.k_prime > 0:
        raise InputError("k_prime must be positive")
    if not (inputs.m0 > p - 1 and inputs.m1 > p - 1):
        raise InputError(f"inverse-Wishart degrees of freedom must exceed p - 1 = {p - 1}")
    A = summary.dof * summary.S + inputs.k_prime * np.eye(p)
    try:
        factor = linalg.cho_factor(A, lower=True)
    except linalg.LinAlgError as exc:
        raise FactorizationError("A_n + k' I is not positive definite") from exc
    quad = n0 * float(summary.D @ linalg.cho_solve(factor, summary.D))
    return (0.5 * p * math.log(math.pi / n0) + p * math.log(inputs.k_prime)
            + log_multigamma(p, inputs.m0 / 2) - log_multigamma(p, inputs.m1 / 2)
            + 0.5 * (inputs.exponent_m() + n) * math.log1p(quad))


# ---------------------------------------------------------------------------
# power


def asymptotic_power(delta, sigma, k: float, n0: float, alpha: float) -> float:
    """Limiting power ``Phi(-u_{1-alpha} + n0 d' Lambda d / sqrt(2 tr(U^2)))``."""
    delta = np.asarray(delta, dtype=float).reshape(-1)
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if not 0 < alpha < 1:
        raise InputError("alpha must lie in (0, 1)")
    diag = np.diag(sigma)
    if np.any(diag <= 0):
        raise InputError("sigma must have a positive diagonal")
    lam = 1.0 / (diag + k)
    tr_u2 = float(np.sum((lam[:, None] * sigma * lam[None, :]) * sigma))
    shift = n0 * float(np.sum(lam * delta * delta)) / math.sqrt(2.0 * tr_u2)
    return float(stats.norm.cdf(-stats.norm.ppf(1 - alpha) + shift))
