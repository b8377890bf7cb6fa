"""Competitor two-sample mean tests: BS, CQ, SD and PB.

In the BS and SD formulas the sample-size symbol is the pooled degrees of
freedom ``n1 + n2 - 2`` (the covariance divisor), which is what calibrates
both tests under the null.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import eigsh

from .bf import FactorizationError, TestOutcome, make_outcome
from .core import (
    DegenerateVarianceError,
    InputError,
    TwoSampleSummary,
    as_sample_matrix,
    pooled_summary,
)


def t_bs(summary: TwoSampleSummary) -> TestOutcome:
    N = summary.dof
    if N < 2:
        raise InputError("t_bs needs n1 + n2 >= 4")
    D, S = summary.D, summary.S
    tr_s = float(np.sum(summary.diagS))
    tr_s2 = float(np.sum(S * S))
    var = 2.0 * N * (N + 1) / ((N - 1) * (N + 2)) * (tr_s2 - tr_s * tr_s / N)
    if not var > 0:
        raise DegenerateVarianceError(f"BS variance estimate is {var!r}")
    stat = (summary.n0 * float(D @ D) - tr_s) / math.sqrt(var)
    return make_outcome("BS", stat)


def cq_numerator(x1, x2) -> float:
    """Sum of cross inner products, own-sample diagonals excluded."""
    x1 = as_sample_matrix(x1, "x1")
    x2 = as_sample_matrix(x2, "x2")
    n1, n2 = x1.shape[0], x2.shape[0]
    g1 = x1.sum(axis=0)
    g2 = x2.sum(axis=0)
    within1 = (float(g1 @ g1) - float(np.sum(x1 * x1))) / (n1 * (n1 - 1))
    within2 = (float(g2 @ g2) - float(np.sum(x2 * x2))) / (n2 * (n2 - 1))
    return within1 + within2 - 2.0 * float(g1 @ g2) / (n1 * n2)


def t_cq(x1, x2, summary: TwoSampleSummary | None = None) -> TestOutcome:
    """CQ statistic standardized by a plug-in null variance.

    ``tr(Sigma^2)`` is estimated by ``tr(S^2) - tr(S)^2 / (n - 2)``; pass a
    precomputed ``summary`` to avoid rebuilding ``S``.
    """
    x1 = as_sample_matrix(x1, "x1")
    x2 = as_sample_matrix(x2, "x2")
    if summary is None:
        summary = pooled_summary(x1, x2)
    n1, n2 = x1.shape[0], x2.shape[0]
    S = summary.S
    tr_s = float(np.sum(summary.diagS))
    tr_sigma2 = float(np.sum(S * S)) - tr_s * tr_s / summary.dof
    scale = 2.0 / (n1 * (n1 - 1)) + 2.0 / (n2 * (n2 - 1)) + 4.0 / (n1 * n2)
    var = scale * tr_sigma2
    if not var > 0:
        raise DegenerateVarianceError(f"CQ variance estimate is {var!r}")
    return make_outcome("CQ", cq_numerator(x1, x2) / math.sqrt(var))


def t_sd(summary: TwoSampleSummary) -> TestOutcome:
    """Diagonally standardized statistic; invariant to coordinate rescaling."""
    N, p = summary.dof, summary.p
    if N < 3:
        raise InputError("t_sd needs n1 + n2 >= 5")
    s = summary.diagS
    if np.any(s <= 0):
        raise InputError(f"coordinate {int(np.flatnonzero(s <= 0)[0])} has zero variance")
    inv_root = 1.0 / np.sqrt(s)
    R = inv_root[:, None] * summary.S * inv_root[None, :]
    tr_r2 = float(np.sum(R * R))
    c_pn = 1.0 + tr_r2 / p ** 1.5
    var = 2.0 * (tr_r2 - p * p / N) * c_pn
    if not var > 0:
        raise DegenerateVarianceError(f"SD variance estimate is {var!r}")
    D = summary.D
    stat = (summary.n0 * float(np.sum(D * D / s)) - N * p / (N - 2)) / math.sqrt(var)
    return make_outcome("SD", stat)


class KRule(enum.Enum):
    SCALED_MAX_EIGEN = "scaled_max_eigen"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class PbConfig:
    """Prior settings of the posterior-Bayes-factor test.

    With ``k_rule=SCALED_MAX_EIGEN`` the prior scale is
    ``k = n log(n) p lambda_max((n - 2) S)``.
    """

    m: float = 0.0
    k_rule: KRule = KRule.SCALED_MAX_EIGEN
    k: float | None = None

    def resolve_k(self, summary: TwoSampleSummary) -> float:
        if KRule(self.k_rule) is KRule.EXPLICIT:
            k = self.k
        else:
            n = summary.n
            k = n * math.log(n) * summary.p * largest_eigenvalue(summary.dof * summary.S)
        if k is None or not k > 0:
            raise InputError(f"PB prior scale must be positive, got {k!r}")
        return float(k)


def largest_eigenvalue(sym: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric matrix."""
    p = sym.shape[0]
    if p <= 300:
        return float(linalg.eigh(sym, eigvals_only=True, subset_by_index=[p - 1, p - 1])[0])
    # Lanczos with a fixed start vector keeps the result deterministic
    val = eigsh(sym, k=1, which="LA", v0=np.ones(p), return_eigenvectors=False)
    return float(val[0])


def t_pb(summary: TwoSampleSummary, cfg: PbConfig | None = None) -> TestOutcome:
    cfg = cfg or PbConfig()
    N, n, p = summary.dof, summary.n, summary.p
    if N < 1:
        raise InputError("t_pb needs n1 + n2 >= 3")
    k = cfg.resolve_k(summary)
    S = summary.S
    eye = np.eye(p)
    try:
        f2 = linalg.cho_factor(2.0 * S + k * eye, lower=True)
        f1 = linalg.cho_factor(S + k * eye, lower=True)
    except linalg.LinAlgError as exc:
        raise FactorizationError("PB system is not positive definite") from exc
    a_coef = 2.0 * (cfg.m + 2 * n)
    b_coef = cfg.m + n
    D = summary.D
    BD = a_coef * linalg.cho_solve(f2, D) - b_coef * linalg.cho_solve(f1, D)
    BS = a_coef * linalg.cho_solve(f2, S) - b_coef * linalg.cho_solve(f1, S)
    tr_bs = float(np.trace(BS))
    tr_bs2 = float(np.sum(BS * BS.T))
    var = 2.0 * (tr_bs2 - tr_bs * tr_bs / N)
    if not var > 0:
        raise DegenerateVarianceError(f"PB variance estimate is {var!r}")
    stat = (summary.n0 * float(D @ BD) - tr_bs) / math.sqrt(var)
    return make_outcome("PB", stat, k_used=k, m=cfg.m)
