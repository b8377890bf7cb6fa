"""Sufficient statistics and diagonal-regularized trace kernels.

Everything downstream (the Bayes-factor tests, the baselines and the Monte
Carlo harness) works from a :class:`TwoSampleSummary`: the mean difference,
the pooled covariance with divisor ``n - 2`` and the effective size
``n0 = n1 * n2 / n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special


class InputError(ValueError):
    """Raised for malformed data (shapes, sizes, non-finite entries)."""


class DegenerateVarianceError(ArithmeticError):
    """Raised when a variance estimate is not strictly positive."""


def as_sample_matrix(x, name: str = "x") -> np.ndarray:
    """Validate ``x`` as an observations-by-variables float matrix."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class TwoSampleSummary:
    """Sufficient statistics of two samples sharing a covariance matrix.

    Attributes
    ----------
    n1, n2 : int
        Observation counts.
    D : ndarray, shape (p,)
        Mean difference ``mean(x1) - mean(x2)``.
    S : ndarray, shape (p, p)
        Pooled covariance, centered cross-products divided by ``n - 2``.
    """

    n1: int
    n2: int
    D: np.ndarray
    S: np.ndarray
    diagS: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float).reshape(-1)
        S = np.atleast_2d(np.asarray(self.S, dtype=float))
        p = D.shape[0]
        if S.shape != (p, p):
            raise InputError(f"S has shape {S.shape}, expected ({p}, {p})")
        if self.n1 + self.n2 < 3:
            raise InputError("n1 + n2 must be at least 3")
        if not (np.all(np.isfinite(D)) and np.all(np.isfinite(S))):
            raise InputError("summary contains non-finite entries")
        scale = max(np.max(np.abs(S)), np.finfo(float).tiny)
        if np.max(np.abs(S - S.T)) > 1e-10 * scale:
            raise InputError("S is not symmetric")
        diag = np.diag(S).copy()
        if np.any(diag < 0):
            raise InputError("S has negative diagonal entries")
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "diagS", diag)

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def n0(self) -> float:
        return self.n1 * self.n2 / self.n

    @property
    def p(self) -> int:
        return self.D.shape[0]

    @property
    def dof(self) -> int:
        """Degrees of freedom of the pooled covariance, ``n - 2``."""
        return self.n - 2


@dataclass(frozen=True)
class RegularizedDiag:
    """``lam[j] = 1 / (diagS[j] + k)``, the diagonal of the regularized inverse."""

    k: float
    lam: np.ndarray


def pooled_summary(x1, x2) -> TwoSampleSummary:
    """Mean difference and pooled covariance of two samples."""
    x1 = as_sample_matrix(x1, "x1")
    x2 = as_sample_matrix(x2, "x2")
    if x1.shape[1] != x2.shape[1]:
        raise InputError(
            f"dimension mismatch: x1 has {x1.shape[1]} columns, x2 has {x2.shape[1]}"
        )
    n1, n2 = x1.shape[0], x2.shape[0]
    if n1 < 2 or n2 < 2:
        raise InputError("each sample needs at least two observations")
    m1 = x1.mean(axis=0)
    m2 = x2.mean(axis=0)
    c1 = x1 - m1
    c2 = x2 - m2
    S = (c1.T @ c1 + c2.T @ c2) / (n1 + n2 - 2)
    S = 0.5 * (S + S.T)
    return TwoSampleSummary(n1=n1, n2=n2, D=m1 - m2, S=S)


def regularize_diag(summary: TwoSampleSummary, k: float) -> RegularizedDiag:
    if not k > 0:
        raise InputError(f"regularizer k must be positive, got {k}")
    return RegularizedDiag(k=float(k), lam=1.0 / (summary.diagS + k))


def trace_u(summary: TwoSampleSummary, reg: RegularizedDiag) -> float:
    """``tr(Lambda_n S_n) = sum_j diagS_j / (diagS_j + k)``."""
    return float(np.sum(summary.diagS * reg.lam))


def trace_u_squared(summary: TwoSampleSummary, reg: RegularizedDiag,
                    weights: np.ndarray | None = None) -> float:
    """``tr((W Lambda_n S_n)^2) = sum_ij w_i w_j lam_i lam_j S_ij^2``.

    ``weights`` is an optional per-coordinate diagonal ``W`` (identity when
    omitted).
    """
    g = reg.lam if weights is None else reg.lam * weights
    return float(np.sum((g[:, None] * summary.S * g[None, :]) * summary.S))


def trace_u2_hat(summary: TwoSampleSummary, reg: RegularizedDiag) -> float:
    """Ratio-consistent estimator ``tr(U_n^2) - tr(U_n)^2 / (n - 2)``.

    May be negative on degenerate inputs; callers decide what to do.
    """
    tu = trace_u(summary, reg)
    return trace_u_squared(summary, reg) - tu * tu / summary.dof


def quadratic_form(summary: TwoSampleSummary, reg: RegularizedDiag) -> float:
    """``n0 * D' Lambda_n D``."""
    return float(summary.n0 * np.sum(reg.lam * summary.D * summary.D))


def normal_upper_tail(z: float) -> tuple[float, float]:
    """Return ``(P(Z >= z), log P(Z >= z))`` for a standard normal ``Z``.

    The log is taken from ``log_ndtr(-z)``, which switches to an asymptotic
    series in the far tail and stays finite where ``sf`` underflows.
    """
    log_p = float(special.log_ndtr(-z))
    return float(special.ndtr(-z)), log_p
