"""Seedable generators for the simulation designs.

Covariances ``S1``-``S5``, alternative mean vectors and Gaussian or centered
chi-square innovations.  Random streams are keyed by
``(seed, replication, stream)`` so a replication's data never depends on
which worker produced it or in what order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import InputError

# stream ids inside one replication
GROUP1, GROUP2, MEAN = 0, 1, 2
_FIXED_MEAN_REP = -1


class SigmaKind(enum.Enum):
    S1 = "S1"   # identity
    S2 = "S2"   # AR(1), rho = 0.4
    S3 = "S3"   # heterogeneous diagonal, banded correlations
    S4 = "S4"   # spiked diagonal
    S5 = "S5"   # random scales times AR(1), rho = 0.6


@dataclass(frozen=True)
class SigmaSpec:
    kind: SigmaKind
    p: int
    seed: int = 0
    rho: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SigmaKind(self.kind))
        if self.p < 1:
            raise InputError("p must be positive")

    @property
    def correlation(self) -> float:
        if self.rho is not None:
            return self.rho
        return {SigmaKind.S2: 0.4, SigmaKind.S5: 0.6}.get(self.kind, 0.0)


class NotPositiveDefiniteError(InputError):
    pass


def _toeplitz_power(p: int, rho: float) -> np.ndarray:
    lag = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    return rho ** lag.astype(float)


def build_sigma(spec: SigmaSpec) -> np.ndarray:
    p, kind = spec.p, spec.kind
    j = np.arange(1, p + 1)
    if kind is SigmaKind.S1:
        sigma = np.eye(p)
    elif kind is SigmaKind.S2:
        sigma = _toeplitz_power(p, spec.correlation)
    elif kind is SigmaKind.S3:
        lag = np.abs(np.subtract.outer(j, j))
        sigma = np.where(lag == 1, 0.3, 0.1 ** lag.astype(float))
        np.fill_diagonal(sigma, np.where(j <= 12, 12.0 / j, 1.0))
    elif kind is SigmaKind.S4:
        sigma = np.diag(np.where(j <= 20, 20.0 / j, 1.0))
    elif kind is SigmaKind.S5:
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, p, 5]))
        scale = np.sqrt(rng.uniform(1.0, 3.0, size=p))
        sigma = scale[:, None] * _toeplitz_power(p, spec.correlation) * scale[None, :]
    else:  # pragma: no cover
        raise InputError(f"unknown covariance kind {kind}")
    min_eig = float(linalg.eigvalsh(sigma, subset_by_index=[0, 0])[0])
    if not min_eig > 0:
        raise NotPositiveDefiniteError(
            f"{kind.value} with p={p} is not positive definite (min eigenvalue {min_eig:.3g})")
    return sigma


class MeanKind(enum.Enum):
    NULL_ZERO = "null"
    ALT1 = "alt1"            # fixed Mahalanobis energy d' Sigma^-1 d = 2
    ALT2 = "alt2"            # fixed Euclidean energy d'd = 0.1 sqrt(tr Sigma^2)
    BLOCK_PM = "block_pm"    # +0.5 on the first 25%, -0.5 on the last 25%
    SPARSE_PM = "sparse_pm"  # +0.4 on the first 10%, -0.4 on the last 10%
    FIXED = "fixed"          # user-supplied vector


_PM_DEFAULTS = {MeanKind.BLOCK_PM: (0.25, 0.5), MeanKind.SPARSE_PM: (0.10, 0.4)}


@dataclass(frozen=True)
class MeanSpec:
    """Second-group mean ``mu2`` (the first group mean is always zero).

    ``p0`` is the fraction of zeroed coordinates for ``ALT1``/``ALT2``;
    ``redraw`` controls whether those random alternatives are redrawn for
    every replication or drawn once per scenario.
    """

    kind: MeanKind = MeanKind.NULL_ZERO
    p0: float = 0.5
    frac: float | None = None
    mag: float | None = None
    values: tuple | None = None
    redraw: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", MeanKind(self.kind))
        if self.kind in (MeanKind.ALT1, MeanKind.ALT2) and not 0 <= self.p0 < 1:
            raise InputError(f"sparsity p0 must lie in [0, 1), got {self.p0}")
        if self.kind is MeanKind.FIXED:
            if self.values is None:
                raise InputError("FIXED mean needs values")
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def is_random(self) -> bool:
        return self.kind in (MeanKind.ALT1, MeanKind.ALT2)


def _count(frac: float, p: int) -> int:
    return int(math.floor(frac * p + 1e-9))


def build_mean(spec: MeanSpec, sigma: np.ndarray, rng=None) -> np.ndarray:
    p = sigma.shape[0]
    kind = spec.kind
    if kind is MeanKind.NULL_ZERO:
        return np.zeros(p)
    if kind is MeanKind.FIXED:
        mu = np.asarray(spec.values, dtype=float)
        if mu.shape != (p,):
            raise InputError(f"fixed mean has length {mu.size}, expected {p}")
        return mu
    if kind in _PM_DEFAULTS:
        frac, mag = _PM_DEFAULTS[kind]
        frac = spec.frac if spec.frac is not None else frac
        mag = spec.mag if spec.mag is not None else mag
        c = _count(frac, p)
        mu = np.zeros(p)
        if c:
            mu[:c] = mag
            mu[p - c:] = -mag
        return mu
    if rng is None:
        raise InputError(f"{kind.value} needs a random generator")
    mu = rng.normal(1.0, 1.0, size=p)
    zeros = rng.choice(p, size=_count(spec.p0, p), replace=False)
    mu[zeros] = 0.0
    if kind is MeanKind.ALT1:
        try:
            energy = float(mu @ linalg.cho_solve(linalg.cho_factor(sigma), mu))
        except linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("sigma solve failed") from exc
        target = 2.0
    else:
        energy = float(mu @ mu)
        target = 0.1 * math.sqrt(float(np.sum(sigma * sigma)))
    return mu * math.sqrt(target / energy)


def sqrt_psd(sigma) -> np.ndarray:
    """Symmetric square root of a positive semidefinite matrix."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    w, V = linalg.eigh(sigma)
    if w.size and w[0] < -1e-10 * max(abs(w[0]), abs(w[-1])):
        raise NotPositiveDefiniteError(f"matrix has negative eigenvalue {w[0]:.3g}")
    root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return 0.5 * (root + root.T)


class InnovationKind(enum.Enum):
    GAUSSIAN = "gaussian"
    CENTERED_CHI2 = "centered_chi2"   # (chi2_2 - 2) / 2


@dataclass(frozen=True)
class InnovationSpec:
    kind: InnovationKind = InnovationKind.GAUSSIAN

    def __post_init__(self):
        object.__setattr__(self, "kind", InnovationKind(self.kind))


def draw_innovations(innov: InnovationSpec, rng, shape) -> np.ndarray:
    if innov.kind is InnovationKind.GAUSSIAN:
        return rng.standard_normal(shape)
    # chi2_2 / 2 is a unit exponential
    return rng.standard_exponential(shape) - 1.0


def stream(seed: int, rep: int, which: int) -> np.random.Generator:
    """Independent generator for one ``(seed, replication, stream)`` key."""
    if rep < 0:
        rep = 2**63 + rep
    return np.random.default_rng(np.random.SeedSequence([seed, rep, which]))


def fixed_mean_stream(seed: int) -> np.random.Generator:
    return stream(seed, _FIXED_MEAN_REP, MEAN)


def sample_pair(mu1, mu2, sigma_root, n1: int, n2: int,
                innov: InnovationSpec | None = None, rng=None):
    """Draw ``x_g = mu_g + sigma_root @ z`` row-wise for both groups.

    ``rng`` is either one generator (group 1 drawn first) or a pair of
    generators, one per group.
    """
    innov = innov or InnovationSpec()
    if isinstance(rng, (tuple, list)):
        g1, g2 = rng
    else:
        g1 = g2 = rng if rng is not None else np.random.default_rng()
    root = np.atleast_2d(np.asarray(sigma_root, dtype=float))
    p = root.shape[0]
    mu1 = np.broadcast_to(np.asarray(mu1, dtype=float), (p,))
    mu2 = np.broadcast_to(np.asarray(mu2, dtype=float), (p,))
    x1 = mu1 + draw_innovations(innov, g1, (n1, p)) @ root.T
    x2 = mu2 + draw_innovations(innov, g2, (n2, p)) @ root.T
    return x1, x2
