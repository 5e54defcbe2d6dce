"""Attribute-value distributions and the correlated sampling model.

True attribute values are drawn from a heavy-tailed power law (or any other
marginal exposing ``cdf`` / ``inv_cdf`` / ``sample``) and coupled across
attributes through a Gaussian copula with equicorrelation sigma: latent
scores are jointly normal with unit variance and a common pairwise
correlation, and each is pushed through the marginal's inverse CDF.  At
``sigma = 0`` attributes are independent; at ``sigma = 1`` every attribute of
an applicant is the same number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

# Largest double strictly below 1.0.  Copula uniforms are clipped here before
# inversion: the normal CDF rounds to exactly 1.0 for arguments above ~8.3,
# and the power-law inverse CDF diverges at 1.
_U_BELOW_ONE = float(np.nextafter(1.0, 0.0))


def std_normal_cdf(z):
    """Standard normal CDF, vectorized, accurate to ~1e-15 in absolute terms."""
    return ndtr(z)


def power_law_inv_cdf(u, delta: float):
    """Invert the power-law CDF ``F(t) = 1 - t**-(1 + delta)`` on [1, inf).

    Accepts scalars or arrays in ``[0, 1)`` and returns values of matching
    shape.  ``u = 0`` maps to the support minimum 1.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0.0) or np.any(arr >= 1.0):
        raise ValueError("u must lie in [0, 1)")
    out = (1.0 - arr) ** (-1.0 / (1.0 + delta))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PowerLaw:
    """Heavy-tailed marginal with survival ``P[Z >= t] = t**-(1 + delta)``.

    Supported on ``[1, inf)``; smaller ``delta`` means a heavier tail.  The
    mean is finite only for ``delta > 0``, which is required.
    """

    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def support_min(self) -> float:
        return 1.0

    def cdf(self, t):
        arr = np.asarray(t, dtype=float)
        out = 1.0 - np.maximum(arr, 1.0) ** (-(1.0 + self.delta))
        out = np.where(arr < 1.0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def inv_cdf(self, u):
        return power_law_inv_cdf(u, self.delta)

    def sample(self, rng: np.random.Generator, size=None):
        """Draw by inverse-transform from ``rng``."""
        return power_law_inv_cdf(rng.random(size), self.delta)


@dataclass(frozen=True)
class TruncatedNormal:
    """Normal(mean, scale) conditioned on the interval [low, high].

    An alternative light-tailed marginal.  Sampling is by rejection from the
    parent normal, which is exact; cdf and inv_cdf are closed-form.
    """

    mean: float
    scale: float
    low: float
    high: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not self.low < self.high:
            raise ValueError("low must be strictly below high")

    @property
    def support_min(self) -> float:
        return self.low

    def _mass(self):
        zlo = (self.low - self.mean) / self.scale
        zhi = (self.high - self.mean) / self.scale
        return ndtr(zlo), ndtr(zhi) - ndtr(zlo)

    def cdf(self, t):
        arr = np.asarray(t, dtype=float)
        lo, mass = self._mass()
        z = (np.clip(arr, self.low, self.high) - self.mean) / self.scale
        out = (ndtr(z) - lo) / mass
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def inv_cdf(self, u):
        arr = np.asarray(u, dtype=float)
        if np.any(arr < 0.0) or np.any(arr >= 1.0):
            raise ValueError("u must lie in [0, 1)")
        lo, mass = self._mass()
        out = self.mean + self.scale * ndtri(lo + arr * mass)
        out = np.clip(out, self.low, self.high)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size=None):
        shape = () if size is None else size
        out = np.empty(shape, dtype=float)
        flat = out.reshape(-1)
        pending = np.arange(flat.size)
        while pending.size:
            draw = self.mean + self.scale * rng.standard_normal(pending.size)
            ok = (draw >= self.low) & (draw <= self.high)
            flat[pending[ok]] = draw[ok]
            pending = pending[~ok]
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CorrelationSpec:
    """Equicorrelation structure for ``dims`` latent normal scores.

    The latent covariance is ``(1 - sigma) * I + sigma * J`` with ``J`` the
    all-ones matrix.  ``sigma`` is restricted to [0, 1]: that is the range
    realizable for every ``dims`` at once, and the one-factor sampler below
    relies on it.
    """

    sigma: float
    dims: int

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError("sigma must lie in [0, 1]")
        if self.dims < 1:
            raise ValueError("dims must be at least 1")

    def covariance(self) -> np.ndarray:
        cov = np.full((self.dims, self.dims), self.sigma)
        np.fill_diagonal(cov, 1.0)
        return cov

    def spearman_rho(self) -> float:
        """Population Spearman correlation implied by latent ``sigma``."""
        return (6.0 / math.pi) * math.asin(self.sigma / 2.0)


def sample_correlated_matrix(
    n: int,
    d: int,
    sigma: float,
    marginal,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw an ``(n, d)`` matrix of attribute values for ``n`` applicants.

    Rows are independent applicants.  Within a row, latent normals follow the
    one-factor construction ``z_j = sqrt(sigma) * w + sqrt(1 - sigma) * e_j``
    with ``w`` and ``e_j`` independent standard normals, which realizes the
    equicorrelated covariance exactly.  Each latent score is mapped through
    the normal CDF and then the marginal's inverse CDF.

    At ``sigma = 1`` the noise coefficient is exactly zero, so the columns of
    each row are identical floats, not merely close.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be at least 1")
    if not 0.0 <= sigma <= 1.0:
        raise ValueError("sigma must lie in [0, 1]")
    common = rng.standard_normal(n)
    noise = rng.standard_normal((n, d))
    z = math.sqrt(sigma) * common[:, None] + math.sqrt(1.0 - sigma) * noise
    u = np.minimum(ndtr(z), _U_BELOW_ONE)
    return marginal.inv_cdf(u)
