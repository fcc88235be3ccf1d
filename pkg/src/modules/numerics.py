"""
Numerics Module

This module provides the scalar and matrix primitives used by the estimator:
chi-square distribution functions, the SPD Cholesky factorization, squared
Mahalanobis distances and confidence-ellipsoid boundaries.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import lapack, solve_triangular
from scipy.optimize import bisect
from scipy.special import gammaln

from src.modules.errors import DomainError, FactorizationError, UnsupportedDimensionError

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
_TINY = 1e-300
_MAX_TERMS = 1000

SYMMETRY_RTOL = 1e-12
PIVOT_RTOL = 1e-12
QUANTILE_XTOL = 1e-12


def _check_dof(dof):
    if isinstance(dof, bool) or int(dof) != dof or dof < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {dof}")
    return int(dof)


def _gamma_series(a, x, gln):
    """Lower regularized gamma P(a, x) by its power series (x < a + 1)"""
    out = np.zeros_like(x)
    positive = x > 0
    if not positive.any():
        return out
    xp = x[positive]
    ap = np.full_like(xp, a)
    term = np.full_like(xp, 1.0 / a)
    total = term.copy()
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= xp / ap
        total += term
        if np.all(np.abs(term) < np.abs(total) * _EPS):
            break
    else:
        logger.warning(f"Gamma series did not reach full accuracy (a={a})")
    out[positive] = total * np.exp(-xp + a * np.log(xp) - gln)
    return out


def _gamma_continued_fraction(a, x, gln):
    """Upper regularized gamma Q(a, x) by modified Lentz continued fraction (x >= a + 1)"""
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, _MAX_TERMS + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d[np.abs(d) < _TINY] = _TINY
        c = b + an / c
        c[np.abs(c) < _TINY] = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if np.all(np.abs(delta - 1.0) < _EPS):
            break
    else:
        logger.warning(f"Gamma continued fraction did not reach full accuracy (a={a})")
    return np.exp(-x + a * np.log(x) - gln) * h


def _regularized_gamma(d, dof):
    """
    Evaluate both tails of the chi-square distribution at d

    Returns:
        tuple: (lower, upper, scalar) with lower + upper = 1
    """
    dof = _check_dof(dof)
    values = np.asarray(d, dtype=float)
    scalar = values.ndim == 0
    values = np.atleast_1d(values)
    if np.any(np.isnan(values)) or np.any(values < 0):
        raise DomainError("chi-square argument must be a nonnegative number")

    a = dof / 2.0
    x = values / 2.0
    gln = gammaln(a)
    lower = np.empty_like(x)
    upper = np.empty_like(x)

    series = x < a + 1.0
    if series.any():
        lower[series] = _gamma_series(a, x[series], gln)
        upper[series] = 1.0 - lower[series]
    fraction = ~series
    if fraction.any():
        tail = np.zeros(int(fraction.sum()))
        finite = np.isfinite(x[fraction])
        if finite.any():
            tail[finite] = _gamma_continued_fraction(a, x[fraction][finite], gln)
        upper[fraction] = tail
        lower[fraction] = 1.0 - tail

    np.clip(lower, 0.0, 1.0, out=lower)
    np.clip(upper, 0.0, 1.0, out=upper)
    return lower, upper, scalar


def chi2_cdf(d, dof):
    """
    Chi-square distribution function P(dof/2, d/2)

    Args:
        d (float or array-like): nonnegative argument(s)
        dof (int): degrees of freedom

    Returns:
        float or numpy.ndarray: probabilities in [0, 1]
    """
    lower, _, scalar = _regularized_gamma(d, dof)
    return float(lower[0]) if scalar else lower


def chi2_sf(d, dof):
    """Chi-square survival function 1 - chi2_cdf, evaluated without cancellation"""
    _, upper, scalar = _regularized_gamma(d, dof)
    return float(upper[0]) if scalar else upper


def chi2_quantile(q, dof):
    """
    Chi-square quantile by bisection on chi2_cdf

    Args:
        q (float): probability in (0, 1)
        dof (int): degrees of freedom

    Returns:
        float: x with chi2_cdf(x, dof) = q
    """
    dof = _check_dof(dof)
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")

    hi = float(max(dof, 1))
    while chi2_cdf(hi, dof) < q:
        hi *= 2.0
    return bisect(lambda t: chi2_cdf(t, dof) - q, 0.0, hi, xtol=QUANTILE_XTOL, maxiter=500)


def cholesky_spd(sigma):
    """
    Lower Cholesky factor of a symmetric positive definite matrix

    A pivot at or below PIVOT_RTOL times the largest diagonal entry counts as
    a failure, so the check is relative to the scale of the matrix.

    Args:
        sigma (array-like): square matrix

    Returns:
        numpy.ndarray: lower triangular L with L @ L.T = sigma

    Raises:
        FactorizationError: not symmetric, not finite or not positive definite
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] == 0:
        raise FactorizationError(f"expected a non-empty square matrix, got shape {sigma.shape}")
    if not np.all(np.isfinite(sigma)):
        raise FactorizationError("matrix has non-finite entries")

    scale = np.max(np.abs(sigma))
    if np.any(np.abs(sigma - sigma.T) > SYMMETRY_RTOL * scale):
        raise FactorizationError("matrix is not symmetric")

    largest = np.max(np.diag(sigma))
    if largest <= 0:
        raise FactorizationError("matrix has no positive diagonal entry", pivot=0)

    factor, info = lapack.dpotrf(sigma, lower=1, clean=1)
    if info > 0:
        raise FactorizationError(f"matrix is not positive definite (pivot {info - 1})", pivot=info - 1)
    if info < 0:
        raise FactorizationError(f"LAPACK dpotrf rejected argument {-info}")

    pivots = np.diag(factor) ** 2
    small = np.flatnonzero(pivots <= PIVOT_RTOL * largest)
    if small.size:
        pivot = int(small[0])
        raise FactorizationError(f"matrix is numerically singular (pivot {pivot})", pivot=pivot)
    return factor


@dataclass(frozen=True, eq=False)
class ModelParams:
    """
    Parameters theta = (mu, Sigma) of a multivariate normal model

    The Cholesky factor of sigma is computed on first use and cached.
    """

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        if mu.ndim != 1:
            raise DomainError(f"mu must be a vector, got shape {mu.shape}")
        if sigma.shape != (mu.size, mu.size):
            raise DomainError(f"sigma shape {sigma.shape} does not match mu of length {mu.size}")
        object.__setattr__(self, 'mu', mu)
        object.__setattr__(self, 'sigma', sigma)

    @property
    def dim(self):
        return self.mu.size

    @cached_property
    def cholesky(self):
        return cholesky_spd(self.sigma)

    @property
    def log_det(self):
        return 2.0 * float(np.sum(np.log(np.diag(self.cholesky))))

    def validate(self):
        """Raise FactorizationError unless sigma is SPD"""
        _ = self.cholesky
        return self

    def transformed(self, A, b):
        """Image of the model under x -> A x + b"""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        sigma = A @ self.sigma @ A.T
        return ModelParams(A @ self.mu + b, 0.5 * (sigma + sigma.T))

    def to_dict(self):
        return {
            'mu': self.mu.tolist(),
            'sigma': self.sigma.ravel().tolist(),
            'dim': self.dim,
        }

    @classmethod
    def from_dict(cls, payload):
        dim = int(payload['dim'])
        return cls(np.asarray(payload['mu'], dtype=float),
                   np.asarray(payload['sigma'], dtype=float).reshape(dim, dim))

    def __repr__(self):
        return f"ModelParams(mu={self.mu.tolist()}, sigma={self.sigma.tolist()})"


def _as_rows(x, dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    rows = np.atleast_2d(x) if x.ndim else x.reshape(1, 1)
    if rows.shape[-1] != dim:
        raise DomainError(f"point dimension {rows.shape[-1]} does not match model dimension {dim}")
    return rows, single


def mahalanobis_sq(x, theta):
    """
    Squared Mahalanobis distance (x - mu)' Sigma^-1 (x - mu)

    Uses a triangular solve against the Cholesky factor of Sigma.

    Args:
        x (array-like): a p-vector or an (m, p) batch of points
        theta (ModelParams): model parameters

    Returns:
        float or numpy.ndarray: distance(s), one per point
    """
    rows, single = _as_rows(x, theta.dim)
    z = solve_triangular(theta.cholesky, (rows - theta.mu).T, lower=True, check_finite=False)
    dist = np.einsum('ij,ij->j', z, z)
    return float(dist[0]) if single else dist


def normal_logpdf(x, theta):
    """Log density of N(mu, Sigma) at x (vector or batch)"""
    dist = mahalanobis_sq(x, theta)
    return -0.5 * (theta.dim * math.log(2.0 * math.pi) + theta.log_det + dist)


@dataclass
class EllipsoidBoundary:
    """
    Points on the level set d(z; theta) = chi2_quantile(level, p)

    For p = 3 the boundary is given as three principal-plane slices; `slices`
    holds the slice index of each point.
    """

    level: float
    quantile: float
    points: np.ndarray
    slices: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.points)


def ellipsoid_boundary(theta, level, n_points):
    """
    Trace the boundary of the `level` confidence region of N(mu, Sigma)

    Args:
        theta (ModelParams): model parameters, p in {2, 3}
        level (float): coverage probability in (0, 1)
        n_points (int): points per curve

    Returns:
        EllipsoidBoundary: boundary polyline(s)
    """
    if theta.dim not in (2, 3):
        raise UnsupportedDimensionError(theta.dim, (2, 3))
    if int(n_points) < 1:
        raise DomainError(f"n_points must be positive, got {n_points}")
    n_points = int(n_points)

    quantile = chi2_quantile(level, theta.dim)
    radius = math.sqrt(quantile)
    angles = 2.0 * np.pi * np.arange(n_points) / n_points
    circle = np.column_stack([np.cos(angles), np.sin(angles)])

    if theta.dim == 2:
        points = theta.mu + radius * circle @ theta.cholesky.T
        slices = np.zeros(n_points, dtype=int)
    else:
        eigval, eigvec = np.linalg.eigh(theta.sigma)
        axes = eigvec * np.sqrt(eigval)
        curves = []
        for i, j in ((0, 1), (0, 2), (1, 2)):
            curves.append(theta.mu + radius * circle @ axes[:, [i, j]].T)
        points = np.vstack(curves)
        slices = np.repeat(np.arange(3), n_points)

    return EllipsoidBoundary(level=level, quantile=quantile, points=points, slices=slices)
