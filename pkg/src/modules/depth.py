"""
Halfspace Depth Module

This module computes Tukey halfspace depths: the exact finite-sample depth for
p = 1 and p = 2 (angular sweep), a random-projection upper bound for any p,
a brute-force oracle for testing and the closed-form depth of the
multivariate normal model.

All halfspaces are closed, so finite-sample depths are exact rationals k/n.
"""

import logging
import concurrent.futures
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from src.modules.errors import ConfigError, DomainError, UnsupportedDimensionError
from src.modules.numerics import chi2_sf, mahalanobis_sq

logger = logging.getLogger(__name__)

EXACT = 'exact'
APPROXIMATE = 'approximate'
MODEL = 'model'

ORACLE_MAX_N = 100
DIRS_PER_DIM = 1000
_CHUNK = 1024


@dataclass(frozen=True)
class DepthValue:
    """
    A depth value with its provenance

    Finite-sample depths also keep the integer count and sample size so they
    can be compared as exact rationals.
    """

    value: float
    kind: str
    count: int = None
    n: int = None

    def as_fraction(self):
        if self.count is None:
            return Fraction(self.value)
        return Fraction(self.count, self.n)

    def __float__(self):
        return float(self.value)


@dataclass
class DepthConfig:
    """
    How sample depths are evaluated

    Attributes:
        method (str): 'auto' (exact for p <= 2), 'exact' or 'approximate'
        n_dirs (int): random directions for the approximation, None for 1000 * p
        seed (int): base seed of the direction pools
    """

    method: str = 'auto'
    n_dirs: int = None
    seed: int = 0

    def validate(self):
        if self.method not in ('auto', EXACT, APPROXIMATE):
            raise ConfigError(f"unknown depth method '{self.method}'")
        if self.n_dirs is not None and int(self.n_dirs) < 1:
            raise ConfigError(f"n_dirs must be positive, got {self.n_dirs}")
        return self

    def resolve_method(self, dim):
        if self.method == 'auto':
            return EXACT if dim <= 2 else APPROXIMATE
        if self.method == EXACT and dim > 2:
            raise UnsupportedDimensionError(dim, (1, 2))
        return self.method

    def directions_for(self, dim):
        return int(self.n_dirs) if self.n_dirs is not None else DIRS_PER_DIM * dim


def _as_sample(sample):
    sample = np.asarray(sample, dtype=float)
    if sample.ndim == 1:
        sample = sample.reshape(-1, 1)
    if sample.ndim != 2 or sample.shape[0] == 0:
        raise DomainError("depth requires a non-empty sample")
    return sample


def _as_query(x, dim):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dim,):
        raise DomainError(f"query of shape {x.shape} does not match sample dimension {dim}")
    return x


def _finite(count, n, kind):
    return DepthValue(value=count / n, kind=kind, count=int(count), n=int(n))


def depth_exact_1d(x, sample):
    """
    Exact halfspace depth on the line: min(#{s <= x}, #{s >= x}) / n

    Args:
        x (float): query point
        sample (array-like): n reals

    Returns:
        DepthValue: exact depth
    """
    sample = np.asarray(sample, dtype=float).ravel()
    if sample.size == 0:
        raise DomainError("depth requires a non-empty sample")
    x = float(np.asarray(x, dtype=float).ravel()[0])
    count = min(np.count_nonzero(sample <= x), np.count_nonzero(sample >= x))
    return _finite(count, sample.size, EXACT)


def _direction_keys(d):
    """
    Order data directions around the origin without trigonometry

    Each direction is split into a side (upper half-plane including the
    positive x-axis, or its negation) and a key increasing with the angle on
    that side. A direction and its negation get the same key, and parallel
    directions get equal keys because the key is a single correctly rounded
    division.
    """
    dx, dy = d[:, 0], d[:, 1]
    upper = (dy > 0) | ((dy == 0) & (dx > 0))
    safe = np.where(dy != 0, dy, 1.0)
    key = np.where(dy != 0, -dx / safe, -np.inf)
    return upper, key


def depth_exact_2d(x, sample):
    """
    Exact halfspace depth in the plane by an angular sweep

    The sample is translated so x is the origin. Points coinciding with x lie
    in every closed halfplane. For the rest, the minimal halfplane count is
    attained by an open half-turn starting right after some data direction,
    so it is enough to count, for every direction j, the points whose angle
    falls in (theta_j, theta_j + pi]. Counting uses sorted keys per side and
    binary search, O(n log n) overall.

    Args:
        x (array-like): query 2-vector
        sample (array-like): (n, 2) data

    Returns:
        DepthValue: exact depth
    """
    sample = _as_sample(sample)
    if sample.shape[1] != 2:
        raise UnsupportedDimensionError(sample.shape[1], (2,))
    x = _as_query(x, 2)
    n = sample.shape[0]

    d = sample - x
    coincident = np.all(d == 0, axis=1)
    ties = int(np.count_nonzero(coincident))
    d = d[~coincident]
    if d.shape[0] == 0:
        return _finite(ties, n, EXACT)

    upper, key = _direction_keys(d)
    plus = np.sort(key[upper])
    minus = np.sort(key[~upper])

    counts = np.empty(d.shape[0], dtype=np.int64)
    ku = key[upper]
    counts[upper] = (plus.size - np.searchsorted(plus, ku, side='right')
                     + np.searchsorted(minus, ku, side='right'))
    kl = key[~upper]
    counts[~upper] = (minus.size - np.searchsorted(minus, kl, side='right')
                      + np.searchsorted(plus, kl, side='right'))

    return _finite(ties + int(counts.min()), n, EXACT)


def depth_approx(x, sample, n_dirs, seed=0, directions=None):
    """
    Random-projection upper bound of the halfspace depth

    The depth of x is the minimum, over a pool of unit directions, of the
    one-dimensional depth of the projected query among the projected sample.
    The pool holds n_dirs seeded uniform directions followed by the
    normalized data-to-query directions; passing `directions` replaces the
    pool entirely.

    Args:
        x (array-like): query p-vector
        sample (array-like): (n, p) data
        n_dirs (int): number of random directions
        seed (int or sequence of int): seed of the random directions
        directions (array-like, optional): explicit (m, p) direction pool

    Returns:
        DepthValue: approximate depth, never below the exact one
    """
    sample = _as_sample(sample)
    n, dim = sample.shape
    x = _as_query(x, dim)
    d = sample - x

    if directions is not None:
        pool = np.atleast_2d(np.asarray(directions, dtype=float))
        if pool.shape[1] != dim:
            raise DomainError(f"directions have dimension {pool.shape[1]}, expected {dim}")
    else:
        if int(n_dirs) < 1:
            raise DomainError(f"n_dirs must be positive, got {n_dirs}")
        rng = np.random.default_rng(seed)
        random_dirs = rng.standard_normal((int(n_dirs), dim))
        norms = np.linalg.norm(d, axis=1)
        data_dirs = d[norms > 0] / norms[norms > 0, None]
        pool = np.vstack([random_dirs, data_dirs])
    lengths = np.linalg.norm(pool, axis=1)
    pool = pool[lengths > 0] / lengths[lengths > 0, None]

    best = n
    for start in range(0, pool.shape[0], _CHUNK):
        proj = d @ pool[start:start + _CHUNK].T
        counts = np.minimum(np.count_nonzero(proj >= 0, axis=0), np.count_nonzero(proj <= 0, axis=0))
        best = min(best, int(counts.min()))
        if best == 0:
            break
    return _finite(best, n, APPROXIMATE)


def depth_oracle(x, sample):
    """
    Brute-force exact depth for p in {1, 2}, independent of the sweep

    For p = 2 every line through two points of the sample and x contributes
    its normal, tilted infinitesimally to both sides along the line; the
    tilt is resolved symbolically (the sign of the normal component first,
    then the sign of the along-line component). The data-to-query directions
    are added as well. The minimal closed halfplane count over this finite
    set is the exact depth, because an optimal halfplane can be rotated
    about x until its boundary meets a data point.

    Args:
        x (array-like): query point
        sample (array-like): (n, p) data with n <= 100

    Returns:
        DepthValue: exact depth
    """
    sample = _as_sample(sample)
    n, dim = sample.shape
    if dim > 2:
        raise UnsupportedDimensionError(dim, (1, 2))
    if n > ORACLE_MAX_N:
        raise DomainError(f"oracle is limited to {ORACLE_MAX_N} points, got {n}")
    x = _as_query(x, dim)

    if dim == 1:
        d = sample[:, 0] - x[0]
        count = min(np.count_nonzero(d >= 0), np.count_nonzero(d <= 0))
        return _finite(count, n, EXACT)

    d = sample - x
    points = np.vstack([d, np.zeros((1, 2))])
    edges = [points[j] - points[i] for i, j in combinations(range(points.shape[0]), 2)]
    edges = np.array([e for e in edges if np.any(e != 0)]).reshape(-1, 2)

    best = n
    if edges.shape[0]:
        normals = np.column_stack([-edges[:, 1], edges[:, 0]])
        primary = normals @ d.T
        secondary = edges @ d.T
        for sign in (1.0, -1.0):
            inside = (primary > 0) | ((primary == 0) & (sign * secondary >= 0))
            best = min(best, int(np.count_nonzero(inside, axis=1).min()))

    nonzero = np.any(d != 0, axis=1)
    if nonzero.any():
        inside = (d[nonzero] @ d.T) >= 0
        best = min(best, int(np.count_nonzero(inside, axis=1).min()))
    return _finite(best, n, EXACT)


def halfspace_depth(x, sample, config=None, index=0):
    """
    Sample depth of x dispatched on the configured method

    Approximate depths are seeded by (config.seed, index) so that each query
    gets its own reproducible direction pool.
    """
    config = config or DepthConfig()
    sample = _as_sample(sample)
    dim = sample.shape[1]
    method = config.resolve_method(dim)
    if method == EXACT:
        if dim == 1:
            return depth_exact_1d(np.atleast_1d(x)[0], sample[:, 0])
        return depth_exact_2d(x, sample)
    return depth_approx(x, sample, config.directions_for(dim), seed=[int(config.seed), int(index)])


def sample_depths(queries, sample, config=None, max_workers=1):
    """
    Depth of every query point with respect to one sample

    Args:
        queries (array-like): (m, p) query points
        sample (array-like): (n, p) data
        config (DepthConfig, optional): depth settings
        max_workers (int): worker threads, 1 evaluates sequentially

    Returns:
        numpy.ndarray: m depth values, in query order
    """
    config = (config or DepthConfig()).validate()
    sample = _as_sample(sample)
    queries = np.asarray(queries, dtype=float).reshape(-1, sample.shape[1])
    method = config.resolve_method(sample.shape[1])
    logger.info(f"Computing {method} depths of {queries.shape[0]} points against {sample.shape[0]} observations")

    def evaluate(item):
        index, point = item
        return halfspace_depth(point, sample, config, index).value

    items = list(enumerate(queries))
    if max_workers and max_workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
            values = list(executor.map(evaluate, items))
    else:
        values = [evaluate(item) for item in items]
    return np.asarray(values, dtype=float)


def model_depth_values(x, theta):
    """Halfspace depth of N(mu, Sigma) at one point or an (m, p) batch, as floats"""
    return 0.5 * chi2_sf(mahalanobis_sq(x, theta), theta.dim)


def model_depth_normal(x, theta):
    """
    Halfspace depth of the multivariate normal model at x

    D(x; N(mu, Sigma)) = (1 - F_chi2_p(d(x; theta))) / 2 with d the squared
    Mahalanobis distance, maximal (0.5) at mu.

    Args:
        x (array-like): query p-vector
        theta (ModelParams): model parameters

    Returns:
        DepthValue: model depth
    """
    return DepthValue(value=float(model_depth_values(x, theta)), kind=MODEL)
