"""
Root Search Module

This module searches for multiple roots of the weighted likelihood estimating
equations. Each start is the maximum likelihood estimate of a small random
subsample; the converged fits are merged into a RootSet of distinct roots.
"""

import logging
import concurrent.futures
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from src.modules.depth import DepthConfig, sample_depths
from src.modules.errors import ConfigError, DegenerateSampleError, DomainError
from src.modules.estimator import DEFAULT_MAX_ITER, DEFAULT_TOL, check_fixed_point, mle, wlee_fit

logger = logging.getLogger(__name__)

FAILED_START = 'degenerate subsample'
FAILED_CHECK = 'fixed-point check failed'


@dataclass
class RootSearchConfig:
    """
    Settings of the multi-start search

    Attributes:
        n_subsamples (int): number of starts
        subsample_size (int): points per starting subsample, at least p + 1
        seed (int): seed of the subsample draws
        dedup_tol (float): relative distance below which two roots merge
        max_redraws (int): redraws of a degenerate subsample before giving up
        max_workers (int): worker threads for the starts
        progress (bool): show a progress bar
    """

    n_subsamples: int = 500
    subsample_size: int = 6
    seed: int = 0
    dedup_tol: float = 1e-3
    max_redraws: int = 10
    max_workers: int = 1
    progress: bool = False

    def validate(self, dim=None):
        if int(self.n_subsamples) < 0:
            raise ConfigError(f"n_subsamples must be nonnegative, got {self.n_subsamples}")
        if int(self.subsample_size) < 1:
            raise ConfigError(f"subsample_size must be positive, got {self.subsample_size}")
        if dim is not None and self.subsample_size < dim + 1:
            raise ConfigError(f"subsample_size {self.subsample_size} is below p + 1 = {dim + 1}")
        if not self.dedup_tol > 0:
            raise ConfigError(f"dedup_tol must be positive, got {self.dedup_tol}")
        if int(self.max_redraws) < 0:
            raise ConfigError(f"max_redraws must be nonnegative, got {self.max_redraws}")
        return self

    def to_dict(self):
        return {
            'n_subsamples': self.n_subsamples,
            'subsample_size': self.subsample_size,
            'seed': self.seed,
            'dedup_tol': self.dedup_tol,
            'max_redraws': self.max_redraws,
        }


@dataclass
class RootSet:
    """
    Distinct roots with their provenance

    Attributes:
        roots (list): FitResult representatives, by descending weight_sum
        basin_counts (list): number of starts that reached each root
        provenance (list): start indices that reached each root
        n_failed (int): starts that did not produce a root
        failures (dict): failure cause -> count
        mle (ModelParams): pooled maximum likelihood estimate, for reference
    """

    roots: list = field(default_factory=list)
    basin_counts: list = field(default_factory=list)
    provenance: list = field(default_factory=list)
    n_failed: int = 0
    failures: dict = field(default_factory=dict)
    mle: object = None

    def __len__(self):
        return len(self.roots)

    @property
    def n_starts(self):
        return sum(self.basin_counts) + self.n_failed


def _n_rows(data):
    return np.asarray(getattr(data, 'values', data)).shape[0]


def draw_subsamples(data, config):
    """
    Draw the starting subsamples

    Args:
        data (Dataset or array-like): (n, p) observations
        config (RootSearchConfig): search settings

    Returns:
        list: n_subsamples index arrays, each without repeated indices
    """
    n = _n_rows(data)
    size = int(config.subsample_size)
    if size > n:
        raise DomainError(f"subsample size {size} exceeds the {n} observations")
    rng = np.random.default_rng(config.seed)
    return [np.sort(rng.choice(n, size=size, replace=False)) for _ in range(int(config.n_subsamples))]


def _start_params(X, indices, start_index, config):
    """MLE of the subsample, redrawn (seeded by start index) while degenerate"""
    rng = None
    for attempt in range(int(config.max_redraws) + 1):
        try:
            return mle(X[indices])
        except DegenerateSampleError as e:
            logger.debug(f"Start {start_index}: degenerate subsample (attempt {attempt + 1}): {e}")
            if rng is None:
                rng = np.random.default_rng([int(config.seed), int(start_index)])
            indices = rng.choice(X.shape[0], size=len(indices), replace=False)
    return None


def _distance(a, b):
    mu_gap = np.linalg.norm(a.mu - b.mu) / (1.0 + np.linalg.norm(a.mu))
    sigma_gap = np.linalg.norm(a.sigma - b.sigma, ord='fro') / (1.0 + np.linalg.norm(a.sigma, ord='fro'))
    return mu_gap, sigma_gap


def dedup_roots(fits, dedup_tol):
    """
    Merge converged fits into distinct roots

    Fits are scanned in arrival order; a fit joins the first cluster whose
    anchor (first member) is within dedup_tol in both the relative mean gap
    ||mu1 - mu2|| / (1 + ||mu1||) and the relative scatter gap
    ||S1 - S2||_F / (1 + ||S1||_F). Each cluster is represented by its member
    with the largest weight_sum.

    Args:
        fits (list): converged FitResults in arrival order
        dedup_tol (float): merge tolerance

    Returns:
        RootSet: roots by descending weight_sum, n_failed = 0
    """
    clusters = []
    for fit in fits:
        for cluster in clusters:
            mu_gap, sigma_gap = _distance(cluster[0].theta, fit.theta)
            if mu_gap < dedup_tol and sigma_gap < dedup_tol:
                cluster.append(fit)
                break
        else:
            clusters.append([fit])

    summary = []
    for cluster in clusters:
        representative = max(cluster, key=lambda f: f.weight_sum)
        summary.append((representative, len(cluster), [f.start_index for f in cluster]))
    summary.sort(key=lambda item: item[0].weight_sum, reverse=True)

    return RootSet(
        roots=[item[0] for item in summary],
        basin_counts=[item[1] for item in summary],
        provenance=[item[2] for item in summary],
    )


class RootFinder:
    """
    Multi-start search for the roots of the weighted likelihood equations

    The sample depths are computed once; every start then runs wlee_fit
    against the shared, read-only data and depth cache.
    """

    def __init__(self, wconfig, rconfig, depth_config=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        """
        Initialize the Root Finder

        Args:
            wconfig (WeightConfig): weight tuning constants
            rconfig (RootSearchConfig): search settings
            depth_config (DepthConfig, optional): sample depth settings
            tol (float): stopping tolerance of each fit
            max_iter (int): step budget of each fit
        """
        self.wconfig = wconfig.validate()
        self.rconfig = rconfig
        self.depth_config = (depth_config or DepthConfig()).validate()
        self.tol = tol
        self.max_iter = max_iter
        self.depth_cache = None

    def _fit_start(self, X, start_index, indices):
        theta0 = _start_params(X, indices, start_index, self.rconfig)
        if theta0 is None:
            return start_index, None, FAILED_START
        fit = wlee_fit(X, theta0, self.wconfig, self.tol, self.max_iter, depth_cache=self.depth_cache)
        fit.start_index = start_index
        if not fit.converged:
            if fit.history:
                logger.debug(f"Start {start_index}: stopped after {fit.iterations} steps, "
                             f"last change {fit.history[-1]:.3g}")
            return start_index, fit, fit.failure or 'not converged'
        if not check_fixed_point(X, fit, self.wconfig, self.depth_cache, self.tol):
            return start_index, fit, FAILED_CHECK
        return start_index, fit, None

    def search(self, data, depth_cache=None):
        """
        Run every start and merge the results

        Args:
            data (Dataset or array-like): (n, p) observations
            depth_cache (array-like, optional): precomputed sample depths

        Returns:
            RootSet: distinct roots, basin counts and failure accounting
        """
        X = np.asarray(getattr(data, 'values', data), dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)

        # Validate settings and draw the starting subsamples
        self.rconfig.validate(dim=X.shape[1])
        subsamples = draw_subsamples(X, self.rconfig)

        # Pooled MLE for reference
        pooled = mle(X)
        if not subsamples:
            logger.warning("No starts requested, returning an empty root set")
            return RootSet(mle=pooled)

        # Depth of every observation, computed once
        if depth_cache is None:
            depth_cache = sample_depths(X, X, self.depth_config, max_workers=self.rconfig.max_workers)
        self.depth_cache = np.asarray(depth_cache, dtype=float)

        logger.info(f"Starting root search with {len(subsamples)} subsamples of size {self.rconfig.subsample_size}")
        # Fit every start in parallel
        outcomes = []
        with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, int(self.rconfig.max_workers))) as executor:
            futures = [executor.submit(self._fit_start, X, i, idx) for i, idx in enumerate(subsamples)]
            for future in tqdm(concurrent.futures.as_completed(futures), total=len(futures),
                               desc="Root search", disable=not self.rconfig.progress):
                try:
                    outcomes.append(future.result())
                except Exception as e:
                    logger.error(f"Start failed unexpectedly: {e}")
                    outcomes.append((None, None, f"error: {type(e).__name__}"))

        # Restore start order before merging
        outcomes.sort(key=lambda item: -1 if item[0] is None else item[0])
        converged = [fit for _, fit, cause in outcomes if cause is None]
        failures = Counter(cause for _, _, cause in outcomes if cause is not None)

        # Merge converged fits into distinct roots
        root_set = dedup_roots(converged, self.rconfig.dedup_tol)
        root_set.n_failed = sum(failures.values())
        root_set.failures = dict(sorted(failures.items()))
        root_set.mle = pooled

        logger.info(f"Root search complete. Found {len(root_set)} roots, {root_set.n_failed} starts failed.")
        if failures:
            logger.warning(f"Failed starts by cause: {root_set.failures}")
        for rank, (root, basin) in enumerate(zip(root_set.roots, root_set.basin_counts)):
            logger.debug(f"Root {rank}: mu={np.round(root.theta.mu, 4).tolist()} basin={basin} "
                         f"weight_sum={root.weight_sum:.2f}")
        return root_set


def find_roots(data, wconfig, rconfig, depth_config=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, depth_cache=None):
    """
    Find the distinct roots reached from subsample-MLE starts

    Args:
        data (Dataset or array-like): (n, p) observations
        wconfig (WeightConfig): weight tuning constants
        rconfig (RootSearchConfig): search settings
        depth_config (DepthConfig, optional): sample depth settings
        tol (float): stopping tolerance of each fit
        max_iter (int): step budget of each fit
        depth_cache (array-like, optional): precomputed sample depths

    Returns:
        RootSet: roots by descending weight_sum; empty when nothing converged
    """
    finder = RootFinder(wconfig, rconfig, depth_config=depth_config, tol=tol, max_iter=max_iter)
    return finder.search(data, depth_cache=depth_cache)
