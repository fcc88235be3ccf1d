"""
Estimator Module

This module estimates (mu, Sigma) of the multivariate normal model: maximum
likelihood, and the weighted likelihood estimating equations solved by
iterative reweighting.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from src.modules.depth import DepthConfig, sample_depths
from src.modules.errors import (
    AllDownweightedError,
    DegenerateSampleError,
    DegenerateStepError,
    DomainError,
    FactorizationError,
)
from src.modules.numerics import ModelParams, normal_logpdf
from src.modules.weights import observation_weights

logger = logging.getLogger(__name__)

__all__ = [
    'FitResult',
    'ModelParams',
    'check_fixed_point',
    'mle',
    'relative_change',
    'weighted_loglik',
    'wlee_fit',
    'wlee_step',
]

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 500
MIN_WEIGHT_FRACTION = 1e-6


@dataclass
class FitResult:
    """
    One terminal point of the reweighting iteration

    Attributes:
        theta (ModelParams): terminal parameters
        weights (numpy.ndarray): weights at theta, one per observation
        iterations (int): reweighting steps taken
        converged (bool): True when the last update was below tolerance
        weight_sum (float): sum of the weights at theta
        weighted_loglik (float): sum of w_i log phi(x_i; theta)
        failure (str): cause of a failed fit, None otherwise
        start_index (int): index of the start that produced the fit
        history (list): largest relative change of every completed step
    """

    theta: ModelParams
    weights: np.ndarray
    iterations: int
    converged: bool
    weight_sum: float
    weighted_loglik: float
    failure: str = None
    start_index: int = None
    history: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            **self.theta.to_dict(),
            'weight_sum': self.weight_sum,
            'weighted_loglik': self.weighted_loglik,
            'iterations': self.iterations,
            'converged': self.converged,
        }


def _as_matrix(data):
    values = getattr(data, 'values', data)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    if values.ndim != 2:
        raise DomainError(f"data must be an (n, p) matrix, got shape {values.shape}")
    return values


def _symmetric(matrix):
    return 0.5 * (matrix + matrix.T)


def mle(data):
    """
    Maximum likelihood estimate of (mu, Sigma)

    The covariance uses divisor n, the solution of the normal score equations.

    Args:
        data (Dataset or array-like): (n, p) observations, n >= p + 1

    Returns:
        ModelParams: sample mean and covariance

    Raises:
        DegenerateSampleError: too few points or singular covariance
    """
    X = _as_matrix(data)
    n, p = X.shape
    if n < p + 1:
        raise DegenerateSampleError(f"{n} observations cannot determine a {p}-dimensional covariance")
    mu = X.mean(axis=0)
    centered = X - mu
    theta = ModelParams(mu, _symmetric(centered.T @ centered / n))
    try:
        theta.validate()
    except FactorizationError as e:
        raise DegenerateSampleError(f"sample covariance is singular: {e}") from e
    return theta


def weighted_loglik(data, weights, theta):
    """Weighted log likelihood sum_i w_i log phi(x_i; theta)"""
    X = _as_matrix(data)
    return float(np.dot(weights, normal_logpdf(X, theta)))


def wlee_step(data, theta, config, depth_cache):
    """
    One fixed-point step of the weighted likelihood estimating equations

    Weights are evaluated at theta and then frozen; the new mean and scatter
    solve the weighted normal score equations exactly:
    mu+ = sum w x / sum w, Sigma+ = sum w (x - mu+)(x - mu+)' / sum w.

    Args:
        data (Dataset or array-like): (n, p) observations
        theta (ModelParams): current parameters
        config (WeightConfig): weight tuning constants
        depth_cache (array-like): sample depth of every observation

    Returns:
        tuple: (ModelParams, numpy.ndarray of weights at theta)
    """
    X = _as_matrix(data)
    n = X.shape[0]
    weights = observation_weights(X, depth_cache, theta, config)
    total = float(weights.sum())
    if total < n * MIN_WEIGHT_FRACTION:
        raise AllDownweightedError(f"total weight {total:.3g} is below {n * MIN_WEIGHT_FRACTION:.3g}")

    mu = weights @ X / total
    centered = X - mu
    sigma = _symmetric((centered * weights[:, None]).T @ centered / total)
    updated = ModelParams(mu, sigma)
    try:
        updated.validate()
    except FactorizationError as e:
        raise DegenerateStepError(f"weighted scatter is not positive definite: {e}") from e
    return updated, weights


def relative_change(old, new):
    """
    Size of a parameter update measured in the metric of the old scatter

    Returns:
        tuple: (sqrt((mu' - mu)' Sigma^-1 (mu' - mu)), ||L^-1 Sigma' L^-T - I||_F)
        with Sigma = L L'. Both are invariant under affine transformations.
    """
    L = old.cholesky
    shift = solve_triangular(L, new.mu - old.mu, lower=True)
    left = solve_triangular(L, new.sigma, lower=True)
    standardized = solve_triangular(L, left.T, lower=True)
    mu_change = float(np.linalg.norm(shift))
    sigma_change = float(np.linalg.norm(standardized - np.eye(old.dim), ord='fro'))
    return mu_change, sigma_change


def _terminal(X, theta, config, depth_cache, iterations, converged, failure, history):
    try:
        weights = observation_weights(X, depth_cache, theta, config)
        loglik = weighted_loglik(X, weights, theta)
    except FactorizationError as e:
        weights = np.zeros(X.shape[0])
        loglik = float('nan')
        failure = failure or f"invalid parameters: {e}"
    return FitResult(
        theta=theta,
        weights=weights,
        iterations=iterations,
        converged=converged,
        weight_sum=float(weights.sum()),
        weighted_loglik=loglik,
        failure=failure,
        history=history,
    )


def wlee_fit(data, theta0, config, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, depth_cache=None, depth_config=None):
    """
    Solve the weighted likelihood estimating equations by iterative reweighting

    Iterates wlee_step from theta0 until both relative changes fall below tol
    or max_iter steps were taken. A converged fit reports the parameters the
    final, sub-tolerance step was taken from, so a fresh step from them is
    guaranteed to stay within tol. Degenerate steps do not raise: they end the
    fit with converged=False and the cause in FitResult.failure.

    Args:
        data (Dataset or array-like): (n, p) observations
        theta0 (ModelParams): starting parameters
        config (WeightConfig): weight tuning constants
        tol (float): stopping tolerance
        max_iter (int): maximal number of steps
        depth_cache (array-like, optional): precomputed sample depths
        depth_config (DepthConfig, optional): used when depth_cache is None

    Returns:
        FitResult: terminal parameters, weights and diagnostics
    """
    X = _as_matrix(data)
    if depth_cache is None:
        depth_cache = sample_depths(X, X, depth_config or DepthConfig())

    theta = theta0
    history = []
    for iteration in range(1, int(max_iter) + 1):
        try:
            updated, _ = wlee_step(X, theta, config, depth_cache)
            mu_change, sigma_change = relative_change(theta, updated)
        except (AllDownweightedError, DegenerateStepError, FactorizationError) as e:
            logger.debug(f"Reweighting stopped at step {iteration}: {e}")
            return _terminal(X, theta, config, depth_cache, iteration - 1, False, str(e), history)

        history.append(max(mu_change, sigma_change))
        # the returned theta is the one whose own step is verified below tol
        if max(mu_change, sigma_change) < tol:
            return _terminal(X, theta, config, depth_cache, iteration, True, None, history)
        theta = updated

    failure = 'maximum iterations reached' if max_iter else None
    return _terminal(X, theta, config, depth_cache, int(max_iter), False, failure, history)


def check_fixed_point(data, fit, config, depth_cache, tol=DEFAULT_TOL):
    """True when one more wlee_step from fit.theta moves it by less than tol"""
    try:
        updated, _ = wlee_step(data, fit.theta, config, depth_cache)
        return max(relative_change(fit.theta, updated)) < tol
    except (AllDownweightedError, DegenerateStepError, FactorizationError):
        return False
