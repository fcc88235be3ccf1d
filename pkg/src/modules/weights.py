"""
Weights Module

This module turns the disagreement between sample depth and model depth into
per-observation weights: depth-ratio Pearson residuals, the H function, the
residual adjustment function (RAF) weights and the central full-weight region.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.modules.depth import DepthValue, model_depth_values
from src.modules.errors import ConfigError

logger = logging.getLogger(__name__)


class WeightScheme(str, Enum):
    H_FUNCTION = 'h_function'
    RAF = 'raf'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {'h': cls.H_FUNCTION}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ConfigError(f"unknown weight scheme '{value}'") from None


class RafKind(str, Enum):
    IDENTITY = 'identity'
    HELLINGER = 'hellinger'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(f"unknown residual adjustment function '{value}'") from None


@dataclass
class WeightConfig:
    """
    Tuning constants of the weight function

    Attributes:
        a (float): steepness of H
        c (float): residuals above c get weight 0
        alpha (float): central full-weight region, weight 1 while model depth > alpha / 2
        depth_floor (float): lower guard on the model depth in the residual
        scheme (WeightScheme): H function or RAF weights
        raf_kind (RafKind): RAF used by the 'raf' scheme
    """

    a: float = 0.05
    c: float = 200.0
    alpha: float = 0.5
    depth_floor: float = 1e-12
    scheme: WeightScheme = WeightScheme.H_FUNCTION
    raf_kind: RafKind = RafKind.HELLINGER

    def __post_init__(self):
        self.scheme = WeightScheme.parse(self.scheme)
        self.raf_kind = RafKind.parse(self.raf_kind)

    def validate(self):
        if not self.a > 0:
            raise ConfigError(f"a must be positive, got {self.a}")
        if not self.c > 0:
            raise ConfigError(f"c must be positive, got {self.c}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.depth_floor > 0:
            raise ConfigError(f"depth_floor must be positive, got {self.depth_floor}")
        return self

    def to_dict(self):
        return {
            'a': self.a,
            'c': self.c,
            'alpha': self.alpha,
            'depth_floor': self.depth_floor,
            'scheme': self.scheme.value,
            'raf_kind': self.raf_kind.value,
        }


def _values(depth):
    if isinstance(depth, DepthValue):
        return depth.value
    return np.asarray(depth, dtype=float) if np.ndim(depth) else float(depth)


def pearson_residual(sample_depth, model_depth, depth_floor=1e-12):
    """
    Depth-ratio Pearson residual D_n / max(D_model, floor) - 1

    Args:
        sample_depth (DepthValue, float or array): finite-sample depth(s)
        model_depth (DepthValue, float or array): model depth(s)
        depth_floor (float): guard against vanishing model depth

    Returns:
        float or numpy.ndarray: residual(s), never below -1
    """
    return _values(sample_depth) / np.maximum(_values(model_depth), depth_floor) - 1.0


def weight_h(delta, a, c):
    """H(delta, a, c) = exp(-a delta^2) for delta <= c, 0 above"""
    delta = np.asarray(delta, dtype=float)
    weight = np.where(delta <= c, np.exp(-a * np.minimum(delta, c) ** 2), 0.0)
    return float(weight) if weight.ndim == 0 else weight


def _hellinger(delta):
    return 2.0 * (np.sqrt(1.0 + delta) - 1.0)


RESIDUAL_ADJUSTMENTS = {
    RafKind.IDENTITY: lambda delta: delta,
    RafKind.HELLINGER: _hellinger,
}


def weight_raf(delta, raf_kind=RafKind.HELLINGER):
    """
    Weight (A(delta) + 1) / (delta + 1) for a residual adjustment function A

    Weights are clipped to [0, 1]. An empty sample depth (delta = -1) keeps
    full weight, so the Hellinger weight jumps from 0 just above -1 to 1 at
    -1 exactly. Observations have sample depth at least 1/n and never sit at
    delta = -1 during a fit.
    """
    adjust = RESIDUAL_ADJUSTMENTS[RafKind.parse(raf_kind)]
    delta = np.asarray(delta, dtype=float)
    empty = delta <= -1.0
    shifted = np.where(empty, 1.0, delta + 1.0)
    safe = np.where(empty, 0.0, delta)
    weight = np.where(empty, 1.0, (adjust(safe) + 1.0) / shifted)
    weight = np.clip(weight, 0.0, 1.0)
    return float(weight) if weight.ndim == 0 else weight


def _weights_from_depths(sample_depth, model_depth, config):
    delta = pearson_residual(sample_depth, model_depth, config.depth_floor)
    if config.scheme is WeightScheme.H_FUNCTION:
        weight = weight_h(delta, config.a, config.c)
    else:
        weight = weight_raf(delta, config.raf_kind)
    return np.where(np.asarray(model_depth) > config.alpha / 2.0, 1.0, weight)


def observation_weight(x, sample_depth, theta, config):
    """
    Weight of one observation at the current model

    Args:
        x (array-like): observation p-vector
        sample_depth (DepthValue or float): its depth within the full dataset
        theta (ModelParams): current model
        config (WeightConfig): tuning constants

    Returns:
        float: weight in [0, 1]
    """
    model_depth = float(model_depth_values(x, theta))
    return float(_weights_from_depths(_values(sample_depth), model_depth, config))


def observation_weights(X, sample_depth, theta, config):
    """Vectorized observation_weight over the rows of X"""
    model_depth = np.atleast_1d(model_depth_values(np.atleast_2d(X), theta))
    return np.atleast_1d(_weights_from_depths(np.asarray(sample_depth, dtype=float), model_depth, config))
