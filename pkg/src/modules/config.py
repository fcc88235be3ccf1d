"""
Configuration Module

This module loads the JSON configuration file, merges it over the built-in
defaults and assembles the validated RunConfig consumed by the command line.
"""

import copy
import json
import logging
import os
from dataclasses import dataclass, field

from src.modules.depth import DepthConfig
from src.modules.errors import ConfigError
from src.modules.roots import RootSearchConfig
from src.modules.weights import WeightConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = {
    'max_workers': 1,
    'weights': {
        'a': 0.05,
        'c': 200.0,
        'alpha': 0.5,
        'depth_floor': 1e-12,
        'scheme': 'h_function',
        'raf_kind': 'hellinger',
    },
    'search': {
        'n_subsamples': 500,
        'subsample_size': 6,
        'seed': 0,
        'dedup_tol': 1e-3,
        'max_redraws': 10,
    },
    'depth': {
        'method': 'auto',
        'n_dirs': None,
    },
    'fit': {
        'tol': 1e-6,
        'max_iter': 500,
    },
    'output': {
        'output_dir': 'wlee_results',
        'roots': 'roots.json',
        'ellipses': 'ellipses.csv',
        'weights': 'weights.csv',
        'ellipse_level': 0.95,
        'ellipse_points': 200,
    },
}


def load_config(config_file=None):
    """
    Load a configuration file merged over DEFAULT_CONFIG

    Dict sections of the file update the matching default section, other
    keys replace the default. A missing or unreadable file leaves the
    defaults in place.

    Args:
        config_file (str, optional): path to a JSON file

    Returns:
        dict: merged configuration
    """
    config = copy.deepcopy(DEFAULT_CONFIG)
    if config_file is None:
        return config

    try:
        if os.path.exists(config_file):
            logger.info(f"Loading configuration from {config_file}")
            with open(config_file, 'r', encoding='utf-8') as f:
                user_config = json.load(f)
            for key, value in user_config.items():
                if key in config and isinstance(value, dict) and isinstance(config[key], dict):
                    config[key].update(value)
                else:
                    config[key] = value
        else:
            logger.warning(f"Config file {config_file} not found, using default configuration")
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Error loading config file: {e}")
    return config


@dataclass
class RunConfig:
    """
    Everything one command-line run needs

    Attributes:
        input_path (str): CSV file with the observations
        columns (list): selected column names or indices, None for all
        log_transform (bool): natural-log transform the selected columns
        weights (WeightConfig): weight tuning constants
        search (RootSearchConfig): multi-start settings
        depth (DepthConfig): sample depth settings
        tol (float): stopping tolerance of each fit
        max_iter (int): step budget of each fit
        ellipse_level (float): coverage of the reported ellipses
        ellipse_points (int): points per ellipse curve
        out_roots (str): roots JSON path
        out_ellipses (str): ellipses CSV path
        out_weights (str): weights CSV path
    """

    input_path: str
    columns: list = None
    log_transform: bool = False
    weights: WeightConfig = field(default_factory=WeightConfig)
    search: RootSearchConfig = field(default_factory=RootSearchConfig)
    depth: DepthConfig = field(default_factory=DepthConfig)
    tol: float = 1e-6
    max_iter: int = 500
    ellipse_level: float = 0.95
    ellipse_points: int = 200
    out_roots: str = os.path.join('wlee_results', 'roots.json')
    out_ellipses: str = os.path.join('wlee_results', 'ellipses.csv')
    out_weights: str = os.path.join('wlee_results', 'weights.csv')

    def validate(self, dim=None):
        """Check every tuning constant; dim enables the subsample_size >= p + 1 check"""
        self.weights.validate()
        self.search.validate(dim=dim)
        self.depth.validate()
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) < 0:
            raise ConfigError(f"max_iter must be nonnegative, got {self.max_iter}")
        if not 0.0 < self.ellipse_level < 1.0:
            raise ConfigError(f"ellipse level must lie in (0, 1), got {self.ellipse_level}")
        if int(self.ellipse_points) < 1:
            raise ConfigError(f"ellipse_points must be positive, got {self.ellipse_points}")
        return self

    def settings(self):
        """Settings echoed into the roots JSON metadata"""
        return {
            'columns': self.columns,
            'log_transform': self.log_transform,
            'weights': self.weights.to_dict(),
            'search': self.search.to_dict(),
            'depth': {'method': self.depth.method, 'n_dirs': self.depth.n_dirs, 'seed': self.depth.seed},
            'tol': self.tol,
            'max_iter': self.max_iter,
            'ellipse_level': self.ellipse_level,
        }


def _pick(flag, default):
    return default if flag is None else flag


def build_run_config(args, config):
    """
    Combine parsed command-line flags with a merged configuration

    Flags left at None fall back to the configuration values.

    Args:
        args (argparse.Namespace): parsed flags
        config (dict): result of load_config

    Returns:
        RunConfig: unvalidated run configuration
    """
    weights = config['weights']
    search = config['search']
    depth = config['depth']
    fit = config['fit']
    output = config['output']
    workers = int(_pick(args.workers, config.get('max_workers', 1)))
    seed = int(_pick(args.seed, search['seed']))

    columns = None
    if args.columns:
        columns = [token.strip() for token in args.columns.split(',') if token.strip()]

    output_dir = output.get('output_dir', '')
    return RunConfig(
        input_path=args.input,
        columns=columns,
        log_transform=bool(args.log),
        weights=WeightConfig(
            a=float(_pick(args.a, weights['a'])),
            c=float(_pick(args.c, weights['c'])),
            alpha=float(_pick(args.alpha, weights['alpha'])),
            depth_floor=float(weights['depth_floor']),
            scheme=_pick(args.scheme, weights['scheme']),
            raf_kind=_pick(args.raf, weights['raf_kind']),
        ),
        search=RootSearchConfig(
            n_subsamples=int(_pick(args.subsamples, search['n_subsamples'])),
            subsample_size=int(_pick(args.subsample_size, search['subsample_size'])),
            seed=seed,
            dedup_tol=float(search['dedup_tol']),
            max_redraws=int(search['max_redraws']),
            max_workers=workers,
            progress=not args.no_progress,
        ),
        depth=DepthConfig(
            method=_pick(args.depth, depth['method']),
            n_dirs=_pick(args.n_dirs, depth['n_dirs']),
            seed=seed,
        ),
        tol=float(_pick(args.tol, fit['tol'])),
        max_iter=int(_pick(args.max_iter, fit['max_iter'])),
        ellipse_level=float(_pick(args.ellipse_level, output['ellipse_level'])),
        ellipse_points=int(_pick(args.ellipse_points, output['ellipse_points'])),
        out_roots=_pick(args.out_roots, os.path.join(output_dir, output['roots'])),
        out_ellipses=_pick(args.out_ellipses, os.path.join(output_dir, output['ellipses'])),
        out_weights=_pick(args.out_weights, os.path.join(output_dir, output['weights'])),
    )
