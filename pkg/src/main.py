#!/usr/bin/env python3
"""
Depth-Weighted Likelihood Root Search
Main entry point for the application
"""

import os
import sys
import logging
import argparse
from datetime import datetime

import numpy as np

# Add the repository root to the path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.modules.config import build_run_config, load_config
from src.modules.data import GENERATORS, load_csv, write_dataset
from src.modules.errors import WLEEError
from src.modules.output import ellipse_frame, roots_payload, weights_frame, write_csv, write_roots_json
from src.modules.roots import find_roots

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_ROOTS = 2


def configure_logging(verbose=False, log_file=True):
    """Configure logging for a command-line run"""
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.insert(0, logging.FileHandler(f"wlee_{datetime.now().strftime('%Y%m%d')}.log"))
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers
    )


def parse_arguments(argv=None):
    """Parse command line arguments"""
    parser = argparse.ArgumentParser(description='Depth-based weighted likelihood estimation for the multivariate normal')
    parser.add_argument('--config', type=str, default='config.json', help='Configuration file')
    parser.add_argument('--input', type=str, help='CSV file with the observations')
    parser.add_argument('--columns', type=str, help='Comma-separated column names or 0-based indices')
    parser.add_argument('--log', action='store_true', help='Natural-log transform the selected columns')
    parser.add_argument('--a', type=float, help='Steepness a of the H weight function')
    parser.add_argument('--c', type=float, help='Residual cut c of the H weight function')
    parser.add_argument('--alpha', type=float, help='Central full-weight region alpha')
    parser.add_argument('--scheme', choices=['h', 'raf'], help='Weight scheme')
    parser.add_argument('--raf', choices=['identity', 'hellinger'], help='Residual adjustment function')
    parser.add_argument('--subsamples', type=int, help='Number of starting subsamples')
    parser.add_argument('--subsample-size', type=int, help='Points per starting subsample')
    parser.add_argument('--seed', type=int, help='Random seed')
    parser.add_argument('--tol', type=float, help='Stopping tolerance')
    parser.add_argument('--max-iter', type=int, help='Maximal reweighting steps per start')
    parser.add_argument('--n-dirs', type=int, help='Random directions of the approximate depth')
    parser.add_argument('--depth', choices=['auto', 'exact', 'approximate'], help='Sample depth method')
    parser.add_argument('--ellipse-level', type=float, help='Coverage of the reported ellipses')
    parser.add_argument('--ellipse-points', type=int, help='Points per ellipse curve')
    parser.add_argument('--out-roots', type=str, help='Roots JSON output')
    parser.add_argument('--out-ellipses', type=str, help='Ellipses CSV output')
    parser.add_argument('--out-weights', type=str, help='Weights CSV output')
    parser.add_argument('--workers', type=int, help='Worker threads')
    parser.add_argument('--generate', choices=sorted(GENERATORS), help='Write a synthetic dataset and exit')
    parser.add_argument('--generate-out', type=str, help='Output CSV of --generate')
    parser.add_argument('--generate-size', type=int, default=304, help='Observations generated by --generate')
    parser.add_argument('--no-progress', action='store_true', help='Hide the progress bar')
    parser.add_argument('--no-log-file', action='store_true', help='Log to stderr only')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    return parser, parser.parse_args(argv)


def generate(kind, path, seed=0, size=304):
    """Write one of the synthetic datasets"""
    try:
        dataset = GENERATORS[kind](seed=seed, size=size)
        write_dataset(dataset, path)
    except OSError as e:
        logger.error(f"Cannot write {path}: {e}")
        return EXIT_INPUT
    return EXIT_OK


def print_summary(root_set, dataset):
    """Print the roots found"""
    print(f"\n=== Roots for {dataset.source} (n={dataset.n}, p={dataset.p}) ===")
    print(f"MLE: mu={np.round(root_set.mle.mu, 4).tolist()}")
    for root_id, (fit, basin) in enumerate(zip(root_set.roots, root_set.basin_counts)):
        print(f"Root {root_id}: mu={np.round(fit.theta.mu, 4).tolist()}, basin={basin}, "
              f"weight_sum={fit.weight_sum:.2f}, iterations={fit.iterations}")
    print(f"Failed starts: {root_set.n_failed}")


def run(config):
    """
    Load the data, search the roots and write every output

    Args:
        config (RunConfig): run configuration

    Returns:
        int: 0 with at least one root, 1 on input or configuration errors, 2 without roots
    """
    # Load the data
    try:
        dataset = load_csv(config.input_path, config.columns, config.log_transform)
        config.validate(dim=dataset.p)
    except (WLEEError, OSError) as e:
        logger.error(f"{e}")
        return EXIT_INPUT

    # Search the roots
    try:
        root_set = find_roots(dataset, config.weights, config.search, depth_config=config.depth,
                              tol=config.tol, max_iter=config.max_iter)
    except WLEEError as e:
        logger.error(f"Root search failed: {e}")
        return EXIT_INPUT

    # Save results
    meta = {
        'input': config.input_path,
        'seed': config.search.seed,
        'n': dataset.n,
        'p': dataset.p,
        'columns': dataset.columns,
        'settings': config.settings(),
    }
    try:
        write_roots_json(config.out_roots, roots_payload(root_set, meta))
        write_csv(ellipse_frame(root_set, config.ellipse_level, config.ellipse_points, dataset.columns),
                  config.out_ellipses)
        write_csv(weights_frame(root_set, dataset.n), config.out_weights)
    except OSError as e:
        logger.error(f"Error saving results: {e}")
        return EXIT_INPUT

    # Print summary
    print_summary(root_set, dataset)
    if not root_set.roots:
        logger.warning("No roots found")
        return EXIT_NO_ROOTS
    return EXIT_OK


def main(argv=None):
    """Main entry point"""
    parser, args = parse_arguments(argv)
    configure_logging(args.verbose, not args.no_log_file)
    logger.info("Starting depth-weighted likelihood root search")

    if args.generate:
        path = args.generate_out or f"{args.generate.replace('-', '_')}.csv"
        return generate(args.generate, path, seed=args.seed or 0, size=args.generate_size)

    if not args.input:
        parser.print_help()
        return EXIT_INPUT

    try:
        config = build_run_config(args, load_config(args.config))
    except WLEEError as e:
        logger.error(f"{e}")
        return EXIT_INPUT
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
