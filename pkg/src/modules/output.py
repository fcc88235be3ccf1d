"""
Output Module

This module writes the results of a root search: the roots JSON document,
plot-ready ellipse polylines and per-root observation weights as CSV.
"""

import json
import logging
import os
from datetime import datetime

import numpy as np
import pandas as pd

from src.modules.errors import UnsupportedDimensionError
from src.modules.numerics import ModelParams, ellipsoid_boundary

logger = logging.getLogger(__name__)

MLE_ID = 'mle'


def _ensure_parent(path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def roots_payload(root_set, meta):
    """
    Build the roots JSON document

    Args:
        root_set (RootSet): search result
        meta (dict): run metadata (seed, settings, n, p, ...)

    Returns:
        dict: {"meta": {...}, "roots": [...]}
    """
    roots = []
    for root_id, (fit, basin, starts) in enumerate(zip(root_set.roots, root_set.basin_counts, root_set.provenance)):
        roots.append({
            'id': root_id,
            **fit.to_dict(),
            'basin_count': basin,
            'starts': [int(s) for s in starts],
        })
    meta = {
        **meta,
        'n_roots': len(roots),
        'n_failed': root_set.n_failed,
        'failures': root_set.failures,
        'mle': root_set.mle.to_dict() if root_set.mle is not None else None,
        'created_at': datetime.now().isoformat(),
    }
    return {'meta': meta, 'roots': roots}


def write_roots_json(path, payload):
    """Write the roots document"""
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2)
    logger.info(f"Roots saved to {path}")


def read_roots_json(path):
    """
    Read a roots document back

    Returns:
        tuple: (meta dict, list of root dicts with an added 'theta' ModelParams)
    """
    with open(path, 'r', encoding='utf-8') as f:
        payload = json.load(f)
    roots = []
    for root in payload['roots']:
        roots.append({**root, 'theta': ModelParams.from_dict(root)})
    return payload['meta'], roots


def ellipse_frame(root_set, level, n_points, columns=None, include_mle=True):
    """
    Confidence-ellipse polylines of every root (and the pooled MLE)

    Returns:
        pandas.DataFrame: root_id, slice, point_index and one column per
        coordinate; empty when the dimension cannot be drawn
    """
    models = [(str(i), fit.theta) for i, fit in enumerate(root_set.roots)]
    if include_mle and root_set.mle is not None:
        models.append((MLE_ID, root_set.mle))
    if not models:
        return pd.DataFrame(columns=['root_id', 'slice', 'point_index'])

    dim = models[0][1].dim
    columns = list(columns) if columns else [f"x{j + 1}" for j in range(dim)]
    frames = []
    for root_id, theta in models:
        try:
            boundary = ellipsoid_boundary(theta, level, n_points)
        except UnsupportedDimensionError as e:
            logger.warning(f"Skipping ellipses: {e}")
            return pd.DataFrame(columns=['root_id', 'slice', 'point_index', *columns])
        frame = pd.DataFrame(boundary.points, columns=columns)
        frame.insert(0, 'point_index', np.arange(len(boundary)))
        frame.insert(0, 'slice', boundary.slices)
        frame.insert(0, 'root_id', root_id)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def weights_frame(root_set, n):
    """Terminal weight of every observation at every root"""
    frame = pd.DataFrame({'observation': np.arange(n)})
    for root_id, fit in enumerate(root_set.roots):
        frame[f"root_{root_id}"] = fit.weights
    return frame


def write_csv(frame, path):
    _ensure_parent(path)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame)} rows to {path}")
