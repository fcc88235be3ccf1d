"""
Data Module

This module loads observation matrices from CSV files and generates the
synthetic cluster datasets used to exercise the root search.
"""

import logging
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.modules.errors import DataError, DomainError

logger = logging.getLogger(__name__)


@dataclass
class Dataset:
    """
    An n x p matrix of observations with column metadata

    Attributes:
        values (numpy.ndarray): observations, one per row
        columns (list): column names
        source (str): file the data came from, if any
        log_transformed (bool): natural log applied at load time
    """

    values: np.ndarray
    columns: list = field(default_factory=list)
    source: str = None
    log_transformed: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values.reshape(-1, 1)
        if not self.columns:
            self.columns = [f"x{j + 1}" for j in range(self.values.shape[1])]

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def to_frame(self):
        return pd.DataFrame(self.values, columns=self.columns)


def _is_number(text):
    try:
        float(text)
        return True
    except (TypeError, ValueError):
        return False


def _resolve_columns(first_row, columns):
    """Map column tokens (names or 0-based indices) to positions"""
    width = len(first_row)
    if columns is None:
        return list(range(width))

    names = [str(cell).strip() for cell in first_row]
    positions = []
    for token in columns:
        token = str(token).strip()
        if token in names and not _is_number(token):
            positions.append(names.index(token))
        elif token.isdigit() and int(token) < width:
            positions.append(int(token))
        else:
            raise DataError(f"column '{token}' not found", column=token)
    return positions


def load_csv(path, columns=None, log_transform=False):
    """
    Load selected numeric columns of a CSV file

    A header row is detected when the first row is non-numeric in any
    selected column. Row numbers in errors are file line numbers.

    Args:
        path (str): CSV file (comma separated, UTF-8, '.' decimals)
        columns (list, optional): column names or 0-based indices, all when None
        log_transform (bool): apply the natural logarithm

    Returns:
        Dataset: the selected observations
    """
    logger.info(f"Loading data from {path}")
    if not os.path.exists(path):
        raise DataError(f"input file {path} not found")
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=False,
                          encoding='utf-8')
    except pd.errors.EmptyDataError:
        raise DataError(f"input file {path} is empty") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f"cannot parse {path}: {e}") from e
    raw = raw.fillna('')
    # Index labels stay 0-based file line numbers once blank lines are gone
    raw = raw[~raw.apply(lambda line: line.astype(str).str.strip().eq('').all(), axis=1)]
    if raw.empty:
        raise DataError(f"input file {path} is empty")

    positions = _resolve_columns(raw.iloc[0].tolist(), columns)
    if not positions:
        raise DomainError("no columns selected")

    first = raw.iloc[0, positions].astype(str).str.strip()
    has_header = not all(_is_number(cell) for cell in first)
    names = first.tolist() if has_header else [str(j) for j in positions]
    body = raw.iloc[1:] if has_header else raw

    values = np.empty((len(body), len(positions)))
    missing_rows = set()
    for k, (position, name) in enumerate(zip(positions, names)):
        cells = body.iloc[:, position].astype(str).str.strip()
        parsed = pd.to_numeric(cells, errors='coerce')
        blank = cells == ''
        bad = parsed.isna() & ~blank
        if bad.any():
            row = int(bad.idxmax()) + 1
            raise DataError(f"non-numeric value '{cells[bad.idxmax()]}' at row {row}, column '{name}'",
                            row=row, column=name)
        missing_rows.update(int(i) + 1 for i in cells.index[blank])
        values[:, k] = parsed.to_numpy(dtype=float)

    if missing_rows:
        rows = sorted(missing_rows)
        raise DataError(f"missing values in rows {', '.join(map(str, rows))}", row=rows[0])

    if log_transform:
        if np.any(values <= 0):
            row = int(body.index[np.flatnonzero(np.any(values <= 0, axis=1))[0]]) + 1
            raise DataError(f"log transform needs positive values (row {row})", row=row)
        values = np.log(values)

    n, p = values.shape
    if p < 1 or n < p + 1:
        raise DomainError(f"need at least p + 1 = {p + 1} observations, got {n}")
    logger.info(f"Loaded {n} observations of {p} variables")
    return Dataset(values=values, columns=names, source=str(path), log_transformed=log_transform)


def _clusters(means, sizes, scale, seed):
    rng = np.random.default_rng(seed)
    blocks = []
    for mean, size in zip(means, sizes):
        mean = np.asarray(mean, dtype=float)
        blocks.append(mean + np.sqrt(scale) * rng.standard_normal((size, mean.size)))
    return np.vstack(blocks)


def generate_two_cluster(seed=0, size=304):
    """Two bivariate normal clusters at (0, 0) and (4, 4), Sigma = 0.5 I, size points in total"""
    values = _clusters([(0.0, 0.0), (4.0, 4.0)], [size - size // 2, size // 2], 0.5, seed)
    return Dataset(values=values, columns=['x1', 'x2'], source='two-cluster')


def generate_three_cluster(seed=0, size=304):
    """Three trivariate normal clusters at (0,0,0), (4,4,0), (0,4,4), Sigma = 0.5 I"""
    sizes = [size - 2 * (size // 3), size // 3, size // 3]
    values = _clusters([(0.0, 0.0, 0.0), (4.0, 4.0, 0.0), (0.0, 4.0, 4.0)], sizes, 0.5, seed)
    return Dataset(values=values, columns=['x1', 'x2', 'x3'], source='three-cluster')


GENERATORS = {
    'two-cluster': generate_two_cluster,
    'three-cluster': generate_three_cluster,
}


def write_dataset(dataset, path):
    """Write a dataset as CSV with a header row"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    dataset.to_frame().to_csv(path, index=False)
    logger.info(f"Wrote {dataset.n} observations to {path}")
