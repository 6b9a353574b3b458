"""
Statistics for experiment results.

Confusion matrices, per-class accuracy and the sweep summary table: per
variant and training-set size, the mean and standard deviation over seeds of
the best test accuracy reached at that size or any smaller one.
"""

import itertools
import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from .exceptions import AggregationError, DimensionError
from .models import RunReport, as_index_array

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    'variant', 'scheme', 's', 'train_size', 'n_seeds', 'n_failed',
    'mean_accuracy', 'std_accuracy', 'raw_mean_accuracy',
]


def confusion_matrix(true_labels: np.ndarray, predicted: np.ndarray,
                     num_classes: int) -> np.ndarray:
    """
    Count matrix with rows indexed by true class and columns by prediction.

    Row c sums to the number of samples whose true class is c.
    """
    true_labels = as_index_array(true_labels, num_classes)
    predicted = as_index_array(predicted, num_classes)
    if true_labels.shape != predicted.shape:
        raise DimensionError("label arrays differ in length",
                             expected=true_labels.shape, actual=predicted.shape)
    counts = np.bincount(true_labels * num_classes + predicted, minlength=num_classes ** 2)
    return counts.reshape(num_classes, num_classes)


def per_class_accuracy(confusion: np.ndarray) -> np.ndarray:
    """Recall per true class; NaN for classes with no samples."""
    confusion = np.asarray(confusion, dtype=float)
    totals = confusion.sum(axis=1)
    with np.errstate(invalid='ignore', divide='ignore'):
        return np.where(totals > 0, np.diag(confusion) / totals, np.nan)


def running_max(accuracies: Sequence[float]) -> np.ndarray:
    """
    Best value at each position or any earlier one.

    NaN entries (failed runs) are skipped; positions before the first finite
    value stay NaN.
    """
    return np.fmax.accumulate(np.asarray(accuracies, dtype=float), axis=-1)


def _mean_std(values: np.ndarray) -> Tuple[float, float]:
    finite = values[~np.isnan(values)]
    if finite.size == 0:
        return float('nan'), float('nan')
    return float(np.mean(finite)), float(np.std(finite, ddof=0))


def _index_reports(reports: Sequence[RunReport]) -> Dict[Tuple[str, int, int], RunReport]:
    cells: Dict[Tuple[str, int, int], RunReport] = {}
    for report in reports:
        key = (report.variant, report.train_size, report.seed)
        if key in cells:
            raise AggregationError(
                f"duplicate report for {report.variant} n={report.train_size} seed={report.seed}")
        cells[key] = report
    return cells


def sweep_summary(reports: Sequence[RunReport]) -> pd.DataFrame:
    """
    Summarize a (variant, size, seed) grid of run reports.

    Args:
        reports: Reports covering every combination of the variants, sizes and seeds present

    Returns:
        pd.DataFrame: One row per (variant, size), sorted by variant then size

    Raises:
        AggregationError: If the list is empty, a cell is duplicated or the grid is ragged
    """
    if not reports:
        raise AggregationError("no run reports to summarize")
    cells = _index_reports(reports)
    variants = sorted({r.variant for r in reports})
    sizes = sorted({r.train_size for r in reports})
    seeds = sorted({r.seed for r in reports})

    missing = [f"{v} n={n} seed={s}" for v, n, s in itertools.product(variants, sizes, seeds)
               if (v, n, s) not in cells]
    if missing:
        raise AggregationError(f"ragged report grid: {len(missing)} missing cells", missing)

    rows: List[dict] = []
    for variant in variants:
        grid = [[cells[(variant, n, s)] for n in sizes] for s in seeds]
        raw = np.array([[np.nan if r.is_failed else r.test_accuracy for r in row] for row in grid])
        best = running_max(raw)
        first = grid[0][0]
        for j, size in enumerate(sizes):
            mean, std = _mean_std(best[:, j])
            raw_mean, _ = _mean_std(raw[:, j])
            rows.append({
                'variant': variant,
                'scheme': first.scheme,
                's': first.scale,
                'train_size': size,
                'n_seeds': len(seeds),
                'n_failed': int(sum(row[j].is_failed for row in grid)),
                'mean_accuracy': mean,
                'std_accuracy': std,
                'raw_mean_accuracy': raw_mean,
            })

    failed = sum(r.is_failed for r in reports)
    if failed:
        logger.warning(f"{failed} failed runs excluded from the summary means")
    logger.info(f"Summarized {len(reports)} reports into {len(rows)} rows "
                f"({len(variants)} variants, {len(sizes)} sizes, {len(seeds)} seeds)")
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
