"""
Test suite for result statistics and the sweep summary.
"""

import math

import numpy as np
import pytest

from src.exceptions import AggregationError, ClassIndexError, DimensionError
from src.models import RankAssignment, RunReport, class_names
from src.stats import (SUMMARY_COLUMNS, confusion_matrix, per_class_accuracy, running_max,
                       sweep_summary)


def make_report(variant="onehot", scheme="onehot", size=200, seed=0, accuracy=0.5, s=None):
    if accuracy is None:
        return RunReport(variant=variant, scheme=scheme, train_size=size, seed=seed,
                         config={'s': s}, class_names=class_names(4),
                         true_ordering=RankAssignment.equally_spaced(4).to_dict(),
                         checkpoints=[{'step': 0}], status="failed",
                         failure="loss is not finite")
    return RunReport(variant=variant, scheme=scheme, train_size=size, seed=seed,
                     config={'s': s}, class_names=class_names(4),
                     true_ordering=RankAssignment.equally_spaced(4).to_dict(),
                     checkpoints=[{'step': 0}], best_step=0, test_accuracy=accuracy)


def grid(accuracies, variant="onehot", sizes=(200, 400, 800)):
    """accuracies[seed][size index] -> reports."""
    return [make_report(variant=variant, size=n, seed=seed, accuracy=acc)
            for seed, row in enumerate(accuracies) for n, acc in zip(sizes, row)]


class TestConfusionMatrix:
    """Test cases for confusion_matrix and per_class_accuracy."""

    def test_counts(self):
        matrix = confusion_matrix(np.array([0, 0, 1, 2, 2, 2]), np.array([0, 1, 1, 2, 0, 2]), 3)
        assert matrix.tolist() == [[1, 1, 0], [0, 1, 0], [1, 0, 2]]

    def test_row_sums_equal_class_counts(self):
        rng = np.random.default_rng(0)
        true = rng.integers(0, 4, size=300)
        predicted = rng.integers(0, 4, size=300)
        matrix = confusion_matrix(true, predicted, 4)
        assert matrix.sum(axis=1).tolist() == np.bincount(true, minlength=4).tolist()

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            confusion_matrix(np.array([0, 1]), np.array([0]), 2)

    def test_out_of_range_label(self):
        with pytest.raises(ClassIndexError):
            confusion_matrix(np.array([0, 3]), np.array([0, 1]), 3)

    def test_per_class_accuracy(self):
        accuracy = per_class_accuracy(np.array([[3, 1], [0, 0]]))
        assert accuracy[0] == pytest.approx(0.75)
        assert math.isnan(accuracy[1])


class TestRunningMax:
    """Test cases for running_max."""

    def test_worked_example(self):
        np.testing.assert_allclose(running_max([0.70, 0.68, 0.80]), [0.70, 0.70, 0.80])

    def test_non_decreasing(self):
        values = running_max(np.random.default_rng(1).random(20))
        assert np.all(np.diff(values) >= 0)

    def test_skips_nan(self):
        result = running_max([math.nan, 0.6, math.nan, 0.5])
        assert math.isnan(result[0])
        np.testing.assert_allclose(result[1:], [0.6, 0.6, 0.6])


class TestSweepSummary:
    """Test cases for sweep_summary."""

    def test_columns_and_order(self):
        reports = grid([[0.5, 0.6, 0.7]], variant="sord_circular(s=1)") + grid([[0.4, 0.5, 0.6]])
        summary = sweep_summary(reports)
        assert list(summary.columns) == SUMMARY_COLUMNS
        assert summary['variant'].tolist() == ["onehot"] * 3 + ["sord_circular(s=1)"] * 3
        assert summary['train_size'].tolist() == [200, 400, 800] * 2

    def test_mean_and_population_std(self):
        summary = sweep_summary(grid([[0.70, 0.68, 0.80], [0.60, 0.66, 0.70]]))
        np.testing.assert_allclose(summary['mean_accuracy'], [0.65, 0.68, 0.75])
        np.testing.assert_allclose(summary['std_accuracy'], [0.05, 0.02, 0.05])
        np.testing.assert_allclose(summary['raw_mean_accuracy'], [0.65, 0.67, 0.75])

    def test_mean_curve_is_non_decreasing(self):
        rng = np.random.default_rng(3)
        summary = sweep_summary(grid(rng.uniform(0.3, 0.9, size=(5, 3)).tolist()))
        assert np.all(np.diff(summary['mean_accuracy'].to_numpy()) >= 0)

    def test_failed_runs_are_counted_and_excluded(self):
        summary = sweep_summary(grid([[0.5, None, 0.7], [0.6, 0.62, None]]))
        assert summary['n_failed'].tolist() == [0, 1, 1]
        assert summary['n_seeds'].tolist() == [2, 2, 2]
        np.testing.assert_allclose(summary['mean_accuracy'], [0.55, 0.56, 0.66])
        assert summary['raw_mean_accuracy'].iloc[1] == pytest.approx(0.62)

    def test_all_failed_gives_nan(self):
        summary = sweep_summary(grid([[None]], sizes=(200,)))
        assert math.isnan(summary['mean_accuracy'].iloc[0])
        assert summary['n_failed'].iloc[0] == 1

    def test_empty(self):
        with pytest.raises(AggregationError):
            sweep_summary([])

    def test_ragged_grid_lists_missing_cells(self):
        reports = grid([[0.5, 0.6, 0.7], [0.5, 0.6, 0.7]])
        del reports[4]
        with pytest.raises(AggregationError) as excinfo:
            sweep_summary(reports)
        assert excinfo.value.missing_cells == ["onehot n=400 seed=1"]

    def test_duplicate_cell(self):
        reports = grid([[0.5, 0.6, 0.7]])
        with pytest.raises(AggregationError):
            sweep_summary(reports + [make_report(size=400)])

    def test_scale_column(self):
        reports = [make_report(variant="sord_circular(s=inf)", scheme="sord_circular",
                               s="inf", accuracy=0.5)]
        assert math.isinf(sweep_summary(reports)['s'].iloc[0])
