"""
Test suite for the directly-learned label encoding.
"""

import numpy as np
import pytest

from src.diffcore import LOG_EPSILON, grad_check
from src.exceptions import DimensionError, ValidationError
from src.label_codec import encode_sord
from src.learned_codec import (DEFAULT_TARGET_MASS, EncodingParams, asymmetry_report,
                               materialize, materialize_backward)
from src.models import DistanceSpec, Geometry, RankAssignment


class TestEncodingParams:
    """Test cases for EncodingParams validation."""

    @pytest.mark.parametrize("mass", [0.0, 1.0, -0.2, 1.5])
    def test_target_mass_must_be_open_unit_interval(self, mass):
        with pytest.raises(ValidationError):
            EncodingParams.zeros(4, mass)

    def test_alpha_shape(self):
        with pytest.raises(DimensionError):
            EncodingParams(np.zeros((4, 4)))

    def test_alpha_must_be_finite(self):
        alpha = np.zeros((3, 2))
        alpha[1, 0] = np.nan
        with pytest.raises(ValidationError):
            EncodingParams(alpha)


class TestMaterialize:
    """Test cases for materialize."""

    def test_zero_alpha_spreads_mass_uniformly(self):
        matrix = materialize(EncodingParams.zeros(4))
        off = (1 - DEFAULT_TARGET_MASS) / 3
        for t in range(4):
            expected = np.full(4, off)
            expected[t] = DEFAULT_TARGET_MASS
            np.testing.assert_allclose(matrix.row(t), expected, atol=1e-12)
        assert matrix.row(0)[1] == pytest.approx(0.0483, abs=1e-4)

    def test_two_classes_ignore_alpha(self):
        matrix = materialize(EncodingParams(np.array([[3.0], [-7.0]]), 0.5))
        np.testing.assert_allclose(matrix.entries, 0.5)

    def test_diagonal_is_pinned_for_random_alpha(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            k = int(rng.integers(2, 8))
            s = float(rng.uniform(0.05, 0.95))
            params = EncodingParams(rng.normal(scale=3.0, size=(k, k - 1)), s)
            entries = materialize(params).entries
            assert np.all(np.diag(entries) == s)
            off_target = entries.sum(axis=1) - np.diag(entries)
            assert np.max(np.abs(off_target - (1 - s))) <= 1e-9

    def test_off_target_slots_skip_the_target(self):
        alpha = np.zeros((3, 2))
        alpha[0] = [5.0, 0.0]
        alpha[2] = [0.0, 5.0]
        entries = materialize(EncodingParams(alpha, 0.8)).entries
        assert entries[0, 1] > entries[0, 2]
        assert entries[2, 1] > entries[2, 0]

    def test_row_shift_invariance(self):
        rng = np.random.default_rng(2)
        alpha = rng.normal(size=(4, 3))
        shifted = alpha + np.array([[1.0], [-2.0], [0.5], [10.0]])
        assert materialize(EncodingParams(alpha)).max_abs_diff(
            materialize(EncodingParams(shifted))) <= 1e-12


class TestMaterializeBackward:
    """Test cases for the α gradient."""

    def test_matches_finite_differences_through_cross_entropy(self):
        rng = np.random.default_rng(5)
        k = 4
        prediction = rng.dirichlet(np.ones(k), size=12)
        labels = rng.integers(0, k, size=12)
        shape = (k, k - 1)

        def fn(vector):
            params = EncodingParams(vector.reshape(shape), 0.855)
            targets = materialize(params).entries[labels]
            log_p = np.log(prediction + LOG_EPSILON)
            loss = -np.mean(np.sum(targets * log_p, axis=1))
            grad_entries = np.zeros((k, k))
            np.add.at(grad_entries, labels, -log_p / labels.size)
            return loss, materialize_backward(params, grad_entries).ravel()

        assert grad_check(fn, rng.normal(size=k * (k - 1)), rng=rng) < 1e-6

    def test_rejects_wrong_gradient_shape(self):
        with pytest.raises(DimensionError):
            materialize_backward(EncodingParams.zeros(4), np.zeros((3, 3)))


class TestAsymmetryReport:
    """Test cases for asymmetry_report."""

    def test_zero_alpha_is_symmetric(self):
        for s in (0.3, 0.855):
            assert np.all(asymmetry_report(EncodingParams.zeros(5, s)) == 0.0)

    def test_sord_is_symmetric(self):
        matrix = encode_sord(RankAssignment.equally_spaced(4), DistanceSpec(Geometry.CIRCULAR, 1.0))
        assert np.max(np.abs(asymmetry_report(matrix))) <= 1e-12

    def test_antisymmetric_entries(self):
        alpha = np.zeros((3, 2))
        alpha[0, 0] = 2.0
        report = asymmetry_report(EncodingParams(alpha, 0.7))
        np.testing.assert_allclose(report, -report.T)
        assert report[0, 1] > 0
