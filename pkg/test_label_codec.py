"""
Test suite for the fixed label encodings.
"""

import math

import numpy as np
import pytest

from src.exceptions import ConfigurationError, DimensionError, DomainError
from src.label_codec import (distance_matrix, encode_onehot, encode_scheme, encode_sord,
                             pairwise_distance, wrap_angle)
from src.models import TWO_PI, DistanceSpec, Geometry, RankAssignment


def brute_force_sord(ranks, s, circular=True):
    """Independent scalar oracle: exp of negative squared scaled distance, normalized."""
    k = len(ranks)
    rows = []
    for t in range(k):
        scores = []
        for i in range(k):
            d = abs(ranks[i] - ranks[t])
            if circular:
                d = min(d, 2 * math.pi - d)
            scores.append(math.exp(-(s * d) ** 2))
        total = sum(scores)
        rows.append([v / total for v in scores])
    return np.array(rows)


CIRCULAR_4 = RankAssignment.equally_spaced(4, Geometry.CIRCULAR)


class TestOneHot:
    """Test cases for encode_onehot."""

    def test_rows_are_unit_vectors(self):
        matrix = encode_onehot(4)
        assert list(matrix.row(0)) == [1.0, 0.0, 0.0, 0.0]
        assert list(encode_onehot(2).row(1)) == [0.0, 1.0]

    def test_rejects_single_class(self):
        with pytest.raises(DimensionError):
            encode_onehot(1)

    def test_equals_infinite_scale_sord(self):
        sord = encode_sord(CIRCULAR_4, DistanceSpec(Geometry.CIRCULAR, math.inf))
        assert sord.max_abs_diff(encode_onehot(4)) <= 1e-9


class TestPairwiseDistance:
    """Test cases for pairwise_distance."""

    def setup_method(self):
        self.spec = DistanceSpec(Geometry.CIRCULAR, 1.0)

    def test_quarter_turn(self):
        assert pairwise_distance(0.0, math.pi / 2, self.spec) == pytest.approx(2.46740, abs=1e-5)

    def test_identical_ranks_are_zero(self):
        for s in (0.1, 1.0, 10.0, math.inf):
            assert pairwise_distance(1.3, 1.3, DistanceSpec(Geometry.CIRCULAR, s)) == 0.0

    def test_wraps_the_short_way(self):
        assert pairwise_distance(0.0, 3 * math.pi / 2, self.spec) == pytest.approx((math.pi / 2) ** 2)

    def test_linear_squares_scaled_difference(self):
        spec = DistanceSpec(Geometry.LINEAR, 2.0)
        assert pairwise_distance(1.0, 4.0, spec) == pytest.approx(36.0)

    def test_infinite_scale_gives_infinity_for_distinct_ranks(self):
        spec = DistanceSpec(Geometry.CIRCULAR, math.inf)
        assert pairwise_distance(0.0, 1.0, spec) == math.inf

    @pytest.mark.parametrize("bad", [-0.1, math.inf, math.nan])
    def test_rejects_invalid_ranks(self, bad):
        with pytest.raises(DomainError):
            pairwise_distance(bad, 0.0, self.spec)

    def test_rejects_circular_rank_beyond_full_turn(self):
        with pytest.raises(DomainError):
            pairwise_distance(TWO_PI, 0.0, self.spec)

    def test_matrix_agrees_with_scalar_function(self):
        ranks = RankAssignment((0.0, 0.4, 2.5, 5.9), Geometry.CIRCULAR)
        spec = DistanceSpec(Geometry.CIRCULAR, 1.25 * math.pi)
        matrix = distance_matrix(ranks, spec)
        for t in range(4):
            for i in range(4):
                assert matrix[t, i] == pytest.approx(
                    pairwise_distance(ranks.ranks[t], ranks.ranks[i], spec), rel=1e-12)


class TestEncodeSord:
    """Test cases for encode_sord."""

    def test_matches_brute_force_oracle(self):
        matrix = encode_sord(CIRCULAR_4, DistanceSpec(Geometry.CIRCULAR, 1.0))
        expected = brute_force_sord(CIRCULAR_4.ranks, 1.0)
        assert np.max(np.abs(matrix.entries - expected)) <= 1e-9
        np.testing.assert_allclose(matrix.row(0), [0.854948, 0.072504, 4.4221e-05, 0.072504],
                                   atol=1e-5)

    def test_rows_sum_to_one_across_random_inputs(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            k = int(rng.integers(2, 17))
            ranks = RankAssignment(tuple(rng.choice(np.linspace(0, TWO_PI, 720, endpoint=False),
                                                    size=k, replace=False)))
            s = float(rng.choice([0.1, 0.625, 1.0, 1.25 * math.pi, 10.0]))
            matrix = encode_sord(ranks, DistanceSpec(Geometry.CIRCULAR, s))
            assert np.max(np.abs(matrix.entries.sum(axis=1) - 1.0)) <= 1e-9

    def test_large_scale_approaches_onehot(self):
        matrix = encode_sord(CIRCULAR_4, DistanceSpec(Geometry.CIRCULAR, 1e6))
        assert matrix.max_abs_diff(encode_onehot(4)) < 1e-6

    def test_small_scale_approaches_uniform(self):
        matrix = encode_sord(CIRCULAR_4, DistanceSpec(Geometry.CIRCULAR, 1e-6))
        assert np.max(np.abs(matrix.entries - 0.25)) < 1e-6

    def test_equal_spacing_is_symmetric(self):
        entries = encode_sord(CIRCULAR_4, DistanceSpec(Geometry.CIRCULAR, 1.0)).entries
        assert np.max(np.abs(entries - entries.T)) <= 1e-12
        assert entries[1, 0] == pytest.approx(entries[1, 2])
        assert entries[3, 0] == pytest.approx(entries[3, 2])

    def test_mass_decreases_with_distance(self):
        ranks = RankAssignment((0.0, 0.3, 1.1, 2.0, 4.0), Geometry.CIRCULAR)
        spec = DistanceSpec(Geometry.CIRCULAR, 1.0)
        matrix = encode_sord(ranks, spec)
        phi = distance_matrix(ranks, spec)
        for t in range(5):
            order = np.argsort(phi[t])
            values = matrix.row(t)[order]
            distinct = np.diff(phi[t][order]) > 1e-12
            assert np.all(np.diff(values)[distinct] < 0)

    def test_rotation_and_reflection_invariance(self):
        ranks = RankAssignment((0.2, 1.0, 2.9, 4.4), Geometry.CIRCULAR)
        spec = DistanceSpec(Geometry.CIRCULAR, 1.0)
        base = encode_sord(ranks, spec)
        rotated = RankAssignment(tuple(wrap_angle(ranks.as_array() + 2.1)), Geometry.CIRCULAR)
        mirrored = RankAssignment(tuple(wrap_angle(-ranks.as_array())), Geometry.CIRCULAR)
        assert encode_sord(rotated, spec).max_abs_diff(base) <= 1e-9
        assert encode_sord(mirrored, spec).max_abs_diff(base) <= 1e-9

    def test_linear_and_circular_agree_without_wraparound(self):
        values = (0.0, 0.5, 1.2, 2.9)
        circular = encode_sord(RankAssignment(values, Geometry.CIRCULAR),
                               DistanceSpec(Geometry.CIRCULAR, 0.625))
        linear = encode_sord(RankAssignment(values, Geometry.LINEAR),
                             DistanceSpec(Geometry.LINEAR, 0.625))
        assert circular.max_abs_diff(linear) <= 1e-9

    def test_shift_stability_with_huge_distances(self):
        ranks = RankAssignment((0.0, 100.0, 200.0), Geometry.LINEAR)
        matrix = encode_sord(ranks, DistanceSpec(Geometry.LINEAR, 10.0))
        assert np.all(np.isfinite(matrix.entries))
        assert matrix.max_abs_diff(encode_onehot(3)) <= 1e-9

    def test_geometry_mismatch_is_configuration_error(self):
        with pytest.raises(ConfigurationError):
            encode_sord(CIRCULAR_4, DistanceSpec(Geometry.LINEAR, 1.0))


class TestEncodeScheme:
    """Test cases for the name-based front end."""

    def test_sord_circular_by_name(self):
        matrix = encode_scheme('sord_circular', 4, 1.0)
        assert matrix == encode_sord(CIRCULAR_4, DistanceSpec(Geometry.CIRCULAR, 1.0))

    def test_missing_scale_names_the_key(self):
        with pytest.raises(ConfigurationError) as excinfo:
            encode_scheme('sord_linear', 4)
        assert excinfo.value.config_key == 's'

    def test_positions_length_must_match(self):
        with pytest.raises(ConfigurationError):
            encode_scheme('sord_circular', 4, 1.0, positions=(0.0, 1.0, 2.0))
