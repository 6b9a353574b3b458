"""
Fixed (non-learned) label encodings: one-hot, linear SORD and circular SORD.

A SORD row for target class t is the softmax of negative squared, scaled
distances between the target's rank and every class rank.
"""

import logging

import numpy as np
from scipy.special import softmax

from .exceptions import ConfigurationError, DimensionError, DomainError
from .models import TWO_PI, DistanceSpec, Geometry, LabelMatrix, RankAssignment

logger = logging.getLogger(__name__)


def wrap_angle(values):
    """Map angles into [0, 2π); values that round up to 2π map to 0."""
    wrapped = np.mod(values, TWO_PI)
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def encode_onehot(num_classes: int) -> LabelMatrix:
    """
    Identity encoding: every class is equally (infinitely) far from the others.

    Raises:
        DimensionError: If num_classes < 2.
    """
    if num_classes < 2:
        raise DimensionError(f"one-hot encoding needs at least 2 classes, got {num_classes}",
                             expected=">= 2", actual=num_classes)
    return LabelMatrix(np.eye(num_classes))


def _check_rank(value: float, geometry: Geometry) -> None:
    if not np.isfinite(value):
        raise DomainError(f"rank must be finite, got {value}", value)
    if value < 0:
        raise DomainError(f"rank must be non-negative, got {value}", value)
    if geometry == Geometry.CIRCULAR and value >= TWO_PI:
        raise DomainError(f"circular rank must lie in [0, 2π), got {value}", value)


def _arc_lengths(delta: np.ndarray, geometry: Geometry) -> np.ndarray:
    delta = np.abs(delta)
    if geometry == Geometry.CIRCULAR:
        delta = np.mod(delta, TWO_PI)
        return np.minimum(delta, TWO_PI - delta)
    return delta


def pairwise_distance(rank_a: float, rank_b: float, spec: DistanceSpec) -> float:
    """
    Squared scaled distance between two ranks.

    Circular: (s · min(d, 2π − d))² with d = |b − a| mod 2π.
    Linear: (s · |b − a|)².

    Args:
        rank_a: First rank
        rank_b: Second rank
        spec: Geometry and scale factor

    Returns:
        float: Non-negative distance, +inf for distinct ranks when s = +inf

    Raises:
        DomainError: If a rank is negative, non-finite or outside [0, 2π) for circular geometry.
    """
    _check_rank(rank_a, spec.geometry)
    _check_rank(rank_b, spec.geometry)
    arc = float(_arc_lengths(np.asarray(rank_b - rank_a), spec.geometry))
    if arc == 0.0:
        return 0.0
    if spec.is_onehot_limit:
        return float('inf')
    return (spec.scale * arc) ** 2


def distance_matrix(ranks: RankAssignment, spec: DistanceSpec) -> np.ndarray:
    """K×K matrix of pairwise_distance values (finite scales only)."""
    values = ranks.as_array()
    arcs = _arc_lengths(values[None, :] - values[:, None], spec.geometry)
    return (spec.scale * arcs) ** 2


def encode_sord(ranks: RankAssignment, spec: DistanceSpec) -> LabelMatrix:
    """
    Soft ordinal encoding: row t is softmax(−φ(r_t, r_i)) over classes i.

    The softmax subtracts the row maximum before exponentiating, which is exact
    because softmax is invariant under a constant shift. s = +inf is handled as
    an explicit branch returning the identity matrix.

    Raises:
        ConfigurationError: If the rank geometry does not match the distance geometry.
    """
    if ranks.geometry != spec.geometry:
        raise ConfigurationError(
            f"rank geometry '{ranks.geometry.value}' does not match distance geometry "
            f"'{spec.geometry.value}'", "geometry")
    if spec.is_onehot_limit:
        return encode_onehot(ranks.num_classes)

    scores = -distance_matrix(ranks, spec)
    entries = softmax(scores, axis=1)
    logger.debug(f"Encoded SORD matrix K={ranks.num_classes} geometry={spec.geometry.value} "
                 f"s={spec.scale:g}")
    return LabelMatrix(entries)


def encode_scheme(scheme: str, num_classes: int, scale: float = None,
                  positions=None) -> LabelMatrix:
    """
    Convenience front end used by the command line: build a fixed encoding by name.

    Args:
        scheme: 'onehot', 'sord_linear' or 'sord_circular'
        num_classes: Number of classes K
        scale: SORD scale factor s (required for SORD schemes)
        positions: Optional explicit ranks; defaults to equal spacing

    Returns:
        LabelMatrix: The encoding
    """
    if scheme == 'onehot':
        return encode_onehot(num_classes)
    if scheme not in ('sord_linear', 'sord_circular'):
        raise ConfigurationError(f"'{scheme}' is not a fixed encoding scheme", "scheme")
    if scale is None:
        raise ConfigurationError(f"scheme '{scheme}' requires the hyperparameter 's'", "s")
    geometry = Geometry.LINEAR if scheme == 'sord_linear' else Geometry.CIRCULAR
    if positions is None:
        ranks = RankAssignment.equally_spaced(num_classes, geometry)
    else:
        if len(positions) != num_classes:
            raise ConfigurationError(
                f"positions must have exactly {num_classes} values", "positions")
        ranks = RankAssignment(tuple(positions), geometry)
    return encode_sord(ranks, DistanceSpec(geometry, scale))
