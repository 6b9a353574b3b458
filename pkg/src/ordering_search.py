"""
Learned categorical ordering (PL-SORD).

A set of candidate rank assignments each defines a SORD encoding and an
order-specific loss. The total loss weights those losses by softmax(λ), and λ
is trained together with the model.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from .exceptions import DimensionError, DomainError, InfeasibleError, ValidationError
from .label_codec import encode_sord, wrap_angle
from .models import TWO_PI, DistanceSpec, Geometry, LabelMatrix, RankAssignment, as_index_array

logger = logging.getLogger(__name__)

# Rounding applied to relative positions before comparing candidates.
KEY_DECIMALS = 9

LOG_EPSILON = 1e-12


def canonical_key(ranks: RankAssignment, reflection_axis: float = 0.0) -> Tuple[float, ...]:
    """
    Key shared by every assignment equivalent to ``ranks``.

    Circular: two assignments are equivalent when a rotation or a reflection of
    the circle maps one onto the other. Anchoring class 0 at angle 0 removes the
    rotation; the reflection is removed by taking the smaller of the anchored
    sequence and its mirror image.

    Linear: only reversal about ``reflection_axis`` (the midpoint of the
    available positions, times two) is identified.
    """
    values = ranks.as_array()
    if ranks.geometry == Geometry.CIRCULAR:
        forward = wrap_angle(values - values[0])
        mirrored = wrap_angle(values[0] - values)
        candidates = (forward, mirrored)
    else:
        candidates = (values, reflection_axis - values)
    keys = [tuple(float(v) for v in np.round(c, KEY_DECIMALS) + 0.0) for c in candidates]
    return min(keys)


@dataclass(frozen=True)
class OrderingCandidateSet:
    """
    Canonicalized candidate orderings over a fixed set of rank positions.

    Each candidate is the lexicographically smallest position sequence within
    its equivalence class; enumerate_orderings fixes the listing order.
    """
    candidates: Tuple[RankAssignment, ...]
    positions: Tuple[float, ...]
    geometry: Geometry = Geometry.CIRCULAR
    _index: Dict[Tuple[float, ...], int] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'positions', tuple(float(p) for p in self.positions))
        object.__setattr__(self, 'candidates', tuple(self.candidates))
        if not self.candidates:
            raise ValidationError("candidate set must not be empty", "candidates")
        allowed = set(self.positions)
        index = {}
        for j, candidate in enumerate(self.candidates):
            if candidate.geometry != self.geometry:
                raise ValidationError("candidate geometry differs from set geometry", "candidates")
            if not set(candidate.ranks) <= allowed:
                raise ValidationError(
                    f"candidate {candidate.ranks} uses values outside the positions", "candidates")
            key = canonical_key(candidate, self.reflection_axis)
            if key in index:
                raise ValidationError(
                    f"candidates {index[key]} and {j} are equivalent", "candidates")
            index[key] = j
        object.__setattr__(self, '_index', index)

    @property
    def reflection_axis(self) -> float:
        return min(self.positions) + max(self.positions)

    def __len__(self) -> int:
        return len(self.candidates)

    def __getitem__(self, j: int) -> RankAssignment:
        return self.candidates[j]

    def index_of(self, ranks: RankAssignment) -> int:
        """
        Index of the candidate equivalent to ``ranks``, or -1 when none is.

        Works for rotated assignments whose values are not themselves positions.
        """
        return self._index.get(canonical_key(ranks, self.reflection_axis), -1)

    def encodings(self, spec: DistanceSpec) -> List[LabelMatrix]:
        return [encode_sord(candidate, spec) for candidate in self.candidates]


@dataclass
class OrderingWeights:
    """Unconstrained logits λ; softmax(λ) weights the order-specific losses."""
    logits: np.ndarray

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=float)
        if self.logits.ndim != 1 or self.logits.size == 0:
            raise DimensionError("ordering logits must be a non-empty vector",
                                 actual=self.logits.shape)

    @classmethod
    def zeros(cls, num_candidates: int) -> 'OrderingWeights':
        return cls(np.zeros(num_candidates))

    def probabilities(self) -> np.ndarray:
        return softmax(self.logits)

    def __len__(self) -> int:
        return self.logits.size


def _listing_key(ranks: RankAssignment) -> Tuple[float, ...]:
    return tuple(-r for r in reversed(ranks.ranks))


def enumerate_orderings(num_classes: int, positions: Sequence[float],
                        geometry: Geometry = Geometry.CIRCULAR) -> OrderingCandidateSet:
    """
    Enumerate all size-K permutations of the positions up to equivalence.

    Args:
        num_classes: Number of classes K
        positions: M distinct rank positions, M >= K
        geometry: Circular dedups rotation and reversal; linear dedups reversal only

    Returns:
        OrderingCandidateSet: One representative per equivalence class, ordered
            by the ranks read from the last class backwards, highest first; the
            index-order assignment of sorted positions therefore comes first

    Raises:
        InfeasibleError: If M < K
        DomainError: If positions are duplicated or out of range
    """
    positions = sorted(float(p) for p in positions)
    if num_classes < 2:
        raise DimensionError("need at least 2 classes", expected=">= 2", actual=num_classes)
    if len(positions) < num_classes:
        raise InfeasibleError(
            f"cannot place {num_classes} classes on {len(positions)} positions")
    if len(set(positions)) != len(positions):
        raise DomainError(f"positions must be distinct: {positions}")
    if geometry == Geometry.CIRCULAR and (positions[0] < 0 or positions[-1] >= TWO_PI):
        raise DomainError("circular positions must lie in [0, 2π)")

    axis = positions[0] + positions[-1]
    representatives: Dict[Tuple[float, ...], RankAssignment] = {}
    # Permutations of a sorted sequence arrive in lexicographic order, so the
    # first member seen of each class is its smallest sequence.
    for perm in itertools.permutations(positions, num_classes):
        ranks = RankAssignment(perm, geometry)
        key = canonical_key(ranks, axis)
        if key not in representatives:
            representatives[key] = ranks

    candidates = sorted(representatives.values(), key=_listing_key)
    logger.info(f"Enumerated {len(candidates)} candidate orderings for K={num_classes}, "
                f"M={len(positions)} ({geometry.value})")
    return OrderingCandidateSet(tuple(candidates), tuple(positions), geometry)


def _check_probabilities(prediction: np.ndarray) -> None:
    if np.any(prediction < 0) or not np.all(np.isfinite(prediction)):
        raise DomainError("prediction must be a finite non-negative probability vector")
    if np.any(np.abs(prediction.sum(axis=-1) - 1.0) > 1e-6):
        raise DomainError("prediction must sum to 1 within 1e-6")


def per_ordering_losses(prediction: np.ndarray, target_class: int,
                        candidates: OrderingCandidateSet, spec: DistanceSpec) -> np.ndarray:
    """
    Soft-target cross-entropy of one prediction against every candidate's encoding.

    Element j is −Σ_i y_i log(p_i + ε) with y the target row of candidate j's
    SORD encoding.

    Raises:
        ClassIndexError: If target_class is out of range.
        DomainError: If prediction is not a probability vector.
    """
    prediction = np.asarray(prediction, dtype=float)
    num_classes = candidates[0].num_classes
    if prediction.shape != (num_classes,):
        raise DimensionError("prediction length must equal K",
                             expected=num_classes, actual=prediction.shape)
    _check_probabilities(prediction)
    target = int(as_index_array([target_class], num_classes)[0])
    log_p = np.log(prediction + LOG_EPSILON)
    return np.array([-np.dot(encoding.row(target), log_p)
                     for encoding in candidates.encodings(spec)])


def batch_ordering_losses(probabilities: np.ndarray, labels: np.ndarray,
                          encodings: Sequence[LabelMatrix]) -> np.ndarray:
    """Batch-mean order-specific losses, one per encoding."""
    log_p = np.log(probabilities + LOG_EPSILON)
    return np.array([-np.mean(np.sum(encoding.entries[labels] * log_p, axis=1))
                     for encoding in encodings])


def weighted_total_loss(losses: Sequence[float], weights: OrderingWeights) -> float:
    """
    Σ_j σ_j(λ) · L_j.

    Raises:
        DimensionError: If the number of losses and weights differ.
    """
    total, _ = weighted_total_loss_and_grad(losses, weights)
    return total


def weighted_total_loss_and_grad(losses: Sequence[float],
                                 weights: OrderingWeights) -> Tuple[float, np.ndarray]:
    """
    Total loss and its gradient with respect to λ.

    ∂total/∂λ_j = σ_j(λ) · (L_j − total). The gradient with respect to each
    L_j is σ_j(λ), available from ``weights.probabilities()``.
    """
    losses = np.asarray(losses, dtype=float)
    if losses.shape != weights.logits.shape:
        raise DimensionError("losses and ordering weights differ in length",
                             expected=weights.logits.shape, actual=losses.shape)
    sigma = weights.probabilities()
    total = float(np.dot(sigma, losses))
    return total, sigma * (losses - total)


def dominant_ordering(weights: OrderingWeights,
                      candidates: OrderingCandidateSet) -> RankAssignment:
    """Candidate with the largest σ_j(λ); ties go to the lowest index."""
    if len(weights) != len(candidates):
        raise DimensionError("weights and candidates differ in length",
                             expected=len(candidates), actual=len(weights))
    return candidates[int(np.argmax(weights.probabilities()))]
