"""
Directly-learned label encoding.

Row t pins the target entry at the fixed mass s and spreads the remaining
1 − s over the other classes with softmax(α_t). Off-target slots follow
ascending class index with t skipped.
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import softmax

from .exceptions import DimensionError, ValidationError
from .models import LabelMatrix

logger = logging.getLogger(__name__)

DEFAULT_TARGET_MASS = 0.855


@dataclass
class EncodingParams:
    """Free parameters α (K×(K−1)) and the fixed target mass s."""
    alpha: np.ndarray
    target_mass: float = DEFAULT_TARGET_MASS

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.target_mass = float(self.target_mass)
        self.validate()

    def validate(self) -> None:
        """
        Validate parameter shapes and the target mass.

        Raises:
            ValidationError: If s is outside (0, 1) or α is not finite.
            DimensionError: If α is not K×(K−1) with K >= 2.
        """
        if not 0.0 < self.target_mass < 1.0:
            raise ValidationError(f"target mass must lie in (0, 1), got {self.target_mass}",
                                  "target_mass")
        if self.alpha.ndim != 2 or self.alpha.shape[0] < 2 \
                or self.alpha.shape[1] != self.alpha.shape[0] - 1:
            raise DimensionError("alpha must have shape K×(K−1) with K >= 2",
                                 expected="K×(K−1)", actual=self.alpha.shape)
        if not np.all(np.isfinite(self.alpha)):
            raise ValidationError("alpha must be finite", "alpha")

    @property
    def num_classes(self) -> int:
        return self.alpha.shape[0]

    @classmethod
    def zeros(cls, num_classes: int, target_mass: float = DEFAULT_TARGET_MASS) -> 'EncodingParams':
        """Zero α: uniform off-target mass, i.e. label smoothing around the target."""
        return cls(np.zeros((num_classes, num_classes - 1)), target_mass)


def _off_target_mask(num_classes: int) -> np.ndarray:
    return ~np.eye(num_classes, dtype=bool)


def materialize(params: EncodingParams) -> LabelMatrix:
    """
    Build the label matrix for the current α.

    Entry (t, t) is exactly s; entry (t, i ≠ t) is (1 − s) · softmax(α_t) at
    the slot of class i.
    """
    k = params.num_classes
    s = params.target_mass
    entries = np.empty((k, k))
    entries[_off_target_mask(k)] = ((1.0 - s) * softmax(params.alpha, axis=1)).ravel()
    np.fill_diagonal(entries, s)
    return LabelMatrix(entries)


def materialize_backward(params: EncodingParams, grad_entries: np.ndarray) -> np.ndarray:
    """
    Pull a gradient with respect to the label matrix back onto α.

    Args:
        params: Current parameters
        grad_entries: ∂L/∂y as a K×K matrix; diagonal entries are ignored since s is fixed

    Returns:
        np.ndarray: ∂L/∂α with the shape of α
    """
    k = params.num_classes
    grad_entries = np.asarray(grad_entries, dtype=float)
    if grad_entries.shape != (k, k):
        raise DimensionError("gradient must match the label matrix shape",
                             expected=(k, k), actual=grad_entries.shape)
    p = softmax(params.alpha, axis=1)
    g = (1.0 - params.target_mass) * grad_entries[_off_target_mask(k)].reshape(k, k - 1)
    return p * (g - np.sum(p * g, axis=1, keepdims=True))


def asymmetry_report(source: Union[EncodingParams, LabelMatrix]) -> np.ndarray:
    """
    Antisymmetric part of an encoding: entry (t, i) is y_{i|t} − y_{t|i}.

    Rows index the target class t, columns the other class i. All zeros exactly
    when the encoding is symmetric.
    """
    matrix = materialize(source) if isinstance(source, EncodingParams) else source
    entries = matrix.entries
    return entries - entries.T
