"""
Data models shared by the encoding, search and harness modules.
"""

from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .exceptions import (ClassIndexError, ConfigurationError, DimensionError, DomainError,
                         ValidationError)

TWO_PI = 2.0 * np.pi

# Display names for the four contrast phases; other class counts get generic names.
PHASE_NAMES = ("non-contrast", "arterial", "venous", "delayed")

ROW_SUM_TOLERANCE = 1e-9


class Geometry(Enum):
    """How rank values are interpreted when measuring distances."""
    LINEAR = "linear"
    CIRCULAR = "circular"


class Scheme(Enum):
    """Label encoding schemes available to the harness."""
    ONEHOT = "onehot"
    SORD_LINEAR = "sord_linear"
    SORD_CIRCULAR = "sord_circular"
    PLSORD = "plsord"
    LEARNED = "learned"

    @property
    def requires_scale(self) -> bool:
        return self in (Scheme.SORD_LINEAR, Scheme.SORD_CIRCULAR, Scheme.PLSORD)

    @property
    def geometry(self) -> Optional[Geometry]:
        if self == Scheme.SORD_LINEAR:
            return Geometry.LINEAR
        if self in (Scheme.SORD_CIRCULAR, Scheme.PLSORD):
            return Geometry.CIRCULAR
        return None


def class_names(num_classes: int) -> List[str]:
    """Return display names for K classes."""
    if num_classes == len(PHASE_NAMES):
        return list(PHASE_NAMES)
    return [f"class_{i}" for i in range(num_classes)]


@dataclass(frozen=True)
class RankAssignment:
    """
    Ordered assignment of rank positions to classes.

    ranks[i] is the position of class i. Circular ranks are angles in
    radians within [0, 2π); linear ranks are dimensionless.
    """
    ranks: Tuple[float, ...]
    geometry: Geometry = Geometry.CIRCULAR

    def __post_init__(self):
        object.__setattr__(self, 'ranks', tuple(float(r) for r in self.ranks))
        self.validate()

    def validate(self) -> None:
        """
        Validate the rank invariants.

        Raises:
            ValidationError: If any invariant is violated.
        """
        if not isinstance(self.geometry, Geometry):
            raise ValidationError(f"unknown geometry {self.geometry!r}", "geometry")
        if len(self.ranks) < 2:
            raise ValidationError(
                f"a rank assignment needs at least 2 classes, got {len(self.ranks)}", "ranks")
        values = np.asarray(self.ranks)
        if not np.all(np.isfinite(values)):
            raise ValidationError("ranks must be finite", "ranks")
        if np.any(values < 0):
            raise ValidationError("ranks must be non-negative", "ranks")
        if len(set(self.ranks)) != len(self.ranks):
            raise ValidationError(f"ranks must be distinct: {self.ranks}", "ranks")
        if self.geometry == Geometry.CIRCULAR and np.any(values >= TWO_PI):
            raise ValidationError("circular ranks must lie in [0, 2π)", "ranks")

    @property
    def num_classes(self) -> int:
        return len(self.ranks)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.ranks, dtype=float)

    @classmethod
    def equally_spaced(cls, num_classes: int,
                       geometry: Geometry = Geometry.CIRCULAR) -> 'RankAssignment':
        """
        Build the natural-order assignment with equal spacing.

        Circular classes sit at 2πi/K; linear classes at i.
        """
        if num_classes < 2:
            raise DimensionError("need at least 2 classes", expected=">= 2", actual=num_classes)
        if geometry == Geometry.CIRCULAR:
            ranks = [TWO_PI * i / num_classes for i in range(num_classes)]
        else:
            ranks = [float(i) for i in range(num_classes)]
        return cls(tuple(ranks), geometry)

    def cyclic_sequence(self) -> List[int]:
        """Class indices sorted by rank, i.e. the order classes appear along the axis."""
        return [int(i) for i in np.argsort(self.as_array(), kind='stable')]

    def to_dict(self) -> dict:
        return {'ranks': list(self.ranks), 'geometry': self.geometry.value}

    @classmethod
    def from_dict(cls, data: dict) -> 'RankAssignment':
        return cls(tuple(data['ranks']), Geometry(data['geometry']))


@dataclass(frozen=True)
class DistanceSpec:
    """Metric geometry plus the scale factor applied before squaring."""
    geometry: Geometry
    scale: float

    def __post_init__(self):
        object.__setattr__(self, 'scale', float(self.scale))
        if not isinstance(self.geometry, Geometry):
            raise ValidationError(f"unknown geometry {self.geometry!r}", "geometry")
        if np.isnan(self.scale) or self.scale <= 0:
            raise ValidationError(f"scale must be positive or +inf, got {self.scale}", "scale")

    @property
    def is_onehot_limit(self) -> bool:
        return np.isinf(self.scale)


@dataclass(frozen=True, eq=False)
class LabelMatrix:
    """
    K×K row-stochastic matrix; row t is the target distribution for class t.

    Entries are copied on construction and the copy is made read-only.
    """
    entries: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.entries, dtype=float, copy=True)
        matrix.setflags(write=False)
        object.__setattr__(self, 'entries', matrix)
        self.validate()

    def validate(self) -> None:
        matrix = self.entries
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError("label matrix must be square", expected="K×K", actual=matrix.shape)
        if matrix.shape[0] < 2:
            raise DimensionError("label matrix needs K >= 2", expected=">= 2", actual=matrix.shape[0])
        if not np.all(np.isfinite(matrix)):
            raise DomainError("label matrix entries must be finite")
        if np.any(matrix < 0) or np.any(matrix > 1):
            raise DomainError("label matrix entries must lie in [0, 1]")
        row_error = np.max(np.abs(matrix.sum(axis=1) - 1.0))
        if row_error > ROW_SUM_TOLERANCE:
            raise DomainError(f"label matrix rows must sum to 1 (max error {row_error:.3e})")

    @property
    def num_classes(self) -> int:
        return self.entries.shape[0]

    def row(self, target: int) -> np.ndarray:
        return self.entries[target]

    def max_abs_diff(self, other: 'LabelMatrix') -> float:
        return float(np.max(np.abs(self.entries - other.entries)))

    def to_text(self) -> str:
        """Serialize as one row per line of space-separated round-trip decimals."""
        return "\n".join(" ".join(repr(float(x)) for x in row) for row in self.entries) + "\n"

    @classmethod
    def from_text(cls, text: str) -> 'LabelMatrix':
        rows = [line.split() for line in text.strip().splitlines() if line.strip()]
        try:
            return cls(np.array([[float(x) for x in row] for row in rows]))
        except ValueError as e:
            if isinstance(e, (DimensionError, DomainError)):
                raise
            raise DimensionError(f"malformed label matrix text: {e}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool(np.array_equal(self.entries, other.entries))

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())


@dataclass
class ExperimentConfig:
    """
    Validated experiment configuration.

    Parsed from the flat key-value file format by ``src.config.load_experiment_config``.
    """
    scheme: Scheme
    s: Optional[float] = None
    positions: Optional[Tuple[float, ...]] = None
    target_mass: float = 0.855
    num_classes: int = 4
    angular_noise: float = 0.35
    distractor_dims: int = 8
    label_noise: float = 0.0
    noise_structure: str = "forward-adjacent"
    data_seed: int = 0
    train_sizes: Tuple[int, ...] = (200, 400, 800, 1600, 3200)
    validation_per_class: int = 250
    test_per_class: int = 500
    eval_labels: str = "clean"
    steps: int = 3000
    checkpoint_interval: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    hidden_layers: Tuple[int, ...] = (64, 64)
    activation: str = "relu"
    seeds: Tuple[int, ...] = (0, 1, 2, 3, 4)
    output_dir: str = "runs"
    workers: int = 1
    save_checkpoints: bool = False

    def __post_init__(self):
        if isinstance(self.scheme, str):
            try:
                self.scheme = Scheme(self.scheme)
            except ValueError:
                raise ConfigurationError(f"unknown scheme '{self.scheme}'", "scheme")
        self.validate()

    def validate(self) -> None:
        """
        Validate cross-field constraints.

        Raises:
            ConfigurationError: If a required key is missing or a value is invalid.
        """
        if self.scheme.requires_scale and self.s is None:
            raise ConfigurationError(
                f"scheme '{self.scheme.value}' requires the hyperparameter 's'", "s")
        if self.s is not None and (np.isnan(self.s) or self.s <= 0):
            raise ConfigurationError(f"s must be positive or inf, got {self.s}", "s")
        if not 0.0 < self.target_mass < 1.0:
            raise ConfigurationError("target_mass must lie in (0, 1)", "target_mass")
        if self.num_classes < 3:
            raise ConfigurationError("num_classes must be at least 3", "num_classes")
        if self.positions is not None and len(self.positions) < self.num_classes:
            raise ConfigurationError(
                f"positions needs at least {self.num_classes} values", "positions")
        if self.positions is not None and self.scheme != Scheme.PLSORD \
                and len(self.positions) != self.num_classes:
            raise ConfigurationError(
                f"positions must have exactly {self.num_classes} values for "
                f"scheme '{self.scheme.value}'", "positions")
        if not self.train_sizes or any(n <= 0 for n in self.train_sizes):
            raise ConfigurationError("train_sizes must be positive", "train_sizes")
        if list(self.train_sizes) != sorted(set(self.train_sizes)):
            raise ConfigurationError("train_sizes must be strictly ascending", "train_sizes")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required", "seeds")
        if self.steps < 0:
            raise ConfigurationError("steps must be non-negative", "steps")
        if self.checkpoint_interval <= 0:
            raise ConfigurationError("checkpoint_interval must be positive", "checkpoint_interval")
        if self.batch_size < self.num_classes:
            raise ConfigurationError(
                "batch_size must hold at least one sample per class", "batch_size")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive", "learning_rate")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigurationError("beta1 and beta2 must lie in [0, 1)", "beta1")
        if self.activation not in ("relu", "tanh"):
            raise ConfigurationError("activation must be relu or tanh", "activation")
        if self.eval_labels not in ("clean", "noisy"):
            raise ConfigurationError("eval_labels must be clean or noisy", "eval_labels")
        if self.noise_structure not in ("forward-adjacent", "symmetric-adjacent"):
            raise ConfigurationError(
                "noise_structure must be forward-adjacent or symmetric-adjacent", "noise_structure")
        if not 0.0 <= self.label_noise < 1.0:
            raise ConfigurationError("label_noise must lie in [0, 1)", "label_noise")
        if self.angular_noise < 0:
            raise ConfigurationError("angular_noise must be non-negative", "angular_noise")
        if self.validation_per_class <= 0 or self.test_per_class <= 0:
            raise ConfigurationError("validation and test splits must be non-empty",
                                     "validation_per_class")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1", "workers")

    @property
    def variant(self) -> str:
        """Curve label: the scheme, plus its scale when the scheme uses one."""
        if self.scheme.requires_scale:
            return f"{self.scheme.value}(s={self.s:g})"
        if self.scheme == Scheme.LEARNED:
            return f"{self.scheme.value}(target_mass={self.target_mass:g})"
        return self.scheme.value

    def to_dict(self) -> dict:
        """Plain-data echo used in run reports."""
        return {
            'scheme': self.scheme.value,
            's': _float_or_text(self.s),
            'positions': list(self.positions) if self.positions is not None else None,
            'target_mass': self.target_mass,
            'num_classes': self.num_classes,
            'angular_noise': self.angular_noise,
            'distractor_dims': self.distractor_dims,
            'label_noise': self.label_noise,
            'noise_structure': self.noise_structure,
            'data_seed': self.data_seed,
            'train_sizes': list(self.train_sizes),
            'validation_per_class': self.validation_per_class,
            'test_per_class': self.test_per_class,
            'eval_labels': self.eval_labels,
            'steps': self.steps,
            'checkpoint_interval': self.checkpoint_interval,
            'batch_size': self.batch_size,
            'learning_rate': self.learning_rate,
            'beta1': self.beta1,
            'beta2': self.beta2,
            'epsilon': self.epsilon,
            'hidden_layers': list(self.hidden_layers),
            'activation': self.activation,
            'seeds': list(self.seeds),
        }


def _float_or_text(value: Optional[float]):
    # JSON has no infinity literal.
    if value is not None and np.isinf(value):
        return "inf"
    return value


def as_index_array(labels: Iterable[int], num_classes: int) -> np.ndarray:
    """Convert labels to an int array, checking the class range."""
    array = np.asarray(list(labels) if not isinstance(labels, np.ndarray) else labels, dtype=int)
    if array.size:
        bad = array[(array < 0) | (array >= num_classes)]
        if bad.size:
            raise ClassIndexError(int(bad[0]), num_classes)
    return array


def report_stem(scheme: Scheme, scale: Optional[float], train_size: int, seed: int) -> str:
    """File stem shared by a cell's report, timing sidecar and checkpoint directory."""
    scheme = Scheme(scheme)
    scale_part = f"_s{scale:g}" if scheme.requires_scale and scale is not None else ""
    return f"{scheme.value}{scale_part}_n{train_size}_seed{seed}"


@dataclass
class RunReport:
    """
    Record of one training run: one (scheme, training set size, seed) cell.

    Failed runs keep the checkpoints reached before the failure and carry no
    test metrics.
    """
    variant: str
    scheme: str
    train_size: int
    seed: int
    config: dict
    class_names: List[str]
    true_ordering: dict
    checkpoints: List[dict]
    status: str = "ok"
    failure: Optional[str] = None
    best_step: Optional[int] = None
    best_validation_accuracy: Optional[float] = None
    test_accuracy: Optional[float] = None
    test_class_counts: Optional[List[int]] = None
    confusion_matrix: Optional[List[List[int]]] = None
    per_class_accuracy: Optional[List[Optional[float]]] = None
    ordering: Optional[dict] = None
    label_matrix: Optional[str] = None
    asymmetry: Optional[List[List[float]]] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Validate report invariants.

        Raises:
            ValidationError: If the report is inconsistent.
        """
        if self.status not in ("ok", "failed"):
            raise ValidationError(f"unknown run status '{self.status}'", "status")
        if self.status == "failed":
            if not self.failure:
                raise ValidationError("failed runs must state the failure", "failure")
            return
        if self.test_accuracy is None or self.best_step is None:
            raise ValidationError("completed runs need a best step and a test accuracy",
                                  "test_accuracy")
        if sum(1 for c in self.checkpoints if c['step'] == self.best_step) != 1:
            raise ValidationError("best step must match exactly one checkpoint", "best_step")
        if self.confusion_matrix is not None and self.test_class_counts is not None:
            row_sums = [int(sum(row)) for row in self.confusion_matrix]
            if row_sums != list(self.test_class_counts):
                raise ValidationError("confusion matrix rows must sum to the class counts",
                                      "confusion_matrix")

    @property
    def is_failed(self) -> bool:
        return self.status == "failed"

    @property
    def scale(self) -> Optional[float]:
        value = self.config.get('s')
        return float(value) if value is not None else None

    @property
    def stem(self) -> str:
        return report_stem(Scheme(self.scheme), self.scale, self.train_size, self.seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'RunReport':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown report fields: {sorted(unknown)}", "report")
        return cls(**data)
