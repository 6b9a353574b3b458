"""
Synthetic cyclic-ordinal dataset generator.

Each class owns one of K equally spaced angles, assigned through a hidden
random shuffle so that class index and angular order differ. Samples are
noisy points on the unit circle padded with standard-normal distractor
dimensions. Emitted labels can be corrupted towards angular neighbours.
"""

import io
import logging
from dataclasses import asdict, dataclass
from enum import Enum
from typing import List

import numpy as np
import pandas as pd
from scipy.stats import norm

from .exceptions import ConfigurationError, ReportIOError
from .label_codec import wrap_angle
from .models import TWO_PI, Geometry, RankAssignment

logger = logging.getLogger(__name__)

# Wraps of the normal density summed when evaluating the wrapped normal.
WRAP_TERMS = 4


class NoiseStructure(Enum):
    SYMMETRIC_ADJACENT = "symmetric-adjacent"
    FORWARD_ADJACENT = "forward-adjacent"


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings; every sample of a dataset is a function of these."""
    num_classes: int = 4
    samples_per_class: int = 1000
    angular_noise: float = 0.35
    distractor_dims: int = 8
    label_noise: float = 0.0
    noise_structure: NoiseStructure = NoiseStructure.FORWARD_ADJACENT
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.noise_structure, str):
            object.__setattr__(self, 'noise_structure', NoiseStructure(self.noise_structure))
        self.validate()

    def validate(self) -> None:
        """
        Raises:
            ConfigurationError: If any setting is out of range.
        """
        if self.num_classes < 3:
            raise ConfigurationError("num_classes must be at least 3 for a circular structure",
                                     "num_classes")
        if self.samples_per_class < 1:
            raise ConfigurationError("samples_per_class must be positive", "samples_per_class")
        if not np.isfinite(self.angular_noise) or self.angular_noise < 0:
            raise ConfigurationError("angular_noise must be a finite non-negative stddev",
                                     "angular_noise")
        if self.distractor_dims < 0:
            raise ConfigurationError("distractor_dims must be non-negative", "distractor_dims")
        if not 0.0 <= self.label_noise < 1.0:
            raise ConfigurationError("label_noise must lie in [0, 1)", "label_noise")

    def to_dict(self) -> dict:
        data = asdict(self)
        data['noise_structure'] = self.noise_structure.value
        return data


@dataclass
class Dataset:
    """Features, emitted labels, clean labels and the hidden ordering."""
    features: np.ndarray
    labels: np.ndarray
    clean_labels: np.ndarray
    true_ordering: RankAssignment
    config: SynthConfig

    def __post_init__(self):
        n = self.features.shape[0]
        if self.labels.shape != (n,) or self.clean_labels.shape != (n,):
            raise ConfigurationError("label arrays must match the number of feature rows")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def num_classes(self) -> int:
        return self.true_ordering.num_classes

    def subset(self, indices: np.ndarray) -> 'Dataset':
        return Dataset(self.features[indices], self.labels[indices], self.clean_labels[indices],
                       self.true_ordering, self.config)

    def forward_neighbours(self) -> np.ndarray:
        return forward_neighbours(self.true_ordering)


def forward_neighbours(ordering: RankAssignment) -> np.ndarray:
    """Map each class to the class one slot further along the circle."""
    sequence = ordering.cyclic_sequence()
    k = len(sequence)
    neighbours = np.empty(k, dtype=int)
    for position, cls in enumerate(sequence):
        neighbours[cls] = sequence[(position + 1) % k]
    return neighbours


def _draw_ordering(rng: np.random.Generator, num_classes: int) -> RankAssignment:
    slots = rng.permutation(num_classes)
    return RankAssignment(tuple(TWO_PI * slot / num_classes for slot in slots), Geometry.CIRCULAR)


def transition_matrix(config: SynthConfig, ordering: RankAssignment) -> np.ndarray:
    """T[c, j]: probability that a sample of clean class c is emitted with label j."""
    k = config.num_classes
    p = config.label_noise
    forward = forward_neighbours(ordering)
    backward = np.empty(k, dtype=int)
    backward[forward] = np.arange(k)
    matrix = np.eye(k) * (1.0 - p)
    for c in range(k):
        if config.noise_structure == NoiseStructure.FORWARD_ADJACENT:
            matrix[c, forward[c]] += p
        else:
            matrix[c, forward[c]] += p / 2.0
            matrix[c, backward[c]] += p / 2.0
    return matrix


def generate(config: SynthConfig) -> Dataset:
    """
    Draw a dataset; identical configs give bit-identical datasets.

    Samples are shuffled once so that any prefix mixes all classes.
    """
    rng = np.random.default_rng(config.seed)
    ordering = _draw_ordering(rng, config.num_classes)
    centers = ordering.as_array()
    k, n = config.num_classes, config.samples_per_class

    clean = np.repeat(np.arange(k), n)
    theta = centers[clean] + config.angular_noise * rng.standard_normal(clean.size)
    distractors = rng.standard_normal((clean.size, config.distractor_dims))
    features = np.column_stack([np.cos(theta), np.sin(theta), distractors])

    labels = clean.copy()
    flips = rng.random(clean.size) < config.label_noise
    forward = forward_neighbours(ordering)
    if config.noise_structure == NoiseStructure.FORWARD_ADJACENT:
        labels[flips] = forward[clean[flips]]
    else:
        backward = np.empty(k, dtype=int)
        backward[forward] = np.arange(k)
        go_forward = rng.random(clean.size) < 0.5
        labels[flips & go_forward] = forward[clean[flips & go_forward]]
        labels[flips & ~go_forward] = backward[clean[flips & ~go_forward]]

    order = rng.permutation(clean.size)
    logger.info(f"Generated {clean.size} samples (K={k}, noise={config.label_noise}, "
                f"{config.noise_structure.value}, seed={config.seed}); "
                f"{int(flips.sum())} labels corrupted")
    return Dataset(features[order], labels[order], clean[order], ordering, config)


def bayes_error(config: SynthConfig, num_points: int = 100_000) -> float:
    """
    Error of the optimal classifier for the emitted labels.

    Only the angle carries signal, so the optimum picks argmax_j Σ_c f_c(θ) T[c, j]
    with f_c the wrapped normal around class c's center. The integral over θ uses
    the periodic rectangle rule on ``num_points`` nodes; zero spread is evaluated
    in closed form.
    """
    ordering = _draw_ordering(np.random.default_rng(config.seed), config.num_classes)
    transitions = transition_matrix(config, ordering)
    k = config.num_classes
    if config.angular_noise == 0:
        return float(1.0 - np.mean(transitions.max(axis=1)))

    theta = np.arange(num_points) * (TWO_PI / num_points)
    centers = ordering.as_array()
    offsets = wrap_angle(theta[:, None] - centers[None, :])
    density = np.zeros((num_points, k))
    for wrap in range(-WRAP_TERMS, WRAP_TERMS + 1):
        density += norm.pdf(offsets + wrap * TWO_PI, scale=config.angular_noise)
    joint = density @ transitions / k
    accuracy = np.sum(joint.max(axis=1)) * (TWO_PI / num_points)
    return float(1.0 - accuracy)


def write_dataset(dataset: Dataset, path: str) -> None:
    """
    Write the columnar text format: '# key = value' header lines, then CSV.
    """
    header = [f"# {key} = {value}" for key, value in dataset.config.to_dict().items()]
    header.append(f"# true_ordering = {', '.join(repr(r) for r in dataset.true_ordering.ranks)}")
    columns = {f"x{i}": dataset.features[:, i] for i in range(dataset.features.shape[1])}
    frame = pd.DataFrame(columns)
    frame['label'] = dataset.labels
    frame['clean_label'] = dataset.clean_labels
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write("\n".join(header) + "\n")
            frame.to_csv(f, index=False, lineterminator="\n")
    except OSError as e:
        raise ReportIOError(f"failed to write dataset: {e}", path, e)
    logger.info(f"Wrote {len(dataset)} samples to {path}")


def read_dataset(path: str) -> Dataset:
    """Read a file produced by ``write_dataset``."""
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ReportIOError(f"failed to read dataset: {e}", path, e)

    meta = {}
    body: List[str] = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
        else:
            body.append(line)
    frame = pd.read_csv(io.StringIO("\n".join(body)), float_precision="round_trip")
    feature_columns = [c for c in frame.columns if c.startswith("x")]
    config = SynthConfig(
        num_classes=int(meta['num_classes']),
        samples_per_class=int(meta['samples_per_class']),
        angular_noise=float(meta['angular_noise']),
        distractor_dims=int(meta['distractor_dims']),
        label_noise=float(meta['label_noise']),
        noise_structure=NoiseStructure(meta['noise_structure']),
        seed=int(meta['seed']),
    )
    ordering = RankAssignment(tuple(float(v) for v in meta['true_ordering'].split(",")),
                              Geometry.CIRCULAR)
    return Dataset(frame[feature_columns].to_numpy(dtype=float),
                   frame['label'].to_numpy(dtype=int),
                   frame['clean_label'].to_numpy(dtype=int),
                   ordering, config)
