"""
Training loop for one experiment cell.

Supports the fixed encodings (one-hot, linear and circular SORD), the learned
ordering mixture (PL-SORD) and the directly-learned encoding. Extra trainable
parameters (ordering logits λ or encoding α) are updated by the same Adam
state as the model weights.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .diffcore import (Activation, ModelParams, OptimizerState, adam_step, backward,
                       cross_entropy_grads, flatten, forward, forward_with_cache, grad_check,
                       init_model, unflatten)
from .exceptions import ConfigurationError, NumericError
from .label_codec import encode_onehot, encode_sord
from .learned_codec import EncodingParams, materialize, materialize_backward
from .models import (DistanceSpec, ExperimentConfig, Geometry, LabelMatrix, RankAssignment,
                     Scheme)
from .ordering_search import (OrderingCandidateSet, OrderingWeights, batch_ordering_losses,
                              enumerate_orderings, weighted_total_loss_and_grad)


logger = logging.getLogger(__name__)


@dataclass
class CheckpointRecord:
    """Validation snapshot taken during training."""
    step: int
    validation_accuracy: float
    loss: float
    ordering_probabilities: Optional[List[float]] = None
    label_matrix: Optional[str] = None

    def to_dict(self) -> dict:
        data = {'step': self.step,
                'validation_accuracy': self.validation_accuracy,
                'loss': self.loss}
        if self.ordering_probabilities is not None:
            data['ordering_probabilities'] = self.ordering_probabilities
        if self.label_matrix is not None:
            data['label_matrix'] = self.label_matrix
        return data


@dataclass
class TrainingResult:
    """
    Best checkpoint plus the full validation trajectory.

    Ordering weights and the learned encoding are the values at the end of
    training; the model parameters are those of the best checkpoint.
    """
    best_params: ModelParams
    best_step: int
    checkpoints: List[CheckpointRecord] = field(default_factory=list)
    candidates: Optional[OrderingCandidateSet] = None
    ordering_weights: Optional[OrderingWeights] = None
    encoding_params: Optional[EncodingParams] = None
    encoding: Optional[LabelMatrix] = None

    @property
    def best_checkpoint(self) -> CheckpointRecord:
        return next(c for c in self.checkpoints if c.step == self.best_step)


def accuracy(params: ModelParams, features: np.ndarray, labels: np.ndarray) -> float:
    predictions = np.argmax(forward(params, features), axis=1)
    return float(np.mean(predictions == labels))


def default_positions(config: ExperimentConfig) -> tuple:
    geometry = config.scheme.geometry or Geometry.CIRCULAR
    if config.positions is not None:
        return tuple(config.positions)
    return RankAssignment.equally_spaced(config.num_classes, geometry).ranks


def sord_ranks(config: ExperimentConfig,
               ordering: Optional[RankAssignment] = None) -> RankAssignment:
    """
    Ranks for the fixed SORD schemes.

    Explicit positions win. Otherwise classes are equally spaced along the
    known cyclic ordering of the data when one is given, else in index order.
    """
    geometry = config.scheme.geometry
    if config.positions is not None or ordering is None:
        return RankAssignment(default_positions(config), geometry)
    slots = RankAssignment.equally_spaced(config.num_classes, geometry).ranks
    ranks = [0.0] * config.num_classes
    for slot, cls in enumerate(ordering.cyclic_sequence()):
        ranks[cls] = slots[slot]
    return RankAssignment(tuple(ranks), geometry)


class Trainer:
    """
    Trains one model for one (scheme, training set, seed) cell.

    The best checkpoint is the first one reaching the highest validation
    accuracy; later checkpoints replace it only on strict improvement.
    """

    def __init__(self, config: ExperimentConfig, seed: int,
                 ordering: Optional[RankAssignment] = None):
        """
        Initialize the trainer.

        Args:
            config: Validated experiment configuration
            seed: Run seed; model init and batch sampling derive from it
            ordering: Known cyclic ordering of the classes; fixed SORD schemes
                without explicit positions rank classes along it
        """
        self.config = config
        self.seed = seed
        self.ordering = ordering
        self.logger = logging.getLogger(__name__)
        self.scheme = config.scheme
        self.num_classes = config.num_classes

        self.encoding: Optional[LabelMatrix] = None
        self.candidates: Optional[OrderingCandidateSet] = None
        self.candidate_encodings: List[LabelMatrix] = []
        self.checkpoints: List[CheckpointRecord] = []
        self._build_objective()

    def _build_objective(self) -> None:
        k = self.num_classes
        config = self.config
        if self.scheme == Scheme.ONEHOT:
            self.encoding = encode_onehot(k)
        elif self.scheme in (Scheme.SORD_LINEAR, Scheme.SORD_CIRCULAR):
            self.encoding = encode_sord(sord_ranks(config, self.ordering),
                                        DistanceSpec(self.scheme.geometry, config.s))
        elif self.scheme == Scheme.PLSORD:
            self.candidates = enumerate_orderings(k, default_positions(config), Geometry.CIRCULAR)
            self.candidate_encodings = self.candidates.encodings(
                DistanceSpec(Geometry.CIRCULAR, config.s))
        elif self.scheme != Scheme.LEARNED:
            raise ConfigurationError(f"unsupported scheme {self.scheme}", "scheme")

    def _initial_extra(self) -> List[np.ndarray]:
        if self.scheme == Scheme.PLSORD:
            return [OrderingWeights.zeros(len(self.candidates)).logits]
        if self.scheme == Scheme.LEARNED:
            return [EncodingParams.zeros(self.num_classes, self.config.target_mass).alpha]
        return []

    def loss_and_grads(self, params: ModelParams, extra: List[np.ndarray],
                       features: np.ndarray, labels: np.ndarray):
        """
        Loss on one batch and gradients for model tensors followed by extra tensors.

        Returns:
            Tuple of (loss, list of gradients)
        """
        probabilities, cache = forward_with_cache(params, features)

        if self.scheme == Scheme.PLSORD:
            weights = OrderingWeights(extra[0])
            sigma = weights.probabilities()
            losses = batch_ordering_losses(probabilities, labels, self.candidate_encodings)
            total, grad_lambda = weighted_total_loss_and_grad(losses, weights)
            # Cross-entropy is linear in the target, so the mixture target gives
            # the same logits gradient as weighting the per-ordering losses.
            mixture = sum(w * e.entries for w, e in zip(sigma, self.candidate_encodings))
            _, grad_logits, _ = cross_entropy_grads(probabilities, mixture[labels])
            grads = backward(params, cache, grad_logits) + [grad_lambda]
            return total, grads

        if self.scheme == Scheme.LEARNED:
            encoding_params = EncodingParams(extra[0], self.config.target_mass)
            matrix = materialize(encoding_params)
            loss, grad_logits, grad_target = cross_entropy_grads(probabilities,
                                                                 matrix.entries[labels])
            grad_entries = np.zeros((self.num_classes, self.num_classes))
            np.add.at(grad_entries, labels, grad_target)
            grad_alpha = materialize_backward(encoding_params, grad_entries)
            return loss, backward(params, cache, grad_logits) + [grad_alpha]

        loss, grad_logits, _ = cross_entropy_grads(probabilities, self.encoding.entries[labels])
        return loss, backward(params, cache, grad_logits)

    def _sample_batch(self, rng: np.random.Generator, by_class: List[np.ndarray],
                      all_indices: np.ndarray) -> np.ndarray:
        # Stratified by emitted label, with replacement; classes absent from
        # a small training set are skipped.
        per_class = self.config.batch_size // self.num_classes
        parts = [rng.choice(idx, size=per_class, replace=True) for idx in by_class if idx.size]
        remainder = self.config.batch_size - per_class * len(parts)
        if remainder > 0:
            parts.append(rng.choice(all_indices, size=remainder, replace=True))
        return np.concatenate(parts)

    def _snapshot(self, step: int, params: ModelParams, extra: List[np.ndarray], loss: float,
                  val_features: np.ndarray, val_labels: np.ndarray) -> CheckpointRecord:
        record = CheckpointRecord(step, accuracy(params, val_features, val_labels), float(loss))
        if self.scheme == Scheme.PLSORD:
            record.ordering_probabilities = [float(p) for p in
                                             OrderingWeights(extra[0]).probabilities()]
        elif self.scheme == Scheme.LEARNED:
            record.label_matrix = materialize(
                EncodingParams(extra[0], self.config.target_mass)).to_text()
        return record

    def fit(self, features: np.ndarray, labels: np.ndarray,
            val_features: np.ndarray, val_labels: np.ndarray) -> TrainingResult:
        """
        Train with Adam and keep the best validation checkpoint.

        Args:
            features: Training features
            labels: Training labels (emitted, possibly noisy)
            val_features: Validation features
            val_labels: Validation labels used for model selection

        Returns:
            TrainingResult: Best parameters and the checkpoint trajectory

        Raises:
            NumericError: If the training loss becomes non-finite
        """
        config = self.config
        init_rng = np.random.default_rng([self.seed, 0])
        batch_rng = np.random.default_rng([self.seed, 1])

        params = init_model(features.shape[1], self.num_classes, config.hidden_layers,
                            Activation(config.activation), init_rng)
        extra = self._initial_extra()
        n_model = len(params.tensors())
        state = OptimizerState.create(params.tensors() + extra, config.learning_rate,
                                      config.beta1, config.beta2, config.epsilon)

        by_class = [np.flatnonzero(labels == c) for c in range(self.num_classes)]
        all_indices = np.arange(labels.size)

        self.logger.info(f"Training {config.variant} on {labels.size} samples "
                         f"for {config.steps} steps (seed={self.seed})")

        initial_loss, _ = self.loss_and_grads(params, extra, features, labels)
        checkpoints = [self._snapshot(0, params, extra, initial_loss, val_features, val_labels)]
        self.checkpoints = checkpoints
        best_params, best_step = params.copy(), 0
        best_accuracy = checkpoints[0].validation_accuracy

        for step in range(1, config.steps + 1):
            batch = self._sample_batch(batch_rng, by_class, all_indices)
            loss, grads = self.loss_and_grads(params, extra, features[batch], labels[batch])
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
                raise NumericError(f"non-finite training loss at step {step}", step)
            tensors, state = adam_step(params.tensors() + extra, grads, state)
            if not all(np.all(np.isfinite(t)) for t in tensors):
                raise NumericError(f"parameters diverged at step {step}", step)
            params = params.with_tensors(tensors[:n_model])
            extra = tensors[n_model:]

            if step % config.checkpoint_interval == 0 or step == config.steps:
                record = self._snapshot(step, params, extra, loss, val_features, val_labels)
                checkpoints.append(record)
                self.logger.debug(f"step {step}: loss={loss:.5f} "
                                  f"val_acc={record.validation_accuracy:.4f}")
                if record.validation_accuracy > best_accuracy:
                    best_accuracy = record.validation_accuracy
                    best_params, best_step = params.copy(), step
                    self.logger.debug(f"New best checkpoint at step {step} ({best_accuracy:.4f})")

        result = TrainingResult(best_params, best_step, checkpoints, self.candidates)
        if self.scheme == Scheme.PLSORD:
            result.ordering_weights = OrderingWeights(extra[0])
        elif self.scheme == Scheme.LEARNED:
            result.encoding_params = EncodingParams(extra[0], config.target_mass)
            result.encoding = materialize(result.encoding_params)
        else:
            result.encoding = self.encoding
        self.logger.info(f"Best checkpoint step {best_step} "
                         f"(validation accuracy {best_accuracy:.4f})")
        return result


GRADIENT_TOLERANCE = 1e-5


def gradient_oracles(seed: int = 0, num_classes: int = 4, batch_size: int = 16,
                     num_coords: int = 200) -> Dict[str, float]:
    """
    Finite-difference checks of the three trainable pieces.

    Runs on a small tanh network so the loss is smooth everywhere:
    model weights under circular SORD cross-entropy, ordering logits under the
    weighted total loss, and encoding α under the learned encoding.

    Returns:
        Dict mapping check name to maximum relative error
    """
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((batch_size, 6))
    labels = rng.integers(0, num_classes, size=batch_size)

    def make(scheme: Scheme) -> Trainer:
        config = ExperimentConfig(scheme=scheme, s=1.0, num_classes=num_classes,
                                  hidden_layers=(8,), activation="tanh",
                                  batch_size=max(batch_size, num_classes))
        return Trainer(config, seed)

    model = init_model(features.shape[1], num_classes, (8,), Activation.TANH, rng,
                       zero_output=False)
    like = model.tensors()

    sord = make(Scheme.SORD_CIRCULAR)

    def weights_loss(vector):
        loss, grads = sord.loss_and_grads(model.with_tensors(unflatten(vector, like)), [],
                                          features, labels)
        return loss, flatten(grads)

    plsord = make(Scheme.PLSORD)
    logits = rng.normal(size=len(plsord.candidates))

    def logits_loss(vector):
        loss, grads = plsord.loss_and_grads(model, [vector], features, labels)
        return loss, grads[-1]

    learned = make(Scheme.LEARNED)
    alpha = rng.normal(size=(num_classes, num_classes - 1))

    def alpha_loss(vector):
        loss, grads = learned.loss_and_grads(model, [vector.reshape(alpha.shape)],
                                             features, labels)
        return loss, grads[-1].ravel()

    results = {
        'model_weights': grad_check(weights_loss, flatten(like), num_coords, rng=rng),
        'ordering_logits': grad_check(logits_loss, logits, num_coords, rng=rng),
        'encoding_alpha': grad_check(alpha_loss, alpha.ravel(), num_coords, rng=rng),
    }
    for name, error in results.items():
        logger.info(f"Gradient check {name}: max relative error {error:.3e}")
    return results
