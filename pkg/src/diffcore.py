"""
Minimal differentiable training core.

Dense feed-forward classifier with softmax output, soft-target cross-entropy,
a functional Adam optimizer, a central-difference gradient checker and a
versioned checkpoint format. Everything is float64 numpy.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from .exceptions import DimensionError, DomainError, NumericError, ReportIOError

logger = logging.getLogger(__name__)

LOG_EPSILON = 1e-12
CHECKPOINT_FORMAT_VERSION = 1


class Activation(Enum):
    RELU = "relu"
    TANH = "tanh"


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation == Activation.RELU:
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activation_grad(z: np.ndarray, a: np.ndarray, activation: Activation) -> np.ndarray:
    if activation == Activation.RELU:
        return (z > 0).astype(float)
    return 1.0 - a * a


@dataclass
class ModelParams:
    """
    Layer stack of (weight, bias) pairs; weights are (fan_in, fan_out).

    Hidden layers apply the activation; the last layer produces logits.
    """
    layers: List[Tuple[np.ndarray, np.ndarray]]
    activation: Activation = Activation.RELU

    def __post_init__(self):
        self.layers = [(np.asarray(w, dtype=float), np.asarray(b, dtype=float))
                       for w, b in self.layers]
        if isinstance(self.activation, str):
            self.activation = Activation(self.activation)
        self.validate()

    def validate(self) -> None:
        """
        Check that layer dimensions chain and parameters are finite.

        Raises:
            DimensionError: On a shape mismatch between consecutive layers.
            NumericError: On non-finite parameters.
        """
        if not self.layers:
            raise DimensionError("model needs at least one layer")
        for i, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionError(f"layer {i} weight/bias shapes do not match",
                                     expected=(w.shape[-1],), actual=b.shape)
            if i > 0 and self.layers[i - 1][0].shape[1] != w.shape[0]:
                raise DimensionError(f"layer {i} input does not chain with layer {i - 1}",
                                     expected=self.layers[i - 1][0].shape[1], actual=w.shape[0])
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NumericError(f"layer {i} has non-finite parameters")

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[0]

    @property
    def num_classes(self) -> int:
        return self.layers[-1][0].shape[1]

    def tensors(self) -> List[np.ndarray]:
        """Parameters as a flat list [W0, b0, W1, b1, ...]."""
        return [t for pair in self.layers for t in pair]

    def with_tensors(self, tensors: Sequence[np.ndarray]) -> 'ModelParams':
        pairs = [(tensors[2 * i], tensors[2 * i + 1]) for i in range(len(self.layers))]
        return ModelParams(pairs, self.activation)

    def copy(self) -> 'ModelParams':
        return self.with_tensors([t.copy() for t in self.tensors()])


def init_model(input_dim: int, num_classes: int, hidden_layers: Sequence[int] = (64, 64),
               activation: Activation = Activation.RELU,
               rng: Optional[np.random.Generator] = None,
               zero_output: bool = True) -> ModelParams:
    """
    Initialize a classifier.

    Hidden weights use He scaling for relu and Glorot-style scaling for tanh;
    biases start at zero. With ``zero_output`` the logits layer starts at zero so
    the untrained model predicts the uniform distribution.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    activation = Activation(activation)
    gain = 2.0 if activation == Activation.RELU else 1.0
    dims = [input_dim, *hidden_layers, num_classes]
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        is_output = i == len(dims) - 2
        if is_output and zero_output:
            w = np.zeros((fan_in, fan_out))
        else:
            w = rng.normal(0.0, np.sqrt(gain / fan_in), size=(fan_in, fan_out))
        layers.append((w, np.zeros(fan_out)))
    return ModelParams(layers, activation)


@dataclass
class ForwardCache:
    inputs: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    activations: List[np.ndarray] = field(default_factory=list)


def forward_with_cache(params: ModelParams, batch: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    """Forward pass returning B×K probabilities and the intermediates for backward."""
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 2 or batch.shape[1] != params.input_dim:
        raise DimensionError("feature dimension does not match the first layer",
                             expected=params.input_dim, actual=batch.shape)
    cache = ForwardCache()
    a = batch
    last = len(params.layers) - 1
    for i, (w, b) in enumerate(params.layers):
        cache.inputs.append(a)
        z = a @ w + b
        if i == last:
            return softmax(z, axis=1), cache
        a = _activate(z, params.activation)
        cache.pre_activations.append(z)
        cache.activations.append(a)
    raise AssertionError("unreachable")


def forward(params: ModelParams, batch: np.ndarray) -> np.ndarray:
    """B×K softmax probabilities for a B×D feature matrix."""
    probabilities, _ = forward_with_cache(params, batch)
    return probabilities


def backward(params: ModelParams, cache: ForwardCache, grad_logits: np.ndarray) -> List[np.ndarray]:
    """Gradients for every tensor in ``params.tensors()`` given ∂L/∂logits."""
    grads: List[np.ndarray] = []
    dz = grad_logits
    for i in range(len(params.layers) - 1, -1, -1):
        w, _ = params.layers[i]
        a_in = cache.inputs[i]
        grads.append(dz.sum(axis=0))
        grads.append(a_in.T @ dz)
        if i > 0:
            da = dz @ w.T
            dz = da * _activation_grad(cache.pre_activations[i - 1],
                                       cache.activations[i - 1], params.activation)
    grads.reverse()
    return grads


def _check_distribution_rows(matrix: np.ndarray, name: str) -> None:
    if np.any(matrix < 0):
        raise DomainError(f"{name} has negative entries")
    if np.any(np.abs(matrix.sum(axis=1) - 1.0) > 1e-6):
        raise DomainError(f"{name} rows must sum to 1 within 1e-6")


def cross_entropy(prediction: np.ndarray, target: np.ndarray) -> float:
    """
    Mean over the batch of −Σ_i y_i log(ŷ_i + ε), ε = 1e-12.

    Raises:
        DimensionError: If shapes differ.
        DomainError: If either argument has negative entries or rows not summing to 1.
    """
    prediction = np.atleast_2d(np.asarray(prediction, dtype=float))
    target = np.atleast_2d(np.asarray(target, dtype=float))
    if prediction.shape != target.shape:
        raise DimensionError("prediction and target shapes differ",
                             expected=target.shape, actual=prediction.shape)
    _check_distribution_rows(prediction, "prediction")
    _check_distribution_rows(target, "target")
    return float(-np.mean(np.sum(target * np.log(prediction + LOG_EPSILON), axis=1)))


def cross_entropy_grads(prediction: np.ndarray,
                        target: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Cross-entropy plus gradients with respect to the logits and the target.

    The logits gradient is the exact chain rule through the ε-clamped log;
    it equals (ŷ − y)/B up to terms of order ε.

    Returns:
        Tuple of (loss, ∂L/∂logits, ∂L/∂target)
    """
    loss = cross_entropy(prediction, target)
    batch_size = prediction.shape[0]
    g = -target / (prediction + LOG_EPSILON) / batch_size
    grad_logits = prediction * (g - np.sum(prediction * g, axis=1, keepdims=True))
    grad_target = -np.log(prediction + LOG_EPSILON) / batch_size
    return loss, grad_logits, grad_target


@dataclass
class OptimizerState:
    """Adam moments for a list of parameter tensors."""
    step: int
    first_moment: List[np.ndarray]
    second_moment: List[np.ndarray]
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def create(cls, tensors: Sequence[np.ndarray], learning_rate: float = 1e-4,
               beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> 'OptimizerState':
        return cls(0, [np.zeros_like(t, dtype=float) for t in tensors],
                   [np.zeros_like(t, dtype=float) for t in tensors],
                   learning_rate, beta1, beta2, epsilon)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
              state: OptimizerState) -> Tuple[List[np.ndarray], OptimizerState]:
    """
    One bias-corrected Adam update.

    Inputs are left untouched; new parameter arrays and a new state are returned.

    Raises:
        DimensionError: If params, grads and moments do not match in count or shape.
    """
    if not (len(params) == len(grads) == len(state.first_moment)):
        raise DimensionError("params, grads and optimizer state differ in length",
                             expected=len(state.first_moment), actual=(len(params), len(grads)))
    step = state.step + 1
    correction1 = 1.0 - state.beta1 ** step
    correction2 = 1.0 - state.beta2 ** step
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if not (np.shape(p) == np.shape(g) == m.shape):
            raise DimensionError("gradient shape does not match parameter shape",
                                 expected=np.shape(p), actual=np.shape(g))
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        m_hat = m / correction1
        v_hat = v / correction2
        new_params.append(p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon))
        new_m.append(m)
        new_v.append(v)
    return new_params, OptimizerState(step, new_m, new_v, state.learning_rate,
                                      state.beta1, state.beta2, state.epsilon)


LossAndGrad = Callable[[np.ndarray], Tuple[float, np.ndarray]]


def grad_check(loss_fn: LossAndGrad, point: np.ndarray, num_coords: int = 200,
               h: float = 1e-5, rng: Optional[np.random.Generator] = None,
               floor: float = 1e-4) -> float:
    """
    Compare an analytic gradient with central differences.

    Args:
        loss_fn: Maps a parameter vector to (loss, gradient vector)
        point: Parameter vector to check at
        num_coords: Maximum number of randomly sampled coordinates
        h: Finite-difference step
        rng: Random generator for coordinate sampling
        floor: Components smaller than this are compared on an absolute scale of ``floor``

    Returns:
        float: Maximum relative error over the sampled coordinates

    Raises:
        NumericError: If the loss is not finite at any evaluated point.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    point = np.array(point, dtype=float).ravel()
    value, analytic = loss_fn(point)
    analytic = np.asarray(analytic, dtype=float).ravel()
    if not np.isfinite(value):
        raise NumericError("loss is not finite at the check point")
    if analytic.shape != point.shape:
        raise DimensionError("gradient length differs from the parameter vector",
                             expected=point.shape, actual=analytic.shape)

    coords = rng.choice(point.size, size=min(num_coords, point.size), replace=False)
    worst = 0.0
    for i in coords:
        shifted = point.copy()
        shifted[i] = point[i] + h
        upper, _ = loss_fn(shifted)
        shifted[i] = point[i] - h
        lower, _ = loss_fn(shifted)
        if not (np.isfinite(upper) and np.isfinite(lower)):
            raise NumericError(f"loss is not finite when perturbing coordinate {i}")
        numeric = (upper - lower) / (2.0 * h)
        scale = max(abs(analytic[i]), abs(numeric), floor)
        worst = max(worst, abs(analytic[i] - numeric) / scale)
    logger.debug(f"Gradient check over {coords.size} coordinates: max relative error {worst:.3e}")
    return worst


def flatten(tensors: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.ravel(t) for t in tensors])


def unflatten(vector: np.ndarray, like: Sequence[np.ndarray]) -> List[np.ndarray]:
    out, offset = [], 0
    for t in like:
        size = np.size(t)
        out.append(vector[offset:offset + size].reshape(np.shape(t)))
        offset += size
    if offset != vector.size:
        raise DimensionError("vector length does not match the tensor shapes",
                             expected=offset, actual=vector.size)
    return out


def save_checkpoint(directory: str, params: ModelParams, seed: int, step: int,
                    extra: Optional[dict] = None) -> None:
    """
    Write ``params.npz`` and ``manifest.json`` into ``directory``.

    Args:
        directory: Target directory, created when missing
        params: Model parameters
        seed: Run seed recorded in the manifest
        step: Training step of the checkpoint
        extra: Additional named arrays, e.g. ordering logits or encoding alpha
    """
    arrays = {}
    for i, (w, b) in enumerate(params.layers):
        arrays[f"layer{i}_weight"] = w
        arrays[f"layer{i}_bias"] = b
    for name, value in (extra or {}).items():
        arrays[name] = np.asarray(value)
    manifest = {
        'format_version': CHECKPOINT_FORMAT_VERSION,
        'activation': params.activation.value,
        'layers': [{'weight': list(w.shape), 'bias': list(b.shape)} for w, b in params.layers],
        'extra': sorted((extra or {}).keys()),
        'seed': seed,
        'step': step,
    }
    try:
        os.makedirs(directory, exist_ok=True)
        np.savez(os.path.join(directory, "params.npz"), **arrays)
        with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise ReportIOError(f"failed to write checkpoint: {e}", directory, e)
    logger.info(f"Saved checkpoint (step {step}) to {directory}")


def load_checkpoint(directory: str) -> Tuple[ModelParams, dict, dict]:
    """
    Read a checkpoint written by ``save_checkpoint``.

    Returns:
        Tuple of (params, manifest, extra arrays)
    """
    try:
        with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as f:
            manifest = json.load(f)
        with np.load(os.path.join(directory, "params.npz")) as data:
            arrays = {name: data[name] for name in data.files}
    except (OSError, ValueError) as e:
        raise ReportIOError(f"failed to read checkpoint: {e}", directory, e)
    if manifest.get('format_version') != CHECKPOINT_FORMAT_VERSION:
        raise ReportIOError(f"unsupported checkpoint format {manifest.get('format_version')}",
                            directory)
    layers = [(arrays[f"layer{i}_weight"], arrays[f"layer{i}_bias"])
              for i in range(len(manifest['layers']))]
    extra = {name: arrays[name] for name in manifest.get('extra', [])}
    return ModelParams(layers, Activation(manifest['activation'])), manifest, extra
