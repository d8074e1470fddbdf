"""Dense feed-forward network engine: parameters, forward/backward, Adam.

Everything is float64 and purely functional: operations return fresh values
and never mutate their inputs. Batches are row-major (rows = samples).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidArchitectureError, NumericError, ShapeError

ACTIVATIONS = ("identity", "sigmoid", "tanh", "relu")


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str

    @property
    def in_size(self) -> int:
        return self.weights.shape[1]

    @property
    def out_size(self) -> int:
        return self.weights.shape[0]


@dataclass
class MLPParams:
    layers: list[Layer]

    @property
    def in_size(self) -> int:
        return self.layers[0].in_size

    @property
    def out_size(self) -> int:
        return self.layers[-1].out_size

    def layer_sizes(self) -> list[int]:
        return [self.in_size] + [lay.out_size for lay in self.layers]

    def copy(self) -> "MLPParams":
        return MLPParams([Layer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers])


@dataclass
class Gradient:
    """Per-parameter derivatives, shape-congruent with the source MLPParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class AdamState:
    m_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_weights: list[np.ndarray]
    v_biases: list[np.ndarray]
    timestep: int = 0
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class ForwardCache:
    batch: np.ndarray
    pre_activations: list[np.ndarray] = field(default_factory=list)
    post_activations: list[np.ndarray] = field(default_factory=list)


def num_parameters(params: MLPParams) -> int:
    return sum(l.weights.size + l.bias.size for l in params.layers)


def mlp_init(layer_sizes, activations, seed: int) -> MLPParams:
    """Glorot-uniform weights, zero biases, deterministic for a given seed."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise InvalidArchitectureError(f"need at least 2 layer sizes, got {sizes}")
    if any(s < 1 for s in sizes):
        raise InvalidArchitectureError(f"layer sizes must be >= 1, got {sizes}")
    acts = list(activations)
    if len(acts) != len(sizes) - 1:
        raise InvalidArchitectureError(
            f"{len(sizes) - 1} layers need {len(sizes) - 1} activations, got {len(acts)}")
    for a in acts:
        if a not in ACTIVATIONS:
            raise InvalidArchitectureError(f"unknown activation {a!r}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], acts):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(Layer(w, np.zeros(fan_out), act))
    return MLPParams(layers)


def forward(params: MLPParams, batch: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2:
        raise ShapeError(f"batch must be 2-D, got shape {batch.shape}")
    if batch.shape[1] != params.in_size:
        raise ShapeError(
            f"batch has {batch.shape[1]} features, network expects {params.in_size}")
    cache = ForwardCache(batch)
    a = batch
    for layer in params.layers:
        z = kernels.affine_forward(a, layer.weights, layer.bias)
        a = kernels.activate(z, kernels.ACTIVATION_TAGS[layer.activation])
        cache.pre_activations.append(z)
        cache.post_activations.append(a)
    return a, cache


def _backward(params: MLPParams, cache: ForwardCache, output_gradient: np.ndarray):
    output_gradient = np.asarray(output_gradient, dtype=np.float64)
    if len(cache.post_activations) != len(params.layers):
        raise ShapeError("cache does not match network depth")
    if output_gradient.shape != cache.post_activations[-1].shape:
        raise ShapeError(
            f"output gradient shape {output_gradient.shape} does not match "
            f"outputs {cache.post_activations[-1].shape}")
    dws: list[np.ndarray] = [None] * len(params.layers)
    dbs: list[np.ndarray] = [None] * len(params.layers)
    delta = output_gradient
    for k in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[k]
        tag = kernels.ACTIVATION_TAGS[layer.activation]
        delta = kernels.activation_backward(
            delta, cache.pre_activations[k], cache.post_activations[k], tag)
        a_prev = cache.post_activations[k - 1] if k > 0 else cache.batch
        dws[k], dbs[k], delta = kernels.affine_backward(delta, a_prev, layer.weights)
    return Gradient(dws, dbs), delta


def backward(params: MLPParams, cache: ForwardCache, output_gradient: np.ndarray) -> Gradient:
    """Gradient of a scalar loss w.r.t. every parameter, summed over the batch.

    ``output_gradient`` is the loss derivative w.r.t. the network outputs.
    """
    grad, _ = _backward(params, cache, output_gradient)
    return grad


def backward_with_input(params: MLPParams, cache: ForwardCache,
                        output_gradient: np.ndarray) -> tuple[Gradient, np.ndarray]:
    """Like :func:`backward` but also returns the loss gradient w.r.t. the batch."""
    return _backward(params, cache, output_gradient)


def adam_init(params: MLPParams, alpha: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(
        m_weights=[np.zeros_like(l.weights) for l in params.layers],
        m_biases=[np.zeros_like(l.bias) for l in params.layers],
        v_weights=[np.zeros_like(l.weights) for l in params.layers],
        v_biases=[np.zeros_like(l.bias) for l in params.layers],
        alpha=alpha, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: MLPParams, grad: Gradient, state: AdamState) -> tuple[MLPParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    if len(grad.weights) != len(params.layers):
        raise ShapeError("gradient does not match network depth")
    for k, (layer, gw, gb) in enumerate(zip(params.layers, grad.weights, grad.biases)):
        if gw.shape != layer.weights.shape or gb.shape != layer.bias.shape:
            raise ShapeError(f"gradient shape mismatch at layer {k}")
        if not (np.isfinite(gw).all() and np.isfinite(gb).all()):
            raise NumericError(f"non-finite gradient at layer {k}")
    new_params = params.copy()
    new_state = AdamState(
        m_weights=[m.copy() for m in state.m_weights],
        m_biases=[m.copy() for m in state.m_biases],
        v_weights=[v.copy() for v in state.v_weights],
        v_biases=[v.copy() for v in state.v_biases],
        timestep=state.timestep + 1,
        alpha=state.alpha, beta1=state.beta1, beta2=state.beta2, eps=state.eps)
    t = new_state.timestep
    for k, layer in enumerate(new_params.layers):
        kernels.adam_update(layer.weights, grad.weights[k], new_state.m_weights[k],
                            new_state.v_weights[k], state.alpha, state.beta1,
                            state.beta2, state.eps, t)
        kernels.adam_update(layer.bias, grad.biases[k], new_state.m_biases[k],
                            new_state.v_biases[k], state.alpha, state.beta1,
                            state.beta2, state.eps, t)
        if not (np.isfinite(layer.weights).all() and np.isfinite(layer.bias).all()):
            raise NumericError(f"non-finite parameters after update at layer {k}")
    return new_params, new_state
