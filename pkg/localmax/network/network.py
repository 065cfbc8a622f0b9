from __future__ import annotations

import copy
import dataclasses
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from localmax.network.layers import LayerKind, LayerSpec, RECTIFIER_KINDS, validate_chain
from localmax.utils.classes import FloatArray, ForwardMode
from localmax.utils.constants import BATCH_NORM_EPSILON, BATCH_NORM_MOMENTUM, LEAKY_RELU_DEFAULT_SLOPE
from localmax.utils.exceptions import (
    LocalMaxConfigurationException,
    LocalMaxInternalException,
    LocalMaxNumericInputException,
)
from localmax.utils.functions import hash_arrays, verify_finite


LayerTensors = Dict[str, FloatArray]


def _parameter_shapes(spec: LayerSpec) -> Dict[str, Tuple[int, ...]]:
    if spec.kind is LayerKind.Affine:
        return {'W': (spec.out_dim, spec.in_dim), 'b': (spec.out_dim,)}
    if spec.kind is LayerKind.BatchNorm:
        return {'gamma': (spec.in_dim,), 'beta': (spec.in_dim,)}
    return {}


def _buffer_shapes(spec: LayerSpec) -> Dict[str, Tuple[int, ...]]:
    if spec.kind is LayerKind.BatchNorm:
        return {'running_mean': (spec.in_dim,), 'running_var': (spec.in_dim,)}
    return {}


class Network:
    """
    A dense feed-forward chain of layers with its parameter tensors and batch-norm running statistics.
    """

    specs: List[LayerSpec]
    seed: int
    role: str
    parameters: List[LayerTensors]
    buffers: List[LayerTensors]

    def __init__(
        self,
        specs: Sequence[LayerSpec],
        seed: int,
        parameters: List[LayerTensors],
        buffers: List[LayerTensors],
        *,
        role: str = '',
    ):
        """
        @param specs: the layers, input to output. must form a consistent chain
        @param seed: the seed the parameters were initialized with
        @param parameters: per layer: {'W', 'b'} for affine layers, {'gamma', 'beta'} for batch-norm layers
        @param buffers: per layer: {'running_mean', 'running_var'} for batch-norm layers
        @param role: free-text role name (classifier / comparator / generator / constructed)
        """
        self.specs = validate_chain(specs)
        self.seed = seed
        self.role = role

        if len(parameters) != len(self.specs) or len(buffers) != len(self.specs):
            raise LocalMaxConfigurationException(
                f'Expected tensors for {len(self.specs)} layers, got {len(parameters)} parameter sets '
                f'and {len(buffers)} buffer sets.'
            )
        for index, spec in enumerate(self.specs):
            self._validate_tensors(index, spec, parameters[index], _parameter_shapes(spec))
            self._validate_tensors(index, spec, buffers[index], _buffer_shapes(spec))
        self.parameters = parameters
        self.buffers = buffers

    @staticmethod
    def _validate_tensors(
        index: int, spec: LayerSpec, tensors: LayerTensors, expected: Dict[str, Tuple[int, ...]]
    ) -> None:
        if set(tensors) != set(expected):
            raise LocalMaxConfigurationException(
                f'Layer {index} {spec}: expected tensors {sorted(expected)}, got {sorted(tensors)}.'
            )
        for name, shape in expected.items():
            if tensors[name].shape != shape:
                raise LocalMaxConfigurationException(
                    f'Layer {index} {spec}: tensor {name} has shape {tensors[name].shape}, expected {shape}.'
                )
            verify_finite(tensors[name], f'Layer {index} {spec} tensor {name}')

    @property
    def input_dim(self) -> int:
        return self.specs[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.specs[-1].out_dim

    def has_batch_norm(self) -> bool:
        return any(spec.kind is LayerKind.BatchNorm for spec in self.specs)

    def named_parameters(self) -> List[Tuple[str, FloatArray]]:
        return [
            (f'{index}.{name}', tensor)
            for index, tensors in enumerate(self.parameters)
            for name, tensor in tensors.items()
        ]

    def named_buffers(self) -> List[Tuple[str, FloatArray]]:
        return [
            (f'{index}.{name}', tensor)
            for index, tensors in enumerate(self.buffers)
            for name, tensor in tensors.items()
        ]

    def get_parameter(self, name: str) -> FloatArray:
        index, key = name.split('.')
        return self.parameters[int(index)][key]

    def affine_weights(self) -> List[FloatArray]:
        return [tensors['W'] for spec, tensors in zip(self.specs, self.parameters) if spec.kind is LayerKind.Affine]

    def parameters_hash(self) -> str:
        """
        @return: a digest of every parameter tensor (running statistics excluded)
        """
        return hash_arrays(tensor for _, tensor in self.named_parameters())

    def state_hash(self) -> str:
        """
        @return: a digest of every parameter tensor and running statistic
        """
        return hash_arrays([tensor for _, tensor in self.named_parameters()] + [t for _, t in self.named_buffers()])

    def copy(self) -> Network:
        return copy.deepcopy(self)

    def __repr__(self) -> str:
        chain = ', '.join(str(spec) for spec in self.specs)
        return f'Network({self.role or "unnamed"}: {chain})'


def _init_std(specs: Sequence[LayerSpec], index: int) -> float:
    """
    fan-in scaled std: sqrt(2/in) if the layer feeds a relu/leaky-relu (possibly through a batch-norm), else sqrt(1/in).
    """
    in_dim = specs[index].in_dim
    for next_spec in specs[index + 1 :]:  # noqa: E203
        if next_spec.kind is LayerKind.BatchNorm:
            continue
        if next_spec.kind in RECTIFIER_KINDS:
            return float(np.sqrt(2.0 / in_dim))
        break
    return float(np.sqrt(1.0 / in_dim))


def init_network(specs: Sequence[LayerSpec], seed: int, *, role: str = '') -> Network:
    """
    create a network with seeded fan-in scaled gaussian weights, zero biases, and unit batch-norm scales.
    @param specs: the layers, input to output
    @param seed: a non-negative 64-bit seed. same (specs, seed) gives bit-identical networks
    @param role: the network's role name
    @return: the new network
    """
    specs = validate_chain(specs)
    if seed < 0:
        raise LocalMaxConfigurationException(f'The network seed must be non-negative, not {seed}.')

    rng = np.random.default_rng(seed)
    parameters: List[LayerTensors] = []
    buffers: List[LayerTensors] = []
    for index, spec in enumerate(specs):
        layer_parameters: LayerTensors = {}
        layer_buffers: LayerTensors = {}
        if spec.kind is LayerKind.Affine:
            std = _init_std(specs, index)
            layer_parameters['W'] = rng.normal(0.0, std, size=(spec.out_dim, spec.in_dim))
            layer_parameters['b'] = np.zeros(spec.out_dim)
        elif spec.kind is LayerKind.BatchNorm:
            layer_parameters['gamma'] = np.ones(spec.in_dim)
            layer_parameters['beta'] = np.zeros(spec.in_dim)
            layer_buffers['running_mean'] = np.zeros(spec.in_dim)
            layer_buffers['running_var'] = np.ones(spec.in_dim)
        parameters.append(layer_parameters)
        buffers.append(layer_buffers)

    return Network(specs, seed, parameters, buffers, role=role)


@dataclasses.dataclass
class ForwardTrace:
    """
    Everything backward() needs: the per-layer caches of a train-mode forward pass.
    """

    mode: ForwardMode
    network_id: int
    caches: List[LayerTensors]
    output: FloatArray


@dataclasses.dataclass
class GradientSet:
    """
    Gradients of a scalar w.r.t. every parameter (by name) and w.r.t. the input batch.
    """

    parameters: Dict[str, FloatArray]
    inputs: FloatArray

    def __add__(self, other: GradientSet) -> GradientSet:
        if set(self.parameters) != set(other.parameters):
            raise LocalMaxInternalException('Adding gradient sets of different networks.')
        return GradientSet(
            {name: grad + other.parameters[name] for name, grad in self.parameters.items()},
            self.inputs + other.inputs,
        )


def stable_sigmoid(x: FloatArray) -> FloatArray:
    positive = x >= 0
    exp_neg_abs = np.exp(-np.abs(x))
    return np.where(positive, 1.0 / (1.0 + exp_neg_abs), exp_neg_abs / (1.0 + exp_neg_abs))


def _layer_forward(
    spec: LayerSpec,
    parameters: LayerTensors,
    buffers: LayerTensors,
    x: FloatArray,
    mode: ForwardMode,
    update_stats: bool,
) -> Tuple[FloatArray, LayerTensors]:
    kind = spec.kind
    if kind is LayerKind.Affine:
        return x @ parameters['W'].T + parameters['b'], {'x': x}
    if kind is LayerKind.ReLU:
        return np.maximum(x, 0.0), {'positive': (x > 0).astype(np.float64)}
    if kind is LayerKind.LeakyReLU:
        positive = x > 0
        return np.where(positive, x, spec.slope * x), {'positive': positive.astype(np.float64)}
    if kind is LayerKind.Sigmoid:
        y = stable_sigmoid(x)
        return y, {'y': y}
    if kind is LayerKind.Tanh:
        y = np.tanh(x)
        return y, {'y': y}
    if kind is LayerKind.BatchNorm:
        gamma, beta = parameters['gamma'], parameters['beta']
        if ForwardMode.Eval == mode:
            x_hat = (x - buffers['running_mean']) / np.sqrt(buffers['running_var'] + BATCH_NORM_EPSILON)
            return gamma * x_hat + beta, {}
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        std = np.sqrt(var + BATCH_NORM_EPSILON)
        x_hat = (x - mean) / std
        if update_stats:
            buffers['running_mean'] = BATCH_NORM_MOMENTUM * buffers['running_mean'] + (1 - BATCH_NORM_MOMENTUM) * mean
            buffers['running_var'] = BATCH_NORM_MOMENTUM * buffers['running_var'] + (1 - BATCH_NORM_MOMENTUM) * var
        return gamma * x_hat + beta, {'x_hat': x_hat, 'std': std}
    raise LocalMaxInternalException(f'Unknown layer kind {kind}.')


def forward(
    net: Network, batch: FloatArray, mode: ForwardMode = ForwardMode.Eval, *, update_stats: bool = True
) -> ForwardTrace:
    """
    run the batch through the network.
    @param net: the network
    @param batch: [in]: n x in_dim matrix
    @param mode: eval mode uses the batch-norm running statistics and never mutates the network.
     train mode normalizes by the batch statistics
    @param update_stats: in train mode, whether to fold the batch statistics into the running statistics
     (False when the network is a frozen player)
    @return: the trace, holding the output and everything backward() needs
    """
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise LocalMaxConfigurationException(
            f'{net!r} expects batches with {net.input_dim} columns, got shape {batch.shape}.'
        )
    if ForwardMode.Train == mode and batch.shape[0] == 0 and net.has_batch_norm():
        raise LocalMaxConfigurationException('A train-mode forward through batch-norm needs a nonempty batch.')
    try:
        verify_finite(batch, 'The forward batch')
    except LocalMaxNumericInputException as e:
        raise LocalMaxNumericInputException(f'{e} ({net!r})') from e

    caches: List[LayerTensors] = []
    x = batch
    for spec, parameters, buffers in zip(net.specs, net.parameters, net.buffers):
        x, cache = _layer_forward(spec, parameters, buffers, x, mode, update_stats)
        caches.append(cache)

    return ForwardTrace(mode, id(net), caches, x)


def _layer_backward(
    spec: LayerSpec, parameters: LayerTensors, cache: LayerTensors, dy: FloatArray
) -> Tuple[FloatArray, LayerTensors]:
    kind = spec.kind
    if kind is LayerKind.Affine:
        return dy @ parameters['W'], {'W': dy.T @ cache['x'], 'b': dy.sum(axis=0)}
    if kind is LayerKind.ReLU:
        return dy * cache['positive'], {}
    if kind is LayerKind.LeakyReLU:
        positive = cache['positive']
        return dy * (positive + spec.slope * (1.0 - positive)), {}
    if kind is LayerKind.Sigmoid:
        y = cache['y']
        return dy * y * (1.0 - y), {}
    if kind is LayerKind.Tanh:
        y = cache['y']
        return dy * (1.0 - y * y), {}
    if kind is LayerKind.BatchNorm:
        x_hat, std = cache['x_hat'], cache['std']
        n = dy.shape[0]
        d_x_hat = dy * parameters['gamma']
        dx = (n * d_x_hat - d_x_hat.sum(axis=0) - x_hat * (d_x_hat * x_hat).sum(axis=0)) / (n * std)
        return dx, {'gamma': (dy * x_hat).sum(axis=0), 'beta': dy.sum(axis=0)}
    raise LocalMaxInternalException(f'Unknown layer kind {kind}.')


def backward(net: Network, trace: ForwardTrace, output_grad: FloatArray) -> GradientSet:
    """
    reverse-mode pass through the cached forward trace.
    @param net: the network that produced the trace
    @param trace: a train-mode trace of net
    @param output_grad: d(scalar)/d(output), same shape as trace.output
    @return: the gradients of every parameter and of the input batch
    """
    if trace.network_id != id(net) or len(trace.caches) != len(net.specs):
        raise LocalMaxInternalException(f'The forward trace was not produced by {net!r}, please report this bug.')
    if ForwardMode.Train != trace.mode:
        raise LocalMaxInternalException('backward() needs a train-mode forward trace, please report this bug.')
    if output_grad.shape != trace.output.shape:
        raise LocalMaxInternalException(
            f'Output gradient shape {output_grad.shape} != output shape {trace.output.shape}, please report this bug.'
        )

    gradients: Dict[str, FloatArray] = {}
    dy = output_grad
    for index in reversed(range(len(net.specs))):
        dy, layer_gradients = _layer_backward(net.specs[index], net.parameters[index], trace.caches[index], dy)
        for name, grad in layer_gradients.items():
            gradients[f'{index}.{name}'] = grad

    ordered = {name: gradients[name] for name, _ in net.named_parameters()}
    return GradientSet(ordered, dy)


def predict(net: Network, batch: FloatArray) -> FloatArray:
    """
    eval-mode forward, pure.
    @return: the output matrix
    """
    return forward(net, batch, ForwardMode.Eval).output


def zero_gradients(net: Network, batch_size: int) -> GradientSet:
    return GradientSet(
        {name: np.zeros_like(tensor) for name, tensor in net.named_parameters()}, np.zeros((batch_size, net.input_dim))
    )


def network_from_weights(
    weights: Sequence[Tuple[FloatArray, FloatArray]],
    activation: Optional[LayerKind] = LayerKind.ReLU,
    *,
    role: str = '',
) -> Network:
    """
    build an affine/activation chain from explicit (W, b) pairs, with an activation between affine layers.
    @param weights: (W, b) per affine layer, W shaped out x in
    @param activation: the activation kind placed between affine layers (None for a purely affine chain)
    @param role: the network's role name
    @return: the network (seed 0)
    """
    specs: List[LayerSpec] = []
    parameters: List[LayerTensors] = []
    for index, (w, b) in enumerate(weights):
        w = np.asarray(w, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64).reshape(-1)
        specs.append(LayerSpec(LayerKind.Affine, w.shape[1], w.shape[0]))
        parameters.append({'W': w.copy(), 'b': b.copy()})
        if activation is not None and index != len(weights) - 1:
            slope = LEAKY_RELU_DEFAULT_SLOPE if activation is LayerKind.LeakyReLU else 0.0
            specs.append(LayerSpec(activation, w.shape[0], w.shape[0], slope))
            parameters.append({})
    return Network(specs, 0, parameters, [{} for _ in specs], role=role)
