from __future__ import annotations

import dataclasses
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np

from localmax.data.dataset import Standardization
from localmax.network.layers import LayerSpec, affine, batch_norm, leaky_relu, sigmoid, tanh
from localmax.network.network import Network, init_network, predict
from localmax.utils.classes import FloatArray
from localmax.utils.constants import LEAKY_RELU_DEFAULT_SLOPE
from localmax.utils.exceptions import LocalMaxConfigurationException, LocalMaxEvaluationException


class Role(Enum):
    Classifier = 'classifier'
    Comparator = 'comparator'
    Generator = 'generator'


class GeneratorOutput(Enum):
    Tanh = 'tanh'
    Identity = 'identity'


def _block(in_dim: int, out_dim: int, use_batch_norm: bool, slope: float) -> List[LayerSpec]:
    specs = [affine(in_dim, out_dim)]
    if use_batch_norm:
        specs.append(batch_norm(out_dim))
    specs.append(leaky_relu(out_dim, slope))
    return specs


def model_specs(
    role: Role,
    d: int,
    hidden: Sequence[int],
    use_batch_norm: bool,
    *,
    slope: float = LEAKY_RELU_DEFAULT_SLOPE,
    generator_output: GeneratorOutput = GeneratorOutput.Tanh,
) -> List[LayerSpec]:
    """
    the layer chain of a role: fc [+ batch-norm] + leaky-relu blocks, then the role's head.
    classifier: d -> hidden... -> 1 -> sigmoid. comparator: the same from 2d (the concatenation [a; b]).
    generator: encoder d -> hidden..., mirrored decoder back to d, ending in tanh (or identity).
    """
    if d < 1:
        raise LocalMaxConfigurationException(f'The input dimension must be positive, not {d}.')
    if not hidden:
        raise LocalMaxConfigurationException(f'The {role.value} needs a nonempty hidden layers list.')
    if any(width < 1 for width in hidden):
        raise LocalMaxConfigurationException(f'Hidden layer widths must be positive, got {list(hidden)}.')

    specs: List[LayerSpec] = []
    if Role.Generator == role:
        widths = [d] + list(hidden) + list(reversed(hidden[:-1]))
        for in_dim, out_dim in zip(widths, widths[1:]):
            specs += _block(in_dim, out_dim, use_batch_norm, slope)
        specs.append(affine(widths[-1], d))
        if GeneratorOutput.Tanh == generator_output:
            specs.append(tanh(d))
        return specs

    widths = [2 * d if Role.Comparator == role else d] + list(hidden)
    for in_dim, out_dim in zip(widths, widths[1:]):
        specs += _block(in_dim, out_dim, use_batch_norm, slope)
    specs += [affine(widths[-1], 1), sigmoid(1)]
    return specs


def build_model(
    role: Role,
    d: int,
    hidden: Sequence[int],
    use_batch_norm: bool,
    seed: int,
    *,
    slope: float = LEAKY_RELU_DEFAULT_SLOPE,
    generator_output: GeneratorOutput = GeneratorOutput.Tanh,
) -> Network:
    """
    build one of the role-specific networks.
    @param role: classifier (c), comparator (h, two inputs) or generator (G_c / G_h)
    @param d: the data dimension
    @param hidden: the hidden widths (the generator's encoder widths; its decoder mirrors them)
    @param use_batch_norm: add a batch-norm after every hidden fc layer
    @param seed: the initialization seed
    @param slope: the leaky-relu slope
    @param generator_output: the generator's output activation
    @return: the initialized network
    """
    specs = model_specs(role, d, hidden, use_batch_norm, slope=slope, generator_output=generator_output)
    return init_network(specs, seed, role=role.value)


@dataclasses.dataclass
class QuadModel:
    """
    The four co-trained networks. Ablation variants leave the untrained players as None.
    """

    input_dim: int
    c: Optional[Network] = None
    h: Optional[Network] = None
    g_c: Optional[Network] = None
    g_h: Optional[Network] = None
    config_hash: str = ''
    standardization: Optional[Standardization] = None

    def __post_init__(self) -> None:
        expected = {
            'c': (self.input_dim, 1),
            'h': (2 * self.input_dim, 1),
            'g_c': (self.input_dim, self.input_dim),
            'g_h': (self.input_dim, self.input_dim),
        }
        for name, net in self.networks().items():
            if (net.input_dim, net.output_dim) != expected[name]:
                raise LocalMaxConfigurationException(
                    f'{name} maps {net.input_dim}->{net.output_dim}, expected {expected[name][0]}->{expected[name][1]}.'
                )

    def networks(self) -> Dict[str, Network]:
        """
        @return: the present networks, by name, in the order c, h, g_c, g_h
        """
        named = {'c': self.c, 'h': self.h, 'g_c': self.g_c, 'g_h': self.g_h}
        return {name: net for name, net in named.items() if net is not None}

    def parameters_hash(self) -> str:
        return '|'.join(f'{name}:{net.state_hash()}' for name, net in self.networks().items())

    def require(self, name: str) -> Network:
        net = self.networks().get(name)
        if net is None:
            raise LocalMaxEvaluationException(f'This model has no {name} network (trained as an ablation variant?).')
        return net


def _as_vector(x: FloatArray, d: int, what: str) -> FloatArray:
    vector = np.asarray(x, dtype=np.float64).reshape(-1)
    if vector.shape != (d,):
        raise LocalMaxConfigurationException(f'{what} must be a vector of dimension {d}, got shape {np.shape(x)}.')
    return vector


def _comparator_dim(h: Network) -> int:
    if h.input_dim % 2 != 0 or h.output_dim != 1:
        raise LocalMaxConfigurationException(f'{h!r} is not a comparator (2d -> 1).')
    return h.input_dim // 2


def comparator_apply_batch(h: Network, a: FloatArray, b: FloatArray) -> FloatArray:
    """
    @param h: the comparator
    @param a: n x d
    @param b: n x d
    @return: length n vector of h([a_i; b_i]) (eval mode), the probability that v(a_i) >= v(b_i)
    """
    d = _comparator_dim(h)
    if a.ndim != 2 or a.shape != b.shape or a.shape[1] != d:
        raise LocalMaxConfigurationException(f'Comparator inputs must both be n x {d}, got {a.shape} and {b.shape}.')
    return predict(h, np.concatenate([a, b], axis=1))[:, 0]


def comparator_apply(h: Network, a: FloatArray, b: FloatArray) -> float:
    """
    h on the concatenation [a; b]. no symmetry between (a, b) and (b, a) is enforced.
    """
    d = _comparator_dim(h)
    a_vector = _as_vector(a, d, 'The first comparator input')
    b_vector = _as_vector(b, d, 'The second comparator input')
    return float(comparator_apply_batch(h, a_vector.reshape(1, d), b_vector.reshape(1, d))[0])


def comparator_unary(h: Network, x: FloatArray) -> float:
    return comparator_apply(h, x, x)


def comparator_unary_batch(h: Network, points: FloatArray) -> FloatArray:
    return comparator_apply_batch(h, points, points)


def classifier_scores(c: Network, points: FloatArray) -> FloatArray:
    """
    @return: length n vector of c(x) (eval mode)
    """
    return predict(c, points)[:, 0]


def generate(g: Network, points: FloatArray) -> FloatArray:
    return predict(g, points)
