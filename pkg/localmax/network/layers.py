from __future__ import annotations

import dataclasses
from enum import Enum
from typing import Any, Dict, List, Sequence

from localmax.utils.constants import LEAKY_RELU_DEFAULT_SLOPE
from localmax.utils.exceptions import LocalMaxConfigurationException


class LayerKind(Enum):
    Affine = 'affine'
    ReLU = 'relu'
    LeakyReLU = 'leaky-relu'
    Sigmoid = 'sigmoid'
    Tanh = 'tanh'
    BatchNorm = 'batch-norm'

    def __str__(self) -> str:
        return self.value


ACTIVATION_KINDS = (LayerKind.ReLU, LayerKind.LeakyReLU, LayerKind.Sigmoid, LayerKind.Tanh)
RECTIFIER_KINDS = (LayerKind.ReLU, LayerKind.LeakyReLU)


@dataclasses.dataclass(frozen=True)
class LayerSpec:
    """
    A single layer in a dense feed-forward chain.
    @note slope is used by leaky-relu layers only.
    """

    kind: LayerKind
    in_dim: int
    out_dim: int
    slope: float = 0.0

    def __post_init__(self) -> None:
        if self.in_dim <= 0 or self.out_dim <= 0:
            raise LocalMaxConfigurationException(f'{self}: layer dimensions must be positive.')
        if self.kind is not LayerKind.Affine and self.in_dim != self.out_dim:
            raise LocalMaxConfigurationException(f'{self}: {self.kind} layers must have in_dim == out_dim.')
        if self.kind is LayerKind.LeakyReLU and not 0 < self.slope < 1:
            raise LocalMaxConfigurationException(f'{self}: leaky-relu slope must be in (0,1).')

    def __str__(self) -> str:
        if self.kind is LayerKind.LeakyReLU:
            return f'{self.kind}({self.slope})[{self.in_dim}->{self.out_dim}]'
        return f'{self.kind}[{self.in_dim}->{self.out_dim}]'

    def to_json(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'in_dim': self.in_dim, 'out_dim': self.out_dim, 'slope': self.slope}

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> LayerSpec:
        return LayerSpec(LayerKind(obj['kind']), int(obj['in_dim']), int(obj['out_dim']), float(obj['slope']))


def affine(in_dim: int, out_dim: int) -> LayerSpec:
    return LayerSpec(LayerKind.Affine, in_dim, out_dim)


def relu(dim: int) -> LayerSpec:
    return LayerSpec(LayerKind.ReLU, dim, dim)


def leaky_relu(dim: int, slope: float = LEAKY_RELU_DEFAULT_SLOPE) -> LayerSpec:
    return LayerSpec(LayerKind.LeakyReLU, dim, dim, slope)


def sigmoid(dim: int) -> LayerSpec:
    return LayerSpec(LayerKind.Sigmoid, dim, dim)


def tanh(dim: int) -> LayerSpec:
    return LayerSpec(LayerKind.Tanh, dim, dim)


def batch_norm(dim: int) -> LayerSpec:
    return LayerSpec(LayerKind.BatchNorm, dim, dim)


def validate_chain(specs: Sequence[LayerSpec]) -> List[LayerSpec]:
    """
    verify that the specs form a dimensionally consistent chain.
    @param specs: the layers, input to output
    @return: the specs as a list
    """
    if not specs:
        raise LocalMaxConfigurationException('A network needs at least one layer.')
    for index, (layer, next_layer) in enumerate(zip(specs, specs[1:])):
        if layer.out_dim != next_layer.in_dim:
            raise LocalMaxConfigurationException(
                f'Dimension mismatch between layer {index} {layer} and layer {index + 1} {next_layer}.'
            )
    return list(specs)
