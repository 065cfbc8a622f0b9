from __future__ import annotations

import dataclasses
from typing import Any, Dict, Tuple

import numpy as np

from localmax.network.network import GradientSet, Network
from localmax.utils.classes import FloatArray
from localmax.utils.constants import ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON, ADAM_LEARNING_RATE
from localmax.utils.exceptions import (
    LocalMaxConfigurationException,
    LocalMaxInternalException,
    LocalMaxNumericException,
)


@dataclasses.dataclass
class AdamState:
    """
    Per-parameter first/second moments (keyed by parameter name), the step counter, and the hyperparameters.
    """

    first_moments: Dict[str, FloatArray]
    second_moments: Dict[str, FloatArray]
    step: int = 0
    learning_rate: float = ADAM_LEARNING_RATE
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON

    def __post_init__(self) -> None:
        if self.step < 0:
            raise LocalMaxConfigurationException(f'Adam step counter must be non-negative, not {self.step}.')
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise LocalMaxConfigurationException('Adam learning rate and epsilon must be positive.')
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise LocalMaxConfigurationException(f'Adam betas must be in [0,1), got {self.beta1}, {self.beta2}.')

    def hyperparameters(self) -> Dict[str, Any]:
        return {
            'step': self.step,
            'learning_rate': self.learning_rate,
            'beta1': self.beta1,
            'beta2': self.beta2,
            'epsilon': self.epsilon,
        }


def init_adam(
    net: Network,
    *,
    learning_rate: float = ADAM_LEARNING_RATE,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    epsilon: float = ADAM_EPSILON,
) -> AdamState:
    """
    @return: zero moments shaped like net's parameters, step 0
    """
    return AdamState(
        {name: np.zeros_like(tensor) for name, tensor in net.named_parameters()},
        {name: np.zeros_like(tensor) for name, tensor in net.named_parameters()},
        0,
        learning_rate,
        beta1,
        beta2,
        epsilon,
    )


def _verify_gradients(net: Network, grads: GradientSet, state: AdamState) -> None:
    for name, tensor in net.named_parameters():
        if name not in grads.parameters or name not in state.first_moments:
            raise LocalMaxInternalException(
                f'Missing gradient or moment for {name} of {net!r}, please report this bug.'
            )
        if grads.parameters[name].shape != tensor.shape or state.first_moments[name].shape != tensor.shape:
            raise LocalMaxInternalException(
                f'Gradient shape {grads.parameters[name].shape} for {name} of {net!r} '
                f'does not match the parameter shape {tensor.shape}, please report this bug.'
            )
        if not np.all(np.isfinite(grads.parameters[name])):
            raise LocalMaxNumericException(
                f'Non-finite gradient for parameter {name} of {net!r} at adam step {state.step + 1} '
                f'(max |finite grad| = {np.max(np.abs(np.nan_to_num(grads.parameters[name]))):.3e}).'
            )


def adam_step(net: Network, grads: GradientSet, state: AdamState) -> Tuple[Network, AdamState]:
    """
    a single bias-corrected adam update, in place.
    @param net: [in,out]: the network whose parameters are updated
    @param grads: the parameters' gradients (the input gradients are ignored)
    @param state: [in,out]: the optimizer state of this network
    @return: the updated network and state (the same objects)
    """
    _verify_gradients(net, grads, state)

    state.step += 1
    first_correction = 1.0 - state.beta1**state.step
    second_correction = 1.0 - state.beta2**state.step

    for index, tensors in enumerate(net.parameters):
        for key in tensors:
            name = f'{index}.{key}'
            grad = grads.parameters[name]
            m = state.beta1 * state.first_moments[name] + (1.0 - state.beta1) * grad
            v = state.beta2 * state.second_moments[name] + (1.0 - state.beta2) * grad * grad
            state.first_moments[name] = m
            state.second_moments[name] = v
            m_hat = m / first_correction
            v_hat = v / second_correction
            tensors[key] = tensors[key] - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)

    return net, state
