from __future__ import annotations

from typing import Callable, Tuple

import numpy as np

from localmax.network.network import Network, backward, forward
from localmax.utils.classes import FloatArray, ForwardMode
from localmax.utils.constants import FINITE_DIFFERENCE_STEP


# maps a network output matrix to (scalar loss, d loss / d output)
LossFunction = Callable[[FloatArray], Tuple[float, FloatArray]]


def relative_error(analytic: FloatArray, numeric: FloatArray) -> float:
    """
    @return: max over entries of |analytic - numeric| / max(1, |analytic|, |numeric|)
    """
    if analytic.size == 0:
        return 0.0
    scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / scale))


def finite_difference_gradient(
    scalar_function: Callable[[], float], array: FloatArray, *, step: float = FINITE_DIFFERENCE_STEP
) -> FloatArray:
    """
    central finite differences of a scalar function w.r.t. every entry of array.
    @param scalar_function: re-evaluates the scalar (reads array)
    @param array: [in,out]: perturbed in place, restored entry by entry
    @param step: the perturbation
    @return: the numeric gradient, shaped like array
    """
    gradient = np.zeros_like(array)
    flat = array.reshape(-1)
    flat_gradient = gradient.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        plus = scalar_function()
        flat[i] = original - step
        minus = scalar_function()
        flat[i] = original
        flat_gradient[i] = (plus - minus) / (2 * step)
    return gradient


def grad_check(
    net: Network, loss_fn: LossFunction, batch: FloatArray, *, step: float = FINITE_DIFFERENCE_STEP
) -> float:
    """
    compare backward() against central finite differences, over every parameter and the input batch.
    the forward passes are train-mode without running-statistics updates, so they are repeatable.
    @param net: the network (its parameters are perturbed and restored)
    @param loss_fn: output -> (loss, d loss / d output)
    @param batch: the input batch (keep it away from relu kinks)
    @param step: the finite difference step
    @return: the worst relative error
    """
    batch = np.array(batch, dtype=np.float64)

    def loss_value() -> float:
        return loss_fn(forward(net, batch, ForwardMode.Train, update_stats=False).output)[0]

    trace = forward(net, batch, ForwardMode.Train, update_stats=False)
    _, output_grad = loss_fn(trace.output)
    analytic = backward(net, trace, output_grad)

    worst = 0.0
    for name, tensor in net.named_parameters():
        numeric = finite_difference_gradient(loss_value, tensor, step=step)
        worst = max(worst, relative_error(analytic.parameters[name], numeric))

    numeric_inputs = finite_difference_gradient(loss_value, batch, step=step)
    return max(worst, relative_error(analytic.inputs, numeric_inputs))
