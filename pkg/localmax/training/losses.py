"""
The training objectives, with per-player gradients.

For a batch x_1..x_m, a generator G and its negatives x'_i = G(x_i):
    loss_C  = mean l(c(x),+1) + mean l(c(x'),-1) * l(h(x',x),-1)                               (x' from G_c)
    loss_H  = mean l(h(x,x),+1) + mean l(c(x'),-1) * l(h(x',x),-1) [+ mean l(c(x'),-1) * l(h(x,x'),+1)]  (x' from G_h)
    loss_Gc = -(product term of loss_C)
    loss_Gh = lambda * mean ||x - x'|| - loss_H
An absent c (h) replaces its factor in the product terms by the constant 1.

Each player's gradient flows only into its own parameters: discriminators see the negatives as constants,
generators get d loss / d x' through the frozen c and h.
"""

from __future__ import annotations

import dataclasses
from typing import Dict, Optional, Tuple

import numpy as np

from localmax.network.network import ForwardTrace, GradientSet, Network, backward, forward
from localmax.utils.classes import FloatArray, ForwardMode
from localmax.utils.constants import PROBABILITY_CLAMP
from localmax.utils.exceptions import LocalMaxConfigurationException


@dataclasses.dataclass
class LossBreakdown:
    """
    A loss value and its parts.
    loss_C / loss_H: total = positive_term + product_term + symmetric_term.
    loss_Gc: total = -product_term.
    loss_Gh: total = lam * distance_term - (positive_term + product_term + symmetric_term).
    """

    total: float
    positive_term: float = 0.0
    product_term: float = 0.0
    distance_term: float = 0.0
    symmetric_term: float = 0.0

    def parts(self) -> Dict[str, float]:
        return {
            'positive_term': self.positive_term,
            'product_term': self.product_term,
            'distance_term': self.distance_term,
            'symmetric_term': self.symmetric_term,
        }

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite([self.total, *self.parts().values()])))


def clamp_probability(p: FloatArray) -> FloatArray:
    return np.clip(p, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)


def _verify_label(y: int) -> None:
    if y not in (-1, 1):
        raise LocalMaxConfigurationException(f'Binary cross entropy labels are -1 or +1, not {y}.')


def bce(p: FloatArray, y: int) -> FloatArray:
    """
    l(p, y) = -((y+1) log p + (1-y) log(1-p)) / 2, on the clamped probability.
    """
    _verify_label(y)
    clamped = clamp_probability(np.asarray(p, dtype=np.float64))
    return -np.log(clamped) if y == 1 else -np.log1p(-clamped)


def bce_derivative(p: FloatArray, y: int) -> FloatArray:
    """
    d l(p, y) / d p. zero where the clamp is active.
    """
    _verify_label(y)
    p = np.asarray(p, dtype=np.float64)
    inside = (p >= PROBABILITY_CLAMP) & (p <= 1.0 - PROBABILITY_CLAMP)
    clamped = clamp_probability(p)
    derivative = -1.0 / clamped if y == 1 else 1.0 / (1.0 - clamped)
    return np.where(inside, derivative, 0.0)


def _verify_batch(batch: FloatArray) -> int:
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise LocalMaxConfigurationException(f'Losses need a nonempty batch matrix, got shape {batch.shape}.')
    return batch.shape[0]


def _column(x: FloatArray) -> FloatArray:
    return x.reshape(-1, 1)


class _ProductPass:
    """
    Forward passes of the product terms for one batch and its negatives, and their gradients.
        product   = mean a * b,   a = l(c(x'),-1),  b = l(h(x',x),-1)
        symmetric = mean a * s,   s = l(h(x,x'),+1)
    """

    def __init__(
        self,
        batch: FloatArray,
        negatives: FloatArray,
        c: Optional[Network],
        h: Optional[Network],
        *,
        symmetric: bool,
        trained: Optional[Network],
    ):
        self.batch = batch
        self.negatives = negatives
        self.c = c
        self.h = h
        self.symmetric = symmetric
        self.m = batch.shape[0]
        self.d = batch.shape[1]
        ones = np.ones(self.m)

        self.c_trace: Optional[ForwardTrace] = None
        self.a, self.da = ones, np.zeros(self.m)
        if c is not None:
            self.c_trace = forward(c, negatives, ForwardMode.Train, update_stats=c is trained)
            q = self.c_trace.output[:, 0]
            self.a, self.da = bce(q, -1), bce_derivative(q, -1)

        self.h_trace: Optional[ForwardTrace] = None
        self.h_swapped_trace: Optional[ForwardTrace] = None
        self.b, self.db = ones, np.zeros(self.m)
        self.s, self.ds = ones, np.zeros(self.m)
        if h is not None:
            self.h_trace = forward(
                h, np.concatenate([negatives, batch], axis=1), ForwardMode.Train, update_stats=h is trained
            )
            r = self.h_trace.output[:, 0]
            self.b, self.db = bce(r, -1), bce_derivative(r, -1)
            if symmetric:
                self.h_swapped_trace = forward(
                    h, np.concatenate([batch, negatives], axis=1), ForwardMode.Train, update_stats=h is trained
                )
                r_swapped = self.h_swapped_trace.output[:, 0]
                self.s, self.ds = bce(r_swapped, 1), bce_derivative(r_swapped, 1)

        self.product_term = float(np.mean(self.a * self.b))
        self.symmetric_term = float(np.mean(self.a * self.s)) if symmetric else 0.0

    def _weight_on_a(self) -> FloatArray:
        weight = self.b.copy()
        if self.symmetric:
            weight += self.s
        return weight / self.m

    def c_gradients(self, sign: float) -> GradientSet:
        """
        gradient of sign * (product [+ symmetric]) w.r.t. c (its parameters and its input x').
        """
        assert self.c is not None and self.c_trace is not None
        output_grad = sign * _column(self._weight_on_a() * self.da)
        return backward(self.c, self.c_trace, output_grad)

    def h_gradients(self, sign: float) -> Tuple[GradientSet, Optional[GradientSet]]:
        """
        gradients of sign * (product [+ symmetric]) w.r.t. h, through h(x',x) and h(x,x').
        """
        assert self.h is not None and self.h_trace is not None
        straight = backward(self.h, self.h_trace, sign * _column(self.a * self.db / self.m))
        swapped = None
        if self.h_swapped_trace is not None:
            swapped = backward(self.h, self.h_swapped_trace, sign * _column(self.a * self.ds / self.m))
        return straight, swapped

    def negatives_gradient(self, sign: float) -> FloatArray:
        """
        d (sign * (product [+ symmetric])) / d x', through the frozen c and h.
        """
        gradient = np.zeros_like(self.negatives)
        if self.c is not None:
            gradient += self.c_gradients(sign).inputs
        if self.h is not None:
            straight, swapped = self.h_gradients(sign)
            gradient += straight.inputs[:, : self.d]  # noqa: E203
            if swapped is not None:
                gradient += swapped.inputs[:, self.d :]  # noqa: E203
        return gradient


def _generate(g: Network, batch: FloatArray, trained: Optional[Network]) -> ForwardTrace:
    return forward(g, batch, ForwardMode.Train, update_stats=g is trained)


def _positive_classifier_pass(c: Network, batch: FloatArray, trained: Optional[Network]) -> Tuple[ForwardTrace, float]:
    trace = forward(c, batch, ForwardMode.Train, update_stats=c is trained)
    return trace, float(np.mean(bce(trace.output[:, 0], 1)))


def _positive_comparator_pass(h: Network, batch: FloatArray, trained: Optional[Network]) -> Tuple[ForwardTrace, float]:
    trace = forward(h, np.concatenate([batch, batch], axis=1), ForwardMode.Train, update_stats=h is trained)
    return trace, float(np.mean(bce(trace.output[:, 0], 1)))


def _distance(batch: FloatArray, negatives: FloatArray) -> Tuple[float, FloatArray]:
    """
    @return: mean ||x - x'||, and its gradient w.r.t. x' (zero where x' == x)
    """
    difference = negatives - batch
    norms = np.linalg.norm(difference, axis=1)
    safe_norms = np.where(norms > 0, norms, 1.0)
    gradient = np.where(_column(norms) > 0, difference / _column(safe_norms), 0.0) / batch.shape[0]
    return float(np.mean(norms)), gradient


# loss values


def loss_C(batch: FloatArray, c: Network, h: Optional[Network], g_c: Network) -> LossBreakdown:
    """
    the classifier loss (h=None drops the comparator factor).
    """
    _verify_batch(batch)
    _, positive = _positive_classifier_pass(c, batch, None)
    negatives = _generate(g_c, batch, None).output
    product_pass = _ProductPass(batch, negatives, c, h, symmetric=False, trained=None)
    return LossBreakdown(positive + product_pass.product_term, positive, product_pass.product_term)


def loss_H(
    batch: FloatArray, c: Optional[Network], h: Network, g_h: Network, symmetric: bool = False
) -> LossBreakdown:
    """
    the comparator loss (c=None drops the classifier factor).
    """
    _verify_batch(batch)
    _, positive = _positive_comparator_pass(h, batch, None)
    negatives = _generate(g_h, batch, None).output
    product_pass = _ProductPass(batch, negatives, c, h, symmetric=symmetric, trained=None)
    total = positive + product_pass.product_term + product_pass.symmetric_term
    return LossBreakdown(total, positive, product_pass.product_term, 0.0, product_pass.symmetric_term)


def loss_Gc(batch: FloatArray, c: Network, h: Optional[Network], g_c: Network) -> float:
    _verify_batch(batch)
    negatives = _generate(g_c, batch, None).output
    return -_ProductPass(batch, negatives, c, h, symmetric=False, trained=None).product_term


def loss_Gh(
    batch: FloatArray,
    c: Optional[Network],
    h: Network,
    g_h: Network,
    lam: float,
    symmetric: bool = False,
) -> LossBreakdown:
    """
    lam * mean ||x - G_h(x)|| - loss_H. the value includes loss_H's positive term, which has no G_h gradient.
    """
    if lam < 0:
        raise LocalMaxConfigurationException(f'lambda must be non-negative, not {lam}.')
    breakdown = loss_H(batch, c, h, g_h, symmetric)
    distance, _ = _distance(batch, _generate(g_h, batch, None).output)
    total = lam * distance - breakdown.total
    return LossBreakdown(total, breakdown.positive_term, breakdown.product_term, distance, breakdown.symmetric_term)


# per-player gradients: (value, gradients of the player's parameters). the player's running statistics update.


def loss_C_gradients(
    batch: FloatArray, c: Network, h: Optional[Network], g_c: Network
) -> Tuple[LossBreakdown, GradientSet]:
    _verify_batch(batch)
    m = batch.shape[0]
    negatives = _generate(g_c, batch, None).output
    positive_trace, positive = _positive_classifier_pass(c, batch, c)
    product_pass = _ProductPass(batch, negatives, c, h, symmetric=False, trained=c)

    positive_grads = backward(c, positive_trace, _column(bce_derivative(positive_trace.output[:, 0], 1) / m))
    gradients = positive_grads + _negatives_inputs_dropped(product_pass.c_gradients(1.0), positive_grads)
    breakdown = LossBreakdown(positive + product_pass.product_term, positive, product_pass.product_term)
    return breakdown, gradients


def loss_H_gradients(
    batch: FloatArray, c: Optional[Network], h: Network, g_h: Network, symmetric: bool = False
) -> Tuple[LossBreakdown, GradientSet]:
    _verify_batch(batch)
    m = batch.shape[0]
    negatives = _generate(g_h, batch, None).output
    positive_trace, positive = _positive_comparator_pass(h, batch, h)
    product_pass = _ProductPass(batch, negatives, c, h, symmetric=symmetric, trained=h)

    gradients = backward(h, positive_trace, _column(bce_derivative(positive_trace.output[:, 0], 1) / m))
    straight, swapped = product_pass.h_gradients(1.0)
    gradients = gradients + straight
    if swapped is not None:
        gradients = gradients + swapped
    total = positive + product_pass.product_term + product_pass.symmetric_term
    return LossBreakdown(total, positive, product_pass.product_term, 0.0, product_pass.symmetric_term), gradients


def loss_Gc_gradients(
    batch: FloatArray, c: Network, h: Optional[Network], g_c: Network
) -> Tuple[LossBreakdown, GradientSet]:
    _verify_batch(batch)
    generator_trace = _generate(g_c, batch, g_c)
    product_pass = _ProductPass(batch, generator_trace.output, c, h, symmetric=False, trained=g_c)
    gradients = backward(g_c, generator_trace, product_pass.negatives_gradient(-1.0))
    return LossBreakdown(-product_pass.product_term, 0.0, product_pass.product_term), gradients


def loss_Gh_gradients(
    batch: FloatArray,
    c: Optional[Network],
    h: Network,
    g_h: Network,
    lam: float,
    symmetric: bool = False,
) -> Tuple[LossBreakdown, GradientSet]:
    if lam < 0:
        raise LocalMaxConfigurationException(f'lambda must be non-negative, not {lam}.')
    _verify_batch(batch)
    generator_trace = _generate(g_h, batch, g_h)
    negatives = generator_trace.output
    _, positive = _positive_comparator_pass(h, batch, g_h)
    product_pass = _ProductPass(batch, negatives, c, h, symmetric=symmetric, trained=g_h)
    distance, distance_gradient = _distance(batch, negatives)

    negatives_gradient = lam * distance_gradient + product_pass.negatives_gradient(-1.0)
    gradients = backward(g_h, generator_trace, negatives_gradient)
    total = lam * distance - (positive + product_pass.product_term + product_pass.symmetric_term)
    breakdown = LossBreakdown(total, positive, product_pass.product_term, distance, product_pass.symmetric_term)
    return breakdown, gradients


def _negatives_inputs_dropped(gradients: GradientSet, like: GradientSet) -> GradientSet:
    """
    c's input gradient on x' has another batch than its input gradient on x; keep the parameters part only.
    """
    return GradientSet(gradients.parameters, np.zeros_like(like.inputs))
