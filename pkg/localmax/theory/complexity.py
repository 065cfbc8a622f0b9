from __future__ import annotations

import dataclasses
import math
from typing import Any, Callable, Dict, List, Union

import numpy as np

from localmax.models.model_suite import QuadModel, classifier_scores, comparator_unary_batch
from localmax.network.layers import LayerKind
from localmax.network.network import Network, predict
from localmax.utils.classes import FloatArray
from localmax.utils.constants import (
    DECISION_THRESHOLD,
    MARGIN_DEFAULT_SAMPLES,
    MARGIN_MIN_SAMPLES,
    POWER_ITERATION_MAX_ITERATIONS,
    POWER_ITERATION_TOLERANCE,
)
from localmax.utils.exceptions import LocalMaxConfigurationException, LocalMaxTheoryException


ScalarFunction = Callable[[FloatArray], FloatArray]
Scorer = Union[Network, ScalarFunction]


def spectral_norm(
    w: FloatArray,
    *,
    tolerance: float = POWER_ITERATION_TOLERANCE,
    max_iterations: int = POWER_ITERATION_MAX_ITERATIONS,
) -> float:
    """
    the largest singular value of w, by power iteration:
        u <- W v / |W v|,  v <- W^T u / |W^T u|,  sigma = u^T W v
    until sigma's relative change drops below the tolerance.
    @note falls back to an exact svd if the iteration did not converge.
    """
    matrix = np.asarray(w, dtype=np.float64)
    if matrix.ndim != 2:
        raise LocalMaxTheoryException(f'The spectral norm needs a matrix, got shape {matrix.shape}.')
    if not np.any(matrix):
        raise LocalMaxTheoryException(f'The spectral norm of a zero {matrix.shape} matrix is 0.')

    v = np.random.default_rng(0).standard_normal(matrix.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iterations):
        u = matrix @ v
        u_norm = np.linalg.norm(u)
        if u_norm == 0:
            break
        u /= u_norm
        v = matrix.T @ u
        v_norm = np.linalg.norm(v)
        if v_norm == 0:
            break
        v /= v_norm
        previous, sigma = sigma, float(u @ matrix @ v)
        if abs(sigma - previous) <= tolerance * sigma:
            return sigma

    return float(np.linalg.svd(matrix, compute_uv=False)[0])


def _affine_weights(net: Network) -> List[FloatArray]:
    weights = net.affine_weights()
    if not weights:
        raise LocalMaxTheoryException(f'{net!r} has no affine layers.')
    return weights


def spectral_complexity(net: Network) -> float:
    """
    C = prod_i |W_i|_2^2 * sum_i |W_i|_F^2 / |W_i|_2^2, over the affine layers' weights.
    biases and batch-norm parameters are not counted.
    @raise LocalMaxTheoryException: on a zero weight matrix
    """
    weights = _affine_weights(net)
    squared_norms = [spectral_norm(w) ** 2 for w in weights]
    ratios = sum(float(np.sum(w * w)) / norm for w, norm in zip(weights, squared_norms))
    return float(np.prod(squared_norms)) * ratios


@dataclasses.dataclass
class MarginRiskConfig:
    """
    gamma1: the margin by which x must beat its neighborhood under v.
    gamma2: the margin by which f(x) must be positive.
    epsilon: the neighborhood (ball) radius. samples: the points sampled per neighborhood.
    domain_radius: the radius B of the input domain, used by the bound proxy.
    """

    gamma1: float
    gamma2: float
    epsilon: float
    samples: int = MARGIN_DEFAULT_SAMPLES
    domain_radius: float = 1.0

    def __post_init__(self) -> None:
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise LocalMaxConfigurationException(f'The margins must be non-negative ({self.gamma1}, {self.gamma2}).')
        if self.epsilon <= 0:
            raise LocalMaxConfigurationException(f'The neighborhood radius must be positive, not {self.epsilon}.')
        if self.samples < MARGIN_MIN_SAMPLES:
            raise LocalMaxConfigurationException(
                f'At least {MARGIN_MIN_SAMPLES} neighborhood samples are needed, not {self.samples}.'
            )
        if self.domain_radius <= 0:
            raise LocalMaxConfigurationException(f'The domain radius must be positive, not {self.domain_radius}.')

    def to_json(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def network_function(net: Network) -> ScalarFunction:
    """
    @return: x (n x d) -> the network's single output per point (eval mode)
    """
    if net.output_dim != 1:
        raise LocalMaxTheoryException(f'{net!r} does not have a single output.')
    return lambda points: predict(net, points)[:, 0]


def _as_function(scorer: Scorer) -> ScalarFunction:
    return network_function(scorer) if isinstance(scorer, Network) else scorer


def model_value_function(model: QuadModel) -> ScalarFunction:
    """
    the comparator on two replicas, h(x, x), as the value function v.
    """
    h = model.require('h')
    return lambda points: comparator_unary_batch(h, points)


def model_decision_function(model: QuadModel) -> ScalarFunction:
    """
    c(x) - 0.5 as the classifier f, positive exactly where c accepts x.
    """
    c = model.require('c')
    return lambda points: classifier_scores(c, points) - DECISION_THRESHOLD


def ball_samples(center: FloatArray, epsilon: float, count: int, rng: np.random.Generator) -> FloatArray:
    """
    @return: count points uniform in the epsilon ball around the center (uniform direction, radius eps*U^(1/d))
    """
    d = center.shape[0]
    directions = rng.standard_normal((count, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = epsilon * rng.random(count) ** (1.0 / d)
    return center + radii[:, None] * directions


def margin_losses(v: Scorer, f: Scorer, data: FloatArray, cfg: MarginRiskConfig, seed: int) -> FloatArray:
    """
    the margin loss per point: 1 if v(x) < max_u v(u) + gamma1 over the sampled neighborhood u != x,
    or if f(x) - gamma2 <= 0. 0 otherwise.
    the neighborhood of point i is drawn from default_rng([seed, i]).
    """
    points = np.asarray(data, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.ndim != 2 or points.shape[0] == 0:
        raise LocalMaxTheoryException(f'The margin risk needs a nonempty data matrix, got shape {points.shape}.')
    value, decision = _as_function(v), _as_function(f)

    neighborhoods = np.concatenate(
        [
            ball_samples(point, cfg.epsilon, cfg.samples, np.random.default_rng([seed, index]))
            for index, point in enumerate(points)
        ]
    )
    neighborhood_max = value(neighborhoods).reshape(len(points), cfg.samples).max(axis=1)
    not_dominant = value(points) < neighborhood_max + cfg.gamma1
    not_accepted = decision(points) - cfg.gamma2 <= 0
    return (not_dominant | not_accepted).astype(np.float64)


def margin_empirical_risk(v: Scorer, f: Scorer, data: FloatArray, cfg: MarginRiskConfig, seed: int = 0) -> float:
    """
    the empirical margin risk: the fraction of points that are not gamma1-dominant local maxima of v
    inside their epsilon neighborhood, or not accepted by f with margin gamma2.
    @param v: the value function (a single-output network or a callable on n x d matrices)
    @param f: the classifier (same forms); a point is accepted when f(x) > gamma2
    @param data: n x d (or a vector of 1-d points)
    @param cfg: the margins and the neighborhood
    @param seed: the neighborhood sampling seed
    @return: the risk, in [0,1]; non-decreasing in gamma1 and gamma2
    @note the neighborhood excludes x and is a finite sample of cfg.samples points. the risk depends on that
     sample size: for a continuous v and any gamma1 > 0 it tends to 1 as the sample size grows.
    """
    return float(margin_losses(v, f, data, cfg, seed).mean())


@dataclasses.dataclass
class NetworkShape:
    """
    depth: the number of affine layers. width: the widest layer, inputs and outputs included.
    """

    depth: int
    width: int
    complexity: float

    @staticmethod
    def of(net: Network) -> NetworkShape:
        affine_specs = [spec for spec in net.specs if spec.kind is LayerKind.Affine]
        width = max(max(spec.in_dim, spec.out_dim) for spec in affine_specs) if affine_specs else 0
        return NetworkShape(len(affine_specs), width, spectral_complexity(net))

    def penalty_term(self, gamma: float) -> float:
        """
        r^2 q log(r q) C / gamma^2
        """
        r, q = self.depth, self.width
        return r * r * q * math.log(r * q) * self.complexity / gamma**2


def bound_penalty_terms(v_net: Network, f_net: Network, gamma1: float, gamma2: float) -> Dict[str, float]:
    """
    @return: the network terms of the bound, {'v': ..., 'f': ...}
    """
    if gamma1 <= 0 or gamma2 <= 0:
        raise LocalMaxTheoryException(f'The bound needs positive margins, got gamma1={gamma1}, gamma2={gamma2}.')
    return {'v': NetworkShape.of(v_net).penalty_term(gamma1), 'f': NetworkShape.of(f_net).penalty_term(gamma2)}


def bound_penalty_proxy(
    v_net: Network, f_net: Network, domain_radius: float, gamma1: float, gamma2: float, m: int, delta: float
) -> float:
    """
    the generalization gap term of the margin bound, with its unknown constant set to 1:
        sqrt(B^2 [r^2 q1 log(r q1) C(v) / gamma1^2 + s^2 q2 log(s q2) C(f) / gamma2^2] + log(m / delta)) / sqrt(m)
    r, s are the depths and q1, q2 the widths of v and f. a proxy for comparing networks, not a numeric bound.
    @param v_net: the value network
    @param f_net: the classifier network
    @param domain_radius: B
    @param gamma1: the value margin, positive
    @param gamma2: the classifier margin, positive
    @param m: the sample size, at least 2
    @param delta: the confidence parameter, in (0,1)
    @return: the proxy
    """
    if m < 2:
        raise LocalMaxTheoryException(f'The bound needs a sample size of at least 2, not {m}.')
    if not 0 < delta < 1:
        raise LocalMaxTheoryException(f'The confidence parameter must be in (0,1), not {delta}.')
    if domain_radius <= 0:
        raise LocalMaxTheoryException(f'The domain radius must be positive, not {domain_radius}.')
    terms = bound_penalty_terms(v_net, f_net, gamma1, gamma2)
    return math.sqrt(domain_radius**2 * (terms['v'] + terms['f']) + math.log(m / delta)) / math.sqrt(m)
