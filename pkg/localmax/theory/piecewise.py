from __future__ import annotations

import dataclasses
from enum import Enum
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np

from localmax.network.layers import LayerKind
from localmax.network.network import Network, network_from_weights, predict
from localmax.utils.classes import FloatArray
from localmax.utils.constants import (
    CONSTRUCTION_VERIFY_TOLERANCE,
    CONTINUITY_TOLERANCE,
    GRID_SCAN_STEPS_PER_GAP,
    INDICATOR_APPROXIMATION_EPSILON,
    INDICATOR_VALUE_TOLERANCE,
    SLOPE_MERGE_TOLERANCE,
)
from localmax.utils.exceptions import LocalMaxTheoryException


Function1D = Callable[[FloatArray], FloatArray]


@dataclasses.dataclass
class PiecewiseLinear1D:
    """
    k strictly increasing breakpoints split the line into k+1 pieces; piece i is slopes[i]*x + intercepts[i].
    piece 0 is (-inf, t_1], piece k is [t_k, inf).
    """

    breakpoints: FloatArray
    slopes: FloatArray
    intercepts: FloatArray
    continuous: bool = True

    def __post_init__(self) -> None:
        self.breakpoints = np.asarray(self.breakpoints, dtype=np.float64).reshape(-1)
        self.slopes = np.asarray(self.slopes, dtype=np.float64).reshape(-1)
        self.intercepts = np.asarray(self.intercepts, dtype=np.float64).reshape(-1)
        k = len(self.breakpoints)
        if len(self.slopes) != k + 1 or len(self.intercepts) != k + 1:
            raise LocalMaxTheoryException(
                f'{k} breakpoints need {k + 1} pieces, got {len(self.slopes)} slopes and {len(self.intercepts)} '
                f'intercepts.'
            )
        if np.any(np.diff(self.breakpoints) <= 0):
            raise LocalMaxTheoryException('The breakpoints must be strictly increasing.')
        if self.continuous:
            left = self.slopes[:-1] * self.breakpoints + self.intercepts[:-1]
            right = self.slopes[1:] * self.breakpoints + self.intercepts[1:]
            scale = np.maximum(1.0, np.maximum(np.abs(left), np.abs(right)))
            if np.any(np.abs(left - right) >= CONTINUITY_TOLERANCE * scale):
                worst = int(np.argmax(np.abs(left - right) / scale))
                raise LocalMaxTheoryException(
                    f'Discontinuous at breakpoint {self.breakpoints[worst]!r}: {left[worst]!r} != {right[worst]!r}.'
                )

    @property
    def num_pieces(self) -> int:
        return len(self.slopes)

    def __call__(self, x: FloatArray) -> FloatArray:
        points = np.asarray(x, dtype=np.float64)
        pieces = np.searchsorted(self.breakpoints, points, side='right')
        return self.slopes[pieces] * points + self.intercepts[pieces]

    def to_json(self) -> Dict[str, Any]:
        return {
            'breakpoints': self.breakpoints.tolist(),
            'slopes': self.slopes.tolist(),
            'intercepts': self.intercepts.tolist(),
            'continuous': self.continuous,
        }


def _sorted_distinct(points: Sequence[float]) -> FloatArray:
    values = np.sort(np.asarray(points, dtype=np.float64).reshape(-1))
    if values.size == 0:
        raise LocalMaxTheoryException('The point set is empty.')
    if not np.all(np.isfinite(values)):
        raise LocalMaxTheoryException('The point set holds non-finite values.')
    duplicates = values[1:][np.diff(values) == 0]
    if duplicates.size:
        raise LocalMaxTheoryException(f'The point set holds duplicate points: {sorted(set(duplicates.tolist()))}.')
    return values


def tent_function(points: Sequence[float]) -> PiecewiseLinear1D:
    """
    the continuous tent function whose strict local maxima are exactly the points (value 1 there):
    slope +1 left of x_1, slope -1 right of x_m, and in every gap g a valley of value 0 at the midpoint
    (down with slope -2/g, up with slope +2/g).
    @return: 2m pieces over the 2m-1 breakpoints {x_i} and the gap midpoints
    """
    s = _sorted_distinct(points)
    breakpoints = [s[0]]
    slopes = [1.0]
    intercepts = [1.0 - s[0]]
    for left, right in zip(s, s[1:]):
        gap = right - left
        breakpoints += [(left + right) / 2, right]
        slopes += [-2.0 / gap, 2.0 / gap]
        intercepts += [1.0 + 2.0 * left / gap, 1.0 - 2.0 * right / gap]
    slopes.append(-1.0)
    intercepts.append(1.0 + s[-1])
    return PiecewiseLinear1D(np.array(breakpoints), np.array(slopes), np.array(intercepts))


def piecewise_to_network(pieces: PiecewiseLinear1D) -> Network:
    """
    a single hidden layer relu network equal to a continuous piecewise linear function whose first piece has
    slope 1, value 1 at t_1:
        f(x) = 1 - relu(t_1 - x) + sum_j c_j relu(x - t_j),  c_j = slope right of t_j - slope left of t_j
    (the slope left of t_1 is carried by the -relu(t_1 - x) neuron, so c_1 is the first right slope).
    """
    t = pieces.breakpoints
    rises_into_one = t.size > 0 and pieces.slopes[0] == 1.0
    if not rises_into_one or abs(t[0] + pieces.intercepts[0] - 1.0) > CONTINUITY_TOLERANCE * max(1.0, abs(t[0])):
        raise LocalMaxTheoryException('Only functions rising with slope 1 into (t_1, 1) are converted.')
    kinks = np.diff(pieces.slopes)
    kinks[0] = pieces.slopes[1]

    hidden_weights = np.concatenate([[-1.0], np.ones(t.size)]).reshape(-1, 1)
    hidden_biases = np.concatenate([[t[0]], -t])
    output_weights = np.concatenate([[-1.0], kinks]).reshape(1, -1)
    return network_from_weights(
        [(hidden_weights, hidden_biases), (output_weights, np.array([1.0]))], LayerKind.ReLU, role='constructed'
    )


def scan_grid(points: Sequence[float], steps_per_gap: int = GRID_SCAN_STEPS_PER_GAP) -> FloatArray:
    """
    a sorted 1-d grid holding every point exactly, steps_per_gap steps in every gap, and one padding
    segment (of the widest gap, at least 1) beyond each end.
    """
    s = _sorted_distinct(points)
    pad = max(1.0, float(np.max(np.diff(s)))) if s.size > 1 else 1.0
    edges = np.concatenate([[s[0] - pad], s, [s[-1] + pad]])
    segments = [np.linspace(left, right, steps_per_gap + 1) for left, right in zip(edges, edges[1:])]
    return np.unique(np.concatenate(segments))


def grid_local_maxima(function: Function1D, grid: FloatArray) -> FloatArray:
    """
    @return: the grid points whose value strictly exceeds both grid neighbors' (the ends never count)
    """
    values = np.asarray(function(grid), dtype=np.float64).reshape(-1)
    strict = (values[1:-1] > values[:-2]) & (values[1:-1] > values[2:])
    return grid[1:-1][strict]


def line_function(net: Network) -> Function1D:
    if net.input_dim != 1 or net.output_dim != 1:
        raise LocalMaxTheoryException(f'{net!r} is not a 1-d to 1-d network.')
    return lambda x: predict(net, np.asarray(x, dtype=np.float64).reshape(-1, 1))[:, 0]


def verify_equal(net: Network, pieces: PiecewiseLinear1D, probes: FloatArray) -> float:
    """
    @return: the largest |net - pieces| over the probes, and around every breakpoint
    """
    offsets = np.concatenate([pieces.breakpoints - 1e-6, pieces.breakpoints, pieces.breakpoints + 1e-6])
    all_probes = np.concatenate([probes, offsets])
    return float(np.max(np.abs(line_function(net)(all_probes) - pieces(all_probes))))


def construct_max_net(points: Sequence[float]) -> Tuple[Network, PiecewiseLinear1D]:
    """
    build a one-hidden-layer relu network (2m hidden neurons) whose strict local maxima are exactly the points,
    and verify it against its piecewise linear form.
    @param points: m distinct reals
    @return: the network and its piecewise linear form (2m pieces)
    """
    pieces = tent_function(points)
    net = piecewise_to_network(pieces)
    error = verify_equal(net, pieces, scan_grid(points))
    if error > CONSTRUCTION_VERIFY_TOLERANCE:
        raise LocalMaxTheoryException(f'The constructed network deviates from its pieces by {error:.3e}.')
    return net, pieces


def _representative(low: float, high: float) -> float:
    if np.isinf(low) and np.isinf(high):
        return 0.0
    if np.isinf(low):
        return high - 1.0
    if np.isinf(high):
        return low + 1.0
    return (low + high) / 2


@dataclasses.dataclass
class _Region:
    """
    An interval of the input line on which the current layer's outputs are slopes * x + offsets.
    """

    low: float
    high: float
    slopes: FloatArray
    offsets: FloatArray


def _split_at_zero_crossings(region: _Region) -> List[_Region]:
    nonzero = region.slopes != 0
    crossings = -region.offsets[nonzero] / region.slopes[nonzero]
    inside = np.unique(crossings[(crossings > region.low) & (crossings < region.high)])
    edges = [region.low] + inside.tolist() + [region.high]
    return [_Region(low, high, region.slopes, region.offsets) for low, high in zip(edges, edges[1:])]


def _merge_collinear(regions: List[_Region]) -> PiecewiseLinear1D:
    breakpoints: List[float] = []
    slopes = [float(regions[0].slopes[0])]
    intercepts = [float(regions[0].offsets[0])]
    for region in regions[1:]:
        slope = float(region.slopes[0])
        if abs(slope - slopes[-1]) <= SLOPE_MERGE_TOLERANCE * max(1.0, abs(slopes[-1])):
            continue
        breakpoints.append(region.low)
        slopes.append(slope)
        intercepts.append(float(region.offsets[0]))
    return PiecewiseLinear1D(np.array(breakpoints), np.array(slopes), np.array(intercepts))


def extract_pieces(net: Network) -> PiecewiseLinear1D:
    """
    the exact piecewise linear function of a 1-d relu network: propagate the affine map of every linear
    region through the layers, splitting regions where a relu input crosses zero, then merge adjacent
    collinear pieces.
    @param net: 1 input, 1 output, affine and relu layers only
    @return: the pieces
    """
    if net.input_dim != 1 or net.output_dim != 1:
        raise LocalMaxTheoryException(f'Piece extraction needs a 1-d to 1-d network, not {net!r}.')
    unsupported = {spec.kind for spec in net.specs} - {LayerKind.Affine, LayerKind.ReLU}
    if unsupported:
        raise LocalMaxTheoryException(
            f'Piece extraction supports affine and relu layers only, {net!r} has {sorted(map(str, unsupported))}.'
        )

    regions = [_Region(-np.inf, np.inf, np.ones(1), np.zeros(1))]
    for spec, parameters in zip(net.specs, net.parameters):
        if spec.kind is LayerKind.Affine:
            w, b = parameters['W'], parameters['b']
            regions = [_Region(r.low, r.high, w @ r.slopes, w @ r.offsets + b) for r in regions]
            continue
        split: List[_Region] = []
        for region in regions:
            for piece in _split_at_zero_crossings(region):
                x = _representative(piece.low, piece.high)
                active = (piece.slopes * x + piece.offsets > 0).astype(np.float64)
                split.append(_Region(piece.low, piece.high, piece.slopes * active, piece.offsets * active))
        regions = split

    return _merge_collinear(regions)


class ClaimStatus(Enum):
    Passed = 'passed'
    Failed = 'failed'
    # the premise of the claim does not hold for this network
    Vacuous = 'vacuous'

    def __str__(self) -> str:
        return self.value


@dataclasses.dataclass
class TheoryReport:
    claim: str
    m: int
    pieces: int
    status: ClaimStatus
    details: Dict[str, Any] = dataclasses.field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return ClaimStatus.Failed != self.status

    def to_json(self) -> Dict[str, Any]:
        return {
            'claim': self.claim,
            'm': self.m,
            'pieces': self.pieces,
            'passed': self.passed,
            'status': self.status.value,
            **self.details,
        }


def construction_report(points: Sequence[float]) -> Tuple[Network, TheoryReport]:
    """
    construct the network for the points, and check it: exactly the points are its strict grid maxima,
    and it has 2m pieces.
    """
    s = _sorted_distinct(points)
    net, pieces = construct_max_net(s)
    maxima = grid_local_maxima(line_function(net), scan_grid(s))
    extracted = extract_pieces(net)
    passed = np.array_equal(maxima, s) and extracted.num_pieces == 2 * s.size == pieces.num_pieces
    report = TheoryReport(
        'construction',
        int(s.size),
        extracted.num_pieces,
        ClaimStatus.Passed if passed else ClaimStatus.Failed,
        {'maxima': maxima.tolist(), 'points': s.tolist(), 'max_deviation': verify_equal(net, extracted, s)},
    )
    return net, report


def _approximates_indicator(function: Function1D, s: FloatArray, steps_per_gap: int) -> Tuple[bool, float]:
    """
    does the function approximate the indicator (1 on the points, -1 elsewhere)? 1 at every point, and on
    every segment between/beyond the points at most an epsilon fraction of the probes away from -1.
    @return: (premise holds, the worst segment's fraction of probes away from -1)
    """
    if np.any(np.abs(function(s) - 1.0) > INDICATOR_VALUE_TOLERANCE):
        return False, 1.0
    pad = max(1.0, float(np.max(np.diff(s)))) if s.size > 1 else 1.0
    edges = np.concatenate([[s[0] - pad], s, [s[-1] + pad]])
    worst = 0.0
    for left, right in zip(edges, edges[1:]):
        probes = np.linspace(left, right, steps_per_gap + 1)[1:-1]
        away = float(np.mean(np.abs(function(probes) + 1.0) > INDICATOR_VALUE_TOLERANCE))
        worst = max(worst, away)
    return worst <= INDICATOR_APPROXIMATION_EPSILON, worst


def count_pieces_lower_bound_check(
    points: Sequence[float], net: Network, *, steps_per_gap: int = GRID_SCAN_STEPS_PER_GAP
) -> List[TheoryReport]:
    """
    check the piece-count lower bounds on a 1-d relu network:
    - if every point is a strict local maximum of the network (grid scan), it has at least 2m pieces.
    - if the network approximates the points' indicator, it has at least 3m+1 pieces.
    a claim whose premise does not hold is reported as vacuous.
    """
    s = _sorted_distinct(points)
    m = int(s.size)
    function = line_function(net)
    pieces = extract_pieces(net).num_pieces

    maxima = grid_local_maxima(function, scan_grid(s, steps_per_gap))
    maxima_premise = bool(np.all(np.isin(s, maxima)))
    maxima_status = ClaimStatus.Vacuous
    if maxima_premise:
        maxima_status = ClaimStatus.Passed if pieces >= 2 * m else ClaimStatus.Failed

    indicator_premise, away_fraction = _approximates_indicator(function, s, steps_per_gap)
    indicator_status = ClaimStatus.Vacuous
    if indicator_premise:
        indicator_status = ClaimStatus.Passed if pieces >= 3 * m + 1 else ClaimStatus.Failed

    return [
        TheoryReport('local-maxima', m, pieces, maxima_status, {'bound': 2 * m, 'maxima': maxima.tolist()}),
        TheoryReport('indicator', m, pieces, indicator_status, {'bound': 3 * m + 1, 'away_fraction': away_fraction}),
    ]
