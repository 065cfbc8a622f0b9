import math
from typing import List

import numpy as np
import pytest

from localmax.data.synthetic import sample_point_set_1d
from localmax.network.layers import affine, leaky_relu, sigmoid
from localmax.network.network import Network, init_network, network_from_weights
from localmax.theory.complexity import (
    MarginRiskConfig,
    NetworkShape,
    bound_penalty_proxy,
    margin_empirical_risk,
    spectral_complexity,
    spectral_norm,
)
from localmax.theory.piecewise import (
    ClaimStatus,
    PiecewiseLinear1D,
    construct_max_net,
    construction_report,
    count_pieces_lower_bound_check,
    extract_pieces,
    line_function,
    piecewise_to_network,
    tent_function,
)
from localmax.utils.classes import FloatArray
from localmax.utils.exceptions import LocalMaxConfigurationException, LocalMaxTheoryException


def bump_network(width: float) -> Network:
    """
    -1 everywhere but a triangular bump of height 2 over (-width, width), peaking at 1 at the origin.
    """
    return network_from_weights(
        [
            (np.ones((3, 1)), np.array([width, 0.0, -width])),
            (np.array([[2 / width, -4 / width, 2 / width]]), np.array([-1.0])),
        ]
    )


def constant_network(value: float) -> Network:
    return network_from_weights([(np.zeros((1, 1)), np.array([value]))])


def zeros(points: FloatArray) -> FloatArray:
    return np.zeros(len(points))


def ones(points: FloatArray) -> FloatArray:
    return np.ones(len(points))


# piecewise linear functions


def test_tent_function() -> None:
    tent = tent_function([1.0, 0.0])
    np.testing.assert_array_equal(tent.breakpoints, [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(tent.slopes, [1.0, -2.0, 2.0, -1.0])
    assert tent.num_pieces == 4
    np.testing.assert_allclose(tent(np.array([-1.0, 0.0, 0.25, 0.5, 1.0, 3.0])), [0.0, 1.0, 0.5, 0.0, 1.0, -1.0])


def test_single_point_tent() -> None:
    tent = tent_function([0.0])
    assert tent.num_pieces == 2
    np.testing.assert_allclose(tent(np.array([-2.0, 0.0, 0.5])), [-1.0, 1.0, 0.5])


def test_piecewise_validation() -> None:
    with pytest.raises(LocalMaxTheoryException):
        PiecewiseLinear1D(np.array([0.0]), np.array([1.0, 1.0]), np.array([0.0, 1.0]))
    with pytest.raises(LocalMaxTheoryException):
        PiecewiseLinear1D(np.array([1.0, 0.0]), np.zeros(3), np.zeros(3))
    with pytest.raises(LocalMaxTheoryException):
        PiecewiseLinear1D(np.array([0.0]), np.zeros(3), np.zeros(3))
    PiecewiseLinear1D(np.array([0.0]), np.array([1.0, 1.0]), np.array([0.0, 1.0]), continuous=False)


def test_only_rising_functions_are_converted() -> None:
    with pytest.raises(LocalMaxTheoryException):
        piecewise_to_network(PiecewiseLinear1D(np.array([0.0]), np.array([2.0, -1.0]), np.array([1.0, 1.0])))


@pytest.mark.parametrize('points', [[0.0], [0.0, 1.0], [-3.0, -2.5, 0.1, 4.0, 4.2]])
def test_constructed_network_has_exactly_the_points_as_maxima(points: List[float]) -> None:
    net, pieces = construct_max_net(points)
    assert pieces.num_pieces == 2 * len(points)
    assert net.affine_weights()[0].shape == (2 * len(points), 1)

    extracted = extract_pieces(net)
    assert extracted.num_pieces == 2 * len(points)
    np.testing.assert_allclose(extracted.breakpoints, pieces.breakpoints)
    np.testing.assert_allclose(extracted.slopes, pieces.slopes)

    _, report = construction_report(points)
    assert report.status is ClaimStatus.Passed
    np.testing.assert_allclose(report.details['maxima'], sorted(points))


def strict_local_maxima(pieces: PiecewiseLinear1D) -> FloatArray:
    rising_then_falling = (pieces.slopes[:-1] > 0) & (pieces.slopes[1:] < 0)
    return pieces.breakpoints[rising_then_falling]


@pytest.mark.parametrize('seed', range(50))
def test_constructed_network_on_random_point_sets(seed: int) -> None:
    m = 1 + seed % 8
    points = sample_point_set_1d(m, seed, min_gap=[0.05, 0.3, 1.0][seed % 3])
    net, _ = construct_max_net(points.tolist())

    pieces = extract_pieces(net)
    assert pieces.num_pieces <= 2 * m + 1
    np.testing.assert_allclose(strict_local_maxima(pieces), points, rtol=0, atol=1e-9)
    np.testing.assert_allclose(line_function(net)(points), np.ones(m), rtol=0, atol=1e-9)


def test_construction_rejects_bad_points() -> None:
    with pytest.raises(LocalMaxTheoryException):
        construct_max_net([0.0, 1.0, 0.0])
    with pytest.raises(LocalMaxTheoryException):
        construct_max_net([])
    with pytest.raises(LocalMaxTheoryException):
        construct_max_net([0.0, np.inf])


def test_extract_pieces_through_two_hidden_layers() -> None:
    net = network_from_weights(
        [(np.ones((1, 1)), np.zeros(1)), (np.ones((1, 1)), np.array([-1.0])), (np.ones((1, 1)), np.zeros(1))]
    )
    pieces = extract_pieces(net)
    np.testing.assert_array_equal(pieces.breakpoints, [1.0])
    np.testing.assert_array_equal(pieces.slopes, [0.0, 1.0])
    np.testing.assert_array_equal(pieces.intercepts, [0.0, -1.0])


def test_extract_pieces_rejects_other_networks() -> None:
    with pytest.raises(LocalMaxTheoryException):
        extract_pieces(init_network([affine(1, 1), sigmoid(1)], 0))
    with pytest.raises(LocalMaxTheoryException):
        extract_pieces(init_network([affine(1, 2), leaky_relu(2), affine(2, 1)], 0))
    with pytest.raises(LocalMaxTheoryException):
        extract_pieces(network_from_weights([(np.ones((1, 2)), np.zeros(1))]))


def test_lower_bound_checks_on_the_constructed_network() -> None:
    net, _ = construct_max_net([0.0, 1.0])
    maxima, indicator = count_pieces_lower_bound_check([0.0, 1.0], net)
    assert (maxima.claim, maxima.status, maxima.pieces, maxima.details['bound']) == (
        'local-maxima',
        ClaimStatus.Passed,
        4,
        4,
    )
    assert indicator.status is ClaimStatus.Vacuous
    assert indicator.passed


def test_lower_bound_checks_on_an_indicator_bump() -> None:
    maxima, indicator = count_pieces_lower_bound_check([0.0], bump_network(0.01))
    assert maxima.pieces == 4
    assert maxima.status is ClaimStatus.Passed
    assert indicator.status is ClaimStatus.Passed
    assert indicator.details['bound'] == 4
    assert indicator.details['away_fraction'] <= 0.05


def test_lower_bound_checks_on_a_constant_network() -> None:
    reports = count_pieces_lower_bound_check([0.0, 2.0], constant_network(0.5))
    assert [report.pieces for report in reports] == [1, 1]
    assert [report.status for report in reports] == [ClaimStatus.Vacuous, ClaimStatus.Vacuous]
    assert reports[0].to_json()['passed']


# complexity


def test_spectral_norm() -> None:
    assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0)
    w = np.random.default_rng(0).normal(size=(5, 3))
    assert spectral_norm(w) == pytest.approx(np.linalg.svd(w, compute_uv=False)[0], rel=1e-8)
    with pytest.raises(LocalMaxTheoryException):
        spectral_norm(np.zeros((2, 2)))
    with pytest.raises(LocalMaxTheoryException):
        spectral_norm(np.ones(3))


def test_spectral_complexity() -> None:
    assert spectral_complexity(network_from_weights([(np.eye(2), np.zeros(2))])) == pytest.approx(2.0)
    doubled = (2 * np.eye(2), np.zeros(2))
    assert spectral_complexity(network_from_weights([doubled], activation=None)) == pytest.approx(8.0)
    assert spectral_complexity(network_from_weights([doubled, doubled], activation=None)) == pytest.approx(64.0)


def test_margin_risk_of_constant_functions() -> None:
    data = np.random.default_rng(1).normal(size=(10, 2))
    cfg = MarginRiskConfig(0.0, 0.0, 0.1, samples=16)
    assert margin_empirical_risk(zeros, ones, data, cfg) == 0.0
    assert margin_empirical_risk(zeros, lambda points: -ones(points), data, cfg) == 1.0


def test_margin_risk_of_the_constructed_network() -> None:
    v, _ = construct_max_net([0.0, 1.0])
    data = np.array([0.0, 1.0])
    strict = MarginRiskConfig(0.0, 0.0, 0.01, samples=32)
    assert margin_empirical_risk(v, ones, data, strict, seed=4) == 0.0
    wide_margin = MarginRiskConfig(0.5, 0.0, 0.01, samples=32)
    assert margin_empirical_risk(v, ones, data, wide_margin, seed=4) == 1.0


def test_margin_config_validation() -> None:
    with pytest.raises(LocalMaxConfigurationException):
        MarginRiskConfig(0.1, 0.1, 0.0)
    with pytest.raises(LocalMaxConfigurationException):
        MarginRiskConfig(-0.1, 0.1, 0.1)
    with pytest.raises(LocalMaxConfigurationException):
        MarginRiskConfig(0.1, 0.1, 0.1, samples=4)


def test_bound_penalty_proxy() -> None:
    scalar = network_from_weights([(np.array([[2.0]]), np.zeros(1))])
    assert bound_penalty_proxy(scalar, scalar, 1.0, 0.1, 0.1, 100, 0.5) == pytest.approx(math.sqrt(math.log(200)) / 10)

    v, _ = construct_max_net([0.0, 1.0])
    shape = NetworkShape.of(v)
    assert (shape.depth, shape.width) == (2, 4)
    assert bound_penalty_proxy(v, v, 1.0, 0.1, 0.1, 100, 0.5) > bound_penalty_proxy(v, v, 1.0, 1.0, 1.0, 100, 0.5)

    with pytest.raises(LocalMaxTheoryException):
        bound_penalty_proxy(v, v, 1.0, 0.0, 0.1, 100, 0.5)
    with pytest.raises(LocalMaxTheoryException):
        bound_penalty_proxy(v, v, 1.0, 0.1, 0.1, 1, 0.5)
    with pytest.raises(LocalMaxTheoryException):
        bound_penalty_proxy(v, v, 1.0, 0.1, 0.1, 100, 1.0)
