from typing import Callable, Tuple

import numpy as np
import pytest

from localmax.models.model_suite import GeneratorOutput, Role, build_model
from localmax.network.grad_check import finite_difference_gradient, relative_error
from localmax.network.layers import affine, sigmoid
from localmax.network.network import GradientSet, Network, init_network, network_from_weights
from localmax.training.losses import (
    bce,
    bce_derivative,
    loss_C,
    loss_C_gradients,
    loss_Gc,
    loss_Gc_gradients,
    loss_Gh,
    loss_Gh_gradients,
    loss_H,
    loss_H_gradients,
)
from localmax.utils.classes import FloatArray
from localmax.utils.constants import PROBABILITY_CLAMP
from localmax.utils.exceptions import LocalMaxConfigurationException


D = 2
LOG2 = float(np.log(2))
GRADIENT_TOLERANCE = 1e-4


def half_network(in_dim: int) -> Network:
    """
    @return: a network that outputs 0.5 everywhere
    """
    net = init_network([affine(in_dim, 1), sigmoid(1)], 0)
    net.parameters[0]['W'][:] = 0
    return net


def identity_generator() -> Network:
    return network_from_weights([(np.eye(D), np.zeros(D))], activation=None)


def constant_generator(value: Tuple[float, float]) -> Network:
    return network_from_weights([(np.zeros((D, D)), np.array(value))], activation=None)


def batch_of(n: int, seed: int = 0) -> FloatArray:
    return np.random.default_rng(seed).normal(size=(n, D))


def test_bce_values() -> None:
    assert bce(np.array(0.5), 1) == pytest.approx(LOG2)
    assert bce(np.array(0.5), -1) == pytest.approx(LOG2)
    assert bce(np.array(0.9), -1) == pytest.approx(-np.log(0.1))
    assert np.isfinite(bce(np.array(0.0), 1))
    assert bce(np.array(1.0), -1) == pytest.approx(-np.log(PROBABILITY_CLAMP))


def test_bce_derivative_is_zero_where_clamped() -> None:
    assert bce_derivative(np.array(0.5), 1) == pytest.approx(-2.0)
    assert bce_derivative(np.array(0.5), -1) == pytest.approx(2.0)
    assert bce_derivative(np.array(0.0), 1) == 0
    assert bce_derivative(np.array(1.0), -1) == 0


def test_bce_rejects_bad_labels() -> None:
    with pytest.raises(LocalMaxConfigurationException):
        bce(np.array(0.5), 0)


def test_losses_at_one_half() -> None:
    batch = batch_of(6)
    c, h, g = half_network(D), half_network(2 * D), identity_generator()

    classifier_loss = loss_C(batch, c, h, g)
    assert classifier_loss.total == pytest.approx(LOG2 + LOG2**2)
    assert classifier_loss.positive_term == pytest.approx(LOG2)
    assert classifier_loss.product_term == pytest.approx(LOG2**2)

    assert loss_H(batch, c, h, g).total == pytest.approx(LOG2 + LOG2**2)
    symmetric = loss_H(batch, c, h, g, symmetric=True)
    assert symmetric.total == pytest.approx(LOG2 + 2 * LOG2**2)
    assert symmetric.symmetric_term == pytest.approx(LOG2**2)

    assert loss_Gc(batch, c, h, g) == pytest.approx(-(LOG2**2))

    generator_loss = loss_Gh(batch, c, h, g, 1.0)
    assert generator_loss.distance_term == pytest.approx(0.0)
    assert generator_loss.total == pytest.approx(-(LOG2 + LOG2**2))


def test_absent_player_factor_is_one() -> None:
    batch = batch_of(4)
    c, h, g = half_network(D), half_network(2 * D), identity_generator()
    assert loss_C(batch, c, None, g).product_term == pytest.approx(LOG2)
    assert loss_H(batch, None, h, g).product_term == pytest.approx(LOG2)


def test_generator_distance() -> None:
    batch = np.zeros((3, D))
    c, h = half_network(D), half_network(2 * D)
    breakdown = loss_Gh(batch, c, h, constant_generator((3.0, 4.0)), 2.0)
    assert breakdown.distance_term == pytest.approx(5.0)
    assert breakdown.total == pytest.approx(2 * 5.0 - (LOG2 + LOG2**2))


def test_losses_reject_bad_input() -> None:
    c, h, g = half_network(D), half_network(2 * D), identity_generator()
    with pytest.raises(LocalMaxConfigurationException):
        loss_C(np.zeros((0, D)), c, h, g)
    with pytest.raises(LocalMaxConfigurationException):
        loss_Gh(batch_of(2), c, h, g, -1.0)


RANDOM_INSTANCES = range(20)
BATCH_NORM_GRADIENT_TOLERANCE = 1e-3


def players(use_batch_norm: bool = False, seed: int = 0) -> Tuple[Network, Network, Network, Network]:
    return (
        build_model(Role.Classifier, D, [6], use_batch_norm, 4 * seed + 1),
        build_model(Role.Comparator, D, [6], use_batch_norm, 4 * seed + 2),
        build_model(Role.Generator, D, [6], use_batch_norm, 4 * seed + 3),
        build_model(Role.Generator, D, [6], use_batch_norm, 4 * seed + 4, generator_output=GeneratorOutput.Identity),
    )


def assert_matches_finite_differences(
    player: Network, gradients: GradientSet, loss_value: Callable[[], float], use_batch_norm: bool = False
) -> None:
    tolerance = BATCH_NORM_GRADIENT_TOLERANCE if use_batch_norm else GRADIENT_TOLERANCE
    for name, tensor in player.named_parameters():
        numeric = finite_difference_gradient(loss_value, tensor)
        assert relative_error(gradients.parameters[name], numeric) < tolerance, name


@pytest.mark.parametrize('use_batch_norm', [False, True])
@pytest.mark.parametrize('seed', RANDOM_INSTANCES)
def test_classifier_gradients(seed: int, use_batch_norm: bool) -> None:
    c, h, g_c, _ = players(use_batch_norm, seed)
    batch = batch_of(8, seed)
    breakdown, gradients = loss_C_gradients(batch, c, h, g_c)
    assert breakdown.total == pytest.approx(loss_C(batch, c, h, g_c).total)
    assert_matches_finite_differences(c, gradients, lambda: loss_C(batch, c, h, g_c).total, use_batch_norm)


@pytest.mark.parametrize('symmetric', [False, True])
@pytest.mark.parametrize('use_batch_norm', [False, True])
@pytest.mark.parametrize('seed', RANDOM_INSTANCES)
def test_comparator_gradients(seed: int, use_batch_norm: bool, symmetric: bool) -> None:
    c, h, _, g_h = players(use_batch_norm, seed)
    batch = batch_of(8, seed)
    breakdown, gradients = loss_H_gradients(batch, c, h, g_h, symmetric)
    assert breakdown.total == pytest.approx(loss_H(batch, c, h, g_h, symmetric).total)
    assert_matches_finite_differences(h, gradients, lambda: loss_H(batch, c, h, g_h, symmetric).total, use_batch_norm)


@pytest.mark.parametrize('use_batch_norm', [False, True])
@pytest.mark.parametrize('seed', RANDOM_INSTANCES)
def test_classifier_generator_gradients(seed: int, use_batch_norm: bool) -> None:
    c, h, g_c, _ = players(use_batch_norm, seed)
    batch = batch_of(8, seed)
    breakdown, gradients = loss_Gc_gradients(batch, c, h, g_c)
    assert breakdown.total == pytest.approx(loss_Gc(batch, c, h, g_c))
    assert_matches_finite_differences(g_c, gradients, lambda: loss_Gc(batch, c, h, g_c), use_batch_norm)


@pytest.mark.parametrize('symmetric', [False, True])
@pytest.mark.parametrize('use_batch_norm', [False, True])
@pytest.mark.parametrize('seed', RANDOM_INSTANCES)
def test_comparator_generator_gradients(seed: int, use_batch_norm: bool, symmetric: bool) -> None:
    c, h, _, g_h = players(use_batch_norm, seed)
    batch = batch_of(8, seed)
    breakdown, gradients = loss_Gh_gradients(batch, c, h, g_h, 0.5, symmetric)
    assert breakdown.total == pytest.approx(loss_Gh(batch, c, h, g_h, 0.5, symmetric).total)
    assert_matches_finite_differences(
        g_h, gradients, lambda: loss_Gh(batch, c, h, g_h, 0.5, symmetric).total, use_batch_norm
    )


@pytest.mark.parametrize('seed', RANDOM_INSTANCES)
def test_gradients_without_the_other_discriminator(seed: int) -> None:
    c, h, g_c, g_h = players(seed=seed)
    batch = batch_of(8, seed)
    _, gradients = loss_Gc_gradients(batch, c, None, g_c)
    assert_matches_finite_differences(g_c, gradients, lambda: loss_Gc(batch, c, None, g_c))
    _, gradients = loss_H_gradients(batch, None, h, g_h)
    assert_matches_finite_differences(h, gradients, lambda: loss_H(batch, None, h, g_h).total)


@pytest.mark.parametrize('use_batch_norm', [False, True])
@pytest.mark.parametrize('seed', RANDOM_INSTANCES)
def test_generator_loss_is_minus_the_product_term(seed: int, use_batch_norm: bool) -> None:
    c, h, g_c, _ = players(use_batch_norm, seed)
    batch = batch_of(2 + seed, seed)
    assert abs(loss_Gc(batch, c, h, g_c) + loss_C(batch, c, h, g_c).product_term) <= 1e-12
    assert abs(loss_Gc(batch, c, None, g_c) + loss_C(batch, c, None, g_c).product_term) <= 1e-12


def test_only_the_trained_player_updates_running_stats() -> None:
    c, h, g_c, g_h = players(use_batch_norm=True)
    batch = batch_of(16, 6)
    frozen_hashes = {'h': h.state_hash(), 'g_c': g_c.state_hash()}
    c_hash = c.state_hash()

    loss_C_gradients(batch, c, h, g_c)
    assert c.state_hash() != c_hash
    assert h.state_hash() == frozen_hashes['h']
    assert g_c.state_hash() == frozen_hashes['g_c']

    g_h_hash = g_h.state_hash()
    loss_H(batch, c, h, g_h)
    assert g_h.state_hash() == g_h_hash
