from pathlib import Path
from typing import Dict, Sequence

import numpy as np
import pytest

from localmax.data.dataset import Dataset, Standardization
from localmax.evaluation.fields import center_dominance, grid_field_export, grid_points, mode_coverage
from localmax.evaluation.protocols import (
    CorrelationMode,
    FirstComponentScorer,
    Score,
    fixed_noise_eval,
    local_correlation,
    noise_sweep,
    one_class_eval,
    write_noise_sweep_csv,
)
from localmax.evaluation.report import EvalReport
from localmax.evaluation.statistics import auc, nearest_neighbors, pearson, permutation_p_value
from localmax.models.model_suite import QuadModel
from localmax.network.layers import LayerSpec, affine, relu, sigmoid
from localmax.network.network import Network, init_network
from localmax.utils.classes import FloatArray
from localmax.utils.exceptions import LocalMaxEvaluationException


def network_with(specs: Sequence[LayerSpec], *affine_weights: FloatArray) -> Network:
    """
    @return: the network, its affine layers set to the given (out x in) weights and zero biases
    """
    net = init_network(specs, 0)
    affine_layers = [tensors for tensors in net.parameters if 'W' in tensors]
    for tensors, weights in zip(affine_layers, affine_weights):
        tensors['W'] = np.asarray(weights, dtype=np.float64)
        tensors['b'] = np.zeros(tensors['W'].shape[0])
    return net


def rightward_classifier() -> Network:
    """
    c(x) = sigmoid(4 x1)
    """
    return network_with([affine(2, 1), sigmoid(1)], np.array([[4.0, 0.0]]))


def eastward_comparator() -> Network:
    """
    h(a, b) = sigmoid(a1 - b1)
    """
    return network_with([affine(4, 1), sigmoid(1)], np.array([[1.0, 0.0, -1.0, 0.0]]))


def peaked_comparator() -> Network:
    """
    h(a, b) = sigmoid(|a - b|_1): every point beats every other point
    """
    hidden = np.array([[1.0, 0.0, -1.0, 0.0], [-1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, -1.0], [0.0, -1.0, 0.0, 1.0]])
    return network_with([affine(4, 4), relu(4), affine(4, 1), sigmoid(1)], hidden, np.ones((1, 4)))


def handmade_model(h: Network) -> QuadModel:
    return QuadModel(2, c=rightward_classifier(), h=h)


def spread_points(n: int, seed: int = 0) -> FloatArray:
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(n, 2))


# statistics


def test_auc_examples() -> None:
    assert auc([0.9, 0.8], [0.2, 0.1]) == 1.0
    assert auc([0.2, 0.1], [0.9, 0.8]) == 0.0
    assert auc([0.3, 0.3, 0.7], [0.7, 0.3, 0.3]) == 0.5
    assert auc([0.7, 0.3], [0.5]) == 0.5


def test_auc_rejects_bad_scores() -> None:
    with pytest.raises(LocalMaxEvaluationException):
        auc([], [0.1])
    with pytest.raises(LocalMaxEvaluationException):
        auc([0.1, np.nan], [0.1])


def test_pearson() -> None:
    x = np.arange(10.0)
    assert pearson(x, 3 * x + 1) == pytest.approx(1.0)
    assert pearson(x, -x) == pytest.approx(-1.0)
    assert pearson(x, np.ones(10)) == 0.0
    with pytest.raises(LocalMaxEvaluationException):
        pearson(x, x[:5])


def test_permutation_p_value() -> None:
    x = np.arange(30.0)
    r, p = permutation_p_value(x, 2 * x, permutations=1000, seed=1)
    assert r == pytest.approx(1.0)
    assert p == pytest.approx(1 / 1001)

    noisy = x + np.random.default_rng(0).normal(0, 30, size=30)
    first = permutation_p_value(x, noisy, permutations=1500, seed=2)
    assert first == permutation_p_value(x, noisy, permutations=1500, seed=2)
    assert 0 < first[1] <= 1
    assert first[1] * 1501 == pytest.approx(round(first[1] * 1501))

    assert permutation_p_value(x, np.ones(30), permutations=1000) == (0.0, 1.0)
    with pytest.raises(LocalMaxEvaluationException):
        permutation_p_value(x, x, permutations=999)


def test_nearest_neighbors() -> None:
    assert list(nearest_neighbors(np.array([[0.0], [1.0], [3.0]]))) == [1, 0, 1]
    assert list(nearest_neighbors(np.array([[0.0], [1.0], [2.0]]))) == [1, 0, 1]
    with pytest.raises(LocalMaxEvaluationException):
        nearest_neighbors(np.array([[0.0, 0.0]]))


# reports


def test_report_save_and_load(tmp_path: Path) -> None:
    report = EvalReport('one-class', {'c': {'auc': 0.75}}, 3, {'positive': 10, 'negative': 5}, 'abc', {'k': [1]})
    report.save(tmp_path / 'metrics.json')
    loaded = EvalReport.load(tmp_path / 'metrics.json')
    assert loaded == report
    assert loaded.metric('c', 'auc') == 0.75
    with pytest.raises(LocalMaxEvaluationException):
        loaded.metric('h', 'auc')


@pytest.mark.parametrize(
    'settings',
    [{}, {'c': {'auc': 1.5}}, {'local/c': {'pearson_r': -1.2}}, {'local/c': {'permutation_p': 0.0}}],
)
def test_report_rejects_out_of_range_metrics(settings: Dict[str, Dict[str, float]]) -> None:
    with pytest.raises(LocalMaxEvaluationException):
        EvalReport('test', settings, 0, {'test': 1})


# protocols


def test_one_class_eval() -> None:
    model = handmade_model(eastward_comparator())
    positives = np.array([[1.0, 0.0], [2.0, 5.0]])
    negatives = np.array([[-1.0, 0.0], [-2.0, 1.0], [-0.5, 0.0]])
    assert one_class_eval(model, Score.C, positives, negatives).metric('c', 'auc') == 1.0
    assert one_class_eval(model, Score.H, positives, negatives).metric('h', 'auc') == 0.5
    with pytest.raises(LocalMaxEvaluationException):
        one_class_eval(model, Score.Pca, positives, negatives)


def test_protocols_check_the_standardization() -> None:
    model = handmade_model(eastward_comparator())
    model.standardization = Standardization(np.zeros(2), np.ones(2))
    with pytest.raises(LocalMaxEvaluationException):
        one_class_eval(model, Score.C, Dataset(spread_points(4)), spread_points(4))


def test_noise_sweep(tmp_path: Path) -> None:
    model = handmade_model(eastward_comparator())
    report = noise_sweep(model, spread_points(50), [0.0, 0.5], seed=4)
    assert report.setting_names() == ['sigma=0.0', 'sigma=0.5']
    assert report.metric('sigma=0.0', 'auc_c') == 0.5
    assert report.metric('sigma=0.5', 'auc_h') == 0.5
    assert report.details['mode'] == 'all-points'

    write_noise_sweep_csv(tmp_path / 'noise_sweep.csv', report)
    lines = (tmp_path / 'noise_sweep.csv').read_text().splitlines()
    assert lines[0] == 'sigma,auc_c,auc_h'
    assert len(lines) == 3

    with pytest.raises(LocalMaxEvaluationException):
        noise_sweep(model, spread_points(5), [0.5, 0.1], seed=0)


def test_noise_sweep_in_class_mode() -> None:
    model = QuadModel(2, c=rightward_classifier())
    test = Dataset(spread_points(40), labels=np.arange(40) % 3)
    report = fixed_noise_eval(model, test, 0, in_class_labels=[1])
    assert report.sample_counts == {'test': 13}
    assert report.details['in_class_labels'] == [1]
    assert list(report.settings['sigma=0.2']) == ['auc_c']
    with pytest.raises(LocalMaxEvaluationException):
        fixed_noise_eval(model, spread_points(10), 0, in_class_labels=[1])


def test_first_component_sign() -> None:
    t = np.linspace(-3.0, 3.0, 20)
    points = np.column_stack([-t, -2 * t])
    scorer = FirstComponentScorer.fit(points)
    np.testing.assert_allclose(scorer.direction, np.array([1.0, 2.0]) / np.sqrt(5.0))


def test_standard_correlation_with_the_first_component() -> None:
    t = np.linspace(-3.0, 3.0, 20)
    points = np.column_stack([t, 2 * t])
    pca = FirstComponentScorer.fit(points)
    report = local_correlation(None, Score.Pca, points, t, CorrelationMode.Standard, permutations=1000, pca=pca)
    assert report.metric('standard/pca', 'pearson_r') == pytest.approx(1.0)
    assert report.metric('standard/pca', 'permutation_p') == pytest.approx(1 / 1001)


def test_local_correlation_with_h() -> None:
    model = handmade_model(eastward_comparator())
    points = spread_points(40, 1)
    report = local_correlation(model, Score.H, points, points[:, 0], permutations=1000, seed=5)
    assert report.metric('local/h', 'pearson_r') > 0.9
    assert report.details['orientation'] == 'h(point, neighbor)'


def test_correlation_rejects_bad_input() -> None:
    model = handmade_model(eastward_comparator())
    with pytest.raises(LocalMaxEvaluationException):
        local_correlation(model, Score.C, spread_points(2), [0.0, 1.0], permutations=1000)
    with pytest.raises(LocalMaxEvaluationException):
        local_correlation(model, Score.C, spread_points(5), [0.0, 1.0], permutations=1000)


# fields


def test_grid_points() -> None:
    grid, cell = grid_points((-1.0, 1.0, 0.0, 3.0), 16)
    assert grid.shape == (256, 2)
    assert cell == pytest.approx(2.0 / 15)
    np.testing.assert_array_equal(grid[0], [-1.0, 0.0])
    np.testing.assert_array_equal(grid[-1], [1.0, 3.0])
    with pytest.raises(LocalMaxEvaluationException):
        grid_points((-1.0, 1.0, 0.0, 3.0), 8)
    with pytest.raises(LocalMaxEvaluationException):
        grid_points((1.0, -1.0, 0.0, 3.0), 16)


def test_field_export(tmp_path: Path) -> None:
    export = grid_field_export(handmade_model(eastward_comparator()), resolution=16)
    assert export.heatmap is not None and export.quiver is not None
    assert export.heatmap.shape == (256, 3)
    np.testing.assert_allclose(export.heatmap[:, 2], 1 / (1 + np.exp(-4 * export.heatmap[:, 0])))
    assert export.quiver.shape == (256, 4)
    assert np.all(export.quiver[:, 2:] == [1.0, 0.0])

    written = export.write(tmp_path)
    assert [path.name for path in written] == ['heatmap.csv', 'quiver.csv']
    assert (tmp_path / 'quiver.csv').read_text().splitlines()[0] == 'x1,x2,u1,u2'


def test_field_export_of_a_partial_model(tmp_path: Path) -> None:
    export = grid_field_export(QuadModel(2, c=rightward_classifier()), resolution=16)
    assert export.quiver is None
    assert [path.name for path in export.write(tmp_path)] == ['heatmap.csv']
    with pytest.raises(LocalMaxEvaluationException):
        grid_field_export(QuadModel(3, c=network_with([affine(3, 1), sigmoid(1)], np.ones((1, 3)))))


def test_mode_coverage_and_center_dominance() -> None:
    centers = np.array([[1.0, 0.0], [-1.0, 0.0], [0.5, 3.0]])
    coverage = mode_coverage(handmade_model(eastward_comparator()), centers)
    assert (coverage['covered_modes'], coverage['modes']) == (2, 3)

    dominance = center_dominance(handmade_model(peaked_comparator()), centers, 0.1)
    assert (dominance['dominant_centers'], dominance['centers']) == (3, 3)
    assert dominance['mean_center_preference'] > 0.5
    with pytest.raises(LocalMaxEvaluationException):
        center_dominance(handmade_model(peaked_comparator()), centers, 0.0)
