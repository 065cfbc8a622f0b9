from __future__ import annotations

import dataclasses
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from localmax.data.dataset import Dataset, Standardization
from localmax.evaluation.report import EvalReport
from localmax.evaluation.statistics import auc, nearest_neighbors, permutation_p_value
from localmax.models.model_suite import QuadModel, classifier_scores, comparator_apply_batch, comparator_unary_batch
from localmax.utils.classes import FloatArray
from localmax.utils.constants import DEFAULT_PERMUTATIONS, FIXED_NOISE_SIGMA
from localmax.utils.exceptions import LocalMaxEvaluationException
from localmax.utils.functions import derive_seed, write_csv


class Score(Enum):
    C = 'c'
    H = 'h'
    Pca = 'pca'

    def __str__(self) -> str:
        return self.value


class CorrelationMode(Enum):
    Local = 'local'
    Standard = 'standard'

    def __str__(self) -> str:
        return self.value


TestPoints = Union[Dataset, FloatArray]


@dataclasses.dataclass
class FirstComponentScorer:
    """
    A baseline unary score: the projection on the first principal direction of the training points.
    The direction's sign is fixed so that its largest-magnitude loading is positive.
    """

    mean: FloatArray
    direction: FloatArray

    @staticmethod
    def fit(points: FloatArray) -> FirstComponentScorer:
        if points.ndim != 2 or points.shape[0] < 2:
            raise LocalMaxEvaluationException(f'Fitting a principal direction needs 2+ points, got {points.shape}.')
        mean = points.mean(axis=0)
        _, _, right_vectors = np.linalg.svd(points - mean, full_matrices=False)
        direction = right_vectors[0]
        if direction[np.argmax(np.abs(direction))] < 0:
            direction = -direction
        return FirstComponentScorer(mean, direction)

    def __call__(self, points: FloatArray) -> FloatArray:
        return (points - self.mean) @ self.direction


def _points_of(test: TestPoints, model: Optional[QuadModel], what: str) -> FloatArray:
    """
    @return: the test points matrix, after verifying it was standardized with the model's training statistics
    """
    if not isinstance(test, Dataset):
        points = np.asarray(test, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] == 0:
            raise LocalMaxEvaluationException(f'The {what} points must be a nonempty matrix, got {points.shape}.')
        return points
    expected: Optional[Standardization] = None if model is None else model.standardization
    if expected is not None and not expected.matches(test.standardization):
        raise LocalMaxEvaluationException(
            f'The {what} points were not standardized with the training statistics of the model.'
        )
    if test.n == 0:
        raise LocalMaxEvaluationException(f'The {what} set is empty.')
    return test.X


def unary_scores(
    model: Optional[QuadModel], score: Score, points: FloatArray, *, pca: Optional[FirstComponentScorer] = None
) -> FloatArray:
    """
    @return: c(x), h(x, x), or the first-component projection, per point
    """
    if Score.C == score:
        return classifier_scores(_require_model(model).require('c'), points)
    if Score.H == score:
        return comparator_unary_batch(_require_model(model).require('h'), points)
    if pca is None:
        raise LocalMaxEvaluationException('The pca score needs a fitted FirstComponentScorer.')
    return pca(points)


def _require_model(model: Optional[QuadModel]) -> QuadModel:
    if model is None:
        raise LocalMaxEvaluationException('This score needs a trained model.')
    return model


def available_scores(model: QuadModel) -> List[Score]:
    networks = model.networks()
    return [score for score in (Score.C, Score.H) if score.value in networks]


def one_class_eval(
    model: QuadModel, score: Score, pos_test: TestPoints, neg_test: TestPoints, *, seed: int = 0
) -> EvalReport:
    """
    AUC of a model score, positives against negatives.
    @param model: the trained model
    @param score: c, or h scored on two replicas of the point
    @param pos_test: the in-class test points (standardized with the model's training statistics)
    @param neg_test: the out-of-class test points (standardized the same way)
    @param seed: recorded for provenance
    @return: the report, setting = the score name, metric 'auc'
    """
    if Score.Pca == score:
        raise LocalMaxEvaluationException('One-class evaluation scores with c or h.')
    positives = _points_of(pos_test, model, 'positive test')
    negatives = _points_of(neg_test, model, 'negative test')
    value = auc(unary_scores(model, score, positives), unary_scores(model, score, negatives))
    return EvalReport(
        'one-class',
        {score.value: {'auc': value}},
        seed,
        {'positive': len(positives), 'negative': len(negatives)},
        model.config_hash,
    )


def _in_class_points(test: TestPoints, model: QuadModel, in_class_labels: Optional[Sequence[int]]) -> FloatArray:
    points = _points_of(test, model, 'test')
    if in_class_labels is None:
        return points
    if not isinstance(test, Dataset) or test.labels is None:
        raise LocalMaxEvaluationException('Selecting in-class test points needs a labeled dataset.')
    selected = points[np.isin(test.labels, list(in_class_labels))]
    if len(selected) == 0:
        raise LocalMaxEvaluationException(f'No test points carry the in-class labels {list(in_class_labels)}.')
    return selected


def noise_sweep(
    model: QuadModel,
    test: TestPoints,
    sigmas: Sequence[float],
    seed: int,
    *,
    in_class_labels: Optional[Sequence[int]] = None,
) -> EvalReport:
    """
    for each sigma: positives are the test points, negatives the same points plus N(0, sigma^2 I) noise.
    reports the AUC of every score the model has (c, and h on two replicas).
    @param model: the trained model
    @param test: the test points
    @param sigmas: non-negative, sorted
    @param seed: the root seed; sigma number i draws its noise from the substream 'noise/i'
    @param in_class_labels: if given, only the test points with these labels are used (in-class mode);
     otherwise every test point is (all-points mode)
    @return: the report, settings 'sigma=<sigma>' with metrics 'auc_c' / 'auc_h'
    """
    if not sigmas:
        raise LocalMaxEvaluationException('The noise sweep needs at least one sigma.')
    if any(sigma < 0 for sigma in sigmas) or list(sigmas) != sorted(sigmas):
        raise LocalMaxEvaluationException(f'The sigmas must be non-negative and sorted, got {list(sigmas)}.')
    points = _in_class_points(test, model, in_class_labels)
    scores = available_scores(model)
    positive_scores = {score: unary_scores(model, score, points) for score in scores}

    settings: Dict[str, Dict[str, float]] = {}
    for index, sigma in enumerate(sigmas):
        rng = np.random.default_rng(derive_seed(seed, f'noise/{index}'))
        negatives = points + sigma * rng.standard_normal(points.shape)
        settings[f'sigma={sigma!r}'] = {
            f'auc_{score}': auc(positive_scores[score], unary_scores(model, score, negatives)) for score in scores
        }

    details: Dict[str, Any] = {
        'sigmas': [float(sigma) for sigma in sigmas],
        'mode': 'all-points' if in_class_labels is None else 'in-class',
    }
    if in_class_labels is not None:
        details['in_class_labels'] = [int(label) for label in in_class_labels]
    return EvalReport('noise-sweep', settings, seed, {'test': len(points)}, model.config_hash, details)


def fixed_noise_eval(
    model: QuadModel,
    test: TestPoints,
    seed: int,
    *,
    sigma: float = FIXED_NOISE_SIGMA,
    in_class_labels: Optional[Sequence[int]] = None,
) -> EvalReport:
    """
    the one-class task with a single noise level: clean test points against their noisy copies.
    """
    return noise_sweep(model, test, [sigma], seed, in_class_labels=in_class_labels)


def write_noise_sweep_csv(path: Path, report: EvalReport) -> None:
    """
    write the sweep as columns (sigma, auc_c, auc_h), one row per sigma.
    """
    sigmas = report.details['sigmas']
    metric_names = sorted(report.settings[report.setting_names()[0]])
    rows = [
        [sigma] + [metrics[name] for name in metric_names]
        for sigma, metrics in zip(sigmas, report.settings.values())
    ]
    write_csv(path, ['sigma'] + metric_names, rows)


def local_correlation(
    model: Optional[QuadModel],
    score: Score,
    test: TestPoints,
    targets: Sequence[float],
    mode: CorrelationMode = CorrelationMode.Local,
    *,
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    pca: Optional[FirstComponentScorer] = None,
) -> EvalReport:
    """
    correlate scores with a per-point target (e.g. survival).
    local mode: pair each point with its nearest other test point, and correlate the target differences
    (point - neighbor) with the score differences, or, for h, with h(point, neighbor).
    standard mode: correlate the raw unary scores with the raw targets.
    @param model: the trained model (None with the pca score)
    @param score: c, h or pca
    @param test: the test points
    @param targets: one target per test point
    @param mode: local or standard
    @param permutations: the permutation test's B (at least 1000)
    @param seed: the root seed of the permutations
    @param pca: the fitted baseline scorer, for the pca score
    @return: the report, setting '<mode>/<score>' with metrics 'pearson_r' and 'permutation_p'
    """
    points = _points_of(test, model, 'test')
    target_vector = np.asarray(targets, dtype=np.float64).reshape(-1)
    if len(points) < 3:
        raise LocalMaxEvaluationException(f'The correlation protocols need at least 3 points, not {len(points)}.')
    if target_vector.shape != (len(points),):
        raise LocalMaxEvaluationException(f'{target_vector.size} targets for {len(points)} test points.')

    details: Dict[str, Any] = {'mode': mode.value, 'score': score.value}
    if CorrelationMode.Standard == mode:
        x, y = unary_scores(model, score, points, pca=pca), target_vector
    else:
        neighbors = nearest_neighbors(points)
        y = target_vector - target_vector[neighbors]
        if Score.H == score:
            x = comparator_apply_batch(_require_model(model).require('h'), points, points[neighbors])
            details['orientation'] = 'h(point, neighbor)'
        else:
            unary = unary_scores(model, score, points, pca=pca)
            x = unary - unary[neighbors]
            details['orientation'] = 'score(point) - score(neighbor)'
        details['target_difference'] = 'target(point) - target(neighbor)'

    r, p = permutation_p_value(
        x, y, permutations=permutations, seed=derive_seed(seed, f'eval/correlation/{mode}/{score}')
    )
    details['permutations'] = permutations
    return EvalReport(
        'correlation',
        {f'{mode}/{score}': {'pearson_r': r, 'permutation_p': p}},
        seed,
        {'test': len(points)},
        '' if model is None else model.config_hash,
        details,
    )
