from __future__ import annotations

from typing import Sequence, Tuple, Union

import numpy as np

from localmax.utils.classes import FloatArray, IntArray
from localmax.utils.constants import DEFAULT_PERMUTATIONS, MIN_PERMUTATIONS, PERMUTATION_CHUNK_SIZE
from localmax.utils.exceptions import LocalMaxEvaluationException


Scores = Union[Sequence[float], FloatArray]

# |r_perm| >= |r_obs| is tested with this slack, so equal correlations computed in another order still count
_CORRELATION_TIE_TOLERANCE = 1e-12


def _as_scores(scores: Scores, what: str) -> FloatArray:
    vector = np.asarray(scores, dtype=np.float64).reshape(-1)
    if vector.size == 0:
        raise LocalMaxEvaluationException(f'The {what} scores list is empty.')
    if not np.all(np.isfinite(vector)):
        raise LocalMaxEvaluationException(f'The {what} scores contain non-finite values.')
    return vector


def auc(pos_scores: Scores, neg_scores: Scores) -> float:
    """
    the Mann-Whitney statistic: P(pos > neg) + P(pos == neg) / 2 over all (pos, neg) pairs.
    computed from exact integer win/tie counts, so identical multisets give exactly 0.5.
    @param pos_scores: the scores of the positive points
    @param neg_scores: the scores of the negative points
    @return: the area under the ROC curve, in [0,1]
    """
    positives = _as_scores(pos_scores, 'positive')
    negatives = np.sort(_as_scores(neg_scores, 'negative'))

    below = np.searchsorted(negatives, positives, side='left')
    below_or_equal = np.searchsorted(negatives, positives, side='right')
    wins = int(below.sum())
    ties = int((below_or_equal - below).sum())
    return (2 * wins + ties) / (2 * positives.size * negatives.size)


def pearson(x: Scores, y: Scores) -> float:
    """
    @return: the pearson correlation of x and y; 0 if either is constant
    """
    a = _as_scores(x, 'first')
    b = _as_scores(y, 'second')
    if a.size != b.size:
        raise LocalMaxEvaluationException(f'Correlating vectors of lengths {a.size} and {b.size}.')
    a_centered = a - a.mean()
    b_centered = b - b.mean()
    denominator = np.sqrt(np.dot(a_centered, a_centered) * np.dot(b_centered, b_centered))
    if denominator == 0:
        return 0.0
    return float(np.clip(np.dot(a_centered, b_centered) / denominator, -1.0, 1.0))


def _batch_pearson(x: FloatArray, permuted_y: FloatArray) -> FloatArray:
    """
    @param x: length n
    @param permuted_y: k x n, each row a permutation of y
    @return: the k correlations
    """
    x_centered = x - x.mean()
    y_centered = permuted_y - permuted_y.mean(axis=1, keepdims=True)
    denominator = np.sqrt(np.dot(x_centered, x_centered) * np.einsum('ij,ij->i', y_centered, y_centered))
    with np.errstate(invalid='ignore', divide='ignore'):
        correlations = y_centered @ x_centered / denominator
    return np.where(denominator > 0, correlations, 0.0)


def permutation_p_value(
    x: Scores, y: Scores, *, permutations: int = DEFAULT_PERMUTATIONS, seed: int = 0
) -> Tuple[float, float]:
    """
    two-sided monte-carlo permutation test of the pearson correlation.
    p = (1 + #{b: |r_b| >= |r_obs|}) / (B + 1), so p is on the {k / (B+1)} grid and never 0.
    @param x: the first vector
    @param y: the second vector (permuted)
    @param permutations: B, at least MIN_PERMUTATIONS
    @param seed: the permutations seed
    @return: (r_obs, p)
    """
    if permutations < MIN_PERMUTATIONS:
        raise LocalMaxEvaluationException(f'At least {MIN_PERMUTATIONS} permutations are needed, not {permutations}.')
    a = _as_scores(x, 'first')
    b = _as_scores(y, 'second')
    observed = pearson(a, b)

    rng = np.random.default_rng(seed)
    at_least_as_extreme = 0
    for start in range(0, permutations, PERMUTATION_CHUNK_SIZE):
        chunk = min(PERMUTATION_CHUNK_SIZE, permutations - start)
        permuted = rng.permuted(np.tile(b, (chunk, 1)), axis=1)
        correlations = _batch_pearson(a, permuted)
        at_least_as_extreme += int(np.sum(np.abs(correlations) >= abs(observed) - _CORRELATION_TIE_TOLERANCE))
    return observed, (1 + at_least_as_extreme) / (permutations + 1)


def nearest_neighbors(points: FloatArray) -> IntArray:
    """
    @param points: n x d, n >= 2
    @return: for each point, the index of its euclidean nearest other point (ties to the lowest index)
    """
    if points.ndim != 2 or points.shape[0] < 2:
        raise LocalMaxEvaluationException(f'Nearest neighbors need at least 2 points, got shape {points.shape}.')
    squared = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(squared, np.inf)
    return np.argmin(squared, axis=1).astype(np.int64)
