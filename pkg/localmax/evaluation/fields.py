from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from localmax.models.model_suite import QuadModel, classifier_scores, comparator_apply_batch
from localmax.utils.classes import FloatArray
from localmax.utils.constants import (
    DECISION_THRESHOLD,
    DEFAULT_FIELD_BOUNDS,
    DEFAULT_FIELD_RESOLUTION,
    HEATMAP_FILE_NAME,
    MIN_FIELD_RESOLUTION,
    QUIVER_FILE_NAME,
)
from localmax.utils.exceptions import LocalMaxEvaluationException
from localmax.utils.functions import write_csv


_DIAGONAL = 1.0 / np.sqrt(2.0)

# east, north-east, north, ..., south-east
COMPASS_DIRECTIONS: FloatArray = np.array(
    [
        [1.0, 0.0],
        [_DIAGONAL, _DIAGONAL],
        [0.0, 1.0],
        [-_DIAGONAL, _DIAGONAL],
        [-1.0, 0.0],
        [-_DIAGONAL, -_DIAGONAL],
        [0.0, -1.0],
        [_DIAGONAL, -_DIAGONAL],
    ]
)


@dataclasses.dataclass
class FieldExport:
    """
    heatmap rows: (x1, x2, c(x)). quiver rows: (x1, x2, u1, u2), u the compass direction h prefers.
    None for a field whose network the model lacks.
    """

    heatmap: Optional[FloatArray]
    quiver: Optional[FloatArray]
    probe_step: float

    def write(self, out_dir: Path) -> List[Path]:
        """
        @return: the written csv paths
        """
        written: List[Path] = []
        if self.heatmap is not None:
            write_csv(out_dir / HEATMAP_FILE_NAME, ['x1', 'x2', 'c'], self.heatmap.tolist())
            written.append(out_dir / HEATMAP_FILE_NAME)
        if self.quiver is not None:
            write_csv(out_dir / QUIVER_FILE_NAME, ['x1', 'x2', 'u1', 'u2'], self.quiver.tolist())
            written.append(out_dir / QUIVER_FILE_NAME)
        return written


def _to_model_space(model: QuadModel, points: FloatArray, data_space: bool) -> FloatArray:
    if data_space and model.standardization is not None:
        return model.standardization.apply(points)
    return points


def _verify_2d(model: QuadModel) -> None:
    if model.input_dim != 2:
        raise LocalMaxEvaluationException(f'Fields are exported for 2-d models, not {model.input_dim}-d.')


def grid_points(bounds: Tuple[float, float, float, float], resolution: int) -> Tuple[FloatArray, float]:
    """
    @param bounds: (x1_low, x1_high, x2_low, x2_high)
    @param resolution: points per axis
    @return: the resolution^2 x 2 grid (x1 slowest), and the smaller of the two cell sizes
    """
    x1_low, x1_high, x2_low, x2_high = bounds
    if resolution < MIN_FIELD_RESOLUTION:
        raise LocalMaxEvaluationException(f'The field resolution must be at least {MIN_FIELD_RESOLUTION}.')
    if x1_high <= x1_low or x2_high <= x2_low:
        raise LocalMaxEvaluationException(f'Bad field bounds {bounds}.')
    x1 = np.linspace(x1_low, x1_high, resolution)
    x2 = np.linspace(x2_low, x2_high, resolution)
    grid = np.stack(np.meshgrid(x1, x2, indexing='ij'), axis=-1).reshape(-1, 2)
    cell = min((x1_high - x1_low) / (resolution - 1), (x2_high - x2_low) / (resolution - 1))
    return grid, cell


def _probe_comparisons(
    model: QuadModel, points: FloatArray, step: float, data_space: bool, *, probe_first: bool
) -> FloatArray:
    """
    @return: n x 8 matrix of h(x + step*d, x) (probe_first) or h(x, x + step*d), per compass direction d
    """
    h = model.require('h')
    anchors = _to_model_space(model, points, data_space)
    columns = []
    for direction in COMPASS_DIRECTIONS:
        probes = _to_model_space(model, points + step * direction, data_space)
        if probe_first:
            columns.append(comparator_apply_batch(h, probes, anchors))
        else:
            columns.append(comparator_apply_batch(h, anchors, probes))
    return np.stack(columns, axis=1)


def grid_field_export(
    model: QuadModel,
    bounds: Tuple[float, float, float, float] = DEFAULT_FIELD_BOUNDS,
    resolution: int = DEFAULT_FIELD_RESOLUTION,
    *,
    data_space: bool = True,
) -> FieldExport:
    """
    evaluate c over a 2-d grid (heatmap), and the direction of maximal increase of h (quiver):
    the compass direction d maximizing h(x + delta*d, x), delta the grid cell size (the smaller axis).
    @param model: a 2-d model
    @param bounds: (x1_low, x1_high, x2_low, x2_high)
    @param resolution: points per axis, at least 16
    @param data_space: the bounds are in the data's original units (the model's standardization is applied
     before evaluating); False when they are already in the model's input space
    @return: the export (resolution^2 rows per field)
    """
    _verify_2d(model)
    grid, cell = grid_points(bounds, resolution)
    networks = model.networks()

    heatmap = None
    if 'c' in networks:
        values = classifier_scores(networks['c'], _to_model_space(model, grid, data_space))
        heatmap = np.column_stack([grid, values])

    quiver = None
    if 'h' in networks:
        comparisons = _probe_comparisons(model, grid, cell, data_space, probe_first=True)
        quiver = np.column_stack([grid, COMPASS_DIRECTIONS[np.argmax(comparisons, axis=1)]])

    return FieldExport(heatmap, quiver, cell)


def mode_coverage(model: QuadModel, centers: FloatArray, *, data_space: bool = True) -> Dict[str, float]:
    """
    @return: how many of the mixture centers c classifies as positive (c > 0.5), and the c values there
    """
    values = classifier_scores(model.require('c'), _to_model_space(model, centers, data_space))
    return {
        'covered_modes': int(np.sum(values > DECISION_THRESHOLD)),
        'modes': len(centers),
        'min_c_at_centers': float(values.min()),
        'mean_c_at_centers': float(values.mean()),
    }


def center_dominance(
    model: QuadModel, centers: FloatArray, step: float, *, data_space: bool = True
) -> Dict[str, float]:
    """
    per center, the mean over the 8 compass probes of h(center, center + step*d): does the center beat
    its perturbations?
    @return: the number of dominant centers (mean > 0.5) and the overall mean
    """
    if step <= 0:
        raise LocalMaxEvaluationException(f'The probe step must be positive, not {step}.')
    _verify_2d(model)
    means = _probe_comparisons(model, centers, step, data_space, probe_first=False).mean(axis=1)
    return {
        'dominant_centers': int(np.sum(means > DECISION_THRESHOLD)),
        'centers': len(centers),
        'mean_center_preference': float(means.mean()),
    }
