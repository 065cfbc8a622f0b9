from localmax.evaluation.statistics import auc, pearson, permutation_p_value, nearest_neighbors
from localmax.evaluation.report import EvalReport
from localmax.evaluation.protocols import (
    Score,
    CorrelationMode,
    FirstComponentScorer,
    one_class_eval,
    noise_sweep,
    fixed_noise_eval,
    local_correlation,
)
from localmax.evaluation.fields import FieldExport, grid_field_export, mode_coverage, center_dominance
