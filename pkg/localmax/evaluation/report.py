from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from localmax.utils.exceptions import LocalMaxEvaluationException
from localmax.utils.functions import read_json, write_json


# metric names with these prefixes / suffixes are range-checked
_AUC_PREFIX = 'auc'
_CORRELATION_SUFFIX = 'r'
_P_VALUE_SUFFIX = 'p'


def _check_metric(setting: str, name: str, value: float) -> None:
    where = f'{setting}/{name}' if setting else name
    if not np.isfinite(value):
        raise LocalMaxEvaluationException(f'The metric {where} is not finite ({value}).')
    suffix = name.rsplit('_', 1)[-1]
    if name.startswith(_AUC_PREFIX) and not 0 <= value <= 1:
        raise LocalMaxEvaluationException(f'The AUC {where} = {value} is outside [0,1].')
    if suffix == _CORRELATION_SUFFIX and not -1 <= value <= 1:
        raise LocalMaxEvaluationException(f'The correlation {where} = {value} is outside [-1,1].')
    if suffix == _P_VALUE_SUFFIX and not 0 < value <= 1:
        raise LocalMaxEvaluationException(f'The p-value {where} = {value} is outside (0,1].')


@dataclasses.dataclass
class EvalReport:
    """
    The metrics of one evaluation protocol, with their provenance.
    settings maps a setting name (e.g. 'sigma=0.1', 'local/c') to its named metrics.
    metric names: auc* in [0,1], *_r in [-1,1], *_p in (0,1].
    """

    protocol: str
    settings: Dict[str, Dict[str, float]]
    seed: int
    sample_counts: Dict[str, int]
    config_hash: str = ''
    details: Dict[str, Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.settings:
            raise LocalMaxEvaluationException(f'The {self.protocol} report has no metrics.')
        for setting, metrics in self.settings.items():
            for name, value in metrics.items():
                _check_metric(setting, name, value)
        for name, count in self.sample_counts.items():
            if count <= 0:
                raise LocalMaxEvaluationException(f'The {self.protocol} report counts {count} {name} samples.')

    def metric(self, setting: str, name: str) -> float:
        try:
            return self.settings[setting][name]
        except KeyError as ke:
            raise LocalMaxEvaluationException(f'The {self.protocol} report has no metric {setting}/{name}.') from ke

    def setting_names(self) -> List[str]:
        return list(self.settings)

    def to_json(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> EvalReport:
        try:
            return EvalReport(
                str(obj['protocol']),
                {setting: {k: float(v) for k, v in metrics.items()} for setting, metrics in obj['settings'].items()},
                int(obj['seed']),
                {k: int(v) for k, v in obj['sample_counts'].items()},
                str(obj.get('config_hash', '')),
                dict(obj.get('details', {})),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise LocalMaxEvaluationException(f'Bad evaluation report json: {e}') from e

    def save(self, path: Path) -> None:
        write_json(path, self.to_json())

    @staticmethod
    def load(path: Path) -> EvalReport:
        return EvalReport.from_json(read_json(path))
