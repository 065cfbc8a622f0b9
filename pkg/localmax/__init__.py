from localmax.localmax_cli import run as run_according_to_cmd_line_args
from localmax.localmax_quickstart import (
    gmm_split,
    csv_split,
    train_model,
    train_gmm,
    gmm_summaries,
    load_model,
    load_points,
    one_class_auc,
    construct_and_verify,
)
from localmax.ckpt.ckpt_consts import CheckpointVersion, LM_MAGIC
from localmax.data.synthetic import GmmConfig
from localmax.evaluation.protocols import Score, CorrelationMode
from localmax.training.trainer import TrainConfig, TrainResult, Variant
from localmax.utils.classes import ExitCode
from localmax.utils.exceptions import LocalMaxException
from localmax.utils.functions import get_gmm_config_path


__all__ = [
    'run_according_to_cmd_line_args',
    'gmm_split',
    'csv_split',
    'train_model',
    'train_gmm',
    'gmm_summaries',
    'load_model',
    'load_points',
    'one_class_auc',
    'construct_and_verify',
    'CheckpointVersion',
    'LM_MAGIC',
    'GmmConfig',
    'Score',
    'CorrelationMode',
    'TrainConfig',
    'TrainResult',
    'Variant',
    'ExitCode',
    'LocalMaxException',
    'get_gmm_config_path',
]
