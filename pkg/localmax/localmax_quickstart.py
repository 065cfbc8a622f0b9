from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from localmax.data.dataset import Dataset, load_csv, split_standardize
from localmax.data.synthetic import GmmConfig, sample_gmm, sample_uniform_background
from localmax.evaluation.fields import center_dominance, mode_coverage
from localmax.evaluation.protocols import Score, one_class_eval
from localmax.models.model_suite import QuadModel, comparator_unary_batch
from localmax.network.network import Network
from localmax.theory.piecewise import TheoryReport, construction_report, count_pieces_lower_bound_check
from localmax.training.checkpoint import load_checkpoint, save_checkpoint
from localmax.training.trainer import (
    TrainConfig,
    TrainResult,
    Variant,
    self_regularization_summary,
    train,
    train_variant,
)
from localmax.utils.classes import FloatArray
from localmax.utils.constants import (
    BACKGROUND_BOUNDS_MARGIN,
    BACKGROUND_DEFAULT_MIN_DISTANCE,
    BACKGROUND_DEFAULT_SAMPLES,
    CENTER_PROBE_STEP,
    DEFAULT_TRAIN_FRACTION,
    FINAL_CHECKPOINT_NAME,
    LOG_FILE_NAME,
)
from localmax.utils.functions import derive_seed


def gmm_split(
    *, gmm: Optional[GmmConfig] = None, seed: int = 0, train_fraction: float = DEFAULT_TRAIN_FRACTION
) -> Tuple[Dataset, Dataset]:
    """
    sample the grid mixture and split it into standardized train and test sets.
    @param gmm: the mixture (the 16-mode 4x4 grid by default); its own seed field is ignored
    @param seed: the root seed; the samples come from the 'synth/gmm' substream, the split from 'data/split'
    @param train_fraction: the train share of the samples
    @return: (train, test), both standardized with the train statistics
    """
    gmm = GmmConfig() if gmm is None else gmm
    raw = sample_gmm(gmm, seed=derive_seed(seed, 'synth/gmm'))
    return split_standardize(raw, train_fraction, derive_seed(seed, 'data/split'))


def csv_split(
    csv_path: Path,
    *,
    target_column: Optional[str] = None,
    label_column: Optional[str] = None,
    seed: int = 0,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
) -> Tuple[Dataset, Dataset]:
    """
    read a numeric csv and split it into standardized train and test sets.
    """
    raw = load_csv(csv_path, target_column, label_column=label_column)
    return split_standardize(raw, train_fraction, derive_seed(seed, 'data/split'))


def train_model(
    train_set: Dataset,
    *,
    cfg: Optional[TrainConfig] = None,
    out_dir: Optional[Path] = None,
    print_time: bool = True,
) -> TrainResult:
    """
    train the networks of a variant on a standardized training set.
    @param train_set: the training set
    @param cfg: the training configuration (the defaults, full variant, if None)
    @param out_dir: [out]: if given, gets the json-lines log, the periodic checkpoints and the final checkpoint
    @param print_time: if true prints the training time and statistics
    @return: the training result

    :note: This is a wrapper function to the trainer.train() / trainer.train_variant() functions.
    """
    cfg = TrainConfig() if cfg is None else cfg
    log_path = None if out_dir is None else out_dir / LOG_FILE_NAME
    train_function = train if Variant.Full == cfg.variant else train_variant
    result = train_function(train_set, cfg, out_dir=out_dir, log_path=log_path, print_time=print_time)
    if out_dir is not None:
        save_checkpoint(out_dir / FINAL_CHECKPOINT_NAME, result.model, result.state)
    return result


def gmm_background(gmm: GmmConfig, *, seed: int = 0, n: int = BACKGROUND_DEFAULT_SAMPLES) -> FloatArray:
    """
    @return: n uniform points around the grid, each at least BACKGROUND_DEFAULT_MIN_DISTANCE from every center
     (in data units, drawn from the 'synth/background' substream)
    """
    low, high = min(gmm.grid) - BACKGROUND_BOUNDS_MARGIN, max(gmm.grid) + BACKGROUND_BOUNDS_MARGIN
    return sample_uniform_background(
        [(low, high)] * gmm.dim,
        n,
        BACKGROUND_DEFAULT_MIN_DISTANCE,
        derive_seed(seed, 'synth/background'),
        centers=gmm.centers(),
    )


def gmm_summaries(
    model: QuadModel, gmm: GmmConfig, train_set: Dataset, test: Dataset, *, seed: int = 0
) -> Dict[str, Any]:
    """
    how well a model trained on the grid mixture captures its modes:
    the centers c accepts, the centers h prefers over their compass neighbors, the AUC of c against a
    uniform background, the mean h(x, x) on held-out points, and the generator's self-regularization.
    only the summaries of the networks the model has are reported.
    """
    networks = model.networks()
    centers = gmm.centers()
    summaries: Dict[str, Any] = {}
    if 'c' in networks:
        summaries['mode_coverage'] = mode_coverage(model, centers)
        background = gmm_background(gmm, seed=seed)
        if model.standardization is not None:
            background = model.standardization.apply(background)
        summaries['background_auc_c'] = one_class_eval(model, Score.C, test, background, seed=seed).metric('c', 'auc')
    if 'h' in networks:
        if gmm.dim == 2:
            summaries['center_dominance'] = center_dominance(model, centers, CENTER_PROBE_STEP)
        summaries['mean_h_unary_test'] = float(np.mean(comparator_unary_batch(networks['h'], test.X)))
    if 'g_h' in networks:
        summaries['self_regularization'] = self_regularization_summary(model, train_set.X)
    return summaries


def train_gmm(
    *,
    cfg: Optional[TrainConfig] = None,
    gmm: Optional[GmmConfig] = None,
    out_dir: Optional[Path] = None,
    print_time: bool = True,
) -> Tuple[TrainResult, Dict[str, Any]]:
    """
    sample the grid mixture (seeded by cfg.seed), train on it, and summarize the mode capture.
    @return: the training result and its gmm summaries
    """
    cfg = TrainConfig() if cfg is None else cfg
    gmm = GmmConfig() if gmm is None else gmm
    train_set, test = gmm_split(gmm=gmm, seed=cfg.seed)
    result = train_model(train_set, cfg=cfg, out_dir=out_dir, print_time=print_time)
    return result, gmm_summaries(result.model, gmm, train_set, test, seed=cfg.seed)


def load_model(checkpoint_path: Path) -> QuadModel:
    model, _ = load_checkpoint(checkpoint_path)
    return model


def load_points(
    csv_path: Path,
    model: QuadModel,
    *,
    target_column: Optional[str] = None,
    label_column: Optional[str] = None,
) -> Dataset:
    """
    read evaluation points (in data units) and standardize them with the model's training statistics.
    """
    points = load_csv(csv_path, target_column, label_column=label_column)
    if model.standardization is None:
        return points
    return points.standardized_with(model.standardization)


def one_class_auc(checkpoint_path: Path, positives_csv: Path, negatives_csv: Path, *, score: Score = Score.C) -> float:
    """
    @return: the AUC of a checkpointed model's score, positives against negatives
    """
    model = load_model(checkpoint_path)
    positives = load_points(positives_csv, model)
    negatives = load_points(negatives_csv, model)
    return one_class_eval(model, score, positives, negatives).metric(score.value, 'auc')


def construct_and_verify(points: Sequence[float]) -> Tuple[Network, List[TheoryReport]]:
    """
    construct the one-hidden-layer network whose strict local maxima are exactly the points, and check it.
    @return: the network, and its reports: the construction itself, then the piece-count lower bounds
    """
    net, report = construction_report(points)
    return net, [report] + count_pieces_lower_bound_check(points, net)
