from __future__ import annotations

import copy
import dataclasses
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from localmax.data.dataset import Dataset
from localmax.models.model_suite import GeneratorOutput, QuadModel, Role, build_model, generate
from localmax.network.adam import AdamState, adam_step, init_adam
from localmax.network.network import GradientSet, Network
from localmax.training.checkpoint import TrainingState, save_checkpoint
from localmax.training.losses import (
    LossBreakdown,
    loss_C_gradients,
    loss_Gc_gradients,
    loss_Gh_gradients,
    loss_H_gradients,
)
from localmax.utils.classes import FloatArray, IntArray, PrintTimer, TrainStatistics
from localmax.utils.constants import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_LEARNING_RATE,
    CHECKPOINTS_DIRECTORY_NAME,
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_GENERATOR_HIDDEN,
    DEFAULT_HIDDEN,
    DEFAULT_LAMBDA,
    DIVERGENCE_LEARNING_RATE_FACTOR,
    LEAKY_RELU_DEFAULT_SLOPE,
)
from localmax.utils.exceptions import (
    LocalMaxConfigurationException,
    LocalMaxException,
    LocalMaxInternalException,
    LocalMaxNumericException,
    LocalMaxNumericInputException,
    LocalMaxTrainingDivergedException,
)
from localmax.utils.functions import append_json_line, config_hash, derive_seed, make_rng


class Variant(Enum):
    Full = 'full'
    COnly = 'c_only'
    HOnly = 'h_only'
    SharedGc = 'shared_gc'
    SharedGh = 'shared_gh'

    def __str__(self) -> str:
        return self.value


class Player(Enum):
    Gc = 'g_c'
    C = 'c'
    Gh = 'g_h'
    H = 'h'

    def __str__(self) -> str:
        return self.value


_PHASES: Dict[Variant, List[Player]] = {
    Variant.Full: [Player.Gc, Player.C, Player.Gh, Player.H],
    Variant.COnly: [Player.Gc, Player.C],
    Variant.HOnly: [Player.Gh, Player.H],
    Variant.SharedGc: [Player.Gc, Player.C, Player.H],
    Variant.SharedGh: [Player.C, Player.Gh, Player.H],
}


def phases_for_variant(variant: Variant) -> List[Player]:
    """
    @return: the players trained in each outer iteration, in order
    """
    return list(_PHASES[variant])


def negatives_generator(variant: Variant, player: Player) -> Player:
    """
    @return: the generator whose points are the negatives of the c / h losses in this variant
    """
    if Player.C == player:
        return Player.Gh if Variant.SharedGh == variant else Player.Gc
    if Player.H == player:
        return Player.Gc if Variant.SharedGc == variant else Player.Gh
    return player


@dataclasses.dataclass
class TrainConfig:
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    lam: float = DEFAULT_LAMBDA
    variant: Variant = Variant.Full
    symmetric_lh: bool = False
    seed: int = 0
    shuffle: bool = True
    learning_rate: float = ADAM_LEARNING_RATE
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    hidden: List[int] = dataclasses.field(default_factory=lambda: list(DEFAULT_HIDDEN))
    generator_hidden: List[int] = dataclasses.field(default_factory=lambda: list(DEFAULT_GENERATOR_HIDDEN))
    use_batch_norm: bool = False
    leaky_slope: float = LEAKY_RELU_DEFAULT_SLOPE
    generator_output: GeneratorOutput = GeneratorOutput.Tanh
    checkpoint_every: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise LocalMaxConfigurationException(f'The number of epochs must be at least 1, not {self.epochs}.')
        if self.batch_size < 1:
            raise LocalMaxConfigurationException(f'The batch size must be at least 1, not {self.batch_size}.')
        if self.lam < 0:
            raise LocalMaxConfigurationException(f'lambda must be non-negative, not {self.lam}.')
        if self.seed < 0 or self.seed >= (1 << 64):
            raise LocalMaxConfigurationException(f'The seed must be a 64-bit non-negative number, not {self.seed}.')
        if self.learning_rate <= 0:
            raise LocalMaxConfigurationException(f'The learning rate must be positive, not {self.learning_rate}.')
        if self.checkpoint_every < 0:
            raise LocalMaxConfigurationException('checkpoint_every must be non-negative (0 disables checkpoints).')

    def to_json(self) -> Dict[str, Any]:
        obj = dataclasses.asdict(self)
        obj['variant'] = self.variant.value
        obj['generator_output'] = self.generator_output.value
        return obj

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> TrainConfig:
        known = {field.name for field in dataclasses.fields(TrainConfig)}
        unknown = set(obj) - known
        if unknown:
            raise LocalMaxConfigurationException(f'Unknown training config keys: {sorted(unknown)}.')
        values = dict(obj)
        try:
            if 'variant' in values:
                values['variant'] = Variant(values['variant'])
            if 'generator_output' in values:
                values['generator_output'] = GeneratorOutput(values['generator_output'])
        except ValueError as ve:
            raise LocalMaxConfigurationException(f'Bad training config value: {ve}') from ve
        return TrainConfig(**values)

    def hash(self) -> str:
        return config_hash(self.to_json())


@dataclasses.dataclass
class EpochRecord:
    """
    One (epoch, player) line of the training log: the mean of the per-batch loss values.
    """

    epoch: int
    player: Player
    total: float
    parts: Dict[str, float]
    steps: int
    learning_rate: float

    def to_json(self) -> Dict[str, Any]:
        return {
            'epoch': self.epoch,
            'player': self.player.value,
            'total': self.total,
            'parts': self.parts,
            'steps': self.steps,
            'learning_rate': self.learning_rate,
        }


@dataclasses.dataclass
class TrainResult:
    model: QuadModel
    state: TrainingState
    history: List[EpochRecord]
    statistics: TrainStatistics

    def final_losses(self) -> Dict[str, float]:
        final: Dict[str, float] = {}
        for record in self.history:
            final[record.player.value] = record.total
        return final


def init_quad_model(d: int, cfg: TrainConfig) -> QuadModel:
    """
    initialize the networks the variant trains; each from its own named seed substream.
    """
    present = {player for player in phases_for_variant(cfg.variant)}
    present |= {negatives_generator(cfg.variant, player) for player in present}

    def build(player: Player, role: Role, hidden: List[int]) -> Optional[Network]:
        if player not in present:
            return None
        return build_model(
            role,
            d,
            hidden,
            cfg.use_batch_norm,
            derive_seed(cfg.seed, f'init/{player.value}'),
            slope=cfg.leaky_slope,
            generator_output=cfg.generator_output,
        )

    return QuadModel(
        d,
        build(Player.C, Role.Classifier, cfg.hidden),
        build(Player.H, Role.Comparator, cfg.hidden),
        build(Player.Gc, Role.Generator, cfg.generator_hidden),
        build(Player.Gh, Role.Generator, cfg.generator_hidden),
        cfg.hash(),
    )


PhaseStep = Callable[[FloatArray], Tuple[LossBreakdown, GradientSet]]


def _phase_step(model: QuadModel, cfg: TrainConfig, player: Player) -> Tuple[Network, PhaseStep]:
    """
    @return: the trained network of the phase, and batch -> (loss value, gradients of that network)
    """
    c, h = model.c, model.h
    if Player.C == player:
        c_generator = model.require(negatives_generator(cfg.variant, player).value)
        return model.require('c'), lambda batch: loss_C_gradients(batch, model.require('c'), h, c_generator)
    if Player.H == player:
        h_generator = model.require(negatives_generator(cfg.variant, player).value)
        return model.require('h'), lambda batch: loss_H_gradients(
            batch, c, model.require('h'), h_generator, cfg.symmetric_lh
        )
    if Player.Gc == player:
        return model.require('g_c'), lambda batch: loss_Gc_gradients(batch, model.require('c'), h, model.require('g_c'))
    return model.require('g_h'), lambda batch: loss_Gh_gradients(
        batch, c, model.require('h'), model.require('g_h'), cfg.lam, cfg.symmetric_lh
    )


def _batches(order: IntArray, batch_size: int) -> List[IntArray]:
    return [order[start : start + batch_size] for start in range(0, len(order), batch_size)]  # noqa: E203


def _mean_breakdown(breakdowns: List[LossBreakdown]) -> Tuple[float, Dict[str, float]]:
    total = float(np.mean([breakdown.total for breakdown in breakdowns]))
    parts = {key: float(np.mean([b.parts()[key] for b in breakdowns])) for key in breakdowns[0].parts()}
    return total, parts


def _run_epoch(
    model: QuadModel,
    optimizers: Dict[str, AdamState],
    points: FloatArray,
    cfg: TrainConfig,
    epoch: int,
    rng: np.random.Generator,
    statistics: TrainStatistics,
) -> List[EpochRecord]:
    """
    one outer iteration: every phase of the variant, each over all mini-batches of the same shuffled order.
    @note mutates the model, the optimizers and the rng. raises on a non-finite loss or gradient.
    """
    order = rng.permutation(len(points)) if cfg.shuffle else np.arange(len(points))
    batches = _batches(order, cfg.batch_size)

    records = []
    for player in phases_for_variant(cfg.variant):
        net, step = _phase_step(model, cfg, player)
        optimizer = optimizers[player.value]
        breakdowns = []
        for indices in batches:
            breakdown, gradients = step(points[indices])
            if not breakdown.is_finite():
                raise LocalMaxNumericException(
                    f'Non-finite {player} loss at epoch {epoch}: {breakdown.total} ({breakdown.parts()}).'
                )
            adam_step(net, gradients, optimizer)
            statistics.register_step(player.value)
            breakdowns.append(breakdown)
        total, parts = _mean_breakdown(breakdowns)
        records.append(EpochRecord(epoch, player, total, parts, len(batches), optimizer.learning_rate))
    return records


def _training_points(dataset: Dataset, model: QuadModel) -> FloatArray:
    if dataset.n == 0:
        raise LocalMaxConfigurationException('Can\'t train on an empty dataset.')
    if dataset.d != model.input_dim:
        raise LocalMaxConfigurationException(f'{dataset.d}-d dataset for a {model.input_dim}-d model.')
    if dataset.standardization is None:
        print('Warning:  training on a dataset that was not standardized.')
    return dataset.X


def _train_loop(
    model: QuadModel,
    state: TrainingState,
    points: FloatArray,
    cfg: TrainConfig,
    *,
    out_dir: Optional[Path],
    log_path: Optional[Path],
    statistics: TrainStatistics,
) -> List[EpochRecord]:
    rng = np.random.default_rng()
    rng.bit_generator.state = state.rng_state

    history: List[EpochRecord] = []
    while state.epoch < cfg.epochs:
        epoch = state.epoch + 1
        snapshot = (copy.deepcopy(model), copy.deepcopy(state.optimizers), copy.deepcopy(rng.bit_generator.state))
        try:
            records = _run_epoch(model, state.optimizers, points, cfg, epoch, rng, statistics)
        except (LocalMaxNumericException, LocalMaxNumericInputException) as e:
            last_good_model, last_good_optimizers, last_good_rng_state = snapshot
            last_good_state = TrainingState(
                state.epoch, last_good_optimizers, last_good_rng_state, state.config, state.retried
            )
            if state.retried:
                raise LocalMaxTrainingDivergedException(
                    f'Training diverged again at epoch {epoch}, after the learning rate was already reduced: {e}',
                    (last_good_model, last_good_state),
                ) from e
            print(f'Warning:  {e} Retrying epoch {epoch} with a halved learning rate.')
            _restore(model, last_good_model)
            state.optimizers = last_good_optimizers
            for optimizer in state.optimizers.values():
                optimizer.learning_rate *= DIVERGENCE_LEARNING_RATE_FACTOR
            rng.bit_generator.state = last_good_rng_state
            state.retried = True
            statistics.register_retry()
            continue

        state.epoch = epoch
        state.rng_state = rng.bit_generator.state
        statistics.register_epoch()
        history += records
        if log_path is not None:
            for record in records:
                append_json_line(log_path, record.to_json())
        if out_dir is not None and cfg.checkpoint_every and epoch % cfg.checkpoint_every == 0:
            save_checkpoint(out_dir / CHECKPOINTS_DIRECTORY_NAME / f'epoch_{epoch}.ckpt', model, state)

    return history


def _restore(model: QuadModel, snapshot: QuadModel) -> None:
    model.c, model.h, model.g_c, model.g_h = snapshot.c, snapshot.h, snapshot.g_c, snapshot.g_h


def train(
    dataset: Dataset,
    cfg: TrainConfig,
    *,
    out_dir: Optional[Path] = None,
    log_path: Optional[Path] = None,
    print_time: bool = False,
) -> TrainResult:
    """
    interleaved training: every outer iteration trains each player of the variant for one epoch
    (full: G_c, c, G_h, h), each epoch over all the mini-batches.
    @param dataset: the (standardized) training set
    @param cfg: the training configuration
    @param out_dir: [out]: if given, periodic checkpoints go to out_dir/checkpoints/epoch_k.ckpt
    @param log_path: [out]: if given, the json-lines log, one line per (epoch, player)
    @param print_time: print the training time
    @return: the trained model, its final training state, the loss history and the run statistics
    """
    model = init_quad_model(dataset.d, cfg)
    model.standardization = dataset.standardization
    optimizers = {
        name: init_adam(net, learning_rate=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2)
        for name, net in model.networks().items()
        if Player(name) in phases_for_variant(cfg.variant)
    }
    state = TrainingState(0, optimizers, make_rng(cfg.seed, 'train/shuffle').bit_generator.state, cfg.to_json())
    return _train(model, state, dataset, cfg, out_dir=out_dir, log_path=log_path, print_time=print_time)


def train_variant(
    dataset: Dataset,
    cfg: TrainConfig,
    *,
    out_dir: Optional[Path] = None,
    log_path: Optional[Path] = None,
    print_time: bool = False,
) -> TrainResult:
    """
    train an ablation variant: c_only (G_c, c; no h factor), h_only (G_h, h; no c factor),
    shared_gc / shared_gh (c and h, both fed by the one named generator).
    """
    if Variant.Full == cfg.variant:
        raise LocalMaxConfigurationException('train_variant trains the ablation variants; use train for full.')
    return train(dataset, cfg, out_dir=out_dir, log_path=log_path, print_time=print_time)


def resume(
    model: QuadModel,
    state: TrainingState,
    dataset: Dataset,
    *,
    epochs: Optional[int] = None,
    out_dir: Optional[Path] = None,
    log_path: Optional[Path] = None,
    print_time: bool = False,
) -> TrainResult:
    """
    continue a checkpointed run up to its configured number of epochs (or to a new total).
    the shuffle rng continues its stream, so the result equals the uninterrupted run's.
    """
    obj = dict(state.config)
    if epochs is not None:
        obj['epochs'] = epochs
    cfg = TrainConfig.from_json(obj)
    if state.epoch > cfg.epochs:
        raise LocalMaxConfigurationException(f'The checkpoint is at epoch {state.epoch}, past {cfg.epochs}.')
    state.config = cfg.to_json()
    return _train(model, state, dataset, cfg, out_dir=out_dir, log_path=log_path, print_time=print_time)


def _train(
    model: QuadModel,
    state: TrainingState,
    dataset: Dataset,
    cfg: TrainConfig,
    *,
    out_dir: Optional[Path],
    log_path: Optional[Path],
    print_time: bool,
) -> TrainResult:
    points = _training_points(dataset, model)
    statistics = TrainStatistics()
    try:
        with PrintTimer(f'  train {cfg.variant} (T={cfg.epochs}):  ', print_time=print_time):
            history = _train_loop(
                model, state, points, cfg, out_dir=out_dir, log_path=log_path, statistics=statistics
            )
    except LocalMaxException as lm_exception:
        raise lm_exception
    except Exception as unknown_exception:
        raise LocalMaxInternalException(
            "Unknown exception during training, please report this bug"
        ) from unknown_exception
    if print_time:
        statistics.print()
    return TrainResult(model, state, history, statistics)


def steps_per_epoch(variant: Variant, m: int, batch_size: int) -> int:
    """
    @return: the optimizer steps of one outer iteration, phases * ceil(m / batch_size)
    """
    return len(phases_for_variant(variant)) * (-(-m // batch_size))


def dataset_diameter(points: FloatArray, *, chunk_size: int = 512) -> float:
    """
    @return: the largest pairwise euclidean distance
    """
    diameter = 0.0
    for start in range(0, len(points), chunk_size):
        chunk = points[start : start + chunk_size]  # noqa: E203
        distances = np.linalg.norm(chunk[:, None, :] - points[None, :, :], axis=2)
        diameter = max(diameter, float(distances.max()))
    return diameter


def self_regularization_summary(model: QuadModel, points: FloatArray) -> Dict[str, float]:
    """
    @return: mean ||x - G_h(x)|| over the points, next to the points' diameter
    """
    g_h = model.require('g_h')
    distances = np.linalg.norm(points - generate(g_h, points), axis=1)
    return {'mean_generator_distance': float(np.mean(distances)), 'diameter': dataset_diameter(points)}
