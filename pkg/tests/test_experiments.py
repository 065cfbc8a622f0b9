import json
import operator
from pathlib import Path
from typing import Any, Callable, Dict, List

import numpy as np

from localmax import gmm_split, gmm_summaries, train_model
from localmax.data.synthetic import GmmConfig
from localmax.training.checkpoint import load_checkpoint, save_checkpoint
from localmax.training.trainer import TrainConfig, Variant
from localmax.utils.functions import create_parent_directories


GMM_SUFFIX = '.gmm.json'

ROOT_PATH = Path(__file__).parent.parent

COMPARISONS: Dict[str, Callable[[float, float], bool]] = {
    '>=': operator.ge,
    '>': operator.gt,
    '<': operator.lt,
}


class TrainTestArgs:
    """
    Arguments class for a train test
    """

    num_of_csv_line_args = 8

    def __init__(
        self,
        test_name: str,
        variant__str: str,
        epochs__str: str,
        seed__str: str,
        samples__str: str,
        sigma__str: str,
        generator_output: str,
        ckpt_out_path: str,
    ):
        """
        handling a line.split() from a csv file
        """
        self.test_name = test_name
        self.cfg = TrainConfig.from_json(
            {
                'variant': variant__str,
                'epochs': int(epochs__str),
                'seed': int(seed__str),
                'generator_output': generator_output,
            }
        )
        self.gmm = GmmConfig(n=int(samples__str), sigma=float(sigma__str))
        self.ckpt_out_path = ROOT_PATH / ckpt_out_path
        self.gmm_out_path = Path(f'{self.ckpt_out_path.absolute()}{GMM_SUFFIX}')

    def __repr__(self) -> str:
        return self.test_name


def test_train(train_args: TrainTestArgs) -> None:
    """
    train a variant on the grid mixture, and save its final checkpoint (and the mixture it was trained on).
    @param train_args: the test's arguments
    """
    print(f'Training test {train_args.test_name}:')

    train_set, _ = gmm_split(gmm=train_args.gmm, seed=train_args.cfg.seed)
    result = train_model(train_set, cfg=train_args.cfg, print_time=True)

    assert result.state.epoch == train_args.cfg.epochs
    assert all(np.isfinite(loss) for loss in result.final_losses().values())

    create_parent_directories(train_args.ckpt_out_path)
    save_checkpoint(train_args.ckpt_out_path, result.model, result.state)
    with open(train_args.gmm_out_path, 'w') as gmm_file:
        json.dump(train_args.gmm.to_json(), gmm_file)


class EvalTestArgs:
    """
    Arguments class for an eval test
    """

    num_of_csv_line_args = 6

    def __init__(
        self,
        test_name: str,
        ckpt_paths: str,
        metric: str,
        comparison: str,
        reference: str,
        required_passes__str: str,
    ):
        """
        @note handling a line.split() (each is stripped) from a csv file.
         the reference is a number, or a '|' separated list of baseline checkpoints (one per checkpoint).
        """
        assert comparison in COMPARISONS
        self.test_name = test_name
        self.ckpt_paths = [ROOT_PATH / path.strip() for path in ckpt_paths.split('|')]
        self.metric = metric
        self.comparison = comparison

        self.threshold = None
        self.baseline_paths: List[Path] = []
        if reference.endswith('.ckpt'):
            self.baseline_paths = [ROOT_PATH / path.strip() for path in reference.split('|')]
            assert len(self.baseline_paths) == len(self.ckpt_paths)
        else:
            self.threshold = float(reference)

        self.required_passes = int(required_passes__str)
        assert 1 <= self.required_passes <= len(self.ckpt_paths)

    def __repr__(self) -> str:
        return self.test_name


def flat_gmm_metrics(summaries: Dict[str, Any]) -> Dict[str, float]:
    """
    @return: the nested gmm summaries as one flat metric dictionary (plus the generator's slack below the diameter)
    """
    metrics: Dict[str, float] = {}
    for name, value in summaries.items():
        if isinstance(value, dict):
            metrics.update({key: float(inner) for key, inner in value.items()})
        else:
            metrics[name] = float(value)
    if 'mean_generator_distance' in metrics:
        metrics['generator_distance_below_diameter'] = metrics['diameter'] - metrics['mean_generator_distance']
    return metrics


def checkpoint_metric(ckpt_path: Path, metric: str) -> float:
    """
    recompute the gmm summaries of a trained checkpoint, on the held-out split of the mixture it was trained on.
    """
    model, state = load_checkpoint(ckpt_path)
    assert state is not None
    seed = int(state.config['seed'])
    with open(f'{ckpt_path.absolute()}{GMM_SUFFIX}', 'r') as gmm_file:
        gmm = GmmConfig(**json.load(gmm_file))

    train_set, test = gmm_split(gmm=gmm, seed=seed)
    metrics = flat_gmm_metrics(gmm_summaries(model, gmm, train_set, test, seed=seed))
    assert metric in metrics, f'{ckpt_path.name} has no metric {metric} (has {sorted(metrics)})'
    return metrics[metric]


def test_eval(eval_args: EvalTestArgs) -> None:
    """
    Evaluate the trained checkpoints, and assert that enough of them (seeds) pass the comparison.
    @param eval_args: the test's arguments
    """
    print(f'Evaluating test {eval_args.test_name}:')
    compare = COMPARISONS[eval_args.comparison]

    passes = 0
    for index, ckpt_path in enumerate(eval_args.ckpt_paths):
        value = checkpoint_metric(ckpt_path, eval_args.metric)
        if eval_args.threshold is not None:
            reference = eval_args.threshold
        else:
            reference = checkpoint_metric(eval_args.baseline_paths[index], eval_args.metric)
        passed = compare(value, reference)
        print(f'  {ckpt_path.name}: {eval_args.metric} = {value!r} {eval_args.comparison} {reference!r}: {passed}')
        passes += passed

    assert passes >= eval_args.required_passes, (
        f'{eval_args.test_name}: only {passes} of {len(eval_args.ckpt_paths)} checkpoints passed '
        f'(needed {eval_args.required_passes}).'
    )


def test_variants_are_known() -> None:
    assert {variant.value for variant in Variant} == {'full', 'c_only', 'h_only', 'shared_gc', 'shared_gh'}
