import argparse
import os
import shutil
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, NoReturn, Optional

from localmax import localmax_quickstart
from localmax.data.dataset import Dataset, load_csv, save_csv
from localmax.data.synthetic import GmmConfig, gmm_manifest, sample_gmm, sample_point_set_1d
from localmax.evaluation.fields import grid_field_export
from localmax.evaluation.protocols import (
    CorrelationMode,
    FirstComponentScorer,
    Score,
    available_scores,
    local_correlation,
    noise_sweep,
    one_class_eval,
    write_noise_sweep_csv,
)
from localmax.evaluation.report import EvalReport
from localmax.models.model_suite import QuadModel
from localmax.theory.complexity import (
    MarginRiskConfig,
    bound_penalty_proxy,
    bound_penalty_terms,
    margin_empirical_risk,
    model_decision_function,
    model_value_function,
    spectral_complexity,
)
from localmax.theory.piecewise import count_pieces_lower_bound_check, extract_pieces
from localmax.training.checkpoint import load_network, save_network
from localmax.training.trainer import TrainConfig, Variant
from localmax.utils.classes import ExitCode, PrintTimer
from localmax.utils.constants import (
    BACKGROUND_DEFAULT_MIN_DISTANCE,
    BACKGROUND_DEFAULT_SAMPLES,
    BOUND_DEFAULT_DELTA,
    CONFIG_FILE_NAME,
    DATA_FILE_NAME,
    DEFAULT_FIELD_BOUNDS,
    DEFAULT_FIELD_RESOLUTION,
    DEFAULT_NOISE_SIGMAS,
    DEFAULT_PERMUTATIONS,
    DEFAULT_TRAIN_FRACTION,
    MANIFEST_FILE_NAME,
    MARGIN_DEFAULT_EPSILON,
    MARGIN_DEFAULT_GAMMA,
    MARGIN_DEFAULT_SAMPLES,
    METRICS_FILE_NAME,
    NETWORK_FILE_NAME,
    NOISE_SWEEP_FILE_NAME,
    TEST_DATA_FILE_NAME,
)
from localmax.utils.exceptions import (
    LocalMaxConfigurationException,
    LocalMaxException,
    LocalMaxNumericException,
    LocalMaxTheoryException,
    LocalMaxUsageException,
)
from localmax.utils.functions import derive_seed, parse_float_list, read_json, write_json

ErrorFunc = Callable[[str], None]

MODEL_KEYS = ('hidden', 'generator_hidden', 'use_batch_norm', 'leaky_slope', 'generator_output')
TRAINING_KEYS = (
    'epochs',
    'batch_size',
    'lam',
    'variant',
    'symmetric_lh',
    'shuffle',
    'learning_rate',
    'beta1',
    'beta2',
    'checkpoint_every',
)
DATA_KEYS = ('source', 'path', 'target_column', 'label_column', 'train_fraction', 'gmm')
GMM_KEYS = ('grid', 'sigma', 'n', 'dim')


class LocalMaxArgumentParser(argparse.ArgumentParser):
    """
    An argument parser that raises instead of exiting on bad arguments.
    """

    def error(self, message: str) -> NoReturn:
        raise LocalMaxUsageException(f'{self.prog}: error: {message}')


def default_config() -> Dict[str, Any]:
    """
    @return: the resolved configuration made of the constants alone (sections seed, model, training, data)
    """
    train_json = TrainConfig().to_json()
    gmm_json = GmmConfig().to_json()
    return {
        'seed': 0,
        'model': {key: train_json[key] for key in MODEL_KEYS},
        'training': {key: train_json[key] for key in TRAINING_KEYS},
        'data': {
            'source': 'gmm',
            'path': None,
            'target_column': None,
            'label_column': None,
            'train_fraction': DEFAULT_TRAIN_FRACTION,
            'gmm': {key: gmm_json[key] for key in GMM_KEYS},
        },
    }


def _merge_section(resolved: Dict[str, Any], section: str, values: Any, keys: Any, where: str) -> None:
    if not isinstance(values, dict):
        raise LocalMaxConfigurationException(f'{where}: the "{section}" section must be an object.')
    unknown = set(values) - set(keys)
    if unknown:
        raise LocalMaxConfigurationException(f'{where}: unknown "{section}" keys {sorted(unknown)}.')
    for key, value in values.items():
        if key == 'gmm':
            _merge_section(resolved[key], 'data.gmm', value, GMM_KEYS, where)
        else:
            resolved[key] = value


def resolve_config(args: argparse.Namespace) -> Dict[str, Any]:
    """
    resolve the run configuration: command line flags > the --config file > the constants.
    @param args: the parsed arguments
    @return: the resolved configuration
    """
    resolved = default_config()
    sections = {'model': MODEL_KEYS, 'training': TRAINING_KEYS, 'data': DATA_KEYS}

    if args.config is not None:
        file_config = read_json(Path(args.config))
        if not isinstance(file_config, dict):
            raise LocalMaxConfigurationException(f'{args.config}: the configuration must be a json object.')
        unknown = set(file_config) - set(sections) - {'seed'}
        if unknown:
            raise LocalMaxConfigurationException(f'{args.config}: unknown configuration sections {sorted(unknown)}.')
        if 'seed' in file_config:
            resolved['seed'] = file_config['seed']
        for section, keys in sections.items():
            if section in file_config:
                _merge_section(resolved[section], section, file_config[section], keys, args.config)

    if args.seed is not None:
        resolved['seed'] = args.seed
    for flag, key in (('variant', 'variant'), ('epochs', 'epochs')):
        value = getattr(args, flag, None)
        if value is not None:
            resolved['training'][key] = value
    data_path = getattr(args, 'data', None)
    if data_path is not None:
        resolved['data']['source'] = 'csv'
        resolved['data']['path'] = str(data_path)
    for flag in ('target_column', 'label_column'):
        value = getattr(args, flag, None)
        if value is not None:
            resolved['data'][flag] = value
    gmm_n = getattr(args, 'n', None)
    if gmm_n is not None:
        resolved['data']['gmm']['n'] = gmm_n
    sigma = getattr(args, 'sigma', None)
    if sigma is not None:
        resolved['data']['gmm']['sigma'] = sigma

    train_config_of(resolved)
    return resolved


def train_config_of(resolved: Dict[str, Any]) -> TrainConfig:
    try:
        return TrainConfig.from_json({**resolved['model'], **resolved['training'], 'seed': int(resolved['seed'])})
    except TypeError as te:
        raise LocalMaxConfigurationException(f'Bad training configuration: {te}') from te


def gmm_config_of(resolved: Dict[str, Any]) -> GmmConfig:
    try:
        return GmmConfig(**resolved['data']['gmm'])
    except TypeError as te:
        raise LocalMaxConfigurationException(f'Bad gmm configuration: {te}') from te


@contextmanager
def output_directory(out: Path) -> Iterator[Path]:
    """
    yield a fresh work directory next to out; it becomes out only if the block completes.
    @param out: the output directory. must not exist, or be empty
    """
    if out.exists() and (not out.is_dir() or any(out.iterdir())):
        raise LocalMaxUsageException(f'The output directory {out} already exists and is not empty.')
    out.absolute().parent.mkdir(parents=True, exist_ok=True)
    work_dir = Path(tempfile.mkdtemp(prefix=f'.{out.name}.', dir=out.absolute().parent))
    try:
        yield work_dir
    except BaseException:
        shutil.rmtree(work_dir, ignore_errors=True)
        raise
    if out.exists():
        out.rmdir()
    os.replace(work_dir, out)


def verify_file_exists(error_func: ErrorFunc, path: Optional[Path], what: str) -> None:
    """
    verify that the file exists.
    @param error_func: the parser's error function
    @param path: the file's path
    @param what: the file's description, for the error message
    """
    if path is None:
        error_func(f'the {what} is required.')
    elif not path.is_file():
        error_func(f'the {what} {path} does not exist.')


def _model_of(args: argparse.Namespace, error_func: ErrorFunc) -> QuadModel:
    verify_file_exists(error_func, args.checkpoint, 'checkpoint')
    return localmax_quickstart.load_model(args.checkpoint)


def _merged_report(reports: List[EvalReport]) -> EvalReport:
    first = reports[0]
    settings = {name: metrics for report in reports for name, metrics in report.settings.items()}
    return EvalReport(first.protocol, settings, first.seed, first.sample_counts, first.config_hash, first.details)


def synth(args: argparse.Namespace, resolved: Dict[str, Any], work_dir: Path) -> None:
    """
    write a synthetic dataset (data.csv) and its manifest.
    """
    seed = int(resolved['seed'])
    gmm = gmm_config_of(resolved)
    if 'gmm' == args.generator:
        dataset = sample_gmm(gmm, seed=derive_seed(seed, 'synth/gmm'))
        manifest = gmm_manifest(gmm, dataset.n, seed)
    elif 'background' == args.generator:
        n = BACKGROUND_DEFAULT_SAMPLES if args.n is None else args.n
        points = localmax_quickstart.gmm_background(gmm, seed=seed, n=n)
        dataset = Dataset(points, feature_names=[f'x{i + 1}' for i in range(gmm.dim)])
        manifest = {
            'generator': 'background',
            'config': gmm.to_json(),
            'min_dist_from_centers': BACKGROUND_DEFAULT_MIN_DISTANCE,
            'n': n,
            'seed': seed,
        }
    else:
        points_1d = sample_point_set_1d(args.m, derive_seed(seed, 'synth/points1d'))
        dataset = Dataset(points_1d.reshape(-1, 1), feature_names=['x1'])
        manifest = {'generator': 'points1d', 'm': args.m, 'n': args.m, 'seed': seed}

    save_csv(work_dir / DATA_FILE_NAME, dataset)
    write_json(work_dir / MANIFEST_FILE_NAME, manifest)


def train(args: argparse.Namespace, resolved: Dict[str, Any], work_dir: Path) -> None:
    """
    train the configured variant; write the log, checkpoints, the held-out split (test.csv) and metrics.json.
    """
    cfg = train_config_of(resolved)
    data = resolved['data']
    gmm: Optional[GmmConfig] = None
    if 'gmm' == data['source']:
        gmm = gmm_config_of(resolved)
        train_set, test = localmax_quickstart.gmm_split(gmm=gmm, seed=cfg.seed, train_fraction=data['train_fraction'])
    elif 'csv' == data['source']:
        csv_path = None if data['path'] is None else Path(data['path'])
        verify_file_exists(args.error_func, csv_path, 'data file')
        assert csv_path is not None
        train_set, test = localmax_quickstart.csv_split(
            csv_path,
            target_column=data['target_column'],
            label_column=data['label_column'],
            seed=cfg.seed,
            train_fraction=data['train_fraction'],
        )
    else:
        raise LocalMaxConfigurationException(f'Unknown data source "{data["source"]}" (gmm or csv).')

    assert test.standardization is not None
    raw_test = Dataset(test.standardization.invert(test.X), test.targets, test.labels, test.feature_names)
    save_csv(work_dir / TEST_DATA_FILE_NAME, raw_test)

    result = localmax_quickstart.train_model(train_set, cfg=cfg, out_dir=work_dir, print_time=not args.silent)
    metrics: Dict[str, Any] = {
        'variant': cfg.variant.value,
        'config_hash': result.model.config_hash,
        'parameters_hash': result.model.parameters_hash(),
        'final_losses': result.final_losses(),
        'steps': dict(result.statistics.steps_per_player),
        'total_steps': result.statistics.total_steps,
        'retried': result.state.retried,
        'train_samples': train_set.n,
        'test_samples': test.n,
    }
    if gmm is not None:
        metrics.update(localmax_quickstart.gmm_summaries(result.model, gmm, train_set, test, seed=cfg.seed))
    write_json(work_dir / METRICS_FILE_NAME, metrics)


def eval_oneclass(args: argparse.Namespace, resolved: Dict[str, Any], work_dir: Path) -> None:
    model = _model_of(args, args.error_func)
    verify_file_exists(args.error_func, args.positives, 'positives file')
    verify_file_exists(args.error_func, args.negatives, 'negatives file')
    positives = localmax_quickstart.load_points(args.positives, model)
    negatives = localmax_quickstart.load_points(args.negatives, model)
    scores = available_scores(model) if args.score is None else [Score(args.score)]
    seed = int(resolved['seed'])
    report = _merged_report([one_class_eval(model, score, positives, negatives, seed=seed) for score in scores])
    report.save(work_dir / METRICS_FILE_NAME)


def eval_noise(args: argparse.Namespace, resolved: Dict[str, Any], work_dir: Path) -> None:
    model = _model_of(args, args.error_func)
    verify_file_exists(args.error_func, args.data, 'data file')
    test = localmax_quickstart.load_points(args.data, model, label_column=args.label_column)
    in_class = None if args.in_class is None else [int(label) for label in parse_float_list(args.in_class)]
    sigmas = DEFAULT_NOISE_SIGMAS if args.sigmas is None else parse_float_list(args.sigmas)
    report = noise_sweep(model, test, sigmas, int(resolved['seed']), in_class_labels=in_class)
    report.save(work_dir / METRICS_FILE_NAME)
    write_noise_sweep_csv(work_dir / NOISE_SWEEP_FILE_NAME, report)


def eval_correlation(args: argparse.Namespace, resolved: Dict[str, Any], work_dir: Path) -> None:
    score = Score(args.score)
    verify_file_exists(args.error_func, args.data, 'data file')
    model: Optional[QuadModel] = None
    if Score.Pca != score or args.checkpoint is not None:
        model = _model_of(args, args.error_func)

    if model is not None:
        test = localmax_quickstart.load_points(args.data, model, target_column=args.target_column)
    else:
        test = load_csv(args.data, args.target_column)

    pca = None
    if Score.Pca == score:
        verify_file_exists(args.error_func, args.train_data, 'training data file (for the pca score)')
        if model is not None:
            fit_points = localmax_quickstart.load_points(args.train_data, model).X
        else:
            train_set, _ = localmax_quickstart.csv_split(args.train_data, seed=int(resolved['seed']))
            assert train_set.standardization is not None
            fit_points = train_set.X
            test = test.standardized_with(train_set.standardization)
        pca = FirstComponentScorer.fit(fit_points)

    if test.targets is None:
        raise LocalMaxConfigurationException(f'{args.data}: the target column "{args.target_column}" is required.')
    report = local_correlation(
        model,
        score,
        test,
        test.targets,
        CorrelationMode(args.mode),
        permutations=args.permutations,
        seed=int(resolved['seed']),
        pca=pca,
    )
    report.save(work_dir / METRICS_FILE_NAME)


def export_field(args: argparse.Namespace, resolved: Dict[str, Any], work_dir: Path) -> None:
    model = _model_of(args, args.error_func)
    bounds = DEFAULT_FIELD_BOUNDS
    if args.bounds is not None:
        values = parse_float_list(args.bounds)
        if len(values) != 4:
            args.error_func(f'--bounds takes 4 numbers (x1_low,x1_high,x2_low,x2_high), not "{args.bounds}".')
        bounds = (values[0], values[1], values[2], values[3])
    export = grid_field_export(model, bounds, args.resolution)
    written = export.write(work_dir)
    write_json(
        work_dir / METRICS_FILE_NAME,
        {
            'bounds': list(bounds),
            'resolution': args.resolution,
            'probe_step': export.probe_step,
            'files': [path.name for path in written],
        },
    )


def _theory_construct(args: argparse.Namespace, work_dir: Path) -> Dict[str, Any]:
    if args.points is None:
        args.error_func('theory construct needs --points.')
    points = parse_float_list(args.points)
    net, reports = localmax_quickstart.construct_and_verify(points)
    save_network(work_dir / NETWORK_FILE_NAME, net, extra={'points': sorted(points)})
    construction = reports[0].to_json()
    construction['checks'] = [report.to_json() for report in reports[1:]]
    construction['passed'] = all(report.passed for report in reports)
    if args.verify and not construction['passed']:
        raise LocalMaxTheoryException(f'The constructed network failed its checks for the points {points}.')
    return construction


def _theory_extract(args: argparse.Namespace) -> Dict[str, Any]:
    verify_file_exists(args.error_func, args.network, 'network file')
    net = load_network(args.network)
    pieces = extract_pieces(net)
    report: Dict[str, Any] = {'pieces': pieces.num_pieces, **pieces.to_json()}
    if args.points is not None:
        checks = count_pieces_lower_bound_check(parse_float_list(args.points), net)
        report['checks'] = [check.to_json() for check in checks]
        report['passed'] = all(check.passed for check in checks)
    return report


def _theory_complexity(args: argparse.Namespace) -> Dict[str, Any]:
    if args.network is not None:
        verify_file_exists(args.error_func, args.network, 'network file')
        return {'spectral_complexity': {'net': spectral_complexity(load_network(args.network))}}
    model = _model_of(args, args.error_func)
    return {'spectral_complexity': {name: spectral_complexity(net) for name, net in model.networks().items()}}


def _theory_bound(args: argparse.Namespace, resolved: Dict[str, Any]) -> Dict[str, Any]:
    model = _model_of(args, args.error_func)
    v_net, f_net = model.require('h'), model.require('c')
    cfg = MarginRiskConfig(args.gamma1, args.gamma2, args.epsilon, args.samples, args.domain_radius)
    report: Dict[str, Any] = {'margins': cfg.to_json(), 'delta': args.delta}

    m = args.m
    if args.data is not None:
        verify_file_exists(args.error_func, args.data, 'data file')
        data = localmax_quickstart.load_points(args.data, model)
        m = data.n
        report['margin_empirical_risk'] = margin_empirical_risk(
            model_value_function(model),
            model_decision_function(model),
            data.X,
            cfg,
            derive_seed(int(resolved['seed']), 'theory/margin'),
        )
    if m is None:
        args.error_func('theory bound needs the sample size: --m, or --data.')

    report['m'] = m
    report['penalty_terms'] = bound_penalty_terms(v_net, f_net, cfg.gamma1, cfg.gamma2)
    report['bound_penalty_proxy'] = bound_penalty_proxy(
        v_net, f_net, cfg.domain_radius, cfg.gamma1, cfg.gamma2, m, args.delta
    )
    return report


def theory(args: argparse.Namespace, resolved: Dict[str, Any], work_dir: Path) -> None:
    """
    the constructive and complexity checks: construct / extract / complexity / bound.
    """
    if 'construct' == args.action:
        report = _theory_construct(args, work_dir)
    elif 'extract' == args.action:
        report = _theory_extract(args)
    elif 'complexity' == args.action:
        report = _theory_complexity(args)
    else:
        report = _theory_bound(args, resolved)
    write_json(work_dir / METRICS_FILE_NAME, report)


def add_universal_arguments(parser: argparse.ArgumentParser) -> None:
    """
    add the arguments every subcommand takes.
    @param parser: the subcommand's parser
    """
    parser.add_argument('-o', '--out', metavar='DIR', type=Path, required=True, help="the output directory")
    parser.add_argument('-c', '--config', metavar='PATH', help="a json configuration (sections model/training/data)")
    parser.add_argument('--seed', type=int, default=None, help="the root seed (overrides the configuration)")
    parser.add_argument('-s', '--silent', action='store_true', help="don't show times and statistics")


def add_checkpoint_argument(parser: argparse.ArgumentParser, *, required_help: str = '') -> None:
    parser.add_argument('--checkpoint', metavar='PATH', type=Path, help=f"the model checkpoint (.ckpt){required_help}")


def add_synth_arguments(subparsers: Any) -> None:
    parser = subparsers.add_parser('synth', help="write a synthetic dataset")
    parser.add_argument('generator', choices=['gmm', 'background', 'points1d'], help="the dataset generator")
    parser.add_argument('--n', type=int, default=None, help="the number of samples (gmm / background)")
    parser.add_argument('--sigma', type=float, default=None, help="the mixture's standard deviation (gmm)")
    parser.add_argument('--m', type=int, default=8, help="the number of points (points1d, 8 by default)")
    add_universal_arguments(parser)
    parser.set_defaults(command=synth)


def add_train_arguments(subparsers: Any) -> None:
    parser = subparsers.add_parser('train', help="train the networks of a variant")
    parser.add_argument('--variant', choices=[variant.value for variant in Variant], default=None)
    parser.add_argument('--epochs', type=int, default=None, help="the number of outer iterations T")
    parser.add_argument('--data', metavar='CSV', type=Path, default=None, help="train on a csv (instead of the gmm)")
    parser.add_argument('--target-column', dest='target_column', default=None)
    parser.add_argument('--label-column', dest='label_column', default=None)
    parser.add_argument('--n', type=int, default=None, help="the number of gmm samples")
    parser.add_argument('--sigma', type=float, default=None, help="the gmm standard deviation")
    add_universal_arguments(parser)
    parser.set_defaults(command=train)


def add_eval_arguments(subparsers: Any) -> None:
    oneclass = subparsers.add_parser('eval-oneclass', help="AUC of positives against negatives")
    add_checkpoint_argument(oneclass)
    oneclass.add_argument('--positives', metavar='CSV', type=Path, default=None)
    oneclass.add_argument('--negatives', metavar='CSV', type=Path, default=None)
    oneclass.add_argument('--score', choices=['c', 'h'], default=None, help="every score of the model by default")
    add_universal_arguments(oneclass)
    oneclass.set_defaults(command=eval_oneclass)

    noise = subparsers.add_parser('eval-noise', help="AUC of test points against their noisy copies")
    add_checkpoint_argument(noise)
    noise.add_argument('--data', metavar='CSV', type=Path, default=None, help="the test points")
    noise.add_argument('--sigmas', default=None, help=f"comma separated noise levels ({DEFAULT_NOISE_SIGMAS})")
    noise.add_argument('--label-column', dest='label_column', default=None)
    noise.add_argument('--in-class', dest='in_class', default=None, help="comma separated in-class labels")
    add_universal_arguments(noise)
    noise.set_defaults(command=eval_noise)

    correlation = subparsers.add_parser('eval-correlation', help="correlate scores with a per-point target")
    add_checkpoint_argument(correlation, required_help=', optional with --score pca')
    correlation.add_argument('--data', metavar='CSV', type=Path, default=None, help="the test points")
    correlation.add_argument('--target-column', dest='target_column', required=True)
    correlation.add_argument('--score', choices=[score.value for score in Score], default=Score.C.value)
    correlation.add_argument('--mode', choices=[mode.value for mode in CorrelationMode], default='local')
    correlation.add_argument('--permutations', type=int, default=DEFAULT_PERMUTATIONS)
    correlation.add_argument('--train-data', dest='train_data', metavar='CSV', type=Path, default=None)
    add_universal_arguments(correlation)
    correlation.set_defaults(command=eval_correlation)


def add_export_field_arguments(subparsers: Any) -> None:
    parser = subparsers.add_parser('export-field', help="write the c heatmap and h quiver of a 2-d model")
    add_checkpoint_argument(parser)
    parser.add_argument('--resolution', type=int, default=DEFAULT_FIELD_RESOLUTION, help="grid points per axis")
    parser.add_argument('--bounds', default=None, help="x1_low,x1_high,x2_low,x2_high (data units)")
    add_universal_arguments(parser)
    parser.set_defaults(command=export_field)


def add_theory_arguments(subparsers: Any) -> None:
    parser = subparsers.add_parser('theory', help="constructive and complexity checks")
    parser.add_argument('action', choices=['construct', 'extract', 'complexity', 'bound'])
    parser.add_argument('--points', default=None, help="comma separated distinct reals")
    parser.add_argument('--verify', action='store_true', help="fail (exit 1) if a check fails")
    parser.add_argument('--network', metavar='PATH', type=Path, default=None, help="a single-network checkpoint")
    add_checkpoint_argument(parser)
    parser.add_argument('--data', metavar='CSV', type=Path, default=None, help="the sample, for the margin risk")
    parser.add_argument('--m', type=int, default=None, help="the sample size (without --data)")
    parser.add_argument('--gamma1', type=float, default=MARGIN_DEFAULT_GAMMA)
    parser.add_argument('--gamma2', type=float, default=MARGIN_DEFAULT_GAMMA)
    parser.add_argument('--epsilon', type=float, default=MARGIN_DEFAULT_EPSILON)
    parser.add_argument('--samples', type=int, default=MARGIN_DEFAULT_SAMPLES)
    parser.add_argument('--domain-radius', dest='domain_radius', type=float, default=1.0)
    parser.add_argument('--delta', type=float, default=BOUND_DEFAULT_DELTA)
    add_universal_arguments(parser)
    parser.set_defaults(command=theory)


def get_argument_parser() -> argparse.ArgumentParser:
    """
    create the argument parser (with specific description and usage).
    @return: the argument parser
    """
    return LocalMaxArgumentParser(
        prog='lm',
        description='Learn sets of points as local maxima, and evaluate the learned networks.',
        usage='lm SUBCOMMAND [arguments] --out DIR\n'
        'example usage:\n'
        '  lm synth gmm --n 4096 --seed 7 --out data               // sample the 16-mode grid\n'
        '  lm train --config gmm.json --variant full --out run     // train the four networks\n'
        '  lm export-field --checkpoint run/final.ckpt --out fld   // heatmap.csv, quiver.csv\n'
        '  lm eval-noise --checkpoint run/final.ckpt --data run/test.csv --label-column label --out noise\n'
        '  lm theory construct --points 0,1 --verify --out thm     // the local-maxima network\n ',
    )


def add_arguments(parser: argparse.ArgumentParser) -> None:
    subparsers = parser.add_subparsers(dest='subcommand', metavar='SUBCOMMAND', required=True)
    add_synth_arguments(subparsers)
    add_train_arguments(subparsers)
    add_eval_arguments(subparsers)
    add_export_field_arguments(subparsers)
    add_theory_arguments(subparsers)


def parse_arguments(*, cmd_line_args: Optional[List[str]] = None) -> argparse.Namespace:
    """
    parse the command line arguments.
    @param cmd_line_args: if specified, the command line arguments will be retrieved from this list.
    @return: the parsed arguments (error_func holds the parser's error function)
    """
    parser = get_argument_parser()
    add_arguments(parser)
    parsed_args = parser.parse_args(args=cmd_line_args)
    parsed_args.error_func = parser.error
    return parsed_args


def execute_subcommand(args: argparse.Namespace) -> None:
    """
    resolve the configuration, echo it to config.json, and run the subcommand inside a fresh output directory.
    @param args: the parsed arguments
    """
    resolved = resolve_config(args)
    with output_directory(args.out) as work_dir:
        write_json(work_dir / CONFIG_FILE_NAME, resolved)
        # train prints its own timing and statistics
        timed = not args.silent and 'train' != args.subcommand
        with PrintTimer(f'  {args.subcommand}:  ', print_time=timed):
            args.command(args, resolved, work_dir)


def run(*, cmd_line_args: Optional[List[str]] = None) -> ExitCode:
    """
    parse the command line arguments and execute the subcommand.
    @param cmd_line_args: if specified, the command line arguments will be retrieved from this list.
    @return: success, user-error (bad flags, configurations or files) or numeric-failure (training diverged)
    @note: call with cmd_line_args=['-h'] to get help.
    """
    try:
        execute_subcommand(parse_arguments(cmd_line_args=cmd_line_args))
    except SystemExit as se:
        return ExitCode.Success if se.code in (None, 0) else ExitCode.UserError
    except LocalMaxNumericException as e:
        print(f'Error:  {e}', file=sys.stderr)
        return ExitCode.NumericFailure
    except LocalMaxException as e:
        print(f'Error:  {e}', file=sys.stderr)
        return ExitCode.UserError
    return ExitCode.Success


def main() -> None:
    sys.exit(int(run()))


if __name__ == '__main__':
    main()
