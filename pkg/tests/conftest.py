import csv
import json
from os import environ
from pathlib import Path
from queue import Queue
from threading import Lock
from typing import Any, Callable, Iterable, List, Optional, Tuple, Type, Union

import pytest
from _pytest.config import Config
from _pytest.mark import ParameterSet
from _pytest.nodes import Collector, Item
from _pytest.python import Metafunc
from _pytest.reports import CollectReport

from tests.test_experiments import EvalTestArgs, TrainTestArgs

ExperimentsType = Tuple[List[ParameterSet], List[ParameterSet]]

build_experiments_lock = Lock()
build_experiments_queue: "Queue[ExperimentsType]" = Queue()


TRAIN_ARGUMENTS_FIXTURE = "train_args"
EVAL_ARGUMENTS_FIXTURE = "eval_args"

fixtures_name_to_type = {
    TRAIN_ARGUMENTS_FIXTURE: TrainTestArgs,
    EVAL_ARGUMENTS_FIXTURE: EvalTestArgs,
}


TESTS_PATH = Path(__file__).parent
TESTS_TABLES_PATH = TESTS_PATH / 'tests_tables'
with open(TESTS_PATH / 'conf.json', 'r') as tests_json:
    TESTS_OPTIONS = json.load(tests_json)

SPEED_TYPES = TESTS_OPTIONS['all_speed_ordered']
assert SPEED_TYPES
REGULAR_TYPES = TESTS_OPTIONS['regular_speed_ordered']
assert REGULAR_TYPES
DEFAULT_TYPE = TESTS_OPTIONS['default_type']
assert DEFAULT_TYPE in SPEED_TYPES


TRAIN_ORDER_INDEX = 1
EVAL_ORDER_INDEX = 2


ALL_FLAG = 'all'
REGULAR_FLAG = 'regular'
TRAIN_FLAG = 'train'
EVAL_FLAG = 'eval'
NAME_EXACT_FLAG = 'name'
NAME_CONTAINS_FLAG = 'contains'
NAME_STARTSWITH_FLAG = 'startswith'
NAME_ENDSWITH_FLAG = 'endswith'
SAVED_KEYWORDS = {
    ALL_FLAG,
    REGULAR_FLAG,
    TRAIN_FLAG,
    EVAL_FLAG,
    NAME_EXACT_FLAG,
    NAME_CONTAINS_FLAG,
    NAME_STARTSWITH_FLAG,
    NAME_ENDSWITH_FLAG,
}


def is_parallel_active() -> bool:
    """
    @return: is xdist used with more than one worker
    """
    return int(environ.get('PYTEST_XDIST_WORKER_COUNT', default='0')) > 1


def argument_line_iterator(csv_file_path: Path, num_of_args: int) -> Iterable[List[str]]:
    """
    Iterate over the stripped argument lines of a tests-table.
    @param csv_file_path: the csv file
    @param num_of_args: right number of arguments per line
    @return: the line iterator
    """
    with open(csv_file_path, 'r') as csv_file:
        for line_index, line in enumerate(csv.reader(csv_file)):
            if line:
                assert len(line) == num_of_args, (
                    f'expects {num_of_args} args, got {len(line)} '
                    f'(file {Path(csv_file_path).absolute()}, line {line_index + 1})'
                )
                yield list(map(str.strip, line))


def get_experiment_params_from_csv(
    csv_file_path: Path,
    args_type: Union[Type[TrainTestArgs], Type[EvalTestArgs]],
    order_index: int,
    xfail_list: List[str],
) -> List[ParameterSet]:
    """
    read the experiments of one tests-table.
    @param csv_file_path: read the experiments from this csv
    @param args_type: the arguments class a csv line is handed to
    @param order_index: the pytest-ordering index (training must precede evaluating)
    @param xfail_list: list of tests names to mark with xfail (expected to fail)
    @return: the list of pytest.params(args_type, marks=...)
    """
    params = []

    for line in argument_line_iterator(csv_file_path, args_type.num_of_csv_line_args):
        args = args_type(*line)
        test_marks = [pytest.mark.run(order=order_index)]
        if args.test_name in xfail_list:
            test_marks.append(pytest.mark.xfail())
        params.append(pytest.param(args, marks=test_marks))

    return params


def pytest_addoption(parser: pytest.Parser) -> None:
    """
    add the custom flags to pytest
    @param parser: the parser
    """
    colliding_keywords = set(SPEED_TYPES) & SAVED_KEYWORDS
    assert not colliding_keywords

    for speed_type in SPEED_TYPES:
        parser.addoption(f"--{speed_type}", action="store_true", help=f"run {speed_type} tests")
    parser.addoption(
        f"--{REGULAR_FLAG}", action="store_true", help=f"run all regular tests ({', '.join(REGULAR_TYPES)})"
    )
    parser.addoption(f"--{ALL_FLAG}", action="store_true", help="run all tests")

    parser.addoption(f"--{TRAIN_FLAG}", action='store_true', help='only run the training experiments')
    parser.addoption(f"--{EVAL_FLAG}", action='store_true', help='only evaluate the trained checkpoints')

    parser.addoption(f'--{NAME_EXACT_FLAG}', nargs='+', help='only run experiments with one of these names')
    parser.addoption(
        f'--{NAME_CONTAINS_FLAG}', nargs='+', help='only run experiments that contain one of these strings'
    )
    parser.addoption(
        f'--{NAME_STARTSWITH_FLAG}', nargs='+', help='only run experiments that start with one of these strings'
    )
    parser.addoption(
        f'--{NAME_ENDSWITH_FLAG}', nargs='+', help='only run experiments that end with one of these strings'
    )


def pytest_configure(config: Config) -> None:
    for speed_type in SPEED_TYPES:
        config.addinivalue_line("markers", f"{speed_type}: a {speed_type} unit test")


def get_train_eval(get_option: Callable[[str], bool]) -> Tuple[bool, bool]:
    """
    assess whether to run the training experiments, and whether to run the evaluations.
    exit pytest if running both in parallel.
    @param get_option: function that returns the flags values
    @return: (train, eval) booleans
    """
    check_train = get_option(TRAIN_FLAG)
    check_eval = get_option(EVAL_FLAG)

    if not check_train and not check_eval:
        check_train, check_eval = True, True

    if check_train and check_eval and is_parallel_active():
        pytest.exit(
            "Can't both train and evaluate (both --train --eval flags / none of them) "
            "in parallel (-n auto/number>1), "
            "as the evaluations load the checkpoints the training writes"
        )

    return check_train, check_eval


def get_speed_types_to_run__heavy_first(get_option: Callable[[str], bool]) -> List[str]:
    """
    @param get_option: function that returns the flags values
    @return: the speed types to run (ordered, heavy first)
    """
    if get_option(ALL_FLAG):
        return SPEED_TYPES[::-1]
    if get_option(REGULAR_FLAG):
        return REGULAR_TYPES[::-1]

    types_to_run = [speed_type for speed_type in SPEED_TYPES[::-1] if get_option(speed_type)]
    return types_to_run if types_to_run else [DEFAULT_TYPE]


def is_test_name_ok(
    name: str,
    exact: Optional[List[str]],
    contains: Optional[List[str]],
    startswith: Optional[List[str]],
    endswith: Optional[List[str]],
) -> bool:
    """
    True if the name passes at least one of the given (not None) filters.
    """
    return (
        any(name == option for option in exact or [])
        or any(option in name for option in contains or [])
        or any(name.startswith(option) for option in startswith or [])
        or any(name.endswith(option) for option in endswith or [])
    )


def filter_by_test_name(
    experiments: List[ParameterSet], get_option: Callable[[str], Optional[List[str]]]
) -> List[ParameterSet]:
    """
    filter the experiments by their names (and the naming flags)
    @param experiments: the experiments
    @param get_option: function that returns the flags values
    @return: the filtered experiments
    """
    name_flags = (NAME_EXACT_FLAG, NAME_CONTAINS_FLAG, NAME_STARTSWITH_FLAG, NAME_ENDSWITH_FLAG)
    filters = [get_option(flag) for flag in name_flags]
    if all(filter_list is None for filter_list in filters):
        return experiments

    return [
        args
        for args in experiments
        if is_test_name_ok(args.values[0].test_name, *filters)  # type: ignore[union-attr]
    ]


def pytest_generate_tests(metafunc: Metafunc) -> None:
    """
    gather the experiments from the csvs, and parametrize the train and eval fixtures with them.
    @param metafunc: enables to get-flags, parametrize-fixtures
    """

    def get_option(opt: str) -> Any:
        return metafunc.config.getoption(opt)

    if not ({TRAIN_ARGUMENTS_FIXTURE, EVAL_ARGUMENTS_FIXTURE} & set(metafunc.fixturenames)):
        return

    train_experiments, eval_experiments = get_experiments_from_csvs__heavy_first__execute_once(get_option)

    if TRAIN_ARGUMENTS_FIXTURE in metafunc.fixturenames:
        metafunc.parametrize(TRAIN_ARGUMENTS_FIXTURE, train_experiments, ids=repr)

    if EVAL_ARGUMENTS_FIXTURE in metafunc.fixturenames:
        metafunc.parametrize(EVAL_ARGUMENTS_FIXTURE, eval_experiments, ids=repr)


def is_not_skipped(test: Union[Item, Collector]) -> bool:
    if hasattr(test, 'callspec') and hasattr(test.callspec, 'params'):
        params = test.callspec.params
        for fixture_name, fixture_type in fixtures_name_to_type.items():
            if fixture_name in params:
                return isinstance(params[fixture_name], fixture_type)
    return True


@pytest.hookimpl(hookwrapper=True)
def pytest_collectreport(report: CollectReport) -> Iterable[None]:
    report.result = list(filter(is_not_skipped, report.result))
    yield


@pytest.hookimpl(hookwrapper=True)
def pytest_collection_modifyitems(config: Config, items: List[Item]) -> Iterable[None]:
    """
    drop the empty experiment parametrizations, and skip the unit tests marked with a speed type not chosen.
    """
    yield
    items[:] = filter(is_not_skipped, items)

    chosen_types = set(get_speed_types_to_run__heavy_first(config.getoption))
    for item in items:
        for speed_type in SPEED_TYPES:
            if speed_type not in chosen_types and item.get_closest_marker(speed_type) is not None:
                item.add_marker(pytest.mark.skip(reason=f'a {speed_type} test (run with --{speed_type})'))


def get_experiments_from_csvs__heavy_first__execute_once(get_option: Callable[[str], Any]) -> ExperimentsType:
    """
    get the experiments from the csvs, heavy first.
    if more than 1 worker - only one worker reads them, and distributes the result to the other workers.
    @param get_option: function that returns the flags values
    @return: the (train, eval) experiments
    """
    if not is_parallel_active():
        return get_experiments_from_csvs(get_option)

    with build_experiments_lock:
        if build_experiments_queue.empty():
            experiments = get_experiments_from_csvs(get_option)
        else:
            experiments = build_experiments_queue.get()
        build_experiments_queue.put(experiments)
        return experiments


def get_experiments_from_csvs(get_option: Callable[[str], Any]) -> ExperimentsType:
    """
    get the experiments from the csvs, heavy first.
    @param get_option: function that returns the flags values
    @return: the (train, eval) experiments
    """
    check_train, check_eval = get_train_eval(get_option)
    types_to_run__heavy_first = get_speed_types_to_run__heavy_first(get_option)

    def read_phase(phase: str, args_type: Union[Type[TrainTestArgs], Type[EvalTestArgs]], order: int) -> List[Any]:
        xfail_list = [line[0] for line in argument_line_iterator(TESTS_TABLES_PATH / f"xfail_{phase}.csv", 1)]
        experiments: List[ParameterSet] = []
        for speed_type in types_to_run__heavy_first:
            experiments.extend(
                get_experiment_params_from_csv(
                    TESTS_TABLES_PATH / f"test_{phase}_{speed_type}.csv", args_type, order, xfail_list
                )
            )
        return filter_by_test_name(experiments, get_option)

    train_experiments = read_phase(TRAIN_FLAG, TrainTestArgs, TRAIN_ORDER_INDEX) if check_train else []
    eval_experiments = read_phase(EVAL_FLAG, EvalTestArgs, EVAL_ORDER_INDEX) if check_eval else []
    return train_experiments, eval_experiments
