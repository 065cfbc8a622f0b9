from __future__ import annotations

from enum import Enum, IntEnum
from time import time
from typing import Dict

import numpy as np
import numpy.typing as npt


FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]


class ExitCode(IntEnum):
    # Finished the subcommand without errors
    Success = 0
    # Bad flags, unreadable config, missing files, failed preconditions
    UserError = 1
    # Non-finite losses or gradients that the divergence policy could not recover from
    NumericFailure = 2

    def __str__(self) -> str:
        return [
            'success',
            'user-error',
            'numeric-failure',
        ][self.value]


class ForwardMode(Enum):
    Train = 'train'
    Eval = 'eval'


class PrintTimer:
    """
    prints the time a code segment took.
    usage:
    with PrintTimer('  train full (T=200):  '):
        train(...)
    """

    def __init__(self, init_message: str, *, print_time: bool = True):
        self.init_message = init_message
        self.print_time = print_time

    def __enter__(self) -> None:
        if self.print_time:
            self.start_time = time()
            print(self.init_message, end='', flush=True)

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:  # type: ignore[no-untyped-def]
        if self.print_time:
            print(f'{time() - self.start_time:.3f}s')


class TrainStatistics:
    """
    maintains times and counters of the current training run.
    """

    def __init__(self) -> None:
        self.steps_per_player: Dict[str, int] = {}
        self.epochs_completed = 0
        self.retries = 0
        self._start_time = time()

    def get_run_time(self) -> float:
        return time() - self._start_time

    def register_step(self, player: str) -> None:
        self.steps_per_player[player] = self.steps_per_player.get(player, 0) + 1

    def register_epoch(self) -> None:
        self.epochs_completed += 1

    def register_retry(self) -> None:
        self.retries += 1

    @property
    def total_steps(self) -> int:
        return sum(self.steps_per_player.values())

    def print(self) -> None:
        steps = ', '.join(f'{player}: {count:,}' for player, count in self.steps_per_player.items())
        print(
            f'Finished training after {self.get_run_time():.3f}s '
            f'({self.epochs_completed:,} epochs, {self.total_steps:,} optimizer steps; {steps}).'
        )
        if self.retries:
            print(f'Warning:  the learning rate was halved after a non-finite loss ({self.retries} retries).')
