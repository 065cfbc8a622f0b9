from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

from localmax.utils.classes import FloatArray
from localmax.utils.constants import CSV_ENCODING, GMM_CONFIG_PATH, JSON_ENCODING
from localmax.utils.exceptions import LocalMaxConfigurationException, LocalMaxNumericInputException


_SEED_MASK = (1 << 64) - 1


def derive_seed(root_seed: int, stream_name: str) -> int:
    """
    derive the seed of a named random substream from the root seed.
    @param root_seed: the 64-bit root seed
    @param stream_name: the substream name (e.g. 'train/shuffle', 'init/c', 'synth/gmm')
    @return: a 64-bit seed, a pure function of (root_seed, stream_name)
    """
    digest = hashlib.sha256(f'{root_seed & _SEED_MASK}:{stream_name}'.encode('ascii')).digest()
    return int.from_bytes(digest[:8], 'little')


def make_rng(root_seed: int, stream_name: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root_seed, stream_name))


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def config_hash(config: Dict[str, Any]) -> str:
    """
    @param config: a json-serializable configuration
    @return: sha256 hex digest of its canonical (sorted keys, no spaces) json form
    """
    return hashlib.sha256(canonical_json(config).encode(JSON_ENCODING)).hexdigest()


def hash_arrays(arrays: Iterable[FloatArray]) -> str:
    """
    @return: sha256 hex digest over the shapes and little-endian float64 bytes of the arrays, in order
    """
    sha = hashlib.sha256()
    for array in arrays:
        sha.update(repr(tuple(array.shape)).encode('ascii'))
        sha.update(np.ascontiguousarray(array, dtype='<f8').tobytes())
    return sha.hexdigest()


def verify_finite(array: FloatArray, what: str) -> None:
    if not np.all(np.isfinite(array)):
        bad_index = tuple(int(i) for i in np.argwhere(~np.isfinite(array))[0])
        raise LocalMaxNumericInputException(f'{what} contains a non-finite value (at index {bad_index}).')


def parse_float_list(text: str) -> List[float]:
    """
    parse a comma separated list of reals, like '0.1,0.2,0.4'.
    """
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError as ve:
        raise LocalMaxConfigurationException(f'"{text}" is not a comma separated list of numbers.') from ve


def create_parent_directories(path: Path) -> None:
    """
    create all directories so that this path will be a valid path.
    @param path: the path
    """
    path.absolute().parent.mkdir(parents=True, exist_ok=True)


def write_json(path: Path, obj: Any) -> None:
    create_parent_directories(path)
    with open(path, 'w', encoding=JSON_ENCODING, newline='\n') as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write('\n')


def read_json(path: Path) -> Any:
    try:
        with open(path, 'r', encoding=JSON_ENCODING) as f:
            return json.load(f)
    except OSError as e:
        raise LocalMaxConfigurationException(f"Can't read the json file {path}.") from e
    except json.JSONDecodeError as e:
        raise LocalMaxConfigurationException(f'Bad json file {path}: {e}') from e


def append_json_line(path: Path, record: Dict[str, Any]) -> None:
    with open(path, 'a', encoding=JSON_ENCODING, newline='\n') as f:
        f.write(canonical_json(record))
        f.write('\n')


def format_csv_value(value: Union[float, int, str]) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Union[float, int, str]]]) -> None:
    """
    write a csv file: header row, 64-bit decimal floats (repr round-trips exactly), utf-8, LF line endings.
    @param path: [out]: the csv path
    @param header: the column names
    @param rows: the rows, each with len(header) values
    """
    create_parent_directories(path)
    with open(path, 'w', encoding=CSV_ENCODING, newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_csv_value(value) for value in row])


def get_gmm_config_path() -> Path:
    """
    @return: the path of the packaged 16-mode grid configuration (a --config file)
    """
    return GMM_CONFIG_PATH
