from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from localmax.ckpt.ckpt_consts import CheckpointVersion
from localmax.ckpt.ckpt_reader import Reader
from localmax.ckpt.ckpt_writer import Writer
from localmax.data.dataset import Standardization
from localmax.models.model_suite import QuadModel
from localmax.network.adam import AdamState
from localmax.network.layers import LayerSpec
from localmax.network.network import LayerTensors, Network
from localmax.utils.exceptions import (
    LocalMaxConfigurationException,
    LocalMaxException,
    LocalMaxReadCheckpointException,
)


MODEL_KIND = 'model'
NETWORK_KIND = 'network'


@dataclasses.dataclass
class TrainingState:
    """
    What a resumed run needs beyond the networks.
    @note epoch is the number of completed outer iterations.
    """

    epoch: int
    optimizers: Dict[str, AdamState]
    rng_state: Dict[str, Any]
    config: Dict[str, Any]
    retried: bool = False


def _add_network(writer: Writer, prefix: str, net: Network) -> Dict[str, Any]:
    for name, tensor in net.named_parameters():
        writer.add_tensor(f'{prefix}/{name}', tensor)
    for name, tensor in net.named_buffers():
        writer.add_tensor(f'{prefix}/buffer/{name}', tensor)
    return {'role': net.role, 'seed': net.seed, 'specs': [spec.to_json() for spec in net.specs]}


def _read_network(reader: Reader, prefix: str, description: Dict[str, Any]) -> Network:
    specs = [LayerSpec.from_json(spec) for spec in description['specs']]
    parameters: List[LayerTensors] = [{} for _ in specs]
    buffers: List[LayerTensors] = [{} for _ in specs]
    for tensor_name, tensor in reader.tensors.items():
        if not tensor_name.startswith(f'{prefix}/'):
            continue
        path = tensor_name[len(prefix) + 1 :]  # noqa: E203
        is_buffer = path.startswith('buffer/')
        if is_buffer:
            path = path[len('buffer/') :]  # noqa: E203
        elif path.startswith('adam_'):
            continue
        index, key = path.split('.')
        (buffers if is_buffer else parameters)[int(index)][key] = tensor
    return Network(specs, int(description['seed']), parameters, buffers, role=str(description['role']))


def _add_optimizer(writer: Writer, prefix: str, state: AdamState) -> Dict[str, Any]:
    for name in state.first_moments:
        writer.add_tensor(f'{prefix}/adam_m/{name}', state.first_moments[name])
        writer.add_tensor(f'{prefix}/adam_v/{name}', state.second_moments[name])
    return state.hyperparameters()


def _read_optimizer(reader: Reader, prefix: str, net: Network, hyperparameters: Dict[str, Any]) -> AdamState:
    names = [name for name, _ in net.named_parameters()]
    return AdamState(
        {name: reader.get_tensor(f'{prefix}/adam_m/{name}') for name in names},
        {name: reader.get_tensor(f'{prefix}/adam_v/{name}') for name in names},
        int(hyperparameters['step']),
        float(hyperparameters['learning_rate']),
        float(hyperparameters['beta1']),
        float(hyperparameters['beta2']),
        float(hyperparameters['epsilon']),
    )


def save_checkpoint(
    path: Path,
    model: QuadModel,
    state: Optional[TrainingState] = None,
    *,
    version: CheckpointVersion = CheckpointVersion.CompressedVersion,
) -> None:
    """
    save the model (and the training state, for resuming) in the binary checkpoint format.
    @param path: [out]: the .ckpt file
    @param model: the networks, standardization and config hash
    @param state: the optimizers, shuffle-rng state and resolved config (None for a model-only checkpoint)
    @param version: normal (raw) or compressed data
    """
    writer = Writer(path, version)
    networks = {name: _add_network(writer, name, net) for name, net in model.networks().items()}
    header: Dict[str, Any] = {
        'kind': MODEL_KIND,
        'input_dim': model.input_dim,
        'config_hash': model.config_hash,
        'standardization': None if model.standardization is None else model.standardization.to_json(),
        'networks': networks,
        'training': None,
    }
    if state is not None:
        optimizers = {name: _add_optimizer(writer, name, adam) for name, adam in state.optimizers.items()}
        header['training'] = {
            'epoch': state.epoch,
            'optimizers': optimizers,
            'rng_state': state.rng_state,
            'config': state.config,
            'retried': state.retried,
        }
    writer.update_header(header)
    writer.write_to_file()


def _header_field(reader: Reader, key: str, path: Path) -> Any:
    if key not in reader.header:
        raise LocalMaxReadCheckpointException(f'{path}: the checkpoint header has no "{key}" field.')
    return reader.header[key]


def load_checkpoint(path: Path) -> Tuple[QuadModel, Optional[TrainingState]]:
    """
    load a model checkpoint written by save_checkpoint.
    @param path: the .ckpt file
    @return: the model, and its training state (None for a model-only checkpoint)
    """
    reader = Reader(path)
    if _header_field(reader, 'kind', path) != MODEL_KIND:
        raise LocalMaxReadCheckpointException(f'{path} is a {reader.header["kind"]} checkpoint, not a model.')

    try:
        descriptions = _header_field(reader, 'networks', path)
        networks = {name: _read_network(reader, name, description) for name, description in descriptions.items()}
        standardization_json = _header_field(reader, 'standardization', path)
        model = QuadModel(
            int(_header_field(reader, 'input_dim', path)),
            networks.get('c'),
            networks.get('h'),
            networks.get('g_c'),
            networks.get('g_h'),
            str(_header_field(reader, 'config_hash', path)),
            None if standardization_json is None else Standardization.from_json(standardization_json),
        )

        training = _header_field(reader, 'training', path)
        if training is None:
            return model, None
        optimizers = {
            name: _read_optimizer(reader, name, networks[name], hyperparameters)
            for name, hyperparameters in training['optimizers'].items()
        }
        state = TrainingState(
            int(training['epoch']), optimizers, training['rng_state'], training['config'], bool(training['retried'])
        )
        return model, state
    except LocalMaxReadCheckpointException:
        raise
    except (LocalMaxException, KeyError, ValueError, TypeError, AttributeError) as e:
        raise LocalMaxReadCheckpointException(f'{path}: inconsistent checkpoint contents ({e}).') from e


def save_network(
    path: Path,
    net: Network,
    *,
    extra: Optional[Dict[str, Any]] = None,
    version: CheckpointVersion = CheckpointVersion.CompressedVersion,
) -> None:
    """
    save a single network (e.g. a constructed theory network).
    @param extra: json-serializable metadata kept in the header
    """
    writer = Writer(path, version)
    description = _add_network(writer, 'net', net)
    writer.update_header({'kind': NETWORK_KIND, 'network': description, 'extra': extra or {}})
    writer.write_to_file()


def load_network(path: Path) -> Network:
    reader = Reader(path)
    kind = _header_field(reader, 'kind', path)
    if kind == MODEL_KIND:
        raise LocalMaxConfigurationException(f'{path} holds a full model; load it with load_checkpoint.')
    if kind != NETWORK_KIND:
        raise LocalMaxReadCheckpointException(f'{path}: unknown checkpoint kind "{kind}".')
    try:
        return _read_network(reader, 'net', _header_field(reader, 'network', path))
    except LocalMaxReadCheckpointException:
        raise
    except (LocalMaxException, KeyError, ValueError, TypeError, AttributeError) as e:
        raise LocalMaxReadCheckpointException(f'{path}: inconsistent network contents ({e}).') from e


def checkpoint_digest(path: Path) -> str:
    """
    @return: the sha256 of the checkpoint's (uncompressed) tensor data: every parameter, running statistic
     and optimizer moment
    """
    return Reader(path).data_digest
