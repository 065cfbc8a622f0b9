import hashlib
import json
import lzma
from pathlib import Path
from struct import pack
from typing import Any, Dict, List, Tuple

import numpy as np

from localmax.ckpt.ckpt_consts import (
    LM_MAGIC,
    FLOAT_SIZE,
    HEADER_ENCODING,
    _header_base_format,
    _header_extension_format,
    _tensor_format,
    _data_word_format,
    SUPPORTED_VERSIONS_NAMES,
    _LZMA_FORMAT,
    _lzma_compression_filters,
    CheckpointVersion,
)
from localmax.utils.classes import FloatArray
from localmax.utils.exceptions import LocalMaxWriteCheckpointException
from localmax.utils.functions import create_parent_directories


class Writer:
    """
    Used for creating a .ckpt file in memory.
    The process is:
        1. add_tensor(...)
        repeat step 1 for every tensor
        2. update_header(...)
        3. write_to_file()
    """

    def __init__(
        self,
        output_file: Path,
        version: CheckpointVersion,
        *,
        flags: int = 0,
        lzma_preset: int = lzma.PRESET_DEFAULT,
    ):
        """
        the .ckpt-file writer
        @param output_file: [in,out]: the path to the .ckpt file
        @param version: the file's version
        @param flags: the file's flags
        @param lzma_preset: the preset to be used when compressing the .ckpt data
        """
        if version not in SUPPORTED_VERSIONS_NAMES:
            raise LocalMaxWriteCheckpointException(
                f'Error: unsupported version ({version}, this program supports {str(SUPPORTED_VERSIONS_NAMES)}).'
            )
        if flags < 0 or flags >= (1 << 64):
            raise LocalMaxWriteCheckpointException(f"flags must be a 64bit positive number, not {flags}")
        if CheckpointVersion.CompressedVersion == version and lzma_preset not in range(10):
            raise LocalMaxWriteCheckpointException("version 2 requires an LZMA preset (0-9, faster->smaller).")

        self.output_file = output_file
        self.version = version
        self.flags = flags
        self.lzma_preset = lzma_preset
        self.reserved: int = 0

        self.tensors: List[Tuple[int, int]] = []
        self.tensor_entries: List[Dict[str, Any]] = []
        self.data: List[FloatArray] = []
        self._data_length = 0
        self.header: Dict[str, Any] = {}

    def add_tensor(self, name: str, tensor: FloatArray) -> int:
        """
        append the tensor's words to the data, and a table entry pointing at them.
        @param name: a unique tensor name
        @param tensor: [in]: the float64 tensor (any shape)
        @return: the tensor's index
        """
        if any(entry['name'] == name for entry in self.tensor_entries):
            raise LocalMaxWriteCheckpointException(f'Duplicate tensor name "{name}".')
        words = np.ascontiguousarray(tensor, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(words)):
            raise LocalMaxWriteCheckpointException(f'Tensor "{name}" holds non-finite values.')

        self.tensors.append((self._data_length, words.size))
        self.tensor_entries.append({'name': name, 'shape': list(np.shape(tensor))})
        self.data.append(words)
        self._data_length += words.size
        return len(self.tensors) - 1

    def update_header(self, header: Dict[str, Any]) -> None:
        reserved_keys = {'tensors', 'data_sha256'} & set(header)
        if reserved_keys:
            raise LocalMaxWriteCheckpointException(f'The header keys {sorted(reserved_keys)} are set by the writer.')
        self.header.update(header)

    def _data_bytes(self) -> bytes:
        if not self.data:
            return b''
        return np.concatenate(self.data).astype(_data_word_format).tobytes()

    def _compress_data(self, data: bytes) -> bytes:
        try:
            return lzma.compress(data, format=_LZMA_FORMAT, filters=_lzma_compression_filters(self.lzma_preset))
        except lzma.LZMAError as e:
            raise LocalMaxWriteCheckpointException('Error: Unable to compress the data.') from e

    def write_to_file(self) -> None:
        """
        writes the .ckpt headers, tensor table, json header and (might be compressed) data into the output_file.
        @note call this after finished adding tensors and updating the header.
        """
        data = self._data_bytes()
        header = dict(self.header)
        header['tensors'] = self.tensor_entries
        header['data_sha256'] = hashlib.sha256(data).hexdigest()
        try:
            header_bytes = json.dumps(header, sort_keys=True, separators=(',', ':')).encode(HEADER_ENCODING)
        except (TypeError, ValueError) as e:
            raise LocalMaxWriteCheckpointException(f'The checkpoint header is not json-serializable: {e}') from e

        if CheckpointVersion.CompressedVersion == self.version:
            data = self._compress_data(data)

        try:
            create_parent_directories(self.output_file)
            with open(self.output_file, 'wb') as f:
                f.write(pack(_header_base_format, LM_MAGIC, FLOAT_SIZE, self.version.value, len(self.tensors)))
                f.write(pack(_header_extension_format, self.flags, self.reserved, len(header_bytes)))
                for tensor in self.tensors:
                    f.write(pack(_tensor_format, *tensor))
                f.write(header_bytes)
                f.write(data)
        except OSError as e:
            raise LocalMaxWriteCheckpointException(f"Can't write the checkpoint file {self.output_file}.") from e
