import hashlib
import json
import lzma
import struct
from pathlib import Path
from struct import unpack
from typing import Any, BinaryIO, Dict, List, Tuple

import numpy as np

from localmax.ckpt.ckpt_consts import (
    LM_MAGIC,
    FLOAT_SIZE,
    HEADER_ENCODING,
    _header_base_format,
    _header_extension_format,
    _header_base_size,
    _header_extension_size,
    _tensor_format,
    _tensor_size,
    _data_word_format,
    _data_word_size,
    SUPPORTED_VERSIONS_NAMES,
    _LZMA_FORMAT,
    _LZMA_DECOMPRESSION_FILTERS,
    CheckpointVersion,
)
from localmax.utils.classes import FloatArray
from localmax.utils.exceptions import LocalMaxReadCheckpointException


class Reader:
    """
    Used for reading a .ckpt file.
    """

    magic: int
    float_size: int
    version: CheckpointVersion
    tensor_num: int
    flags: int
    reserved: int
    header_length: int
    header: Dict[str, Any]
    tensors: Dict[str, FloatArray]

    def __init__(self, input_file: Path):
        """
        The .ckpt-file reader. Reads and validates the whole file.
        @param input_file: the path to the .ckpt file
        """
        try:
            with open(input_file, 'rb') as ckpt_file:
                self._init_header_fields(ckpt_file)
                self._validate_header()
                table = self._init_tensor_table(ckpt_file)
                self._init_json_header(ckpt_file)
                data = self._read_decompressed_data(ckpt_file)
                self._init_tensors(table, data)
        except OSError as e:
            raise LocalMaxReadCheckpointException(f"Can't read the checkpoint file {input_file}.") from e
        except struct.error as se:
            exception_message = f"Bad file {input_file}, can't unpack. Maybe it's truncated, or not a .ckpt file?"
            raise LocalMaxReadCheckpointException(exception_message) from se

    def _init_header_fields(self, ckpt_file: BinaryIO) -> None:
        self.magic, self.float_size, version, self.tensor_num = unpack(
            _header_base_format, ckpt_file.read(_header_base_size)
        )
        try:
            self.version = CheckpointVersion(version)
        except ValueError as ve:
            raise LocalMaxReadCheckpointException(
                f'Error: unsupported version ({version}, this program supports {str(SUPPORTED_VERSIONS_NAMES)}).'
            ) from ve
        self.flags, self.reserved, self.header_length = unpack(
            _header_extension_format, ckpt_file.read(_header_extension_size)
        )

    def _validate_header(self) -> None:
        if self.magic != LM_MAGIC:
            raise LocalMaxReadCheckpointException(
                f'Error: bad magic code ({hex(self.magic)}, should be {hex(LM_MAGIC)}).'
            )
        if self.float_size != FLOAT_SIZE:
            raise LocalMaxReadCheckpointException(f'Error: bad float size ({self.float_size}, should be {FLOAT_SIZE}).')
        if self.reserved != 0:
            raise LocalMaxReadCheckpointException(f'Error: bad reserved value ({self.reserved}, should be 0).')

    def _init_tensor_table(self, ckpt_file: BinaryIO) -> List[Tuple[int, int]]:
        return [unpack(_tensor_format, ckpt_file.read(_tensor_size)) for _ in range(self.tensor_num)]

    def _init_json_header(self, ckpt_file: BinaryIO) -> None:
        header_bytes = ckpt_file.read(self.header_length)
        if len(header_bytes) != self.header_length:
            raise LocalMaxReadCheckpointException(
                f'Error: truncated json header ({len(header_bytes)} of {self.header_length} bytes).'
            )
        try:
            self.header = json.loads(header_bytes.decode(HEADER_ENCODING))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise LocalMaxReadCheckpointException(f'Error: the json header is damaged ({e}).') from e
        if not isinstance(self.header, dict) or 'tensors' not in self.header or 'data_sha256' not in self.header:
            raise LocalMaxReadCheckpointException('Error: the json header lacks the tensors list or the data digest.')
        if len(self.header['tensors']) != self.tensor_num:
            raise LocalMaxReadCheckpointException(
                f'Error: the json header names {len(self.header["tensors"])} tensors, the table has {self.tensor_num}.'
            )

    @staticmethod
    def _decompress_data(compressed_data: bytes) -> bytes:
        try:
            return lzma.decompress(compressed_data, format=_LZMA_FORMAT, filters=_LZMA_DECOMPRESSION_FILTERS)
        except lzma.LZMAError as e:
            raise LocalMaxReadCheckpointException('Error: The compressed data is damaged; Unable to decompress.') from e

    def _read_decompressed_data(self, ckpt_file: BinaryIO) -> FloatArray:
        """
        @param ckpt_file: [in]: read from this file the data words.
        @return: the data words (decompressed if it was compressed), validated against the header's digest.
        """
        file_data = ckpt_file.read()
        if CheckpointVersion.CompressedVersion == self.version:
            file_data = self._decompress_data(file_data)

        if len(file_data) % _data_word_size != 0:
            raise LocalMaxReadCheckpointException(f'Error: the data is not a whole number of {FLOAT_SIZE}-bit words.')
        if hashlib.sha256(file_data).hexdigest() != self.header['data_sha256']:
            raise LocalMaxReadCheckpointException('Error: the data digest does not match; the file is corrupt.')
        return np.frombuffer(file_data, dtype=_data_word_format).astype(np.float64)

    def _init_tensors(self, table: List[Tuple[int, int]], data: FloatArray) -> None:
        self.tensors = {}
        for (data_start, data_length), entry in zip(table, self.header['tensors']):
            name, shape = entry['name'], tuple(entry['shape'])
            if data_start + data_length > data.size:
                raise LocalMaxReadCheckpointException(
                    f'Error: tensor "{name}" spans data[{data_start}, {data_start + data_length}), '
                    f'but the data has {data.size} words.'
                )
            if int(np.prod(shape, dtype=np.int64)) != data_length:
                raise LocalMaxReadCheckpointException(
                    f'Error: tensor "{name}" has shape {shape} but {data_length} words.'
                )
            self.tensors[name] = data[data_start : data_start + data_length].reshape(shape).copy()  # noqa: E203

    @property
    def data_digest(self) -> str:
        return str(self.header['data_sha256'])

    def get_tensor(self, name: str) -> FloatArray:
        if name not in self.tensors:
            raise LocalMaxReadCheckpointException(f'Error: the checkpoint has no tensor "{name}".')
        return self.tensors[name]
