import lzma
from enum import Enum
from typing import List, Dict


"""
struct {
    u16 lm_magic;       // 'L' + 'M'<<8  (0x4d4c)
    u16 float_size;     // number of bits in a data word. always 64.
    u64 version;
    u64 tensor_num;
    u64 flags;
    u32 reserved;       // 0
    u64 header_length;  // in bytes
    struct tensor {
        u64 data_start;     // in the outer-struct.data words (float64)
        u64 data_length;    // in the outer-struct.data words (float64)
    } *tensors;         // tensors[tensor_num]
    u8 header[header_length];   // utf-8 json: the tensor names and shapes, specs, seeds, config, data sha256...
    u8* data;           // little-endian float64 words (lzma2-compressed in some versions)
} ckpt_file;    // LocalMax checkpoint file
"""


LM_MAGIC = ord('L') + (ord('M') << 8)
FLOAT_SIZE = 64

_header_base_format = '<HHQQ'
_header_base_size = 2 + 2 + 8 + 8

_header_extension_format = '<QLQ'
_header_extension_size = 8 + 4 + 8

_tensor_format = '<QQ'
_tensor_size = 8 + 8

_data_word_format = '<f8'
_data_word_size = 8

HEADER_ENCODING = 'utf-8'


class CheckpointVersion(Enum):
    NormalVersion = 1  # raw float64 data
    CompressedVersion = 2  # the data is lzma2-compressed


SUPPORTED_VERSIONS_NAMES = {
    CheckpointVersion.NormalVersion: 'Normal',
    CheckpointVersion.CompressedVersion: 'Compressed',
}


_LZMA_FORMAT = lzma.FORMAT_RAW
_LZMA_DECOMPRESSION_FILTERS: List[Dict[str, int]] = [{"id": lzma.FILTER_LZMA2}]


def _lzma_compression_filters(preset: int) -> List[Dict[str, int]]:
    return [{"id": lzma.FILTER_LZMA2, "preset": preset}]
