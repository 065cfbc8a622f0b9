from localmax.utils.classes import ExitCode, PrintTimer
from localmax.utils.functions import derive_seed, get_gmm_config_path


__all__ = [
    'ExitCode',
    'PrintTimer',
    'derive_seed',
    'get_gmm_config_path',
]
