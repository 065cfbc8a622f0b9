from localmax.ckpt.ckpt_consts import LM_MAGIC, CheckpointVersion


__all__ = [
    'LM_MAGIC',
    'CheckpointVersion',
]
