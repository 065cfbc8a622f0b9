from localmax.training.losses import LossBreakdown, loss_C, loss_H, loss_Gc, loss_Gh
from localmax.training.checkpoint import TrainingState, save_checkpoint, load_checkpoint, save_network, load_network
from localmax.training.trainer import Variant, Player, TrainConfig, TrainResult, train, train_variant, resume
