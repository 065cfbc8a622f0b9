from localmax.network.layers import LayerKind, LayerSpec
from localmax.network.network import Network, ForwardTrace, GradientSet, init_network, forward, backward, predict
from localmax.network.adam import AdamState, init_adam, adam_step
from localmax.network.grad_check import grad_check
