from .dqn import DqnState, dqn_update, q_values
from .nn import ComposedNet, Conv, Dense, Flatten, MaxPool, Network, TwinCritic
from .optim import Adam
from .replay import ReplayBuffer
from .sac import SacState, act, policy_backward, policy_forward, sac_update
from .weights import WeightFormatError, load_weights, save_weights

__all__ = [
    "Adam", "ComposedNet", "Conv", "Dense", "DqnState", "Flatten", "MaxPool",
    "Network", "ReplayBuffer", "SacState", "TwinCritic", "WeightFormatError",
    "act", "dqn_update", "load_weights", "policy_backward", "policy_forward",
    "q_values", "sac_update", "save_weights",
]
