from .model import ModelSpec, ParamStore, backward, forward, init_params
from .train import accuracy, masked_softmax_cross_entropy, sgd_step

__all__ = [
    "ModelSpec",
    "ParamStore",
    "accuracy",
    "backward",
    "forward",
    "init_params",
    "masked_softmax_cross_entropy",
    "sgd_step",
]
