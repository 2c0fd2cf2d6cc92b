from .conv import ChebConv, DiffusionConv, Linear, cheb_conv, chebyshev_basis, diffusion_basis, diffusion_conv, linear
from .model import (
    MODEL_KINDS,
    CheckpointError,
    ModelConfig,
    RecurrentGCN,
    checkpoint_document,
    detach_state,
    inspect_hyperparameters,
    load_checkpoint,
    model_from_checkpoint,
    save_checkpoint,
)
from .module import Module
from .recurrent import DCRNN, GConvGRU, GConvLSTM

__all__ = [
    "ChebConv",
    "DiffusionConv",
    "Linear",
    "cheb_conv",
    "chebyshev_basis",
    "diffusion_basis",
    "diffusion_conv",
    "linear",
    "MODEL_KINDS",
    "CheckpointError",
    "ModelConfig",
    "RecurrentGCN",
    "checkpoint_document",
    "detach_state",
    "inspect_hyperparameters",
    "load_checkpoint",
    "model_from_checkpoint",
    "save_checkpoint",
    "Module",
    "DCRNN",
    "GConvGRU",
    "GConvLSTM",
]
