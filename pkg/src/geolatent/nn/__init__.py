from .tensor import Tensor, backward, concat, parameter
from .layers import BatchNorm, Dense, LayerNorm, Mlp, MlpSpec, dropout
from .optim import AdamW, adam
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    "Tensor", "backward", "concat", "parameter",
    "BatchNorm", "Dense", "LayerNorm", "Mlp", "MlpSpec", "dropout",
    "AdamW", "adam",
    "Checkpoint", "load_checkpoint", "save_checkpoint",
]
