"""Speed-conditioned GAN for multi-agent 2D trajectory generation."""

from .autodiff import Tape, Tensor, backward, param, tensor
from .checkpoint import CsgCheckpoint, load_checkpoint, save_checkpoint
from .data import Scene, SpeedScaler, build_scenes, load_dataset
from .model import CsgConfig, generator_forward, init_discriminator, init_generator
from .training import TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "Tape",
    "Tensor",
    "backward",
    "param",
    "tensor",
    "CsgCheckpoint",
    "load_checkpoint",
    "save_checkpoint",
    "Scene",
    "SpeedScaler",
    "build_scenes",
    "load_dataset",
    "CsgConfig",
    "generator_forward",
    "init_discriminator",
    "init_generator",
    "TrainConfig",
    "train",
    "__version__",
]
