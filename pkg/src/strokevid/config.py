"""Model and training configuration objects."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigurationError


@dataclass
class ModelConfig:
    """Architecture hyper-parameters for the six networks.

    The latent state is a spatial feature map of shape
    ``(latent_channels, height / 2**downsample_depth, width / 2**downsample_depth)``.
    """

    height: int = 64
    width: int = 64
    channels: int = 1
    latent_channels: int = 128
    motion_channels: int = 64
    downsample_depth: int = 4
    encoder_width: int = 32
    decoder_width: int = 32
    dense_blocks: int = 3
    dense_growth: int = 32
    dense_layers: int = 3
    disc_width: int = 32
    disc_extra_layers: int = 2

    def __post_init__(self):
        for name in ("height", "width", "channels", "latent_channels",
                     "motion_channels", "downsample_depth", "encoder_width",
                     "decoder_width", "dense_blocks", "dense_growth",
                     "dense_layers", "disc_width"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.disc_extra_layers < 0:
            raise ConfigurationError("disc_extra_layers must be >= 0")
        if self.channels not in (1, 3):
            raise ConfigurationError("channels must be 1 or 3")
        factor = 2 ** self.downsample_depth
        if self.height % factor or self.width % factor:
            raise ConfigurationError(
                f"image size {self.height}x{self.width} not divisible by 2^{self.downsample_depth}"
            )

    @property
    def latent_height(self) -> int:
        return self.height // 2 ** self.downsample_depth

    @property
    def latent_width(self) -> int:
        return self.width // 2 ** self.downsample_depth

    @property
    def latent_shape(self) -> tuple[int, int, int]:
        return (self.latent_channels, self.latent_height, self.latent_width)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


TRAIN_MODES = ("single_step", "teacher_forcing", "full_bptt")


@dataclass
class TrainConfig:
    """Optimization settings; defaults follow the published recipe."""

    lambda0: float = 1.0
    lambda1: float = 10.0
    lambda2: float = 20.0
    lambda3: float = 20.0
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    batch_size: int = 4
    steps: int = 1000
    clip_len: int = 17  # frames per training clip: input frame + 16 predicted
    mode: str = "single_step"
    seed: int = 0
    feature_seed: int = 7
    log_clamp: float = 1e-7
    checkpoint_every: int = 500

    def __post_init__(self):
        for lam in (self.lambda0, self.lambda1, self.lambda2, self.lambda3):
            if lam <= 0:
                raise ConfigurationError("loss weights must be positive")
        if self.mode not in TRAIN_MODES:
            raise ConfigurationError(f"mode must be one of {TRAIN_MODES}")
        if self.clip_len < 2:
            raise ConfigurationError("clip_len must be at least 2")
        if self.batch_size < 1 or self.steps < 0:
            raise ConfigurationError("batch_size must be >= 1 and steps >= 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)
