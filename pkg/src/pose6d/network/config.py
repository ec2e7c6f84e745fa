"""Architecture hyperparameters for the pose network."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from ..errors import InvalidInputError

TEMPORAL_VARIANTS = ("baseline_rnn", "convgru", "none")


@dataclass(frozen=True)
class EncoderConfig:
    """Widths, strides, and freezing policy of the frame encoder, plus the
    ROI/temporal/regressor dimensions hanging off it.

    The decoder always has 3 stages of x2 upsampling, so the backbone's
    total stride must be 8. `frozen_stages` counts leading backbone stages
    whose weights are held fixed during training; the remaining
    `trainable_tail` stages are fine-tuned.
    """

    channels: tuple = (16, 32, 48, 64)
    strides: tuple = (2, 2, 2, 1)
    frozen_stages: int = 2
    decoder_channels: tuple = (48, 64)
    roi_size: int = 7
    memory_channels: int = 128
    fused_channels: int = 256
    regressor_hidden: int = 512
    temporal_variant: str = "baseline_rnn"
    tz_from_depth: bool = False
    conjugation_warp: bool = False

    def __post_init__(self):
        if len(self.channels) != len(self.strides):
            raise InvalidInputError("channels and strides must have equal length")
        if not 0 <= self.frozen_stages <= len(self.channels):
            raise InvalidInputError(
                f"frozen_stages must lie in [0, {len(self.channels)}], got {self.frozen_stages}")
        if self.total_stride != 8:
            raise InvalidInputError(
                f"backbone total stride must be 8 for the 3-stage decoder, got {self.total_stride}")
        if len(self.decoder_channels) != 2:
            raise InvalidInputError("decoder needs exactly 2 intermediate widths (3 stages total)")
        if self.temporal_variant not in TEMPORAL_VARIANTS:
            raise InvalidInputError(
                f"temporal_variant must be one of {TEMPORAL_VARIANTS}, got {self.temporal_variant!r}")
        if self.roi_size < 1 or self.memory_channels < 1 or self.fused_channels < 1:
            raise InvalidInputError("roi_size and channel widths must be positive")

    @property
    def total_stride(self) -> int:
        s = 1
        for v in self.strides:
            s *= v
        return s

    @property
    def num_stages(self) -> int:
        return len(self.channels)

    @property
    def trainable_tail(self) -> int:
        return self.num_stages - self.frozen_stages

    @property
    def depth_penult_channels(self) -> int:
        return self.decoder_channels[-1]

    @property
    def fusion_channels(self) -> int:
        """Channels of the ROI feature: backbone output + penultimate depth layer."""
        return self.channels[-1] + self.depth_penult_channels

    @property
    def depth_penult_stride(self) -> int:
        # two of three x2 decoder stages applied
        return self.total_stride // 4

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EncoderConfig":
        data = dict(data)
        for key in ("channels", "strides", "decoder_channels"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


def toy_config(**overrides) -> EncoderConfig:
    """A small configuration for desk-scale experiments and tests."""
    params = dict(
        channels=(8, 16, 24, 32),
        strides=(2, 2, 2, 1),
        frozen_stages=2,
        decoder_channels=(12, 16),
        roi_size=7,
        memory_channels=32,
        fused_channels=64,
        regressor_hidden=128,
    )
    params.update(overrides)
    return EncoderConfig(**params)
