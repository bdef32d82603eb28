"""Shared architecture constants for encoders, fusion and decoders."""

from __future__ import annotations

from dataclasses import dataclass

from ffusion.errors import ConfigError


@dataclass(frozen=True)
class ModelConfig:
    """Latent width, block counts and tokenization geometry.

    The defaults are the smallest setting that exercises multi-head,
    multi-block behavior while training in minutes on a CPU.
    """

    d: int = 64
    blocks: int = 2
    heads: int = 4
    patch: int = 8
    text_len: int = 8

    def __post_init__(self):
        for name in ("d", "blocks", "heads", "patch", "text_len"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.d % self.heads != 0:
            raise ConfigError(f"d={self.d} is not divisible by heads={self.heads}")
        if self.text_len < 3:
            raise ConfigError("text_len must fit BOS, one word and EOS")

    @property
    def head_dim(self) -> int:
        return self.d // self.heads

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "blocks": self.blocks,
            "heads": self.heads,
            "patch": self.patch,
            "text_len": self.text_len,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"model config must be a mapping, got {type(raw).__name__}")
        known = {"d", "blocks", "heads", "patch", "text_len"}
        extra = sorted(set(raw) - known)
        if extra:
            raise ConfigError(f"unknown model config keys: {', '.join(extra)}")
        merged = {**cls().to_dict(), **raw}
        return cls(**merged)
