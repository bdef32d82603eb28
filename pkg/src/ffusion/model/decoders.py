"""Task decoders reading only the fused latent.

Both heads are functions of FusedLatent alone: the command head reads the
summary token, the segmentation head reads the camera-span tokens (zeroed
when the camera is unavailable, so outputs remain valid distributions).
"""

from __future__ import annotations

from typing import Tuple

from ffusion.autodiff import ParamStore, Rng, Tensor, reshape, softmax, transpose
from ffusion.errors import FusionError
from ffusion.model.config import ModelConfig
from ffusion.model.fusion import FusedLatent
from ffusion.model.layers import Linear
from ffusion.scene.commands import COMMANDS
from ffusion.scene.render import LABEL_GRID
from ffusion.scene.spec import CLASS_NAMES

N_COMMANDS = len(COMMANDS)
N_SEG_CLASSES = len(CLASS_NAMES)  # background + object classes


class CommandHead:
    """Linear d -> 4 on the fused summary, softmax over commands."""

    def __init__(self, store: ParamStore, rng: Rng, config: ModelConfig):
        self.proj = Linear(store, rng, "head.command", config.d, N_COMMANDS)

    def __call__(self, fused: FusedLatent) -> Tensor:
        return softmax(self.proj(fused.summary), axis=-1)


class SegHead:
    """Per-camera-token grid decoder.

    Each camera token covers an 8x8-pixel patch, i.e. a 2x2 block of label
    cells; a learned linear map d -> 2*2*4 expands the token into that block
    and the blocks assemble into the (8, 8, 4) class distribution grid.
    """

    BLOCK = 2  # label cells per patch side

    def __init__(self, store: ParamStore, rng: Rng, config: ModelConfig):
        self.config = config
        side = 32 // config.patch
        if side * self.BLOCK != LABEL_GRID:
            raise FusionError(
                f"patch grid {side} cannot expand to the {LABEL_GRID}x{LABEL_GRID} label grid"
            )
        self.side = side
        self.proj = Linear(
            store, rng, "head.segmentation",
            config.d, self.BLOCK * self.BLOCK * N_SEG_CLASSES,
        )

    def __call__(self, fused: FusedLatent) -> Tensor:
        tokens = fused.span_tokens("camera")
        logits = self.proj(tokens)  # (..., side*side, 2*2*classes)
        lead = logits.shape[:-2]
        n = len(lead)
        side, block = self.side, self.BLOCK
        grid = reshape(logits, lead + (side, side, block, block, N_SEG_CLASSES))
        # (pr, pc, i, j, c) -> (pr, i, pc, j, c) so rows become 2*pr+i.
        axes = tuple(range(n)) + (n, n + 2, n + 1, n + 3, n + 4)
        grid = transpose(grid, axes)
        grid = reshape(grid, lead + (LABEL_GRID, LABEL_GRID, N_SEG_CLASSES))
        return softmax(grid, axis=-1)


def decode_command(fused: FusedLatent, head: CommandHead) -> Tensor:
    return head(fused)


def decode_segmentation(fused: FusedLatent, head: SegHead) -> Tensor:
    return head(fused)


def command_from_probs(probs) -> Tuple[str, ...]:
    """Argmax command names for a (..., 4) probability array."""
    data = probs.data if isinstance(probs, Tensor) else probs
    flat = data.reshape(-1, N_COMMANDS)
    return tuple(COMMANDS[i] for i in flat.argmax(axis=1))
