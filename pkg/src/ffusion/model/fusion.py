"""Attention-based fusion of per-modality tokens with availability masking.

Unavailable modalities keep their span in the concatenated sequence but are
replaced by constant zeros, excluded as attention keys (-inf logits, exactly
zero weight and gradient) and re-zeroed after every block, so they contribute
no keys, queries or values anywhere. Fusing with a modality masked is
therefore numerically identical to fusing with it physically absent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ffusion.autodiff import ParamStore, Rng, Tensor, add, concat, mul, reshape, slice_
from ffusion.errors import FusionError, ShapeError
from ffusion.model.config import ModelConfig
from ffusion.model.encoders import MODALITIES, TokenSequence
from ffusion.model.layers import LayerNorm, TransformerBlock, init_param, keep_matrix

FUSION_BLOCKS = 2


@dataclass(frozen=True)
class AvailabilityMask:
    """Per-modality availability; at least one modality must remain."""

    camera: bool = True
    depth: bool = True
    text: bool = True

    def __post_init__(self):
        if not (self.camera or self.depth or self.text):
            raise FusionError("no modality available: system-level fail signal")

    def __getitem__(self, modality: str) -> bool:
        if modality not in MODALITIES:
            raise FusionError(f"unknown modality {modality!r}")
        return getattr(self, modality)

    def as_dict(self) -> Dict[str, bool]:
        return {m: getattr(self, m) for m in MODALITIES}


@dataclass
class FusedLatent:
    """Fused token sequence, span bookkeeping and arbitration scores.

    tokens is (..., 1 + sum of span lengths, d) with the summary token at
    index 0. spans maps modality -> (start, stop) into the token axis
    ((start == stop) when the modality was physically absent). arbitration
    holds per-sample scores (..., 3) in MODALITIES order: the summary
    token's final-block attention mass per span, head-averaged and
    renormalized excluding the summary's self-attention.
    """

    tokens: Tensor
    spans: Dict[str, Tuple[int, int]]
    available: Dict[str, bool]
    arbitration: np.ndarray
    attention: Tensor = field(repr=False)

    @property
    def summary(self) -> Tensor:
        """The fused summary vector(s), shape (..., d)."""
        lead = self.tokens.shape[:-2]
        dim = self.tokens.shape[-1]
        index = tuple(slice(None) for _ in lead) + (slice(0, 1), slice(0, dim))
        return reshape(slice_(self.tokens, index), lead + (dim,))

    def span_tokens(self, modality: str) -> Tensor:
        start, stop = self.spans[modality]
        if start == stop:
            raise FusionError(f"{modality} span is empty in this fused latent")
        lead = self.tokens.shape[:-2]
        dim = self.tokens.shape[-1]
        index = tuple(slice(None) for _ in lead) + (slice(start, stop), slice(0, dim))
        return slice_(self.tokens, index)


def arbitration_weights(fused: FusedLatent) -> Dict[str, float]:
    """Per-modality arbitration scores averaged over any batch axes."""
    flat = fused.arbitration.reshape(-1, len(MODALITIES)).mean(axis=0)
    return {m: float(flat[i]) for i, m in enumerate(MODALITIES)}


class FusionCore:
    """Learned summary token + modality type embeddings + L_f blocks."""

    def __init__(self, store: ParamStore, rng: Rng, config: ModelConfig):
        self.config = config
        self.cls = init_param(store, rng, "fusion.cls", (1, config.d), config.d)
        self.type_table = init_param(
            store, rng, "fusion.type", (len(MODALITIES), config.d), config.d
        )
        self.blocks = [
            TransformerBlock(store, rng, f"fusion.block{i}", config.d, config.heads)
            for i in range(FUSION_BLOCKS)
        ]
        self.norm = LayerNorm(store, rng, "fusion.norm", config.d)

    def _type_vector(self, index: int) -> Tensor:
        row = slice_(self.type_table, (slice(index, index + 1), slice(0, self.config.d)))
        return reshape(row, (self.config.d,))

    def fuse(self, latents: Sequence[TokenSequence], mask: AvailabilityMask) -> FusedLatent:
        """Concatenate summary token + modality spans and run the fusion stack.

        latents lists the physically present modalities (any subset, each
        modality at most once). A present modality still counts as
        unavailable when its own availability flag or the mask says so.
        """
        by_modality = {}
        for seq in latents:
            if seq.modality in by_modality:
                raise FusionError(f"duplicate modality {seq.modality!r} in fusion input")
            if seq.tokens.shape[-1] != self.config.d:
                raise ShapeError(
                    f"{seq.modality} tokens have width {seq.tokens.shape[-1]}, "
                    f"expected {self.config.d}"
                )
            by_modality[seq.modality] = seq
        if not by_modality:
            raise FusionError("fusion needs at least one token sequence")
        leads = {seq.tokens.shape[:-2] for seq in by_modality.values()}
        if len(leads) != 1:
            raise ShapeError(f"inconsistent batch shapes across modalities: {leads}")
        lead = leads.pop()

        available = {
            m: bool(m in by_modality and by_modality[m].availability and mask[m])
            for m in MODALITIES
        }
        if not any(available.values()):
            raise FusionError("no modality available: system-level fail signal")

        dim = self.config.d
        parts = [add(Tensor.constant(np.zeros(lead + (1, dim))), self.cls)]
        keep = [True]
        spans = {}
        cursor = 1
        for index, modality in enumerate(MODALITIES):
            if modality not in by_modality:
                spans[modality] = (cursor, cursor)
                continue
            seq = by_modality[modality]
            length = seq.length
            if available[modality]:
                span = add(seq.tokens, self._type_vector(index))
            else:
                span = Tensor.constant(np.zeros(lead + (length, dim)))
            parts.append(span)
            keep.extend([available[modality]] * length)
            spans[modality] = (cursor, cursor + length)
            cursor += length

        tokens = concat(parts, axis=len(lead)) if len(parts) > 1 else parts[0]
        keep_vec = np.asarray(keep, dtype=bool)
        attn = None
        for block in self.blocks:
            tokens, attn = block(tokens, keep_vec)
        tokens = self.norm(tokens)
        if not keep_vec.all():
            tokens = mul(tokens, keep_matrix(keep_vec, dim, lead))

        scores = self._arbitration(attn.data, spans, keep_vec)
        return FusedLatent(
            tokens=tokens,
            spans=spans,
            available=available,
            arbitration=scores,
            attention=attn,
        )

    @staticmethod
    def _arbitration(attn: np.ndarray, spans: Dict[str, Tuple[int, int]],
                     keep_vec: np.ndarray) -> np.ndarray:
        # Summary-token query row, averaged over heads: (..., H, T, T) -> (..., T)
        per_key = attn[..., :, 0, :].mean(axis=-2)
        masses = np.stack(
            [per_key[..., start:stop].sum(axis=-1) for start, stop in
             (spans[m] for m in MODALITIES)],
            axis=-1,
        )
        denom = masses.sum(axis=-1, keepdims=True)
        uniform = keep_vec[1:].astype(np.float64)
        # All summary attention on itself would zero the denominator; fall
        # back to uniform over available spans (never observed in practice).
        safe = np.where(denom > 0.0, denom, 1.0)
        fallback = np.zeros_like(masses)
        for i, m in enumerate(MODALITIES):
            start, stop = spans[m]
            if stop > start and uniform[start - 1]:
                fallback[..., i] = 1.0
        fallback /= np.maximum(fallback.sum(axis=-1, keepdims=True), 1.0)
        return np.where(denom > 0.0, masses / safe, fallback)
