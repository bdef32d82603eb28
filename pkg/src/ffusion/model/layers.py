"""Transformer building blocks on the autodiff engine.

Every layer registers its parameters in a ParamStore under a caller-chosen
path prefix and initializes them from a seed derived per parameter path, so
initialization is independent of registration order.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from ffusion.autodiff import (
    ParamStore,
    Rng,
    Tensor,
    add,
    gelu,
    layer_norm,
    matmul,
    mul,
    reshape,
    scale,
    softmax,
    transpose,
)
from ffusion.errors import MaskError, ShapeError

MASKED_LOGIT = -np.inf


def init_param(store: ParamStore, rng: Rng, path: str, shape: tuple,
               fan_in: Optional[int] = None) -> Tensor:
    """Register a parameter initialized uniform(-s, s), s = 1/sqrt(fan_in).

    fan_in=None registers zeros (biases, positional and type embeddings,
    the fused summary token).
    """
    if fan_in is None:
        data = np.zeros(shape)
    else:
        bound = 1.0 / np.sqrt(float(fan_in))
        data = rng.derive(path).uniform(-bound, bound, size=shape)
    return store.register(path, Tensor(data, requires_grad=True))


class Linear:
    """Affine map on the last axis: y = x @ weight + bias."""

    def __init__(self, store: ParamStore, rng: Rng, path: str,
                 fan_in: int, fan_out: int, bias: bool = True):
        self.weight = init_param(store, rng, f"{path}.weight", (fan_in, fan_out), fan_in)
        self.bias = init_param(store, rng, f"{path}.bias", (fan_out,)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = matmul(x, self.weight)
        return add(y, self.bias) if self.bias is not None else y


class LayerNorm:
    """Last-axis normalization with learned gain and bias."""

    def __init__(self, store: ParamStore, rng: Rng, path: str, dim: int):
        self.gain = store.register(f"{path}.gain", Tensor(np.ones(dim), requires_grad=True))
        self.bias = init_param(store, rng, f"{path}.bias", (dim,))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias)


def key_mask_bias(keep: np.ndarray) -> Tensor:
    """Additive attention bias over keys: 0 where keep, -inf where masked."""
    keep = np.asarray(keep, dtype=bool)
    if keep.ndim != 1:
        raise ShapeError(f"key mask must be 1-d over keys, got shape {keep.shape}")
    if not keep.any():
        raise MaskError("every key is masked; attention cannot normalize")
    bias = np.where(keep, 0.0, MASKED_LOGIT)
    return Tensor.constant(bias)


def keep_matrix(keep: np.ndarray, dim: int, lead: tuple = ()) -> Tensor:
    """0/1 multiplier of shape lead + (T, d) that zeroes masked positions."""
    keep = np.asarray(keep, dtype=bool)
    column = keep.astype(np.float64)[:, None] * np.ones((1, dim))
    return Tensor.constant(np.broadcast_to(column, lead + column.shape).copy())


class MultiHeadAttention:
    """Self-attention over (..., T, d) with an optional boolean key mask.

    Masked keys receive -inf logits, which the softmax turns into exactly
    zero attention and exactly zero gradient. Returns the output and the
    attention weights (..., H, T, T).
    """

    def __init__(self, store: ParamStore, rng: Rng, path: str, dim: int, heads: int):
        if dim % heads != 0:
            raise ShapeError(f"attention dim {dim} not divisible by {heads} heads")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.query = Linear(store, rng, f"{path}.query", dim, dim)
        # A key bias shifts every logit in a softmax row equally, so it can
        # never influence the weights; omit the inert parameter.
        self.key = Linear(store, rng, f"{path}.key", dim, dim, bias=False)
        self.value = Linear(store, rng, f"{path}.value", dim, dim)
        self.out = Linear(store, rng, f"{path}.out", dim, dim)

    def _split(self, x: Tensor, lead: tuple, seq: int) -> Tensor:
        split = reshape(x, lead + (seq, self.heads, self.head_dim))
        ndim = len(lead) + 3
        axes = tuple(range(len(lead))) + (ndim - 2, ndim - 3, ndim - 1)
        return transpose(split, axes)

    def __call__(self, x: Tensor, keep: Optional[np.ndarray] = None
                 ) -> Tuple[Tensor, Tensor]:
        shape = x.shape
        if len(shape) < 2 or shape[-1] != self.dim:
            raise ShapeError(f"attention input must be (..., T, {self.dim}), got {shape}")
        lead, seq = shape[:-2], shape[-2]
        q = self._split(self.query(x), lead, seq)
        k = self._split(self.key(x), lead, seq)
        v = self._split(self.value(x), lead, seq)
        ndim = len(lead) + 3
        swap = tuple(range(ndim - 2)) + (ndim - 1, ndim - 2)
        logits = scale(matmul(q, transpose(k, swap)), 1.0 / np.sqrt(self.head_dim))
        if keep is not None:
            logits = add(logits, key_mask_bias(keep))
        attn = softmax(logits, axis=-1)
        mixed = transpose(matmul(attn, v), tuple(range(len(lead))) + (ndim - 2, ndim - 3, ndim - 1))
        return self.out(reshape(mixed, lead + (seq, self.dim))), attn


class TransformerBlock:
    """Pre-norm block: x + MHA(LN(x)), then x + MLP(LN(x)).

    Masked positions are excluded as attention keys and their outputs are
    zeroed, so they neither influence nor carry state. The attention weights
    of the block are returned alongside the output.
    """

    MLP_RATIO = 4

    def __init__(self, store: ParamStore, rng: Rng, path: str, dim: int, heads: int):
        self.norm_attn = LayerNorm(store, rng, f"{path}.norm_attn", dim)
        self.attn = MultiHeadAttention(store, rng, f"{path}.attn", dim, heads)
        self.norm_mlp = LayerNorm(store, rng, f"{path}.norm_mlp", dim)
        hidden = dim * self.MLP_RATIO
        self.expand = Linear(store, rng, f"{path}.mlp.expand", dim, hidden)
        self.contract = Linear(store, rng, f"{path}.mlp.contract", hidden, dim)
        self.dim = dim

    def __call__(self, x: Tensor, keep: Optional[np.ndarray] = None
                 ) -> Tuple[Tensor, Tensor]:
        attended, attn = self.attn(self.norm_attn(x), keep)
        x = add(x, attended)
        x = add(x, self.contract(gelu(self.expand(self.norm_mlp(x)))))
        if keep is not None and not np.asarray(keep, dtype=bool).all():
            x = mul(x, keep_matrix(keep, self.dim, x.shape[:-2]))
        return x, attn
