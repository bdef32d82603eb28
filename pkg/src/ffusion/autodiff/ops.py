"""Differentiable operations over Tensors.

Every operation validates shapes eagerly and raises ShapeError naming the
offending shapes. Broadcasting is deliberately restricted to suffix-aligned
bias addition in `add`; everything else requires exact shape agreement, so
silent shape bugs cannot propagate.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import erf

from ffusion.autodiff.tensor import Array, Tensor, record_op
from ffusion.errors import MaskError, ShapeError

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

CE_PROB_FLOOR = 1e-12


def _result(inputs: Sequence[Tensor], arr: Array) -> Tensor:
    req = any(t.requires_grad for t in inputs)
    return Tensor._result(arr, req)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise addition; b may be a bias aligned to the trailing axes of a."""
    ashape, bshape = a.data.shape, b.data.shape
    if ashape == bshape:
        def backward_fn(g: Array) -> tuple:
            return g, g
    elif len(bshape) < len(ashape) and bshape == ashape[len(ashape) - len(bshape):]:
        lead = tuple(range(len(ashape) - len(bshape)))

        def backward_fn(g: Array) -> tuple:
            return g, g.sum(axis=lead)
    else:
        raise ShapeError(f"add: shapes {ashape} and {bshape} are not suffix-aligned")
    out = _result((a, b), a.data + b.data)
    record_op((a, b), out, backward_fn)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of same-shape tensors."""
    if a.data.shape != b.data.shape:
        raise ShapeError(f"mul: shapes {a.data.shape} and {b.data.shape} differ")
    out = _result((a, b), a.data * b.data)

    def backward_fn(g: Array) -> tuple:
        return g * b.data, g * a.data

    record_op((a, b), out, backward_fn)
    return out


def scale(x: Tensor, factor: float) -> Tensor:
    """Multiply by a finite python scalar."""
    f = float(factor)
    if not math.isfinite(f):
        raise ValueError(f"scale: factor must be finite, got {factor!r}")
    out = _result((x,), x.data * f)

    def backward_fn(g: Array) -> tuple:
        return (g * f,)

    record_op((x,), out, backward_fn)
    return out


def gelu(x: Tensor) -> Tensor:
    """Exact GELU: x * Phi(x) with the Gaussian CDF."""
    cdf = 0.5 * (1.0 + erf(x.data * _INV_SQRT2))
    out = _result((x,), x.data * cdf)
    xd = x.data

    def backward_fn(g: Array) -> tuple:
        pdf = np.exp(-0.5 * xd * xd) * _INV_SQRT_2PI
        return (g * (cdf + xd * pdf),)

    record_op((x,), out, backward_fn)
    return out


def relu(x: Tensor) -> Tensor:
    out = _result((x,), np.maximum(x.data, 0.0))
    positive = x.data > 0.0

    def backward_fn(g: Array) -> tuple:
        return (g * positive,)

    record_op((x,), out, backward_fn)
    return out


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    target = tuple(int(s) for s in shape)
    try:
        arr = x.data.reshape(target)
    except ValueError as exc:
        raise ShapeError(f"reshape: cannot view {x.data.shape} as {target}") from exc
    out = _result((x,), arr)
    src_shape = x.data.shape

    def backward_fn(g: Array) -> tuple:
        return (g.reshape(src_shape),)

    record_op((x,), out, backward_fn)
    return out


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    perm = tuple(int(a) for a in axes)
    if sorted(perm) != list(range(x.data.ndim)):
        raise ShapeError(f"transpose: axes {perm} are not a permutation for ndim {x.data.ndim}")
    out = _result((x,), np.transpose(x.data, perm))
    inverse = tuple(np.argsort(perm))

    def backward_fn(g: Array) -> tuple:
        return (np.transpose(g, inverse),)

    record_op((x,), out, backward_fn)
    return out


def concat(parts: Sequence[Tensor], axis: int) -> Tensor:
    """Concatenate along an existing axis; all other axes must agree."""
    if len(parts) == 0:
        raise ShapeError("concat: need at least one tensor")
    ndim = parts[0].data.ndim
    if not (-ndim <= axis < ndim):
        raise ShapeError(f"concat: axis {axis} out of range for ndim {ndim}")
    ax = axis % ndim
    base = list(parts[0].data.shape)
    for p in parts[1:]:
        other = list(p.data.shape)
        if len(other) != ndim or other[:ax] + other[ax + 1:] != base[:ax] + base[ax + 1:]:
            raise ShapeError(
                f"concat: shape {p.data.shape} incompatible with {parts[0].data.shape} on axis {ax}"
            )
    sizes = [p.data.shape[ax] for p in parts]
    out = _result(tuple(parts), np.concatenate([p.data for p in parts], axis=ax))

    def backward_fn(g: Array) -> tuple:
        grads = []
        start = 0
        for s in sizes:
            idx = [slice(None)] * g.ndim
            idx[ax] = slice(start, start + s)
            grads.append(g[tuple(idx)])
            start += s
        return tuple(grads)

    record_op(tuple(parts), out, backward_fn)
    return out


def slice_(x: Tensor, index: Sequence[slice]) -> Tensor:
    """Contiguous slicing with explicit bounds checking (unit steps only)."""
    if len(index) > x.data.ndim:
        raise ShapeError(f"slice: {len(index)} slices for ndim {x.data.ndim}")
    norm = []
    for ax, sl in enumerate(index):
        if not isinstance(sl, slice) or sl.step not in (None, 1):
            raise ShapeError("slice: only unit-step slice objects are supported")
        dim = x.data.shape[ax]
        start = 0 if sl.start is None else int(sl.start)
        stop = dim if sl.stop is None else int(sl.stop)
        if start < 0 or stop > dim or start > stop:
            raise ShapeError(f"slice: bounds [{start}:{stop}] outside axis {ax} of size {dim}")
        norm.append(slice(start, stop))
    key = tuple(norm)
    out = _result((x,), x.data[key])
    src_shape = x.data.shape

    def backward_fn(g: Array) -> tuple:
        full = np.zeros(src_shape, dtype=np.float64)
        full[key] = g
        return (full,)

    record_op((x,), out, backward_fn)
    return out


def _normalize_axes(axis, ndim: int) -> Optional[tuple]:
    if axis is None:
        return None
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    norm = []
    for a in axes:
        if not (-ndim <= a < ndim):
            raise ShapeError(f"reduction axis {a} out of range for ndim {ndim}")
        norm.append(a % ndim)
    if len(set(norm)) != len(norm):
        raise ShapeError(f"duplicate reduction axes {axes}")
    return tuple(sorted(norm))


def _expand_reduced(g: Array, axes: Optional[tuple], keepdims: bool, shape: tuple) -> Array:
    if axes is not None and not keepdims:
        for a in axes:
            g = np.expand_dims(g, a)
    return np.broadcast_to(g, shape)


def mean(x: Tensor, axis: Union[int, Sequence[int], None] = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, x.data.ndim)
    arr = np.asarray(x.data.mean(axis=axes, keepdims=keepdims))
    count = x.data.size // max(arr.size, 1)
    out = _result((x,), arr)
    src_shape = x.data.shape

    def backward_fn(g: Array) -> tuple:
        return (np.asarray(_expand_reduced(g, axes, keepdims, src_shape)) / count,)

    record_op((x,), out, backward_fn)
    return out


def sum_(x: Tensor, axis: Union[int, Sequence[int], None] = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, x.data.ndim)
    arr = np.asarray(x.data.sum(axis=axes, keepdims=keepdims))
    out = _result((x,), arr)
    src_shape = x.data.shape

    def backward_fn(g: Array) -> tuple:
        return (np.array(_expand_reduced(g, axes, keepdims, src_shape)),)

    record_op((x,), out, backward_fn)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; supports (..., m, k) @ (k, n) and matching-batch operands."""
    ashape, bshape = a.data.shape, b.data.shape
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError(f"matmul: operands must be at least 2-d, got {ashape} and {bshape}")
    if ashape[-1] != bshape[-2]:
        raise ShapeError(f"matmul: inner dimensions differ for {ashape} and {bshape}")
    if b.data.ndim > 2 and ashape[:-2] != bshape[:-2]:
        raise ShapeError(f"matmul: batch dimensions differ for {ashape} and {bshape}")
    out = _result((a, b), np.matmul(a.data, b.data))
    ad, bd = a.data, b.data

    def backward_fn(g: Array) -> tuple:
        da = np.matmul(g, np.swapaxes(bd, -1, -2))
        if bd.ndim == 2 and ad.ndim > 2:
            db = np.matmul(ad.reshape(-1, ad.shape[-1]).T, g.reshape(-1, g.shape[-1]))
        else:
            db = np.matmul(np.swapaxes(ad, -1, -2), g)
        return da, db

    record_op((a, b), out, backward_fn)
    return out


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Stable softmax; -inf logits give exactly zero probability mass.

    A row whose logits are all -inf has no finite maximum and is rejected:
    it means every key was masked for that query.
    """
    ndim = x.data.ndim
    if not (-ndim <= axis < ndim):
        raise ShapeError(f"softmax: axis {axis} out of range for ndim {ndim}")
    ax = axis % ndim
    top = x.data.max(axis=ax, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise MaskError("softmax: a row has no finite logit (all keys masked)")
    e = np.exp(x.data - top)
    denom = e.sum(axis=ax, keepdims=True)
    arr = e / denom
    out = _result((x,), arr)

    def backward_fn(g: Array) -> tuple:
        inner = (g * arr).sum(axis=ax, keepdims=True)
        return (arr * (g - inner),)

    record_op((x,), out, backward_fn)
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean and unit variance, then affine."""
    if eps <= 0.0:
        raise ValueError(f"layer_norm: eps must be positive, got {eps}")
    n = x.data.shape[-1] if x.data.ndim else 0
    if n < 1:
        raise ShapeError(f"layer_norm: last axis must be non-empty, got shape {x.data.shape}")
    if gain.data.shape != (n,) or bias.data.shape != (n,):
        raise ShapeError(
            f"layer_norm: gain {gain.data.shape} and bias {bias.data.shape} must be ({n},)"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    normed = centered * inv
    out = _result((x, gain, bias), normed * gain.data + bias.data)
    gd = gain.data

    def backward_fn(g: Array) -> tuple:
        dgain = (g * normed).reshape(-1, n).sum(axis=0)
        dbias = g.reshape(-1, n).sum(axis=0)
        dnormed = g * gd
        m1 = dnormed.mean(axis=-1, keepdims=True)
        m2 = (dnormed * normed).mean(axis=-1, keepdims=True)
        dx = inv * (dnormed - m1 - normed * m2)
        return dx, dgain, dbias

    record_op((x, gain, bias), out, backward_fn)
    return out


def embedding_lookup(table: Tensor, ids: Array) -> Tensor:
    """Gather rows of a (V, d) table by integer id; grads scatter-add back."""
    idx = np.asarray(ids)
    if idx.size == 0:
        raise ShapeError("embedding_lookup: empty id array")
    if not np.issubdtype(idx.dtype, np.integer):
        raise ShapeError(f"embedding_lookup: ids must be integers, got dtype {idx.dtype}")
    if table.data.ndim != 2:
        raise ShapeError(f"embedding_lookup: table must be 2-d, got {table.data.shape}")
    vocab, dim = table.data.shape
    lo, hi = int(idx.min()), int(idx.max())
    if lo < 0 or hi >= vocab:
        raise IndexError(f"embedding_lookup: id range [{lo}, {hi}] outside table of {vocab} rows")
    out = _result((table,), table.data[idx])
    tshape = table.data.shape

    def backward_fn(g: Array) -> tuple:
        dtable = np.zeros(tshape, dtype=np.float64)
        np.add.at(dtable, idx.reshape(-1), g.reshape(-1, dim))
        return (dtable,)

    record_op((table,), out, backward_fn)
    return out


def cross_entropy(probs: Tensor, labels: Array) -> Tensor:
    """Mean negative log-likelihood of integer labels under given probabilities.

    probs holds distributions over the last axis; labels index into it and
    must match the leading shape. Probabilities are floored at CE_PROB_FLOOR
    inside the log only; the gradient is zero in the floored region.
    """
    lab = np.asarray(labels)
    if not np.issubdtype(lab.dtype, np.integer):
        raise ShapeError(f"cross_entropy: labels must be integers, got dtype {lab.dtype}")
    if probs.data.ndim < 1:
        raise ShapeError("cross_entropy: probabilities must have a class axis")
    classes = probs.data.shape[-1]
    if lab.shape != probs.data.shape[:-1]:
        raise ShapeError(
            f"cross_entropy: label shape {lab.shape} does not match {probs.data.shape[:-1]}"
        )
    lo = int(lab.min()) if lab.size else 0
    hi = int(lab.max()) if lab.size else -1
    if lab.size == 0:
        raise ShapeError("cross_entropy: empty label array")
    if lo < 0 or hi >= classes:
        raise IndexError(f"cross_entropy: label range [{lo}, {hi}] outside {classes} classes")
    flat_p = probs.data.reshape(-1, classes)
    flat_l = lab.reshape(-1)
    n = flat_l.size
    rows = np.arange(n)
    picked = flat_p[rows, flat_l]
    floored = np.maximum(picked, CE_PROB_FLOOR)
    out_arr = np.asarray((-np.log(floored)).mean())
    out = _result((probs,), out_arr)
    pshape = probs.data.shape

    def backward_fn(g: Array) -> tuple:
        s = float(g)
        dflat = np.zeros_like(flat_p)
        dflat[rows, flat_l] = np.where(picked >= CE_PROB_FLOOR, -s / (n * floored), 0.0)
        return (dflat.reshape(pshape),)

    record_op((probs,), out, backward_fn)
    return out
