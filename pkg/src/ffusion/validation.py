"""Input validation helpers for the estimator and CLI surfaces."""

from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .scene.commands import COMMANDS
from .scene.dataset import Sample


def ensure_samples(samples: Sequence[Sample]) -> list:
    """Return samples as a list, rejecting empty input and foreign types."""
    items = list(samples)
    if not items:
        raise DataError("expected at least one sample, got none")
    for i, item in enumerate(items):
        if not isinstance(item, Sample):
            raise DataError(f"item {i} is {type(item).__name__}, expected Sample")
    return items


def ensure_labels(y: Sequence, count: int) -> np.ndarray:
    """Normalize command labels (names or ids) to an int id array."""
    labels = list(y)
    if len(labels) != count:
        raise DataError(f"got {len(labels)} labels for {count} samples")
    ids = np.empty(len(labels), dtype=np.int64)
    for i, label in enumerate(labels):
        if isinstance(label, str):
            if label not in COMMANDS:
                raise DataError(f"unknown command label {label!r}")
            ids[i] = COMMANDS.index(label)
        else:
            value = int(label)
            if not 0 <= value < len(COMMANDS):
                raise DataError(f"command id {value} outside 0..{len(COMMANDS) - 1}")
            ids[i] = value
    return ids


def ensure_fitted(estimator, attribute: str = "network_") -> None:
    """Raise unless fit() has populated the trained attributes."""
    if getattr(estimator, attribute, None) is None:
        raise DataError(
            f"{type(estimator).__name__} is not fitted; call fit() first")


def check_probability_rows(probs: np.ndarray, atol: float = 1e-6) -> None:
    """Sanity check that each row is a probability distribution."""
    probs = np.asarray(probs)
    if probs.ndim < 1 or not np.all(np.isfinite(probs)):
        raise DataError("probabilities must be finite")
    if np.any(probs < -atol) or np.abs(probs.sum(axis=-1) - 1.0).max() > atol:
        raise DataError("rows do not sum to one")


def availability_from_names(names: Optional[Sequence[str]]):
    """Build an availability mask from modality names to keep, None = all."""
    from .model.fusion import AvailabilityMask
    from .model.encoders import MODALITIES

    if names is None:
        return None
    kept = set(names)
    unknown = kept - set(MODALITIES)
    if unknown:
        raise DataError(f"unknown modalities: {sorted(unknown)}")
    return AvailabilityMask(**{m: m in kept for m in MODALITIES})
