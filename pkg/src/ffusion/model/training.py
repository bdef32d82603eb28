"""Training with batch-level modality dropout, and scenario evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ffusion.autodiff import AdamConfig, AdamState, Rng, Tape, adam_step, backward
from ffusion.errors import ConfigError, TrainingError
from ffusion.model.config import ModelConfig
from ffusion.model.encoders import MODALITIES
from ffusion.model.fusion import AvailabilityMask
from ffusion.model.inputs import (
    FeatureSet,
    group_by_availability,
    prepare_features,
    stack_features,
)
from ffusion.model.network import ForwardResult, FusionNetwork
from ffusion.scene.commands import COMMANDS
from ffusion.scene.dataset import Sample

EVAL_CHUNK = 64


@dataclass(frozen=True)
class TrainConfig:
    # Default step size is deliberately small: on desk-scale synthetic sets,
    # larger rates drive every modality pathway to full redundancy within an
    # epoch or two, which erases the contrast that dropout-ablation studies
    # (p_drop > 0 vs p_drop = 0) are meant to measure.
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 3e-5
    p_drop: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise ConfigError(f"epochs must be a positive integer, got {self.epochs!r}")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size!r}")
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if not (0.0 <= self.p_drop <= 0.5):
            raise ConfigError(f"p_drop must lie in [0, 0.5], got {self.p_drop!r}")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "p_drop": self.p_drop,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"train config must be a mapping, got {type(raw).__name__}")
        known = set(cls().to_dict())
        extra = sorted(set(raw) - known)
        if extra:
            raise ConfigError(f"unknown train config keys: {', '.join(extra)}")
        return cls(**{**cls().to_dict(), **raw})


@dataclass
class Metrics:
    """Evaluation results for one scenario, JSON-ready."""

    scenario: str
    command_accuracy: float
    per_class: Dict[str, Optional[float]]
    seg_accuracy: float
    loss_curve: List[float] = field(default_factory=list)

    def __post_init__(self):
        for name in ("command_accuracy", "seg_accuracy"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise TrainingError(f"{name} outside [0, 1]: {value}")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "command_accuracy": self.command_accuracy,
            "per_class": self.per_class,
            "seg_accuracy": self.seg_accuracy,
            "loss_curve": self.loss_curve,
        }


def _first_nonfinite_path(network: FusionNetwork) -> Optional[str]:
    for path, param in network.store.items():
        if not np.all(np.isfinite(param.data)):
            return path
        if param.grad is not None and not np.all(np.isfinite(param.grad)):
            return path
    return None


def prepare_all(samples: Sequence[Sample], network: FusionNetwork) -> List[FeatureSet]:
    return [prepare_features(s, network.config, network.vocab) for s in samples]


def train(network: FusionNetwork, samples: Sequence[Sample],
          config: Optional[TrainConfig] = None) -> List[float]:
    """Optimize the network in place; returns the per-batch loss curve.

    Each batch independently drops one uniformly chosen modality with
    probability p_drop (never more than one, so at least two remain).
    Deterministic given config.seed: the dropout stream consumes the same
    draws whether or not a drop triggers, so runs with different p_drop see
    identical batch orderings.
    """
    config = config or TrainConfig()
    if not samples:
        raise TrainingError("training requires a non-empty sample list")
    features = prepare_all(samples, network)
    if any(f.availability != (True, True, True) for f in features):
        bad = next(f for f in features if f.availability != (True, True, True))
        raise TrainingError(
            f"training data must be nominal; sample {bad.sample_id} has a failed modality"
        )
    rng = Rng(config.seed)
    drop_rng = rng.derive("modality-dropout")
    adam = AdamConfig(lr=config.learning_rate)
    state = AdamState.for_store(network.store)
    curve: List[float] = []
    n = len(features)
    for epoch in range(config.epochs):
        order = rng.derive(f"order/epoch{epoch}").permutation(n)
        for start in range(0, n, config.batch_size):
            picked = [features[i] for i in order[start:start + config.batch_size]]
            batch = stack_features(picked)
            gate = float(drop_rng.uniform())
            choice = int(drop_rng.integers(0, len(MODALITIES)))
            mask = AvailabilityMask()
            if gate < config.p_drop:
                mask = AvailabilityMask(**{
                    m: (i != choice) for i, m in enumerate(MODALITIES)
                })
            with Tape() as tape:
                result = network.forward(batch, mask)
                loss = network.loss(result, batch)
            value = float(loss.item())
            if not np.isfinite(value):
                culprit = _first_nonfinite_path(network)
                detail = f"; first non-finite parameter: {culprit}" if culprit else ""
                raise TrainingError(
                    f"non-finite loss {value} in epoch {epoch}, "
                    f"batch {start // config.batch_size}{detail}"
                )
            network.store.zero_grad()
            backward(tape, loss)
            try:
                adam_step(network.store, network.store.gradients(), state, adam)
            except Exception as exc:
                raise TrainingError(
                    f"optimizer failure in epoch {epoch}, "
                    f"batch {start // config.batch_size}: {exc}"
                ) from exc
            curve.append(value)
    return curve


def _accumulate(network: FusionNetwork, features: List[FeatureSet],
                mask: Optional[AvailabilityMask]):
    """Predictions and mean loss over one availability-uniform group."""
    outputs = []
    for start in range(0, len(features), EVAL_CHUNK):
        chunk = stack_features(features[start:start + EVAL_CHUNK])
        result = network.forward(chunk, mask)
        loss = network.loss(result, chunk)
        outputs.append((
            result.command_probs.data.argmax(axis=-1),
            result.seg_probs.data.argmax(axis=-1),
            float(loss.item()) * chunk.size,
            result.fused.arbitration,
        ))
    commands = np.concatenate([o[0] for o in outputs])
    segs = np.concatenate([o[1] for o in outputs])
    total_loss = sum(o[2] for o in outputs)
    arbitration = np.concatenate([o[3].reshape(-1, len(MODALITIES)) for o in outputs])
    return commands, segs, total_loss, arbitration


def evaluate(network: FusionNetwork, samples: Sequence[Sample],
             mask: Optional[AvailabilityMask] = None,
             scenario: str = "nominal",
             features: Optional[List[FeatureSet]] = None):
    """Metrics under an availability scenario; no parameter updates.

    Samples are grouped by health-derived availability so each forward pass
    sees one pattern; metric aggregation is order-independent (sums, then
    one division). Returns (Metrics, mean arbitration scores).
    """
    if not samples:
        raise TrainingError("evaluation requires a non-empty sample list")
    feats = features if features is not None else prepare_all(samples, network)
    truth_cmd = np.asarray([f.command_id for f in feats], dtype=np.int64)
    truth_seg = np.stack([f.seg_labels for f in feats])
    pred_cmd = np.zeros(len(feats), dtype=np.int64)
    pred_seg = np.zeros_like(truth_seg)
    arb = np.zeros((len(feats), len(MODALITIES)))
    total_loss = 0.0
    for pattern, indices in sorted(group_by_availability(feats).items()):
        group = [feats[i] for i in indices]
        commands, segs, loss_sum, arbitration = _accumulate(network, group, mask)
        pred_cmd[indices] = commands
        pred_seg[indices] = segs
        arb[indices] = arbitration
        total_loss += loss_sum
    correct = pred_cmd == truth_cmd
    per_class: Dict[str, Optional[float]] = {}
    for cid, name in enumerate(COMMANDS):
        hits = truth_cmd == cid
        per_class[name] = float(correct[hits].mean()) if hits.any() else None
    metrics = Metrics(
        scenario=scenario,
        command_accuracy=float(correct.mean()),
        per_class=per_class,
        seg_accuracy=float((pred_seg == truth_seg).mean()),
        loss_curve=[total_loss / len(feats)],
    )
    return metrics, arb.mean(axis=0)
