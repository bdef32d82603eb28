"""Fail-operational evaluation: run fault campaigns, measure degradation.

Each scenario corrupts raw samples with its fault list and evaluates the
model on whatever survives health triage. Single-modality faults must
never raise: the fusion core re-normalizes over the remaining channels
and the report records how much accuracy was retained. Only the
everything-failed scenario ends in the defined fusion error, which is
captured and reported as FAIL_SILENT rather than raised.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, FusionError
from ..model import MODALITIES, Metrics, evaluate
from ..model.training import EVAL_CHUNK, group_by_availability
from ..model import prepare_all, stack_features, AvailabilityMask
from ..scene.dataset import Sample
from .faults import FaultSpec, inject_faults
from .independence import IndependenceReport, verify_independence

FAIL_SILENT = "FAIL_SILENT"
STATUS_OK = "ok"

NOMINAL = "nominal"


@dataclass(frozen=True)
class Scenario:
    """A named fault campaign applied uniformly to every sample."""

    name: str
    faults: Tuple[FaultSpec, ...] = ()

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise ConfigError("scenario needs a non-empty name")

    def apply(self, samples: Sequence[Sample]) -> List[Sample]:
        return [inject_faults(s, self.faults) for s in samples]

    def to_dict(self) -> dict:
        return {"name": self.name, "faults": [f.to_dict() for f in self.faults]}

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        extra = set(data) - {"name", "faults"}
        if extra:
            raise ConfigError(f"unknown scenario fields: {sorted(extra)}")
        faults = tuple(FaultSpec.from_dict(f) for f in data.get("faults", ()))
        return cls(name=data.get("name", ""), faults=faults)


def default_scenarios(seed: int = 0) -> List[Scenario]:
    """Nominal baseline plus the five standard single-sensor campaigns."""
    return [
        Scenario(NOMINAL),
        Scenario("camera_blackout", (FaultSpec("camera", "blackout"),)),
        Scenario("lidar_blackout", (FaultSpec("lidar", "blackout"),)),
        Scenario("text_blackout", (FaultSpec("text", "blackout"),)),
        Scenario("camera_noise",
                 (FaultSpec("camera", "gaussian_noise", 0.5, seed),)),
        Scenario("lidar_dropout",
                 (FaultSpec("lidar", "partial_dropout", 0.5, seed),)),
    ]


@dataclass
class ScenarioResult:
    """Outcome of one scenario: metrics when the pipeline ran, else the
    captured fusion error."""

    name: str
    status: str
    metrics: Optional[Metrics] = None
    arbitration: Optional[List[float]] = None
    retained_accuracy: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "arbitration": self.arbitration,
            "retained_accuracy": self.retained_accuracy,
            "error": self.error,
        }


@dataclass
class DegradationReport:
    """Fault campaign results relative to the nominal baseline."""

    nominal: Metrics
    scenarios: List[ScenarioResult] = field(default_factory=list)
    independence: Optional[IndependenceReport] = None

    def result(self, name: str) -> ScenarioResult:
        for item in self.scenarios:
            if item.name == name:
                return item
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "nominal": self.nominal.to_dict(),
            "scenarios": [s.to_dict() for s in self.scenarios],
            "independence": None if self.independence is None
            else self.independence.to_dict(),
        }


def _retained(scenario_accuracy: float,
              nominal_accuracy: float) -> Optional[float]:
    if scenario_accuracy == nominal_accuracy:
        return 1.0
    if nominal_accuracy <= 0.0:
        return None  # ratio undefined against a zero baseline
    return scenario_accuracy / nominal_accuracy


def fail_operational_eval(network, samples: Sequence[Sample],
                          scenarios: Optional[Sequence[Scenario]] = None,
                          check_independence: bool = True) -> DegradationReport:
    """Evaluate every scenario against the nominal baseline."""
    chosen = list(default_scenarios() if scenarios is None else scenarios)
    names = [s.name for s in chosen]
    if NOMINAL not in names:
        raise ConfigError("scenario list must include the nominal baseline")
    if len(set(names)) != len(names):
        raise ConfigError("scenario names must be unique")
    if not samples:
        raise ConfigError("cannot evaluate an empty split")

    nominal_scenario = chosen[names.index(NOMINAL)]
    nominal_metrics, _ = evaluate(
        network, nominal_scenario.apply(samples), scenario=NOMINAL)

    report = DegradationReport(nominal=nominal_metrics)
    for scenario in chosen:
        corrupted = scenario.apply(samples)
        try:
            metrics, arbitration = evaluate(network, corrupted,
                                            scenario=scenario.name)
        except FusionError as exc:
            report.scenarios.append(ScenarioResult(
                name=scenario.name, status=FAIL_SILENT, error=str(exc)))
            continue
        report.scenarios.append(ScenarioResult(
            name=scenario.name,
            status=STATUS_OK,
            metrics=metrics,
            arbitration=[float(v) for v in arbitration],
            retained_accuracy=_retained(metrics.command_accuracy,
                                        nominal_metrics.command_accuracy),
        ))

    if check_independence:
        probe = prepare_all(list(samples[:4]), network)
        report.independence = verify_independence(network, stack_features(probe))
    return report


@dataclass(frozen=True)
class EnrichmentRow:
    """Accuracy at one noise level: full fusion vs the camera alone."""

    sigma: float
    fused_accuracy: float
    camera_only_accuracy: float

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "fused_accuracy": self.fused_accuracy,
                "camera_only_accuracy": self.camera_only_accuracy}


def _masked_accuracy(network, samples: Sequence[Sample],
                     mask: Optional[AvailabilityMask]) -> float:
    features = prepare_all(list(samples), network)
    correct = 0
    for _, indices in sorted(group_by_availability(features).items()):
        for start in range(0, len(indices), EVAL_CHUNK):
            chunk = indices[start:start + EVAL_CHUNK]
            batch = stack_features([features[i] for i in chunk])
            result = network.forward(batch, mask)
            preds = result.command_probs.data.argmax(axis=-1)
            correct += int(np.sum(preds == batch.command_ids))
    return correct / len(samples)


def snr_enrichment_eval(network, samples: Sequence[Sample],
                        sigmas: Sequence[float],
                        seed: int = 0) -> List[EnrichmentRow]:
    """Accuracy vs noise for fused operation and camera-only operation.

    Noise is injected on both continuous sensors (camera and LiDAR);
    text has no additive-noise model and stays clean. The camera-only
    column masks depth and text at fusion time on the same noisy data.
    """
    if not samples:
        raise ConfigError("cannot evaluate an empty split")
    rows = []
    camera_only = AvailabilityMask(camera=True, depth=False, text=False)
    for sigma in sigmas:
        if not (np.isfinite(sigma) and sigma >= 0):
            raise ConfigError(f"noise sigma must be >= 0, got {sigma}")
        faults = (FaultSpec("camera", "gaussian_noise", float(sigma), seed),
                  FaultSpec("lidar", "gaussian_noise", float(sigma), seed))
        noisy = [inject_faults(s, faults) for s in samples]
        rows.append(EnrichmentRow(
            sigma=float(sigma),
            fused_accuracy=_masked_accuracy(network, noisy, None),
            camera_only_accuracy=_masked_accuracy(network, noisy, camera_only),
        ))
    return rows
