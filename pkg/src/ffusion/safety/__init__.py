"""Safety verification harness: faults, degradation, independence, ASIL."""

from .asil import (
    ASIL_LEVELS,
    ASIL_RANK,
    INVALID,
    VALID,
    ArchGraph,
    Claim,
    Verdict,
    asil_rank,
    check_decomposition,
    load_arch_graph,
    parse_arch_graph,
    rank_sum_valid,
)
from .faults import (
    FAULT_KINDS,
    FAULT_MODALITIES,
    FaultSpec,
    inject_fault,
    inject_faults,
)
from .harness import (
    FAIL_SILENT,
    NOMINAL,
    STATUS_OK,
    DegradationReport,
    EnrichmentRow,
    Scenario,
    ScenarioResult,
    default_scenarios,
    fail_operational_eval,
    snr_enrichment_eval,
)
from .independence import (
    IndependenceReport,
    check_functional,
    check_structural,
    verify_independence,
)
from .probe import (
    PROBE_BATCH,
    PROBE_EPOCHS,
    PROBE_SEED,
    ProbeResult,
    pooled_embeddings,
    probe_modality,
    single_modality_probe,
)
from .report import (
    REPORT_FORMAT,
    render_json,
    render_text_summary,
    write_json_report,
    write_text_report,
)

__all__ = [
    "ASIL_LEVELS",
    "ASIL_RANK",
    "ArchGraph",
    "Claim",
    "DegradationReport",
    "EnrichmentRow",
    "FAIL_SILENT",
    "FAULT_KINDS",
    "FAULT_MODALITIES",
    "FaultSpec",
    "INVALID",
    "IndependenceReport",
    "NOMINAL",
    "PROBE_BATCH",
    "PROBE_EPOCHS",
    "PROBE_SEED",
    "ProbeResult",
    "REPORT_FORMAT",
    "STATUS_OK",
    "Scenario",
    "ScenarioResult",
    "VALID",
    "Verdict",
    "asil_rank",
    "check_decomposition",
    "check_functional",
    "check_structural",
    "default_scenarios",
    "fail_operational_eval",
    "inject_fault",
    "inject_faults",
    "load_arch_graph",
    "parse_arch_graph",
    "pooled_embeddings",
    "probe_modality",
    "rank_sum_valid",
    "render_json",
    "render_text_summary",
    "single_modality_probe",
    "snr_enrichment_eval",
    "verify_independence",
    "write_json_report",
    "write_text_report",
]
