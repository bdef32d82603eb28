"""Report serialization: canonical JSON plus a plain-text summary.

Reports must be byte-identical across reruns of the same configuration,
so rendering is pure: fixed field order, fixed float formatting in the
text summary, no timestamps or environment probes. Wall-clock timings
are merged in only by the report subcommand, which is documented as
non-reproducible.
"""

import json
from pathlib import Path

REPORT_FORMAT = "ffusion-report-v1"


def render_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def write_json_report(path, payload: dict) -> None:
    Path(path).write_text(render_json(payload), encoding="utf-8")


def _fmt(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def _metrics_lines(metrics: dict, indent: str = "  ") -> list:
    lines = [
        f"{indent}command accuracy: {_fmt(metrics['command_accuracy'])}",
        f"{indent}segmentation accuracy: {_fmt(metrics['seg_accuracy'])}",
    ]
    per_class = metrics.get("per_class") or {}
    if per_class:
        parts = [f"{name}={_fmt(acc)}" for name, acc in per_class.items()]
        lines.append(f"{indent}per command: " + ", ".join(parts))
    return lines


def render_text_summary(payload: dict) -> str:
    """Human-readable view of the same payload; same determinism rules."""
    lines = [f"report format: {payload.get('format', REPORT_FORMAT)}"]
    if "version" in payload:
        lines.append(f"tool version: {payload['version']}")

    degradation = payload.get("degradation")
    if degradation:
        lines.append("")
        lines.append("nominal baseline")
        lines.extend(_metrics_lines(degradation["nominal"]))
        scenarios = degradation.get("scenarios", [])
        if scenarios:
            lines.append("")
            lines.append("scenario           status       cmd-acc  retained  arbitration (cam/depth/text)")
            for item in scenarios:
                metrics = item.get("metrics")
                acc = _fmt(None if metrics is None else metrics["command_accuracy"])
                retained = _fmt(item.get("retained_accuracy"))
                arb = item.get("arbitration")
                arb_text = ("n/a" if arb is None
                            else "/".join(f"{v:.3f}" for v in arb))
                lines.append(
                    f"{item['name']:<18} {item['status']:<12} {acc:>7}"
                    f"  {retained:>8}  {arb_text}")
                if item.get("error"):
                    lines.append(f"    error: {item['error']}")
        independence = degradation.get("independence")
        if independence:
            lines.append("")
            verdict = "pass" if independence["all_pass"] else "FAIL"
            lines.append(f"encoder independence: {verdict}")
            lines.append(
                "  structural (no shared parameters): "
                + ("pass" if independence["structural_pass"] else "FAIL"))
            for modality, ok in independence["functional_pass"].items():
                leak = independence["gradient_leaks"].get(modality)
                suffix = "" if leak is None else f" (leak at {leak})"
                lines.append(
                    f"  functional {modality}: "
                    + ("pass" if ok else "FAIL") + suffix)

    probes = payload.get("probes")
    if probes:
        lines.append("")
        lines.append("single-modality probes")
        for item in probes:
            tag = " (shuffled labels)" if item.get("shuffled_labels") else ""
            lines.append(
                f"  {item['modality']:<8} accuracy {_fmt(item['accuracy'])}{tag}")

    enrichment = payload.get("enrichment")
    if enrichment:
        lines.append("")
        lines.append("noise enrichment (accuracy)")
        lines.append("  sigma    fused  camera-only")
        for row in enrichment:
            lines.append(
                f"  {row['sigma']:<7.3f}  {row['fused_accuracy']:.4f}"
                f"  {row['camera_only_accuracy']:.4f}")

    verdicts = payload.get("asil_verdicts")
    if verdicts:
        lines.append("")
        lines.append("decomposition claims")
        for item in verdicts:
            lines.append(
                f"  {item['parent']} -> {' + '.join(item['parts'])}: "
                f"{item['status']} ({item['reason']})")

    timings = payload.get("timings")
    if timings:
        lines.append("")
        lines.append("timings (seconds, not reproducible)")
        for name, seconds in timings.items():
            lines.append(f"  {name}: {seconds:.3f}")

    return "\n".join(lines) + "\n"


def write_text_report(path, payload: dict) -> None:
    Path(path).write_text(render_text_summary(payload), encoding="utf-8")
