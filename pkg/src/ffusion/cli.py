"""Command line interface: generate, train, eval, inject, asil-check, report.

Every run is driven by one JSON config; flags only override config keys
(--set dotted.key=value). Dataset builds, training, and evaluation are
deterministic per config: rerunning a subcommand reproduces its output
files byte for byte. Wall-clock timings are kept out of those artifacts
and land in a separate sidecar that only the report subcommand merges.

Exit codes: 0 success; 2 usage error (bad flags, unknown subcommand);
3 malformed configuration; 4 missing input file; 5 invalid data
(datasets, checkpoints, fault specs, architecture graphs); 1 any other
package failure. Errors print one line to stderr: `error: <kind>: <message>`.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .config import RunConfig, apply_overrides
from .errors import (
    CheckpointError,
    ConfigError,
    DataError,
    FaultError,
    FfusionError,
    GraphError,
)
from .model import FusionNetwork, evaluate, train
from .safety import (
    FaultSpec,
    check_decomposition,
    fail_operational_eval,
    inject_fault,
    load_arch_graph,
    render_json,
    render_text_summary,
    single_modality_probe,
    snr_enrichment_eval,
    write_json_report,
    write_text_report,
    REPORT_FORMAT,
)
from .scene.dataset import (
    MANIFEST_FORMAT,
    build_dataset,
    load_dataset,
    read_manifest,
    write_labels,
    write_ppm,
)
from .geometry.pointcloud import write_point_cloud
from .geometry.depthmap import write_depth

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MISSING = 4
EXIT_DATA = 5
EXIT_OTHER = 1


class MissingInputError(FfusionError):
    """An input file or directory named by the config does not exist."""


def _load_config(args) -> RunConfig:
    if args.config is None:
        data = RunConfig().to_dict()
    else:
        path = Path(args.config)
        if not path.is_file():
            raise MissingInputError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
    apply_overrides(data, args.set or [])
    return RunConfig.from_dict(data)


def _require_dataset(config: RunConfig) -> None:
    manifest = Path(config.paths.dataset_dir) / "manifest.json"
    if not manifest.is_file():
        raise MissingInputError(
            f"dataset not found: {manifest} (run the generate subcommand first)")


def _require_checkpoint(config: RunConfig) -> None:
    if not Path(config.paths.checkpoint).is_file():
        raise MissingInputError(
            f"checkpoint not found: {config.paths.checkpoint} "
            "(run the train subcommand first)")


def _prepare_parent(path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)


def _merge_timing(config: RunConfig, key: str, seconds: float) -> None:
    path = Path(config.paths.timings)
    _prepare_parent(path)
    data = {"format": "ffusion-timings-v1"}
    if path.is_file():
        try:
            previous = json.loads(path.read_text(encoding="utf-8"))
            if isinstance(previous, dict):
                data.update(previous)
        except json.JSONDecodeError:
            pass  # stale sidecar; rewrite it
    data[key] = round(seconds, 3)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def cmd_generate(args) -> int:
    config = _load_config(args)
    build_dataset(config.paths.dataset_dir, config.dataset.count,
                  config.dataset.seed, config.dataset.ratios)
    print(f"dataset: {config.dataset.count} samples under "
          f"{config.paths.dataset_dir}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load_config(args)
    _require_dataset(config)
    started = time.perf_counter()
    splits = load_dataset(config.paths.dataset_dir)
    network = FusionNetwork(config=config.model, vocab=None,
                            seed=config.training.seed)
    curve = train(network, splits["train"], config.training)
    _prepare_parent(config.paths.checkpoint)
    network.save(config.paths.checkpoint)

    val_metrics, _ = evaluate(network, splits["val"], scenario="val")
    payload = {
        "format": REPORT_FORMAT,
        "version": __version__,
        "config": config.to_dict(),
        "train_loss_curve": curve,
        "val": val_metrics.to_dict(),
    }
    _prepare_parent(config.paths.train_metrics)
    write_json_report(config.paths.train_metrics, payload)
    _merge_timing(config, "train_seconds", time.perf_counter() - started)
    print(f"checkpoint: {config.paths.checkpoint} "
          f"(final batch loss {curve[-1]:.4f}, "
          f"val accuracy {val_metrics.command_accuracy:.4f})")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _load_config(args)
    _require_dataset(config)
    _require_checkpoint(config)
    started = time.perf_counter()
    network = FusionNetwork.from_checkpoint(config.paths.checkpoint,
                                            config=config.model)
    splits = load_dataset(config.paths.dataset_dir)
    degradation = fail_operational_eval(network, splits["test"],
                                        config.scenarios)
    probes = single_modality_probe(network, splits["train"], splits["val"])
    enrichment = snr_enrichment_eval(network, splits["test"], config.sigmas,
                                     seed=config.dataset.seed)
    payload = {
        "format": REPORT_FORMAT,
        "version": __version__,
        "config": config.to_dict(),
        "degradation": degradation.to_dict(),
        "probes": [probes[m].to_dict() for m in sorted(probes)],
        "enrichment": [row.to_dict() for row in enrichment],
    }
    _prepare_parent(config.paths.eval_report)
    write_json_report(config.paths.eval_report, payload)
    _prepare_parent(config.paths.eval_summary)
    write_text_report(config.paths.eval_summary, payload)
    _merge_timing(config, "eval_seconds", time.perf_counter() - started)
    print(f"evaluation: {len(config.scenarios)} scenarios -> "
          f"{config.paths.eval_report}")
    return EXIT_OK


def cmd_inject(args) -> int:
    config = _load_config(args)
    _require_dataset(config)
    spec = FaultSpec(modality=args.modality, kind=args.kind,
                     magnitude=args.magnitude, seed=args.fault_seed)
    manifest = read_manifest(config.paths.dataset_dir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    splits = load_dataset(config.paths.dataset_dir)
    by_id = {s.sample_id: s for items in splits.values() for s in items}
    entries = []
    for entry in manifest["samples"]:
        sample = inject_fault(by_id[str(entry["id"])], spec)
        files = entry["files"]
        write_ppm(sample.rgb, out / files["rgb"])
        write_point_cloud(sample.cloud, out / files["cloud"])
        write_depth(sample.depth, out / files["depth"])
        (out / files["text"]).write_text(sample.text + "\n", encoding="ascii")
        write_labels(sample.seg_labels, out / files["labels"])
        new_entry = dict(entry)
        if sample.registration_shift != (0, 0):
            new_entry["registration_shift"] = list(sample.registration_shift)
        entries.append(new_entry)
    corrupted = dict(manifest)
    corrupted["samples"] = entries
    corrupted["fault"] = spec.to_dict()
    (out / "manifest.json").write_text(
        json.dumps(corrupted, indent=2, sort_keys=True) + "\n",
        encoding="ascii")
    print(f"injected {spec.kind} on {spec.modality} -> {out}")
    return EXIT_OK


def cmd_asil_check(args) -> int:
    graph_path = args.graph
    if graph_path is None:
        config = _load_config(args)
        graph_path = config.paths.arch_graph
    if graph_path is None:
        raise ConfigError("no architecture graph: pass --graph or set "
                          "paths.arch_graph in the config")
    if not Path(graph_path).is_file():
        raise MissingInputError(f"architecture graph not found: {graph_path}")
    graph = load_arch_graph(graph_path)
    verdicts = check_decomposition(graph)
    for verdict in verdicts:
        claim = verdict.claim
        print(f"{claim.parent} -> {' + '.join(claim.parts)}: "
              f"{verdict.status} ({verdict.reason})")
    if args.json:
        _prepare_parent(args.json)
        write_json_report(args.json, {
            "format": REPORT_FORMAT,
            "version": __version__,
            "asil_verdicts": [v.to_dict() for v in verdicts],
        })
    invalid = sum(1 for v in verdicts if v.status != "VALID")
    print(f"{len(verdicts)} claims, {invalid} invalid")
    return EXIT_OK


def _read_json(path, description: str) -> dict:
    file = Path(path)
    if not file.is_file():
        raise MissingInputError(f"{description} not found: {path}")
    try:
        return json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{description} is not valid JSON: {exc}") from exc


def cmd_report(args) -> int:
    config = _load_config(args)
    train_payload = _read_json(config.paths.train_metrics, "training metrics")
    eval_payload = _read_json(config.paths.eval_report, "evaluation report")
    payload = {
        "format": REPORT_FORMAT,
        "version": __version__,
        "config": config.to_dict(),
        "train_loss_curve": train_payload.get("train_loss_curve"),
        "val": train_payload.get("val"),
        "degradation": eval_payload.get("degradation"),
        "probes": eval_payload.get("probes"),
        "enrichment": eval_payload.get("enrichment"),
    }
    if config.paths.arch_graph is not None:
        if not Path(config.paths.arch_graph).is_file():
            raise MissingInputError(
                f"architecture graph not found: {config.paths.arch_graph}")
        graph = load_arch_graph(config.paths.arch_graph)
        payload["asil_verdicts"] = [
            v.to_dict() for v in check_decomposition(graph)]
    timings_path = Path(config.paths.timings)
    if timings_path.is_file():
        timings = _read_json(timings_path, "timings sidecar")
        payload["timings"] = {k: v for k, v in timings.items()
                              if k != "format"}
    _prepare_parent(config.paths.report)
    write_json_report(config.paths.report, payload)
    _prepare_parent(config.paths.report_summary)
    write_text_report(config.paths.report_summary, payload)
    print(f"report: {config.paths.report} and {config.paths.report_summary}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ffusion",
        description="Fail-operational multimodal fusion pipeline")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (dotted path, JSON value)")

    common(sub.add_parser("generate", help="build the synthetic dataset"))
    common(sub.add_parser("train", help="train the fusion model"))
    common(sub.add_parser("eval", help="run the fault campaign evaluation"))

    inject = sub.add_parser("inject", help="write a fault-corrupted dataset")
    common(inject)
    inject.add_argument("--modality", required=True,
                        choices=("camera", "lidar", "text"))
    inject.add_argument("--kind", required=True,
                        choices=("blackout", "gaussian_noise", "stuck_at",
                                 "miscalibration_shift", "partial_dropout"))
    inject.add_argument("--magnitude", type=float, default=0.0)
    inject.add_argument("--fault-seed", type=int, default=0)
    inject.add_argument("--out", required=True,
                        help="directory for the corrupted dataset")

    asil = sub.add_parser("asil-check", help="check ASIL decomposition claims")
    common(asil)
    asil.add_argument("--graph", help="architecture graph file")
    asil.add_argument("--json", help="also write verdicts as JSON")

    common(sub.add_parser("report", help="merge artifacts into one report"))

    handlers = {
        "generate": cmd_generate,
        "train": cmd_train,
        "eval": cmd_eval,
        "inject": cmd_inject,
        "asil-check": cmd_asil_check,
        "report": cmd_report,
    }
    parser.set_defaults(handlers=handlers)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = args.handlers[args.subcommand]
    try:
        return handler(args)
    except MissingInputError as exc:
        print(f"error: missing-input: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FaultError, GraphError, CheckpointError) as exc:
        print(f"error: invalid-data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FfusionError as exc:
        print(f"error: failure: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
