"""Command line interface.

Every subcommand prints a single machine-readable ``key=value`` summary
line to stdout on success. Exit codes: 0 success, 1 operation failure,
2 usage error (argparse's own convention).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import evaluation, ingest, synth
from .errors import ConfigurationError, CropscanError


def _summary(op: str, **fields) -> None:
    parts = [f"op={op}", "status=ok"]
    for key, value in fields.items():
        if isinstance(value, float):
            parts.append(f"{key}={value:.4f}")
        else:
            parts.append(f"{key}={value}")
    print(" ".join(parts))


def _load_config_overrides(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    return doc


def cmd_synth(args: argparse.Namespace) -> int:
    summary = synth.generate_dataset(
        args.out, count=args.count, seed=args.seed, preset=args.preset,
        image_size=args.image_size,
    )
    _summary(
        "synth",
        out=summary["out_dir"],
        count=summary["count"],
        diseased=summary["diseased"],
        healthy=summary["healthy"],
        seed_used=summary["seed_used"],
    )
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    manifest = ingest.build_manifest(args.root)
    ingest.save_manifest(manifest, args.out)
    diseased = sum(1 for r in manifest.records if r.image_label == "diseased")
    _summary(
        "ingest",
        images=len(manifest.records),
        annotations=len(manifest.annotations),
        diseased=diseased,
        healthy=len(manifest.records) - diseased,
        out=args.out,
    )
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    manifest = ingest.load_manifest(args.manifest)
    manifest = ingest.split_dataset(manifest, args.seed, args.fraction)
    out = args.out or args.manifest
    ingest.save_manifest(manifest, out)
    _summary(
        "split",
        train=len(manifest.split_records("train")),
        test=len(manifest.split_records("test")),
        seed=args.seed,
        fraction=args.fraction,
        fingerprint=ingest.split_fingerprint(manifest),
        out=out,
    )
    return 0


def cmd_train_cnn(args: argparse.Namespace) -> int:
    from .models import classifier as classifier_mod

    config = classifier_mod.ClassifierConfig(**_load_config_overrides(args.config))
    manifest = ingest.load_manifest(args.manifest)
    run = classifier_mod.train_classifier(
        manifest, config, args.seed, root=args.root, run_dir=args.run_dir
    )
    last = run.losses[-1] if run.losses else {}
    _summary(
        "train-cnn",
        run_id=run.run_id,
        epochs=len(run.losses),
        final_loss=last.get("total", float("nan")),
        train_accuracy=last.get("train_accuracy", float("nan")),
        checkpoint=run.final_checkpoint or "none",
    )
    return 0


def cmd_train_detector(args: argparse.Namespace) -> int:
    from .models import detector as detector_mod

    config = detector_mod.DetectorConfig(**_load_config_overrides(args.config))
    manifest = ingest.load_manifest(args.manifest)
    run = detector_mod.train_detector(
        manifest, config, args.seed, root=args.root, run_dir=args.run_dir
    )
    last = run.losses[-1] if run.losses else {}
    _summary(
        "train-detector",
        run_id=run.run_id,
        epochs=len(run.losses),
        final_loss=last.get("total", float("nan")),
        checkpoint=run.final_checkpoint or "none",
    )
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    from .models import detector as detector_mod
    from .models.runs import latest_checkpoint

    manifest = ingest.load_manifest(args.manifest)
    checkpoint = latest_checkpoint(args.run_dir)
    bundle = detector_mod.load_detector(checkpoint)
    predictions = detector_mod.predict_manifest(
        bundle, manifest, root=args.root, split=args.split,
        score_floor=args.score_threshold,
    )
    dims = {r.image_id: (r.width, r.height) for r in manifest.records}
    doc = evaluation.predictions_to_dict(
        predictions, dims, model_run_id=Path(args.run_dir).name,
        score_floor=args.score_threshold,
    )
    evaluation.save_predictions(doc, args.out)
    n_dets = sum(len(v) for v in predictions.values())
    _summary("predict", images=len(predictions), detections=n_dets, out=args.out)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    manifest = ingest.load_manifest(args.manifest)
    predictions = evaluation.load_predictions(args.predictions)
    report = evaluation.evaluate_predictions(
        manifest,
        predictions,
        score_threshold=args.score_threshold,
        iou_threshold=args.iou_threshold,
    )
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True))
    fields = {
        "images": report["n_images"],
        "accuracy": report["accuracy"],
        "precision": report["precision"],
        "recall": report["recall"],
        "f1": report["f1"],
    }
    if "map_50" in report:
        fields["map_50"] = report["map_50"]
    if "map_50_mask" in report:
        fields["map_50_mask"] = report["map_50_mask"]
    if args.out:
        fields["out"] = args.out
    _summary("evaluate", **fields)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import config_from_env, create_app

    host, _, port = args.addr.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigurationError(f"--addr must look like host:port, got {args.addr!r}")
    app = create_app(config_from_env())
    _summary("serve", addr=args.addr)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cropscan",
        description="Crop disease detection: dataset tools, training, evaluation, serving.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic fixture dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=sorted(synth.PRESETS), default="ellipse")
    p.add_argument("--image-size", type=int, default=256)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("ingest", help="walk a dataset root into a manifest")
    p.add_argument("--root", required=True, help="dataset root directory")
    p.add_argument("--out", required=True, help="manifest JSON path")
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("split", help="assign train/test deterministically")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--fraction", type=float, default=0.8)
    p.add_argument("--out", help="output manifest path (defaults to in-place)")
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("train-cnn", help="train the binary image classifier")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", required=True, help="dataset root for image paths")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON file of config field overrides")
    p.add_argument("--run-dir", help="directory for checkpoints and the loss trace")
    p.set_defaults(handler=cmd_train_cnn)

    p = sub.add_parser("train-detector", help="train the instance segmentation model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON file of config field overrides")
    p.add_argument("--run-dir", help="directory for checkpoints and the loss trace")
    p.set_defaults(handler=cmd_train_detector)

    p = sub.add_parser("predict", help="run a trained detector over a split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--run-dir", required=True, help="training run directory")
    p.add_argument("--out", required=True, help="predictions JSON path")
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--score-threshold", type=float, default=0.05,
                   help="minimum score for a detection to be kept")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("evaluate", help="score a predictions file against a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", help="write the full report JSON here")
    p.add_argument("--score-threshold", type=float, default=0.5)
    p.add_argument("--iou-threshold", type=float, default=0.5)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    p.add_argument("--addr", default="127.0.0.1:8000", help="host:port to bind")
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except CropscanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
