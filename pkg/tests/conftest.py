"""Shared fixtures: synthetic datasets and the slow trained-model runs.

Training fixtures are session scoped so the smoke models are trained once
and shared between the unit tests and the acceptance suite. Each records
its wall-clock training time for the runtime budget checks.
"""

import time
from types import SimpleNamespace

import pytest

from cropscan import ingest, synth
from cropscan.evaluation import ground_truths_for
from cropscan.metrics import mean_average_precision
from cropscan.models import classifier as classifier_mod
from cropscan.models import detector as detector_mod

# ---------------------------------------------------------------- reporting

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {name}: {detail}")


# ----------------------------------------------------------------- datasets

@pytest.fixture(scope="session")
def smoke_dataset(tmp_path_factory):
    """20 synthetic 256x256 images with elliptical lesions, plus manifest."""
    root = tmp_path_factory.mktemp("smoke-ellipse")
    summary = synth.generate_dataset(root, count=20, seed=101, preset="ellipse")
    manifest = ingest.build_manifest(root)
    return SimpleNamespace(root=root, manifest=manifest, summary=summary)


@pytest.fixture(scope="session")
def rect_dataset(tmp_path_factory):
    """Smaller set with rectangular lesions for mask-quality checks."""
    root = tmp_path_factory.mktemp("smoke-rect")
    summary = synth.generate_dataset(root, count=12, seed=7, preset="rectangle")
    manifest = ingest.build_manifest(root)
    return SimpleNamespace(root=root, manifest=manifest, summary=summary)


# ------------------------------------------------------------ trained models

@pytest.fixture(scope="session")
def trained_classifier(smoke_dataset, tmp_path_factory):
    run_dir = tmp_path_factory.mktemp("classifier-run")
    config = classifier_mod.ClassifierConfig(
        input_size=128, base_channels=8, epochs=30, checkpoint_every=30
    )
    started = time.monotonic()
    run = classifier_mod.train_classifier(
        smoke_dataset.manifest, config, seed=7, root=smoke_dataset.root, run_dir=run_dir
    )
    elapsed = time.monotonic() - started
    bundle = classifier_mod.load_classifier(run.final_checkpoint)
    return SimpleNamespace(
        run=run, config=config, bundle=bundle, elapsed=elapsed, dataset=smoke_dataset
    )


DETECTOR_SMOKE_CONFIG = dict(
    backbone="tiny",
    input_size=256,
    epochs=80,
    batch_size=2,
    learning_rate=0.02,
    momentum=0.9,
    checkpoint_every=40,
    score_floor=0.05,
)


@pytest.fixture(scope="session")
def trained_detector(smoke_dataset, tmp_path_factory):
    run_dir = tmp_path_factory.mktemp("detector-run")
    config = detector_mod.DetectorConfig(**DETECTOR_SMOKE_CONFIG)
    started = time.monotonic()
    run = detector_mod.train_detector(
        smoke_dataset.manifest, config, seed=3, root=smoke_dataset.root, run_dir=run_dir
    )
    elapsed = time.monotonic() - started
    bundle = detector_mod.load_detector(run.final_checkpoint)
    return SimpleNamespace(
        run=run, config=config, bundle=bundle, elapsed=elapsed, dataset=smoke_dataset
    )


@pytest.fixture(scope="session")
def detector_smoke_eval(trained_detector):
    """Predictions of the smoke detector over its own training images."""
    from cropscan.images import load_image_rgb

    dataset = trained_detector.dataset
    started = time.monotonic()
    dets_by_image = {}
    truths_by_image = {}
    for record in dataset.manifest.records:
        image = load_image_rgb(dataset.root / record.file_path)
        dets_by_image[record.image_id] = detector_mod.detect(
            trained_detector.bundle, image, score_floor=0.05
        )
        truths_by_image[record.image_id] = ground_truths_for(
            dataset.manifest, record.image_id
        )
    map_50, per_class = mean_average_precision(
        dets_by_image, truths_by_image, iou_threshold=0.5, iou_kind="box"
    )
    elapsed = time.monotonic() - started
    return SimpleNamespace(
        dets_by_image=dets_by_image,
        truths_by_image=truths_by_image,
        map_50=map_50,
        per_class=per_class,
        elapsed=elapsed,
    )


@pytest.fixture(scope="session")
def trained_rect_detector(rect_dataset, tmp_path_factory):
    run_dir = tmp_path_factory.mktemp("detector-rect-run")
    config = detector_mod.DetectorConfig(
        **{**DETECTOR_SMOKE_CONFIG, "epochs": 45, "checkpoint_every": 45}
    )
    started = time.monotonic()
    run = detector_mod.train_detector(
        rect_dataset.manifest, config, seed=3, root=rect_dataset.root, run_dir=run_dir
    )
    elapsed = time.monotonic() - started
    bundle = detector_mod.load_detector(run.final_checkpoint)
    return SimpleNamespace(
        run=run, config=config, bundle=bundle, elapsed=elapsed, dataset=rect_dataset
    )


# -------------------------------------------------------------- service bits

@pytest.fixture(scope="session")
def untrained_detector_run(smoke_dataset, tmp_path_factory):
    """A zero-epoch run whose checkpoint the service can activate.

    Service contract tests exercise plumbing, not model quality, so random
    weights are exactly enough and keep the fixture fast.
    """
    runs_root = tmp_path_factory.mktemp("service-runs")
    config = detector_mod.DetectorConfig(
        backbone="tiny", input_size=128, epochs=0, tiny_channels=32
    )
    run = detector_mod.train_detector(
        smoke_dataset.manifest, config, seed=0,
        root=smoke_dataset.root, run_dir=runs_root / "svc-model",
    )
    return SimpleNamespace(runs_root=runs_root, run_id="svc-model", run=run)
