import numpy as np
import pytest
import torch

from cropscan import ingest
from cropscan.errors import CheckpointError, ConfigurationError, ContractError
from cropscan.models import classifier as classifier_mod
from cropscan.models import gradcheck
from cropscan.models.classifier import ClassifierConfig


# -------------------------------------------------------------------- config

def test_default_config_is_three_blocks_adam():
    config = ClassifierConfig()
    assert config.conv_blocks == 3
    assert config.optimizer == "adam"
    assert config.epochs == 30


@pytest.mark.parametrize("kwargs", [
    {"conv_blocks": 0},
    {"optimizer": "sgd"},
    {"learning_rate": 0.0},
    {"epochs": -1},
    {"batch_size": 0},
    {"input_size": 4, "conv_blocks": 5},
])
def test_invalid_config_rejected(kwargs):
    with pytest.raises(ConfigurationError):
        ClassifierConfig(**kwargs)


# --------------------------------------------------------------------- model

def test_forward_shape_and_sigmoid_range():
    config = ClassifierConfig(input_size=32, base_channels=4)
    model = classifier_mod.build_classifier(config)
    model.eval()
    with torch.no_grad():
        logits = model(torch.randn(5, 3, 32, 32))
        probs = torch.sigmoid(logits)
    assert logits.shape == (5,)
    assert ((probs > 0) & (probs < 1)).all()


def test_block_structure_conv_bn_relu_pool():
    model = classifier_mod.build_classifier(ClassifierConfig(input_size=64))
    layers = list(model.features)
    assert len(layers) == 12  # 3 blocks x 4 layers
    for b in range(3):
        assert isinstance(layers[4 * b + 0], torch.nn.Conv2d)
        assert isinstance(layers[4 * b + 1], torch.nn.BatchNorm2d)
        assert isinstance(layers[4 * b + 2], torch.nn.ReLU)
        assert isinstance(layers[4 * b + 3], torch.nn.MaxPool2d)


def test_label_rule_boundary():
    assert classifier_mod.label_from_probability(0.5) == "diseased"
    assert classifier_mod.label_from_probability(0.499) == "healthy"
    assert classifier_mod.label_from_probability(0.9) == "diseased"


def test_preprocess_produces_unit_range_chw():
    config = ClassifierConfig(input_size=64)
    image = np.random.default_rng(0).integers(0, 256, (100, 150, 3), dtype=np.uint8)
    tensor = classifier_mod.preprocess_for_classifier(image, config)
    assert tensor.shape == (3, 64, 64)
    assert float(tensor.min()) >= 0.0
    assert float(tensor.max()) <= 1.0


def test_classify_rejects_wrong_shape():
    config = ClassifierConfig(input_size=32, base_channels=4)
    bundle = classifier_mod.ClassifierBundle(
        model=classifier_mod.build_classifier(config), config=config
    )
    with pytest.raises(ContractError):
        classifier_mod.classify(bundle, torch.zeros(3, 64, 64))


# ------------------------------------------------------------------ training

def small_config(**overrides):
    base = dict(input_size=32, base_channels=4, epochs=3, checkpoint_every=3)
    base.update(overrides)
    return ClassifierConfig(**base)


def test_single_class_manifest_rejected(tmp_path):
    from cropscan.synth import generate_dataset

    generate_dataset(tmp_path / "d", count=6, seed=2)
    manifest = ingest.build_manifest(tmp_path / "d")
    healthy_only = ingest.DatasetManifest(
        records=tuple(r for r in manifest.records if r.image_label == "healthy")
    )
    with pytest.raises(ConfigurationError):
        classifier_mod.train_classifier(
            healthy_only, small_config(), seed=0, root=tmp_path / "d"
        )


def test_training_is_deterministic(tmp_path):
    from cropscan.synth import generate_dataset

    generate_dataset(tmp_path / "d", count=6, seed=2)
    manifest = ingest.build_manifest(tmp_path / "d")
    run_a = classifier_mod.train_classifier(manifest, small_config(), seed=5, root=tmp_path / "d")
    run_b = classifier_mod.train_classifier(manifest, small_config(), seed=5, root=tmp_path / "d")
    assert [row["total"] for row in run_a.losses] == [row["total"] for row in run_b.losses]


def test_zero_epochs_still_saves_a_checkpoint(tmp_path):
    from cropscan.synth import generate_dataset

    generate_dataset(tmp_path / "d", count=6, seed=2)
    manifest = ingest.build_manifest(tmp_path / "d")
    run = classifier_mod.train_classifier(
        manifest, small_config(epochs=0), seed=0,
        root=tmp_path / "d", run_dir=tmp_path / "run",
    )
    assert run.losses == []
    assert run.final_checkpoint is not None
    bundle = classifier_mod.load_classifier(run.final_checkpoint)
    assert bundle.config.epochs == 0


def test_checkpoint_round_trip_preserves_weights(tmp_path):
    from cropscan.synth import generate_dataset

    generate_dataset(tmp_path / "d", count=6, seed=2)
    manifest = ingest.build_manifest(tmp_path / "d")
    run = classifier_mod.train_classifier(
        manifest, small_config(), seed=1, root=tmp_path / "d", run_dir=tmp_path / "run",
    )
    bundle = classifier_mod.load_classifier(run.final_checkpoint)
    image = np.random.default_rng(3).integers(0, 256, (32, 32, 3), dtype=np.uint8)
    tensor = classifier_mod.preprocess_for_classifier(image, bundle.config)
    label_a, prob_a = classifier_mod.classify(bundle, tensor)
    label_b, prob_b = classifier_mod.classify(run.final_checkpoint, tensor)
    assert (label_a, prob_a) == (label_b, prob_b)


def test_corrupt_checkpoint_raises(tmp_path):
    bad = tmp_path / "bad.pt"
    bad.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        classifier_mod.load_classifier(bad)


def test_missing_checkpoint_raises(tmp_path):
    with pytest.raises(CheckpointError):
        classifier_mod.load_classifier(tmp_path / "absent.pt")


# --------------------------------------------------------------------- smoke

def test_smoke_training_reaches_perfect_train_accuracy(trained_classifier):
    accuracy = classifier_mod.training_accuracy(
        trained_classifier.bundle,
        trained_classifier.dataset.manifest,
        trained_classifier.dataset.root,
    )
    assert accuracy == 1.0
    assert len(trained_classifier.run.losses) <= 30


def test_smoke_loss_decreases(trained_classifier):
    losses = [row["total"] for row in trained_classifier.run.losses]
    assert losses[-1] < losses[0]


def test_smoke_classify_probabilities_in_open_interval(trained_classifier):
    from cropscan.images import load_image_rgb

    dataset = trained_classifier.dataset
    for record in dataset.manifest.records[:5]:
        tensor = classifier_mod.preprocess_for_classifier(
            load_image_rgb(dataset.root / record.file_path), trained_classifier.config
        )
        label, prob = classifier_mod.classify(trained_classifier.bundle, tensor)
        assert 0.0 < prob < 1.0
        assert label in ("healthy", "diseased")


# ------------------------------------------------------------ gradient check

def test_dense_head_gradients_match_finite_differences():
    torch.manual_seed(0)
    config = ClassifierConfig(input_size=32, base_channels=4, conv_blocks=2)
    model = classifier_mod.build_classifier(config)
    images = torch.randn(4, 3, 32, 32)
    labels = torch.tensor([0.0, 1.0, 1.0, 0.0])
    entries = gradcheck.dense_head_gradient_check(model, images, labels, n_params=24)
    assert len(entries) >= 20
    worst = max(e.relative_error for e in entries)
    assert worst <= 1e-3


def test_gradient_check_probes_distinct_parameters():
    torch.manual_seed(1)
    config = ClassifierConfig(input_size=32, base_channels=4, conv_blocks=2)
    model = classifier_mod.build_classifier(config)
    images = torch.randn(2, 3, 32, 32)
    labels = torch.tensor([1.0, 0.0])
    entries = gradcheck.dense_head_gradient_check(model, images, labels, n_params=20)
    assert len({(e.parameter, e.index) for e in entries}) == 20
