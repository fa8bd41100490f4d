from .classifier import (
    ClassifierBundle,
    ClassifierConfig,
    LeafClassifier,
    build_classifier,
    classify,
    label_from_probability,
    load_classifier,
    preprocess_for_classifier,
    train_classifier,
    training_accuracy,
)
from .detector import (
    DetectorBundle,
    DetectorConfig,
    DetectorSample,
    build_detector,
    detect,
    load_detector,
    predict_manifest,
    prepare_training_samples,
    train_detector,
)
from .gradcheck import GradientCheckEntry, dense_head_gradient_check
from .runs import TrainingRun, latest_checkpoint, load_checkpoint

__all__ = [
    "ClassifierBundle",
    "ClassifierConfig",
    "LeafClassifier",
    "build_classifier",
    "classify",
    "label_from_probability",
    "load_classifier",
    "preprocess_for_classifier",
    "train_classifier",
    "training_accuracy",
    "DetectorBundle",
    "DetectorConfig",
    "DetectorSample",
    "build_detector",
    "detect",
    "load_detector",
    "predict_manifest",
    "prepare_training_samples",
    "train_detector",
    "GradientCheckEntry",
    "dense_head_gradient_check",
    "TrainingRun",
    "latest_checkpoint",
    "load_checkpoint",
]
