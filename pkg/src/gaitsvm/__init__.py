"""Gait-phase classification from a single shank IMU and the knee angle.

Pipeline: :mod:`gaitsvm.ingestion` (CSV I/O, channel alignment) ->
:mod:`gaitsvm.labeling` (knee-peak cycle segmentation) -> :mod:`gaitsvm.svm`
(SMO-trained RBF SVMs combined one-vs-one) -> :mod:`gaitsvm.evaluation`
(cross-validation, confusion matrix, rates, ROC).  :mod:`gaitsvm.synth`
produces synthetic trials with known ground truth.
"""

__version__ = "0.1.0"

from .types import FEATURES, PHASES, GaitPhase, LabeledDataset, Trial, phase_from_index, phase_index
from .labeling import (
    DEFAULT_DISTRIBUTION,
    PeakDetectorConfig,
    PhaseDistribution,
    detect_peaks,
    label_trial,
    segment_cycles,
    subject_threshold,
)
from .svm import (
    KernelParams,
    OvoModel,
    TrainConfig,
    fine_gaussian_gamma,
    load_model,
    predict_ovo,
    rbf_kernel,
    save_model,
    smo_train,
    train_ovo,
)
from .evaluation import (
    ConfusionMatrix,
    accuracy,
    build_confusion,
    class_rates,
    cross_validate,
    roc_one_vs_rest,
    stratified_kfold,
)
from .synth import SynthConfig, generate

__all__ = [
    "FEATURES", "PHASES", "GaitPhase", "LabeledDataset", "Trial", "phase_from_index", "phase_index",
    "DEFAULT_DISTRIBUTION", "PeakDetectorConfig", "PhaseDistribution", "detect_peaks", "label_trial",
    "segment_cycles", "subject_threshold", "KernelParams", "OvoModel", "TrainConfig",
    "fine_gaussian_gamma", "load_model", "predict_ovo", "rbf_kernel", "save_model", "smo_train",
    "train_ovo", "ConfusionMatrix", "accuracy", "build_confusion", "class_rates", "cross_validate",
    "roc_one_vs_rest", "stratified_kfold", "SynthConfig", "generate",
]
