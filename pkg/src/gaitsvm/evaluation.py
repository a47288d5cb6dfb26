"""Confusion matrices, per-class rates, ROC curves and cross-validation."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateClass,
    EmptyInput,
    FoldError,
    LengthMismatch,
    TooFewPerClass,
)
from .ingestion import csv_text, fmt
from .svm import KernelParams, TrainConfig, train_ovo
from .types import N_PHASES, PHASES, GaitPhase, LabeledDataset

NA = "n/a"


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed ``[true phase, predicted phase]``."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.shape != (N_PHASES, N_PHASES):
            raise ValueError(f"confusion matrix must be {N_PHASES}x{N_PHASES}")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other):
        return ConfusionMatrix(self.counts + other.counts)


def build_confusion(truths, preds) -> ConfusionMatrix:
    t = np.asarray(truths, dtype=np.int64).reshape(-1)
    p = np.asarray(preds, dtype=np.int64).reshape(-1)
    if t.size != p.size:
        raise LengthMismatch(f"{t.size} truths vs {p.size} predictions")
    if t.size == 0:
        raise EmptyInput("no predictions to tabulate")
    counts = np.zeros((N_PHASES, N_PHASES), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise EmptyInput("empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


@dataclass(frozen=True)
class ClassRates:
    """Per-phase PPV/FDR/TPR/FNR.  ``None`` marks a rate with an empty denominator."""

    ppv: tuple
    fdr: tuple
    tpr: tuple
    fnr: tuple


def class_rates(cm: ConfusionMatrix) -> ClassRates:
    diag = np.diag(cm.counts)
    cols = cm.counts.sum(axis=0)
    rows = cm.counts.sum(axis=1)
    ppv = tuple(float(diag[k] / cols[k]) if cols[k] else None for k in range(N_PHASES))
    tpr = tuple(float(diag[k] / rows[k]) if rows[k] else None for k in range(N_PHASES))
    fdr = tuple(None if v is None else 1.0 - v for v in ppv)
    fnr = tuple(None if v is None else 1.0 - v for v in tpr)
    return ClassRates(ppv, fdr, tpr, fnr)


def pct(rate) -> str:
    """Rate as a percentage rounded half-up to one decimal; ``n/a`` if undefined."""
    if rate is None:
        return NA
    return str(Decimal(repr(rate * 100.0)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


# -- ROC ----------------------------------------------------------------------

@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist()))


def trapezoid_auc(fpr, tpr) -> float:
    fpr = np.asarray(fpr, dtype=float)
    tpr = np.asarray(tpr, dtype=float)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def roc_curve(is_positive, scores) -> RocCurve:
    """ROC of a binary problem; rows with equal score form a single step."""
    pos = np.asarray(is_positive, dtype=bool).reshape(-1)
    s = np.asarray(scores, dtype=float).reshape(-1)
    if pos.size != s.size:
        raise LengthMismatch("labels and scores differ in length")
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateClass("ROC needs at least one positive and one negative row")
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    p_sorted = pos[order]
    # last index of each group of equal scores
    ends = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    tp = np.cumsum(p_sorted)[ends]
    fp = (ends + 1) - tp
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thr = np.r_[np.inf, s_sorted[ends]]
    return RocCurve(fpr, tpr, thr, trapezoid_auc(fpr, tpr))


def roc_one_vs_rest(truths, scores, target: GaitPhase) -> RocCurve:
    """ROC for ``target`` against all other phases using column ``target`` of ``scores``."""
    truths = np.asarray(truths, dtype=np.int64).reshape(-1)
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    if scores.shape != (truths.size, N_PHASES):
        raise LengthMismatch(f"scores must have shape ({truths.size}, {N_PHASES})")
    return roc_curve(truths == int(target), scores[:, int(target)])


# -- cross-validation ------------------------------------------------------

def stratified_kfold(labels, k: int, seed: int):
    """Return ``k`` (train, test) index arrays preserving per-phase proportions.

    Each phase's rows are shuffled with ``seed`` and dealt round-robin over
    the folds; the starting fold rotates between phases so that fold sizes
    stay balanced as well.
    """
    labels = np.asarray(labels.labels if isinstance(labels, LabeledDataset) else labels,
                        dtype=np.int64)
    if k < 2:
        raise ValueError("k must be at least 2")
    counts = np.bincount(labels, minlength=N_PHASES)
    for p in PHASES:
        if counts[p] < k:
            raise TooFewPerClass(p, int(counts[p]), k)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels.size, dtype=np.int64)
    offset = 0
    for p in PHASES:
        idx = np.flatnonzero(labels == p)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = (np.arange(idx.size) + offset) % k
        offset = (offset + idx.size) % k
    return [(np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)) for f in range(k)]


def group_kfold(groups, k: int, seed: int):
    """Folds that keep every group (e.g. subject) inside a single test fold."""
    groups = list(groups)
    names = sorted(set(groups))
    if len(names) < k:
        raise ValueError(f"need at least k={k} distinct groups, got {len(names)}")
    rng = np.random.default_rng(seed)
    names = [names[i] for i in rng.permutation(len(names))]
    fold_of_group = {g: i % k for i, g in enumerate(names)}
    fold_of = np.array([fold_of_group[g] for g in groups])
    return [(np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)) for f in range(k)]


@dataclass(frozen=True)
class CvReport:
    k: int
    fold_accuracy: tuple
    confusion: ConfusionMatrix
    rates: ClassRates
    accuracy: float
    truths: np.ndarray
    predictions: np.ndarray
    scores: np.ndarray  # (n, 7) out-of-fold vote scores in original row order
    converged: bool = True


def cross_validate(data: LabeledDataset, kernel: KernelParams | None = None,
                   cfg: TrainConfig = TrainConfig(), k: int = 5, seed: int = 0,
                   split_by: str = "row", n_jobs: int = 1) -> CvReport:
    """k-fold CV; each fold fits its own standardizer and one-vs-one model."""
    if split_by == "row":
        splits = stratified_kfold(data.labels, k, seed)
    elif split_by == "subject":
        splits = group_kfold(data.groups, k, seed)
    else:
        raise ValueError(f"unknown split_by {split_by!r}")

    def run(f):
        train, test = splits[f]
        try:
            model = train_ovo(data.subset(train), kernel, cfg)
            pred, _, score = model.predict(data.features[test])
        except Exception as exc:
            raise FoldError(f, exc) from exc
        return pred, score, model.converged

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, range(k)))
    else:
        results = [run(f) for f in range(k)]

    preds = np.empty(len(data), dtype=np.int64)
    scores = np.empty((len(data), N_PHASES))
    fold_acc = []
    for (_, test), (pred, score, _) in zip(splits, results):
        preds[test] = pred
        scores[test] = score
        fold_acc.append(float(np.mean(pred == data.labels[test])))
    cm = build_confusion(data.labels, preds)
    return CvReport(k, tuple(fold_acc), cm, class_rates(cm), accuracy(cm),
                    data.labels.copy(), preds, scores, all(r[2] for r in results))


# -- report files ------------------------------------------------------------

def confusion_csv(cm: ConfusionMatrix) -> str:
    header = ["true\\predicted"] + [p.name for p in PHASES]
    rows = [[p.name] + [str(v) for v in cm.counts[p]] for p in PHASES]
    return csv_text(header, rows)


def rates_csv(rates: ClassRates) -> str:
    header = ["phase", "ppv", "fdr", "tpr", "fnr", "ppv_pct", "fdr_pct", "tpr_pct", "fnr_pct"]
    rows = []
    for p in PHASES:
        vals = [rates.ppv[p], rates.fdr[p], rates.tpr[p], rates.fnr[p]]
        rows.append([p.name] + [NA if v is None else fmt(v) for v in vals] + [pct(v) for v in vals])
    return csv_text(header, rows)


def roc_csv(curve: RocCurve) -> str:
    rows = [[fmt(f), fmt(t), fmt(th)] for f, t, th in curve.points]
    return csv_text(["fpr", "tpr", "threshold"], rows)


def roc_svg(curve: RocCurve, size: int = 512, title: str = "") -> str:
    """Standalone SVG of the ROC polyline on a 0..1 square."""
    pad = 40
    span = size - 2 * pad

    def xy(f, t):
        return f"{pad + f * span:.3f},{pad + (1.0 - t) * span:.3f}"

    pts = " ".join(xy(f, t) for f, t in zip(curve.fpr, curve.tpr))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad + span}" x2="{pad + span}" y2="{pad}" stroke="gray" '
        'stroke-dasharray="4,4"/>',
        f'<polyline points="{pts}" fill="none" stroke="blue" stroke-width="2"/>',
        f'<text x="{size // 2}" y="{size - 8}" text-anchor="middle" font-size="14">False positive rate</text>',
        f'<text x="14" y="{size // 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 14 {size // 2})">True positive rate</text>',
        f'<text x="{size // 2}" y="24" text-anchor="middle" font-size="14">'
        f'{(title + " AUC").strip()} = {curve.auc:.4f}</text>',
        "</svg>",
    ]
    return "\n".join(lines) + "\n"


def cv_summary(report: CvReport) -> str:
    lines = [f"k={report.k}",
             f"accuracy={fmt(report.accuracy)}",
             f"accuracy_pct={pct(report.accuracy)}",
             f"rows={report.confusion.total}",
             f"converged={str(report.converged).lower()}"]
    lines += [f"fold_{i}_accuracy={fmt(a)}" for i, a in enumerate(report.fold_accuracy)]
    return "\n".join(lines) + "\n"


def _write(path, text):
    Path(path).write_text(text, encoding="utf-8", newline="\n")
    return Path(path)


def emit_plot_data(obj, path, name: str = ""):
    """Write the plot data for a CvReport, ConfusionMatrix, ClassRates or RocCurve.

    ``path`` is a directory for a CvReport and a file path otherwise.  ROC
    curves also get ``<path>.auc`` (``auc=<value>``) and ``<stem>.svg``.
    Returns the list of written paths.
    """
    path = Path(path)
    if isinstance(obj, CvReport):
        path.mkdir(parents=True, exist_ok=True)
        return [_write(path / "confusion.csv", confusion_csv(obj.confusion)),
                _write(path / "rates.csv", rates_csv(obj.rates)),
                _write(path / "cv_report.txt", cv_summary(obj))]
    if isinstance(obj, ConfusionMatrix):
        return [_write(path, confusion_csv(obj))]
    if isinstance(obj, ClassRates):
        return [_write(path, rates_csv(obj))]
    if isinstance(obj, RocCurve):
        return [_write(path, roc_csv(obj)),
                _write(path.with_name(path.name + ".auc"), f"auc={fmt(obj.auc)}\n"),
                _write(path.with_suffix(".svg"), roc_svg(obj, title=name))]
    raise TypeError(f"cannot emit plot data for {type(obj).__name__}")

