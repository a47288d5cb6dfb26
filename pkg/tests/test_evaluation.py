from fractions import Fraction

import numpy as np
import pytest
from conftest import BALANCED, reference_counts
from hypothesis import given, settings, strategies as st
from oracles import mann_whitney_auc

from gaitsvm.errors import DegenerateClass, EmptyInput, LengthMismatch, TooFewPerClass
from gaitsvm.evaluation import (
    ConfusionMatrix,
    accuracy,
    build_confusion,
    class_rates,
    confusion_csv,
    cross_validate,
    emit_plot_data,
    group_kfold,
    pct,
    rates_csv,
    roc_curve,
    roc_one_vs_rest,
    stratified_kfold,
    trapezoid_auc,
)
from gaitsvm.labeling import label_trial
from gaitsvm.synth import SynthConfig, generate
from gaitsvm.types import GaitPhase, LabeledDataset

# Positive predictive values (percent) published with the reference matrix.
PUBLISHED_PPV = {
    GaitPhase.MidSwing: "95.3", GaitPhase.TerminalSwing: "93.9", GaitPhase.LoadingResponse: "91.8",
    GaitPhase.MidStance: "88.7", GaitPhase.TerminalStance: "86.9", GaitPhase.PreSwing: "83.0",
    GaitPhase.InitialSwing: "93.3",
}


def expand(counts):
    t, p = [], []
    for i in range(7):
        for j in range(7):
            t += [i] * int(counts[i, j])
            p += [j] * int(counts[i, j])
    return np.array(t), np.array(p)


# -- confusion and rates -------------------------------------------------------------

def test_reference_matrix_totals():
    cm = ConfusionMatrix(reference_counts())
    assert cm.total == 31426
    assert int(np.trace(cm.counts)) == 28342
    assert accuracy(cm) == pytest.approx(28342 / 31426, abs=1e-15)
    assert pct(accuracy(cm)) == "90.2"


def test_reference_ppv():
    rates = class_rates(ConfusionMatrix(reference_counts()))
    for phase, want in PUBLISHED_PPV.items():
        assert pct(rates.ppv[phase]) == want
        assert abs(100 * rates.ppv[phase] - float(want)) <= 0.05


def test_reference_tpr_examples():
    rates = class_rates(ConfusionMatrix(reference_counts()))
    assert pct(rates.tpr[GaitPhase.MidSwing]) == "95.4"
    assert pct(rates.tpr[GaitPhase.PreSwing]) == "80.3"


def test_build_confusion_matches_counts():
    ref = reference_counts()
    t, p = expand(ref)
    assert np.array_equal(build_confusion(t, p).counts, ref)


def test_identity_confusion():
    labels = np.repeat(np.arange(7), 3)
    cm = build_confusion(labels, labels)
    assert np.array_equal(cm.counts, 3 * np.eye(7, dtype=int))
    r = class_rates(cm)
    assert accuracy(cm) == 1.0
    assert all(v == 1.0 for v in r.ppv + r.tpr)
    assert all(v == 0.0 for v in r.fdr + r.fnr)


def test_confusion_errors():
    with pytest.raises(LengthMismatch):
        build_confusion([0, 1], [0])
    with pytest.raises(EmptyInput):
        build_confusion([], [])
    with pytest.raises(EmptyInput):
        accuracy(ConfusionMatrix(np.zeros((7, 7), dtype=int)))
    with pytest.raises(ValueError):
        ConfusionMatrix(np.zeros((6, 6), dtype=int))


def test_undefined_rates_are_na():
    cm = build_confusion([0, 0, 1], [0, 0, 1])
    r = class_rates(cm)
    assert r.ppv[2] is None and r.tpr[2] is None
    assert pct(r.ppv[2]) == "n/a"
    row = [line for line in rates_csv(r).splitlines() if line.startswith("LoadingResponse,")][0]
    assert row.count("n/a") == 8


def test_pct_half_up():
    assert pct(0.12345) == "12.3"
    assert pct(0.12355) == "12.4"
    assert pct(0.00049) == "0.0"
    assert pct(1.0) == "100.0"


matrices = st.lists(st.integers(0, 40), min_size=49, max_size=49).map(
    lambda v: np.array(v, dtype=np.int64).reshape(7, 7)).filter(lambda m: m.sum() > 0)


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_rate_identities(m):
    cm = ConfusionMatrix(m)
    r = class_rates(cm)
    for k in range(7):
        if r.ppv[k] is not None:
            assert r.ppv[k] + r.fdr[k] == pytest.approx(1, abs=1e-15)
            assert r.ppv[k] == pytest.approx(float(Fraction(int(m[k, k]), int(m[:, k].sum()))), rel=1e-15)
        if r.tpr[k] is not None:
            assert r.tpr[k] + r.fnr[k] == pytest.approx(1, abs=1e-15)
    # accuracy is recall weighted by class support
    support = m.sum(axis=1)
    weighted = sum(support[k] * r.tpr[k] for k in range(7) if support[k]) / m.sum()
    assert accuracy(cm) == pytest.approx(weighted, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(matrices, st.randoms(use_true_random=False))
def test_row_permutation_invariance(m, rnd):
    t, p = expand(m)
    order = list(range(t.size))
    rnd.shuffle(order)
    assert np.array_equal(build_confusion(t[order], p[order]).counts, m)


# -- ROC ---------------------------------------------------------------------------

def test_roc_perfect():
    c = roc_curve([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1])
    assert c.auc == 1.0
    assert c.points[0] == (0.0, 0.0, float("inf"))
    assert c.points[-1][:2] == (1.0, 1.0)


def test_roc_all_tied():
    c = roc_curve([1, 0, 1, 0, 0], [0.5] * 5)
    assert c.auc == 0.5
    assert len(c.points) == 2


def test_roc_worked_example():
    c = roc_curve([1, 1, 0, 1, 0, 0], [0.9, 0.8, 0.7, 0.6, 0.5, 0.4])
    assert c.auc == pytest.approx(8 / 9, abs=1e-15)
    assert c.tpr.tolist() == pytest.approx([0, 1 / 3, 2 / 3, 2 / 3, 1, 1, 1])
    assert c.fpr.tolist() == pytest.approx([0, 0, 0, 1 / 3, 1 / 3, 2 / 3, 1])


def test_roc_matches_mann_whitney():
    rng = np.random.default_rng(0)
    for _ in range(500):
        n = int(rng.integers(2, 60))
        pos = rng.random(n) < 0.4
        pos[0], pos[1] = True, False
        scores = np.round(rng.normal(size=n) + pos, int(rng.integers(0, 3)))  # plenty of ties
        c = roc_curve(pos, scores)
        assert abs(c.auc - float(mann_whitney_auc(pos, scores))) <= 1e-12
        assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)


def test_roc_degenerate():
    with pytest.raises(DegenerateClass):
        roc_curve([1, 1], [0.1, 0.2])
    with pytest.raises(LengthMismatch):
        roc_curve([1, 0], [0.1])


def test_roc_one_vs_rest():
    truths = np.array([0, 1, 2, 0])
    scores = np.zeros((4, 7))
    scores[:, 0] = [3, 1, 2, 4]
    c = roc_one_vs_rest(truths, scores, GaitPhase.MidSwing)
    assert c.auc == 1.0
    with pytest.raises(LengthMismatch):
        roc_one_vs_rest(truths, scores[:3], GaitPhase.MidSwing)


def test_trapezoid_auc_simple():
    assert trapezoid_auc([0, 0.5, 1], [0, 1, 1]) == 0.75


# -- folds -------------------------------------------------------------------------

def test_stratified_kfold_balanced():
    labels = np.repeat(np.arange(7), 10)
    folds = stratified_kfold(labels, 5, seed=0)
    for train, test in folds:
        assert test.size == 14
        assert np.array_equal(np.bincount(labels[test], minlength=7), [2] * 7)
        assert np.intersect1d(train, test).size == 0
    assert np.array_equal(np.sort(np.concatenate([t for _, t in folds])), np.arange(70))


def test_stratified_kfold_deterministic():
    labels = np.random.default_rng(1).integers(0, 7, 300)
    a = stratified_kfold(labels, 5, 42)
    b = stratified_kfold(labels, 5, 42)
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))
    c = stratified_kfold(labels, 5, 43)
    assert not all(np.array_equal(x[1], y[1]) for x, y in zip(a, c))


def test_too_few_per_class():
    labels = np.r_[np.repeat(np.arange(6), 10), [6] * 4]
    with pytest.raises(TooFewPerClass) as exc:
        stratified_kfold(labels, 5, 0)
    assert exc.value.phase is GaitPhase.InitialSwing


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(5, 40), min_size=7, max_size=7), st.integers(2, 5), st.integers(0, 2**31))
def test_stratified_kfold_partition(sizes, k, seed):
    labels = np.repeat(np.arange(7), sizes)
    folds = stratified_kfold(labels, k, seed)
    tests = np.concatenate([t for _, t in folds])
    assert np.array_equal(np.sort(tests), np.arange(labels.size))
    per_fold = np.array([np.bincount(labels[t], minlength=7) for _, t in folds])
    assert np.all(per_fold.max(axis=0) - per_fold.min(axis=0) <= 1)
    sizes_ = [t.size for _, t in folds]
    assert max(sizes_) - min(sizes_) <= 1


def test_group_kfold_keeps_groups_together():
    groups = [f"s{i % 6}" for i in range(60)]
    for train, test in group_kfold(groups, 3, 0):
        assert not {groups[i] for i in train} & {groups[i] for i in test}


# -- cross-validation --------------------------------------------------------------

def test_cv_separable(separable_dataset):
    rep = cross_validate(separable_dataset, k=5, seed=0)
    assert rep.accuracy >= 0.99
    assert rep.converged
    assert rep.confusion.total == len(separable_dataset)
    assert len(rep.fold_accuracy) == 5


def test_cv_shuffled_labels_at_chance():
    s = generate(SynthConfig(n_cycles=20, noise_std=(0.2,) * 4, distribution=BALANCED, seed=11))
    ds = label_trial(s.trial, dist=BALANCED)
    shuffled = LabeledDataset(ds.features, np.random.default_rng(0).permutation(ds.labels))
    rep = cross_validate(shuffled, k=5, seed=0)
    assert abs(rep.accuracy - 1 / 7) <= 0.05


def test_cv_duplicated_rows(separable_dataset):
    ds = separable_dataset
    doubled = LabeledDataset(np.r_[ds.features, ds.features], np.r_[ds.labels, ds.labels])
    rep = cross_validate(doubled, k=5, seed=1)
    assert rep.accuracy >= 0.99


def test_cv_deterministic(noisy_dataset):
    a = cross_validate(noisy_dataset, k=3, seed=7)
    b = cross_validate(noisy_dataset, k=3, seed=7, n_jobs=3)
    assert np.array_equal(a.predictions, b.predictions)
    assert np.array_equal(a.scores, b.scores)


# -- report files -------------------------------------------------------------------

def test_emit_plot_data(tmp_path, noisy_dataset):
    rep = cross_validate(noisy_dataset, k=3, seed=0)
    written = emit_plot_data(rep, tmp_path / "a")
    assert [p.name for p in written] == ["confusion.csv", "rates.csv", "cv_report.txt"]
    assert len((tmp_path / "a" / "confusion.csv").read_text().splitlines()) == 8
    assert len((tmp_path / "a" / "rates.csv").read_text().splitlines()) == 8
    emit_plot_data(rep, tmp_path / "b")
    for name in ("confusion.csv", "rates.csv", "cv_report.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    curve = roc_one_vs_rest(rep.truths, rep.scores, GaitPhase.MidStance)
    files = emit_plot_data(curve, tmp_path / "roc.csv", name="MidStance")
    assert [p.name for p in files] == ["roc.csv", "roc.csv.auc", "roc.svg"]
    lines = (tmp_path / "roc.csv").read_text().splitlines()
    assert lines[0] == "fpr,tpr,threshold"
    assert lines[1].startswith("0.0,0.0,")
    assert lines[-1].startswith("1.0,1.0,")
    assert (tmp_path / "roc.csv.auc").read_text().startswith("auc=")
    assert (tmp_path / "roc.svg").read_text().startswith("<svg")
    with pytest.raises(TypeError):
        emit_plot_data(object(), tmp_path / "x")


def test_confusion_csv_header():
    text = confusion_csv(build_confusion([0], [0]))
    assert text.splitlines()[0] == "true\\predicted,MidSwing,TerminalSwing,LoadingResponse,MidStance," \
                                   "TerminalStance,PreSwing,InitialSwing"
