import numpy as np
import pytest

from conftest import make_trajectory
from oracles import confusion_recount

from formcheck.classifiers import (
    LadderConfig,
    LatencyBreakdown,
    PatternPrediction,
    Prediction,
)
from formcheck.errors import InvalidInputError, NoDataError
from formcheck.evaluation import (
    ConfusionCounts,
    accuracy,
    f1,
    make_folds,
    roc_auc,
    run_crossval,
)
from formcheck.patterns import PATTERN_IDS, LabeledSample, PatternLabel

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def dummy_sample(subject_id, sample_id, labels):
    from conftest import K
    rot = np.tile(IDENTITY, (2, K, 1))
    t = make_trajectory(rot, subject_id=subject_id, sample_id=sample_id)
    return LabeledSample(t, labels)


def labels_for(present=(), absent=()):
    out = {}
    for p in present:
        out[p] = PatternLabel.PRESENT
    for p in absent:
        out[p] = PatternLabel.ABSENT
    return out


class TestMakeFolds:
    def test_ten_subjects_five_folds(self):
        samples = [
            dummy_sample(f"s{i}", f"s{i}e{j}", labels_for(absent=["too_deep"]))
            for i in range(10) for j in range(2)
        ]
        plan = make_folds(samples, 5, seed=0)
        assert plan.k == 5
        assert all(len(f) == 2 for f in plan.folds)
        all_subjects = [s for f in plan.folds for s in f]
        assert sorted(all_subjects) == sorted({s.subject_id for s in samples})

    def test_subject_atomicity(self, small_corpus):
        plan = make_folds(small_corpus.samples, 4, seed=1)
        for s in small_corpus.samples:
            assert plan.fold_of(s.subject_id) == plan.fold_of(s.subject_id)
        # both samples of a subject always live in that subject's one fold
        by_subject = {}
        for s in small_corpus.samples:
            by_subject.setdefault(s.subject_id, set()).add(plan.fold_of(s.subject_id))
        assert all(len(v) == 1 for v in by_subject.values())

    def test_table_shaped_proportions(self):
        from formcheck.synth import GenConfig, generate_corpus
        corpus = generate_corpus(GenConfig(seed=0))
        plan = make_folds(corpus.samples, 5, seed=0)
        for j, pid in enumerate(PATTERN_IDS):
            pos = lab = 0
            fold_pos = np.zeros(5)
            fold_lab = np.zeros(5)
            for s in corpus.samples:
                l = s.label(pid)
                if l is PatternLabel.UNLABELED:
                    continue
                f = plan.fold_of(s.subject_id)
                lab += 1
                fold_lab[f] += 1
                if l is PatternLabel.PRESENT:
                    pos += 1
                    fold_pos[f] += 1
            prop = pos / lab
            devs = np.abs(fold_pos / np.maximum(fold_lab, 1) - prop)
            # within +-15% of the corpus proportion where satisfiable: allow
            # one awkward fold per pattern (integer counts make exact balance
            # impossible for the rarest patterns)
            assert np.sort(devs)[-2] <= 0.15, (pid, devs)

    def test_fewer_subjects_than_folds(self):
        samples = [dummy_sample("a", "a0", labels_for(absent=["too_deep"]))]
        with pytest.raises(NoDataError):
            make_folds(samples, 2, seed=0)


class TestMetrics:
    def test_accuracy_examples(self):
        assert accuracy(ConfusionCounts(5, 5, 0, 0)) == 1.0
        assert accuracy(ConfusionCounts(0, 0, 3, 7)) == 0.0
        val = accuracy(ConfusionCounts(51, 10, 6, 0))
        assert val == pytest.approx(61 / 67)
        assert round(val, 4) == 0.9104

    def test_f1_examples(self):
        assert f1(ConfusionCounts(10, 5, 0, 0)) == 1.0
        assert f1(ConfusionCounts(0, 5, 0, 3)) == 0.0
        assert f1(ConfusionCounts(40, 0, 10, 10)) == pytest.approx(0.8)
        assert f1(ConfusionCounts(0, 5, 0, 0)) == 0.0  # degenerate denominator

    def test_roc_examples(self):
        assert roc_auc([(0.9, True), (0.8, True), (0.2, False)]) == 1.0
        assert roc_auc([(0.5, True), (0.5, False), (0.5, True)]) == 0.5
        # pos {0.9, 0.4}, neg {0.6, 0.1}: 3 of 4 ordered pairs ranked right
        assert roc_auc([(0.9, True), (0.4, True), (0.6, False), (0.1, False)]) == 0.75
        with pytest.raises(NoDataError):
            roc_auc([(0.5, True)])

    def test_matches_confusion_recount(self):
        rng = np.random.default_rng(0)
        pairs = [(bool(rng.integers(2)), bool(rng.integers(2))) for _ in range(200)]
        tp, tn, fp, fn = confusion_recount(pairs)
        c = ConfusionCounts()
        for p, a in pairs:
            c = c.add(p, a)
        assert (c.tp, c.tn, c.fp, c.fn) == (tp, tn, fp, fn)
        assert accuracy(c) == (tp + tn) / len(pairs)

    def test_negative_counts_rejected(self):
        with pytest.raises(InvalidInputError):
            ConfusionCounts(-1, 0, 0, 0)


def _harness_corpus():
    """Tiny corpus for harness sanity checks with injectable classifiers."""
    samples = []
    rng = np.random.default_rng(3)
    for i in range(10):
        for j in range(2):
            labels = {
                "too_deep": PatternLabel.PRESENT if rng.random() < 0.5 else PatternLabel.ABSENT,
                "arched_neck": PatternLabel.PRESENT if rng.random() < 0.3 else PatternLabel.ABSENT,
            }
            samples.append(dummy_sample(f"s{i:02d}", f"s{i:02d}e{j}", labels))
    return samples


class _OracleLadder:
    def __init__(self, samples):
        self.by_id = {s.sample_id: s for s in samples}


def _oracle_train(train_set, patterns, cfg, boundaries=None):
    return _OracleLadder(train_set)


def _make_oracle_predict(all_samples):
    by_id = {s.sample_id: s for s in all_samples}

    def predict(ladder, query, boundaries=None):
        s = by_id[query.sample_id]
        per = {}
        for p, lab in s.labels.items():
            if lab is PatternLabel.UNLABELED:
                continue
            present = lab is PatternLabel.PRESENT
            per[p] = PatternPrediction(lab, 1.0 if present else -1.0)
        return Prediction(per, LatencyBreakdown(0.1, 0.1, 0.1))

    return predict


def _constant_absent_predict(ladder, query, boundaries=None):
    per = {p: PatternPrediction(PatternLabel.ABSENT, -1.0) for p in ("too_deep", "arched_neck")}
    return Prediction(per, LatencyBreakdown(0.1, 0.1, 0.1))


class TestRunCrossval:
    def test_oracle_classifier_scores_perfect(self):
        samples = _harness_corpus()
        report = run_crossval(
            samples, LadderConfig(), ["too_deep", "arched_neck"], k=5, seed=0,
            train=_oracle_train, predict=_make_oracle_predict(samples),
        )
        for ps in report.per_pattern:
            assert ps.accuracy_mean == 1.0
            assert ps.f1_mean == 1.0

    def test_constant_absent_accuracy(self):
        samples = _harness_corpus()
        report = run_crossval(
            samples, LadderConfig(), ["too_deep"], k=5, seed=0,
            train=_oracle_train, predict=_constant_absent_predict,
        )
        ps = report.pattern("too_deep")
        n = sum(1 for s in samples if s.label("too_deep") is not PatternLabel.UNLABELED)
        p = sum(1 for s in samples if s.label("too_deep") is PatternLabel.PRESENT)
        # aggregate accuracy over folds equals the absent fraction overall
        total_correct = sum(
            d["tn"] for d in report.fold_details["too_deep"]
        )
        assert total_correct == n - p
        assert all(d["tp"] + d["fp"] == 0 for d in report.fold_details["too_deep"])

    def test_single_class_fold_roc_flagged(self):
        samples = []
        # subjects 0/1: positives only; others mixed: fold holding 0+1 has a
        # single-class test set for the pattern.
        for i in range(6):
            lab = PatternLabel.PRESENT if i < 2 else (
                PatternLabel.PRESENT if i % 2 else PatternLabel.ABSENT
            )
            samples.append(dummy_sample(f"s{i}", f"s{i}e0", {"too_deep": lab}))
        report = run_crossval(
            samples, LadderConfig(), ["too_deep"], k=3, seed=0,
            train=_oracle_train, predict=_make_oracle_predict(samples),
        )
        ps = report.pattern("too_deep")
        assert ps.folds_with_roc < report.k
        assert any("single-class" in f for f in ps.flags)

    def test_latency_stages_recorded(self):
        samples = _harness_corpus()
        report = run_crossval(
            samples, LadderConfig(), ["too_deep"], k=2, seed=0,
            train=_oracle_train, predict=_make_oracle_predict(samples),
        )
        assert report.latency.median_ms["total"] == pytest.approx(0.3)
        assert report.latency.n_queries == len(samples)
