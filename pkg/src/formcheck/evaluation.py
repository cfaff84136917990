"""Subject-disjoint cross-validation, metrics, and latency benchmarking."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .classifiers import (
    LadderConfig,
    Prediction,
    TrainedLadder,
    predict as predict_ladder,
    train_ladder,
)
from .errors import InvalidInputError, NoDataError
from .patterns import PATTERN_IDS, LabeledSample, PatternLabel
from .segmentation import Segmentation


@dataclass(frozen=True)
class FoldPlan:
    """k disjoint sets of subject ids covering all subjects."""

    folds: Tuple[Tuple[str, ...], ...]

    def __post_init__(self):
        seen: Dict[str, int] = {}
        for i, fold in enumerate(self.folds):
            for s in fold:
                if s in seen:
                    raise InvalidInputError(f"subject {s} appears in folds {seen[s]} and {i}")
                seen[s] = i
        object.__setattr__(self, "folds", tuple(tuple(sorted(f)) for f in self.folds))

    @property
    def k(self) -> int:
        return len(self.folds)

    def fold_of(self, subject_id: str) -> int:
        for i, fold in enumerate(self.folds):
            if subject_id in fold:
                return i
        raise InvalidInputError(f"subject {subject_id} is not in the plan")


def make_folds(corpus: Sequence[LabeledSample], k: int, seed: int = 0) -> FoldPlan:
    """Greedy subject assignment balancing per-pattern label proportions.

    Subjects are atomic: all their samples share one fold. Each subject goes
    to the fold that, after insertion, deviates least from the corpus-wide
    per-pattern positive proportions (with a mild size-balance term).
    """
    subjects = sorted({s.subject_id for s in corpus})
    if len(subjects) < k:
        raise NoDataError(f"need at least {k} subjects, got {len(subjects)}")
    by_subject: Dict[str, List[LabeledSample]] = {s: [] for s in subjects}
    for s in corpus:
        by_subject[s.subject_id].append(s)

    # Per-subject per-pattern (positives, labeled) counts.
    pos = {s: np.zeros(len(PATTERN_IDS)) for s in subjects}
    lab = {s: np.zeros(len(PATTERN_IDS)) for s in subjects}
    for s in subjects:
        for sample in by_subject[s]:
            for j, pid in enumerate(PATTERN_IDS):
                l = sample.label(pid)
                if l is not PatternLabel.UNLABELED:
                    lab[s][j] += 1
                    pos[s][j] += l is PatternLabel.PRESENT
    total_pos = np.sum([pos[s] for s in subjects], axis=0)
    total_lab = np.sum([lab[s] for s in subjects], axis=0)
    corpus_prop = np.divide(
        total_pos, total_lab, out=np.full(len(PATTERN_IDS), 0.5), where=total_lab > 0
    )

    rng = np.random.default_rng(seed)
    order = list(rng.permutation(subjects))
    order.sort(key=lambda s: -len(by_subject[s]))  # stable: big subjects first

    fold_pos = np.zeros((k, len(PATTERN_IDS)))
    fold_lab = np.zeros((k, len(PATTERN_IDS)))
    fold_n = np.zeros(k, dtype=int)
    assignment: Dict[str, int] = {}
    for s in order:
        # Size balance is a hard constraint: only the currently smallest
        # folds are candidates; proportions break the tie among them.
        floor = int(fold_n.min())
        allowed = [f for f in range(k) if fold_n[f] <= floor + 1]
        best, best_cost = allowed[0], np.inf
        for f in allowed:
            p = fold_pos[f] + pos[s]
            l = fold_lab[f] + lab[s]
            prop = np.divide(p, l, out=corpus_prop.copy(), where=l > 0)
            cost = float(np.abs(prop - corpus_prop).sum())
            if cost < best_cost - 1e-12:
                best, best_cost = f, cost
        assignment[s] = best
        fold_pos[best] += pos[s]
        fold_lab[best] += lab[s]
        fold_n[best] += len(by_subject[s])
    folds: List[List[str]] = [[] for _ in range(k)]
    for s, f in assignment.items():
        folds[f].append(s)
    return FoldPlan(tuple(tuple(f) for f in folds))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise InvalidInputError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def add(self, predicted: bool, actual: bool) -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + (predicted and actual),
            self.tn + (not predicted and not actual),
            self.fp + (predicted and not actual),
            self.fn + (not predicted and actual),
        )


def accuracy(c: ConfusionCounts) -> float:
    """(TP + TN) / (P + N)."""
    if c.total == 0:
        raise InvalidInputError("no scored samples")
    return (c.tp + c.tn) / c.total


def f1(c: ConfusionCounts) -> float:
    """2 TP / (2 TP + FP + FN); 0 when the denominator vanishes."""
    denom = 2 * c.tp + c.fp + c.fn
    return 2 * c.tp / denom if denom else 0.0


def roc_auc(scores: Sequence[Tuple[float, bool]]) -> float:
    """Rank-based AUC (Mann-Whitney); ties contribute one half."""
    pos = np.array([s for s, y in scores if y], dtype=float)
    neg = np.array([s for s, y in scores if not y], dtype=float)
    if pos.size == 0 or neg.size == 0:
        raise NoDataError("ROC needs at least one positive and one negative")
    greater = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((greater + 0.5 * ties) / (pos.size * neg.size))


@dataclass(frozen=True)
class PatternScore:
    pattern: str
    accuracy_mean: float
    accuracy_sd: float
    f1_mean: float
    f1_sd: float
    roc_auc_mean: Optional[float]
    roc_auc_sd: Optional[float]
    n_scored: int
    folds_with_roc: int
    flags: Tuple[str, ...] = ()


@dataclass(frozen=True)
class LatencyStats:
    median_ms: Mapping[str, float]
    p95_ms: Mapping[str, float]
    n_queries: int


@dataclass(frozen=True)
class ScoreReport:
    variant: str
    seed: int
    k: int
    config: Mapping
    per_pattern: Tuple[PatternScore, ...]
    fold_plan: FoldPlan
    fold_details: Mapping  # pattern -> per-fold dicts, for regression diffs
    latency: LatencyStats

    def pattern(self, pattern_id: str) -> PatternScore:
        for p in self.per_pattern:
            if p.pattern == pattern_id:
                return p
        raise InvalidInputError(f"pattern {pattern_id} not in report")


def _stage_dict(pred: Prediction) -> Dict[str, float]:
    lb = pred.latency
    return {
        "align": lb.align_ms,
        "feature": lb.feature_ms,
        "classify": lb.classify_ms,
        "total": lb.total_ms,
    }


def run_crossval(
    corpus: Sequence[LabeledSample],
    cfg: LadderConfig,
    patterns: Sequence[str] = PATTERN_IDS,
    k: int = 5,
    seed: int = 0,
    boundaries: Optional[Mapping[str, Segmentation]] = None,
    train: Callable = train_ladder,
    predict: Callable = predict_ladder,
) -> ScoreReport:
    """Subject-disjoint k-fold evaluation of one ladder variant.

    ``train`` and ``predict`` are injectable so the harness itself can be
    sanity-checked with oracle or constant classifiers.
    """
    plan = make_folds(corpus, k, seed)
    per_fold: Dict[str, List[Dict]] = {p: [] for p in patterns}
    latencies: List[Dict[str, float]] = []
    for f in range(plan.k):
        train_set = [s for s in corpus if plan.fold_of(s.subject_id) != f]
        test_set = [s for s in corpus if plan.fold_of(s.subject_id) == f]
        ladder = train(train_set, patterns, cfg, boundaries)
        fold_scores: Dict[str, List[Tuple[float, bool]]] = {p: [] for p in patterns}
        fold_conf: Dict[str, ConfusionCounts] = {p: ConfusionCounts() for p in patterns}
        for s in test_set:
            bnd = boundaries.get(s.sample_id) if boundaries else None
            pred = predict(ladder, s.trajectory, bnd)
            latencies.append(_stage_dict(pred))
            for p in patterns:
                truth = s.label(p)
                if truth is PatternLabel.UNLABELED or p not in pred.per_pattern:
                    continue
                got = pred.per_pattern[p]
                actual = truth is PatternLabel.PRESENT
                predicted = got.label is PatternLabel.PRESENT
                fold_conf[p] = fold_conf[p].add(predicted, actual)
                fold_scores[p].append((got.score, actual))
        for p in patterns:
            c = fold_conf[p]
            detail: Dict = {"fold": f, "tp": c.tp, "tn": c.tn, "fp": c.fp, "fn": c.fn}
            if c.total:
                detail["accuracy"] = accuracy(c)
                detail["f1"] = f1(c)
            labels = {y for _, y in fold_scores[p]}
            if len(labels) == 2:
                detail["roc_auc"] = roc_auc(fold_scores[p])
            elif c.total:
                detail["roc_flag"] = "single-class test fold, ROC omitted"
            per_fold[p].append(detail)

    per_pattern: List[PatternScore] = []
    for p in patterns:
        details = [d for d in per_fold[p] if "accuracy" in d]
        accs = np.array([d["accuracy"] for d in details])
        f1s = np.array([d["f1"] for d in details])
        rocs = np.array([d["roc_auc"] for d in details if "roc_auc" in d])
        flags = tuple(sorted({d["roc_flag"] for d in per_fold[p] if "roc_flag" in d}))
        n_scored = int(sum(d["tp"] + d["tn"] + d["fp"] + d["fn"] for d in per_fold[p]))
        per_pattern.append(
            PatternScore(
                pattern=p,
                accuracy_mean=float(accs.mean()) if accs.size else 0.0,
                accuracy_sd=float(accs.std()) if accs.size else 0.0,
                f1_mean=float(f1s.mean()) if f1s.size else 0.0,
                f1_sd=float(f1s.std()) if f1s.size else 0.0,
                roc_auc_mean=float(rocs.mean()) if rocs.size else None,
                roc_auc_sd=float(rocs.std()) if rocs.size else None,
                n_scored=n_scored,
                folds_with_roc=int(rocs.size),
                flags=flags,
            )
        )
    stages = {"align", "feature", "classify", "total"}
    med = {st: float(np.median([l[st] for l in latencies])) for st in sorted(stages)}
    p95 = {st: float(np.percentile([l[st] for l in latencies], 95)) for st in sorted(stages)}
    return ScoreReport(
        variant=cfg.variant.value,
        seed=seed,
        k=k,
        config=_config_dict(cfg),
        per_pattern=tuple(per_pattern),
        fold_plan=plan,
        fold_details={p: tuple(per_fold[p]) for p in patterns},
        latency=LatencyStats(med, p95, len(latencies)),
    )


def _config_dict(cfg: LadderConfig) -> Dict:
    return {
        "variant": cfg.variant.value,
        "feature_set": cfg.feature_set.value,
        "kernel": cfg.kernel,
        "rbf_gamma": cfg.rbf_gamma,
        "svm": {"C": cfg.svm.C, "max_epochs": cfg.svm.max_epochs,
                "tol": cfg.svm.tol, "seed": cfg.svm.seed},
        "forest": {"n_trees": cfg.forest.n_trees, "seed": cfg.forest.seed},
        "probes_per_frame": cfg.probes_per_frame,
        "fallback_top_k": cfg.fallback_top_k,
        "segmentation": cfg.segmentation.to_dict(),
        "inner_folds": cfg.inner_folds,
        "use_manual_segments": cfg.use_manual_segments,
        "seed": cfg.seed,
    }


def bench_latency(
    ladder: TrainedLadder,
    queries: Sequence,
    warmup: int = 1,
    reps: int = 3,
    boundaries: Optional[Mapping[str, Segmentation]] = None,
    predict: Callable = predict_ladder,
) -> LatencyStats:
    """Median and p95 per pipeline stage over repeated predictions.

    Queries may be trajectories or labeled samples; timing covers alignment,
    feature construction, and classification (no I/O, no model loading).
    """
    trajs = [q.trajectory if isinstance(q, LabeledSample) else q for q in queries]
    ids = [t.sample_id for t in trajs]
    for t in trajs[:warmup]:
        predict(ladder, t, boundaries.get(t.sample_id) if boundaries else None)
    rows: List[Dict[str, float]] = []
    for _ in range(reps):
        for t, sid in zip(trajs, ids):
            bnd = boundaries.get(sid) if boundaries else None
            rows.append(_stage_dict(predict(ladder, t, bnd)))
    stages = ("align", "feature", "classify", "total")
    med = {st: float(np.median([r[st] for r in rows])) for st in stages}
    p95 = {st: float(np.percentile([r[st] for r in rows], 95)) for st in stages}
    return LatencyStats(med, p95, len(rows))


def time_callable(fn: Callable, reps: int = 5, warmup: int = 1) -> float:
    """Median wall-clock milliseconds of fn() over reps runs."""
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return float(np.median(times))
