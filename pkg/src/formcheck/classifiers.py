"""The classifier ladder: five ways to label error patterns in a query squat.

Variants, ordered by decreasing per-query cost:

* ``1nn-dtw``          - DTW against every training sample, copy the nearest
                         labeled neighbor's label.
* ``1nn-refdtw``       - one DTW to a fixed reference, then frame-wise
                         comparisons against pre-warped training samples.
* ``refdtw-svm``       - reference warp, full feature vector, one linear
                         model per pattern.
* ``refdtw-rf-svm``    - as above with forest-based feature selection, so
                         prediction touches only a few hundred features.
* ``segment-rf-svm``   - refdtw-rf-svm on a single movement segment per
                         pattern, chosen by cross-validated accuracy.

Two extra configurations exist for comparison runs: ``refdtw-rf`` (pure
forest vote on the full feature vector) and ``segment-1nn-dtw`` (nearest
neighbor on per-segment DTW distances).
"""

from __future__ import annotations

import time
import warnings
import zlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .align import dtw, framewise_distance, select_reference, warp_to_reference
from .errors import ConfigError, InvalidInputError, NoDataError, NotFoundError
from .features import (
    FeatureLayout,
    FeatureSet,
    Scaler,
    extract,
    extract_matrix,
    fit_scaler,
)
from .learn import (
    FeatureMask,
    ForestConfig,
    LinearModel,
    RandomForest,
    RbfModel,
    SelectionConfig,
    SvmConfig,
    decision_values,
    rbf_decision_values,
    select_features,
    train_forest,
    train_linear,
    train_rbf,
)
from .motion import Trajectory, euler_from_quats
from .patterns import PATTERN_IDS, LabeledSample, PatternLabel
from .segmentation import (
    CANONICAL_ORDER,
    SegmentConfig,
    SegmentLabel,
    Segmentation,
    extract_segment,
    segment,
)


class LadderVariant(str, Enum):
    ONE_NN_DTW = "1nn-dtw"
    ONE_NN_REFDTW = "1nn-refdtw"
    REFDTW_SVM = "refdtw-svm"
    REFDTW_RF_SVM = "refdtw-rf-svm"
    REFDTW_RF = "refdtw-rf"
    SEGMENT_RF_SVM = "segment-rf-svm"
    SEGMENT_1NN_DTW = "segment-1nn-dtw"


SVM_FAMILY = (
    LadderVariant.REFDTW_SVM,
    LadderVariant.REFDTW_RF_SVM,
    LadderVariant.REFDTW_RF,
    LadderVariant.SEGMENT_RF_SVM,
)


@dataclass(frozen=True)
class LadderConfig:
    variant: LadderVariant = LadderVariant.SEGMENT_RF_SVM
    feature_set: FeatureSet = FeatureSet.EULER_POSITIONS
    kernel: str = "linear"  # "linear" or "rbf"
    rbf_gamma: float = 0.01
    svm: SvmConfig = field(default_factory=SvmConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    probes_per_frame: int = 20
    fallback_top_k: int = 32
    segmentation: SegmentConfig = field(default_factory=SegmentConfig)
    inner_folds: int = 3
    use_manual_segments: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.kernel not in ("linear", "rbf"):
            raise ConfigError(f"kernel must be 'linear' or 'rbf', got {self.kernel!r}")
        if self.inner_folds < 2:
            raise ConfigError("inner_folds must be >= 2")

    def selection_config(self, seed: int) -> SelectionConfig:
        return SelectionConfig(
            probes_per_frame=self.probes_per_frame,
            fallback_top_k=self.fallback_top_k,
            forest=replace(self.forest, seed=seed),
            seed=seed,
        )


@dataclass(frozen=True)
class LatencyBreakdown:
    align_ms: float = 0.0
    feature_ms: float = 0.0
    classify_ms: float = 0.0

    @property
    def total_ms(self) -> float:
        return self.align_ms + self.feature_ms + self.classify_ms


@dataclass(frozen=True)
class PatternPrediction:
    label: PatternLabel
    score: float

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise InvalidInputError("prediction score must be finite")


@dataclass(frozen=True)
class Prediction:
    per_pattern: Mapping[str, PatternPrediction]
    latency: LatencyBreakdown

    def label(self, pattern_id: str) -> PatternLabel:
        return self.per_pattern[pattern_id].label

    def score(self, pattern_id: str) -> float:
        return self.per_pattern[pattern_id].score


@dataclass(frozen=True)
class PatternModel:
    """Everything one pattern needs at prediction time."""

    pattern: str
    scaler: Optional[Scaler] = None
    mask: Optional[FeatureMask] = None
    linear: Optional[LinearModel] = None
    rbf: Optional[RbfModel] = None
    forest: Optional[RandomForest] = None
    segment_label: Optional[SegmentLabel] = None
    segment_accuracies: Tuple[Tuple[str, float], ...] = ()


@dataclass(frozen=True)
class TrainedLadder:
    variant: LadderVariant
    config: LadderConfig
    patterns: Tuple[str, ...]
    per_pattern: Mapping[str, PatternModel]
    skipped: Mapping[str, str]
    reference: Optional[Trajectory] = None
    reference_segmentation: Optional[Segmentation] = None
    # 1nn-dtw keeps the raw corpus, 1nn-refdtw the pre-warped rotations.
    neighbors: Optional[Tuple[LabeledSample, ...]] = None
    warped_neighbors: Optional[Tuple[Trajectory, ...]] = None
    neighbor_labels: Optional[Mapping[str, np.ndarray]] = None
    # segment variants: per segment label, the reference sub-trajectory.
    segment_references: Optional[Mapping[SegmentLabel, Trajectory]] = None
    # segment-1nn-dtw: per segment label, training sub-trajectories.
    neighbor_segments: Optional[Mapping[SegmentLabel, Tuple[Trajectory, ...]]] = None

    @property
    def active_patterns(self) -> Tuple[str, ...]:
        return tuple(p for p in self.patterns if p in self.per_pattern)


class _Stopwatch:
    def __init__(self):
        self.align = 0.0
        self.feature = 0.0
        self.classify = 0.0
        self._t0 = 0.0

    def start(self):
        self._t0 = time.perf_counter()

    def stop(self, stage: str):
        dt = (time.perf_counter() - self._t0) * 1e3
        setattr(self, stage, getattr(self, stage) + dt)

    def breakdown(self) -> LatencyBreakdown:
        return LatencyBreakdown(self.align, self.feature, self.classify)


def _pattern_rows(corpus: Sequence[LabeledSample], pattern: str) -> Tuple[np.ndarray, np.ndarray]:
    """(row indices, binary labels) of samples labeled for this pattern."""
    idx, lab = [], []
    for i, s in enumerate(corpus):
        l = s.label(pattern)
        if l is not PatternLabel.UNLABELED:
            idx.append(i)
            lab.append(1 if l is PatternLabel.PRESENT else 0)
    return np.array(idx, dtype=np.int64), np.array(lab, dtype=np.int64)


def _seed_for(cfg: LadderConfig, pattern: str, tag: int = 0) -> int:
    # Per-pattern seeds are independent of every other pattern, so retraining
    # one pattern can never change another's model bytes. crc32 keeps the
    # derivation stable across processes (str hash is randomized).
    ss = np.random.SeedSequence((cfg.seed, zlib.crc32(pattern.encode()), tag))
    return int(ss.generate_state(1)[0] & 0x7FFFFFFF)


def _segment_all(
    corpus: Sequence[LabeledSample],
    cfg: LadderConfig,
    boundaries: Optional[Mapping[str, Segmentation]],
) -> List[Segmentation]:
    out = []
    for s in corpus:
        if cfg.use_manual_segments:
            if not boundaries or s.sample_id not in boundaries:
                raise ConfigError(
                    f"manual segmentation requested but none provided for {s.sample_id}"
                )
            out.append(boundaries[s.sample_id])
        else:
            out.append(segment(s.trajectory, cfg.segmentation))
    return out


# ---------------------------------------------------------------------------
# sparse feature computation for masked prediction


def _sparse_features(warped: Trajectory, layout: FeatureLayout, indices: np.ndarray) -> np.ndarray:
    """Feature values at the given flat indices, touching only what is needed."""
    nc = layout.n_channels
    rest, channel = np.divmod(indices, nc)
    frame, joint = np.divmod(rest, layout.n_joints)
    out = np.empty(indices.size)
    fs = layout.feature_set
    if fs in (FeatureSet.EULER, FeatureSet.EULER_POSITIONS):
        rot_sel = channel < 3
        if rot_sel.any():
            quats = warped.rotations[frame[rot_sel], joint[rot_sel]]
            eul = euler_from_quats(quats)
            out[rot_sel] = eul[np.arange(eul.shape[0]), channel[rot_sel]]
        pos_sel = ~rot_sel
        if fs is FeatureSet.EULER_POSITIONS and pos_sel.any():
            out[pos_sel] = warped.positions[frame[pos_sel], joint[pos_sel], channel[pos_sel] - 3]
    elif fs is FeatureSet.POSITIONS:
        out = warped.positions[frame, joint, channel]
    else:  # quaternions
        out = warped.rotations[frame, joint, channel]
    return out


# ---------------------------------------------------------------------------
# nearest-neighbor variants


def _nn_prediction(
    distances: np.ndarray,
    labels: np.ndarray,
    rows: np.ndarray,
) -> PatternPrediction:
    if rows.size == 0:
        raise NoDataError("no training sample is labeled for this pattern")
    local = np.argmin(distances[rows])
    d = float(distances[rows][local])
    lab = labels[local]
    return PatternPrediction(
        PatternLabel.PRESENT if lab else PatternLabel.ABSENT, -d
    )


def predict_1nn_dtw(
    query: Trajectory,
    training: Sequence[LabeledSample],
    patterns: Sequence[str] = PATTERN_IDS,
) -> Prediction:
    """DTW against every training sample; nearest labeled neighbor wins."""
    if not training:
        raise NoDataError("empty training corpus")
    sw = _Stopwatch()
    sw.start()
    distances = np.array([dtw(query, s.trajectory).distance for s in training])
    sw.stop("align")
    sw.start()
    per = {}
    for p in patterns:
        rows, labels = _pattern_rows(training, p)
        per[p] = _nn_prediction(distances, labels, rows)
    sw.stop("classify")
    return Prediction(per, sw.breakdown())


def predict_1nn_refdtw(
    query: Trajectory,
    warped_training: Sequence[Trajectory],
    training_labels: Sequence[LabeledSample],
    reference: Trajectory,
    patterns: Sequence[str] = PATTERN_IDS,
) -> Prediction:
    """One DTW to the reference, then frame-wise comparisons per neighbor."""
    if not warped_training:
        raise NoDataError("empty training corpus")
    sw = _Stopwatch()
    sw.start()
    warped_query = warp_to_reference(query, reference)
    sw.stop("align")
    sw.start()
    distances = np.array(
        [framewise_distance(warped_query, w) for w in warped_training]
    )
    per = {}
    for p in patterns:
        rows, labels = _pattern_rows(training_labels, p)
        per[p] = _nn_prediction(distances, labels, rows)
    sw.stop("classify")
    return Prediction(per, sw.breakdown())


# ---------------------------------------------------------------------------
# margin-family training


def _fit_pattern_margin(
    X_scaled: np.ndarray,
    y: np.ndarray,
    layout: FeatureLayout,
    cfg: LadderConfig,
    pattern: str,
    select: bool,
) -> PatternModel:
    mask = None
    X_in = X_scaled
    if select:
        col_frames = layout.frame_of(np.arange(layout.size))
        mask = select_features(
            X_scaled, y, col_frames, cfg.selection_config(_seed_for(cfg, pattern, 1))
        )
        X_in = mask.apply(X_scaled)
    svm_cfg = replace(cfg.svm, seed=_seed_for(cfg, pattern, 2))
    if cfg.kernel == "rbf":
        model = train_rbf(X_in, y, C=cfg.svm.C, gamma=cfg.rbf_gamma, cfg=svm_cfg)
        return PatternModel(pattern, mask=mask, rbf=model)
    model = train_linear(X_in, y, C=cfg.svm.C, cfg=svm_cfg)
    return PatternModel(pattern, mask=mask, linear=model)


def _margin_scores(pm: PatternModel, X: np.ndarray) -> np.ndarray:
    if pm.linear is not None:
        return decision_values(pm.linear, X)
    return rbf_decision_values(pm.rbf, X)


def _check_two_classes(y: np.ndarray, pattern: str, skipped: Dict[str, str]) -> bool:
    if y.size == 0 or y.min() == y.max():
        reason = "no labeled samples" if y.size == 0 else "single-class labels"
        warnings.warn(f"pattern {pattern!r} skipped: {reason}")
        skipped[pattern] = reason
        return False
    return True


def _train_full_trajectory(
    corpus: Sequence[LabeledSample],
    patterns: Sequence[str],
    cfg: LadderConfig,
    boundaries: Optional[Mapping[str, Segmentation]],
) -> TrainedLadder:
    segs = _segment_all(corpus, cfg, boundaries)
    reference = select_reference(
        [s.trajectory for s in corpus], [seg.labels for seg in segs]
    )
    warped = [warp_to_reference(s.trajectory, reference) for s in corpus]

    if cfg.variant is LadderVariant.ONE_NN_REFDTW:
        return TrainedLadder(
            cfg.variant, cfg, tuple(patterns), {}, {},
            reference=reference,
            warped_neighbors=tuple(warped),
            neighbors=tuple(corpus),
        )

    X, layout = extract_matrix(warped, cfg.feature_set)
    per_pattern: Dict[str, PatternModel] = {}
    skipped: Dict[str, str] = {}
    for p in patterns:
        rows, y = _pattern_rows(corpus, p)
        if not _check_two_classes(y, p, skipped):
            continue
        scaler = fit_scaler(X[rows])
        Xs = scaler.transform(X[rows])
        if cfg.variant is LadderVariant.REFDTW_RF:
            forest = train_forest(
                Xs, y, replace(cfg.forest, seed=_seed_for(cfg, p, 3))
            )
            per_pattern[p] = PatternModel(p, scaler=scaler, forest=forest)
        else:
            select = cfg.variant is LadderVariant.REFDTW_RF_SVM
            pm = _fit_pattern_margin(Xs, y, layout, cfg, p, select)
            per_pattern[p] = replace(pm, scaler=scaler)
    return TrainedLadder(
        cfg.variant, cfg, tuple(patterns), per_pattern, skipped,
        reference=reference,
    )


# ---------------------------------------------------------------------------
# segment-based training


def _inner_fold_ids(subjects: Sequence[str], k: int) -> Dict[str, int]:
    uniq = sorted(set(subjects))
    return {s: i % k for i, s in enumerate(uniq)}


def _cv_accuracy(
    X: np.ndarray, y: np.ndarray, subjects: Sequence[str], cfg: LadderConfig, seed: int
) -> float:
    """Subject-disjoint inner CV accuracy of the margin classifier on X."""
    fold_of = _inner_fold_ids(subjects, cfg.inner_folds)
    folds = np.array([fold_of[s] for s in subjects])
    hits, total = 0, 0
    for f in range(cfg.inner_folds):
        tr = folds != f
        te = ~tr
        if te.sum() == 0 or y[tr].size == 0 or y[tr].min() == y[tr].max():
            continue
        svm_cfg = replace(cfg.svm, seed=seed)
        if cfg.kernel == "rbf":
            model = train_rbf(X[tr], y[tr], C=cfg.svm.C, gamma=cfg.rbf_gamma, cfg=svm_cfg)
            scores = rbf_decision_values(model, X[te])
        else:
            model = train_linear(X[tr], y[tr], C=cfg.svm.C, cfg=svm_cfg)
            scores = decision_values(model, X[te])
        hits += int(((scores > 0).astype(int) == y[te]).sum())
        total += int(te.sum())
    if total == 0:
        return 0.0
    return hits / total


def _train_segment_ladder(
    corpus: Sequence[LabeledSample],
    patterns: Sequence[str],
    cfg: LadderConfig,
    boundaries: Optional[Mapping[str, Segmentation]],
) -> TrainedLadder:
    segs = _segment_all(corpus, cfg, boundaries)
    reference = select_reference(
        [s.trajectory for s in corpus], [seg.labels for seg in segs]
    )
    ref_idx = next(
        i for i, s in enumerate(corpus) if s.trajectory is reference
    )
    ref_seg = segs[ref_idx]
    segment_refs: Dict[SegmentLabel, Trajectory] = {}
    warped_by_segment: Dict[SegmentLabel, List[Trajectory]] = {}
    for label in CANONICAL_ORDER:
        seg_ref = extract_segment(reference, ref_seg, label)
        segment_refs[label] = seg_ref
        warped_by_segment[label] = [
            warp_to_reference(extract_segment(s.trajectory, sg, label), seg_ref)
            for s, sg in zip(corpus, segs)
        ]

    if cfg.variant is LadderVariant.SEGMENT_1NN_DTW:
        return _train_segment_1nn(corpus, patterns, cfg, segs, reference, ref_seg, segment_refs)

    matrices = {
        label: extract_matrix(warped_by_segment[label], cfg.feature_set)
        for label in CANONICAL_ORDER
    }
    subjects = [s.subject_id for s in corpus]
    per_pattern: Dict[str, PatternModel] = {}
    skipped: Dict[str, str] = {}
    for p in patterns:
        rows, y = _pattern_rows(corpus, p)
        if not _check_two_classes(y, p, skipped):
            continue
        subj_rows = [subjects[i] for i in rows]
        best = None
        accs: List[Tuple[str, float]] = []
        for label in CANONICAL_ORDER:
            X, layout = matrices[label]
            scaler = fit_scaler(X[rows])
            Xs = scaler.transform(X[rows])
            pm = _fit_pattern_margin(Xs, y, layout, cfg, p, select=True)
            Xm = pm.mask.apply(Xs)
            acc = _cv_accuracy(Xm, y, subj_rows, cfg, _seed_for(cfg, p, 4))
            accs.append((label.value, acc))
            # Strictly-better keeps the earliest segment on ties, so results
            # become available as soon as possible during the movement.
            if best is None or acc > best[0]:
                best = (acc, replace(pm, scaler=scaler, segment_label=label))
        per_pattern[p] = replace(best[1], segment_accuracies=tuple(accs))
    return TrainedLadder(
        cfg.variant, cfg, tuple(patterns), per_pattern, skipped,
        reference=reference,
        reference_segmentation=ref_seg,
        segment_references=segment_refs,
    )


def _train_segment_1nn(
    corpus, patterns, cfg, segs, reference, ref_seg, segment_refs
) -> TrainedLadder:
    pieces = {
        label: tuple(
            extract_segment(s.trajectory, sg, label) for s, sg in zip(corpus, segs)
        )
        for label in CANONICAL_ORDER
    }
    # Pairwise DTW distances once per segment; LOO-1NN accuracy picks the
    # deployed segment per pattern.
    n = len(corpus)
    dists = {}
    for label in CANONICAL_ORDER:
        D = np.zeros((n, n))
        ts = pieces[label]
        for i in range(n):
            for j in range(i + 1, n):
                D[i, j] = D[j, i] = dtw(ts[i], ts[j]).distance
        dists[label] = D
    per_pattern: Dict[str, PatternModel] = {}
    skipped: Dict[str, str] = {}
    for p in patterns:
        rows, y = _pattern_rows(corpus, p)
        if not _check_two_classes(y, p, skipped):
            continue
        best = None
        for label in CANONICAL_ORDER:
            D = dists[label][np.ix_(rows, rows)]
            np.fill_diagonal(D, np.inf)
            pred = y[np.argmin(D, axis=1)]
            acc = float(np.mean(pred == y))
            if best is None or acc > best[0]:
                best = (acc, label)
        per_pattern[p] = PatternModel(p, segment_label=best[1])
    return TrainedLadder(
        cfg.variant, cfg, tuple(patterns), per_pattern, skipped,
        reference=reference,
        reference_segmentation=ref_seg,
        segment_references=segment_refs,
        neighbors=tuple(corpus),
        neighbor_segments=pieces,
    )


def train_ladder(
    corpus: Sequence[LabeledSample],
    patterns: Sequence[str] = PATTERN_IDS,
    cfg: LadderConfig = LadderConfig(),
    boundaries: Optional[Mapping[str, Segmentation]] = None,
) -> TrainedLadder:
    """Train the configured variant on a corpus of labeled samples."""
    if not corpus:
        raise NoDataError("empty training corpus")
    if cfg.variant is LadderVariant.ONE_NN_DTW:
        return TrainedLadder(
            cfg.variant, cfg, tuple(patterns), {}, {}, neighbors=tuple(corpus)
        )
    if cfg.variant in (LadderVariant.SEGMENT_RF_SVM, LadderVariant.SEGMENT_1NN_DTW):
        return _train_segment_ladder(corpus, patterns, cfg, boundaries)
    return _train_full_trajectory(corpus, patterns, cfg, boundaries)


# Spec-facing aliases for the individual training entry points.
def train_refdtw_svm(corpus, patterns=PATTERN_IDS, cfg=None, boundaries=None) -> TrainedLadder:
    cfg = replace(cfg or LadderConfig(), variant=LadderVariant.REFDTW_SVM)
    return train_ladder(corpus, patterns, cfg, boundaries)


def train_refdtw_rf_svm(corpus, patterns=PATTERN_IDS, cfg=None, boundaries=None) -> TrainedLadder:
    cfg = replace(cfg or LadderConfig(), variant=LadderVariant.REFDTW_RF_SVM)
    return train_ladder(corpus, patterns, cfg, boundaries)


def train_segment_ladder(corpus, patterns=PATTERN_IDS, cfg=None, boundaries=None) -> TrainedLadder:
    cfg = replace(cfg or LadderConfig(), variant=LadderVariant.SEGMENT_RF_SVM)
    return train_ladder(corpus, patterns, cfg, boundaries)


# ---------------------------------------------------------------------------
# prediction


def _margin_label(score: float) -> PatternLabel:
    return PatternLabel.PRESENT if score > 0 else PatternLabel.ABSENT


def _predict_full_margin(ladder: TrainedLadder, query: Trajectory) -> Prediction:
    cfg = ladder.config
    sw = _Stopwatch()
    sw.start()
    warped = warp_to_reference(query, ladder.reference)
    sw.stop("align")
    layout = FeatureLayout(warped.n_frames, warped.n_joints, cfg.feature_set)
    per: Dict[str, PatternPrediction] = {}
    if ladder.variant in (LadderVariant.REFDTW_SVM, LadderVariant.REFDTW_RF):
        sw.start()
        full = extract(warped, cfg.feature_set).values
        sw.stop("feature")
        sw.start()
        for p in ladder.active_patterns:
            pm = ladder.per_pattern[p]
            x = pm.scaler.transform(full)
            if pm.forest is not None:
                score = float(pm.forest.predict_fraction(x[None, :])[0])
                per[p] = PatternPrediction(
                    PatternLabel.PRESENT if score > 0.5 else PatternLabel.ABSENT, score
                )
            else:
                score = float(_margin_scores(pm, x[None, :])[0])
                per[p] = PatternPrediction(_margin_label(score), score)
        sw.stop("classify")
    else:  # refdtw-rf-svm: gather only the union of selected features once
        active = ladder.active_patterns
        sw.start()
        union = np.unique(
            np.concatenate(
                [ladder.per_pattern[p].mask.indices for p in active]
            )
        ) if active else np.empty(0, dtype=np.int64)
        raw_union = _sparse_features(warped, layout, union)
        sw.stop("feature")
        sw.start()
        for p in active:
            pm = ladder.per_pattern[p]
            idx = pm.mask.indices
            raw = raw_union[np.searchsorted(union, idx)]
            sub = pm.scaler.subset(idx)
            score = float(_margin_scores(pm, sub.transform(raw)[None, :])[0])
            per[p] = PatternPrediction(_margin_label(score), score)
        sw.stop("classify")
    return Prediction(per, sw.breakdown())


def predict_refdtw_svm(ladder: TrainedLadder, query: Trajectory) -> Prediction:
    return _predict_full_margin(ladder, query)


def predict_refdtw_rf_svm(ladder: TrainedLadder, query: Trajectory) -> Prediction:
    return _predict_full_margin(ladder, query)


def predict_refdtw_rf(ladder: TrainedLadder, query: Trajectory) -> Prediction:
    return _predict_full_margin(ladder, query)


def predict_segment(
    ladder: TrainedLadder, query_segment: Trajectory, label: SegmentLabel
) -> Prediction:
    """Classify every pattern deployed on this movement segment."""
    if ladder.segment_references is None:
        raise ConfigError("ladder was not trained per segment")
    active = [
        p for p in ladder.active_patterns
        if ladder.per_pattern[p].segment_label == label
    ]
    sw = _Stopwatch()
    sw.start()
    seg_ref = ladder.segment_references[label]
    warped = warp_to_reference(query_segment, seg_ref)
    sw.stop("align")
    per: Dict[str, PatternPrediction] = {}
    if ladder.variant is LadderVariant.SEGMENT_1NN_DTW:
        sw.start()
        pieces = ladder.neighbor_segments[label]
        distances = np.array([dtw(query_segment, t).distance for t in pieces])
        for p in active:
            rows, labs = _pattern_rows(ladder.neighbors, p)
            per[p] = _nn_prediction(distances, labs, rows)
        sw.stop("classify")
        return Prediction(per, sw.breakdown())
    layout = FeatureLayout(warped.n_frames, warped.n_joints, ladder.config.feature_set)
    for p in active:
        pm = ladder.per_pattern[p]
        idx = pm.mask.indices
        sw.start()
        raw = _sparse_features(warped, layout, idx)
        sw.stop("feature")
        sw.start()
        score = float(_margin_scores(pm, pm.scaler.subset(idx).transform(raw)[None, :])[0])
        per[p] = PatternPrediction(_margin_label(score), score)
        sw.stop("classify")
    return Prediction(per, sw.breakdown())


def predict(
    ladder: TrainedLadder,
    query: Trajectory,
    boundaries: Optional[Segmentation] = None,
) -> Prediction:
    """Uniform prediction entry point for every ladder variant."""
    if ladder.variant is LadderVariant.ONE_NN_DTW:
        return predict_1nn_dtw(query, ladder.neighbors, ladder.patterns)
    if ladder.variant is LadderVariant.ONE_NN_REFDTW:
        return predict_1nn_refdtw(
            query, ladder.warped_neighbors, ladder.neighbors,
            ladder.reference, ladder.patterns,
        )
    if ladder.variant in (LadderVariant.SEGMENT_RF_SVM, LadderVariant.SEGMENT_1NN_DTW):
        cfg = ladder.config
        if cfg.use_manual_segments and boundaries is None:
            raise ConfigError("manual segmentation requested but no boundaries given")
        seg = boundaries if boundaries is not None else segment(query, cfg.segmentation)
        needed = sorted(
            {ladder.per_pattern[p].segment_label for p in ladder.active_patterns},
            key=lambda l: CANONICAL_ORDER.index(l),
        )
        per: Dict[str, PatternPrediction] = {}
        align = feature = classify = 0.0
        for label in needed:
            piece = extract_segment(query, seg, label)
            pred = predict_segment(ladder, piece, label)
            per.update(pred.per_pattern)
            align += pred.latency.align_ms
            feature += pred.latency.feature_ms
            classify += pred.latency.classify_ms
        return Prediction(per, LatencyBreakdown(align, feature, classify))
    return _predict_full_margin(ladder, query)
