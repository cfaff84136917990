"""Error-pattern classification for full-body squat trajectories.

The pipeline: DTW-align trajectories to a reference timeline, build flat
per-frame feature vectors, select the informative features with a random
forest against noise probes, and classify each error pattern with its own
max-margin model, optionally on a single movement segment.
"""

from .align import WarpPath, WarpResult, dtw, framewise_distance, select_reference, warp_to_reference
from .classifiers import (
    LadderConfig,
    LadderVariant,
    LatencyBreakdown,
    Prediction,
    TrainedLadder,
    predict,
    predict_1nn_dtw,
    predict_1nn_refdtw,
    predict_segment,
    train_ladder,
)
from .errors import FormcheckError
from .evaluation import (
    ConfusionCounts,
    FoldPlan,
    ScoreReport,
    accuracy,
    bench_latency,
    f1,
    make_folds,
    roc_auc,
    run_crossval,
)
from .features import FeatureLayout, FeatureSet, FeatureVector, Scaler, apply_scaler, extract, fit_scaler
from .learn import (
    FeatureMask,
    ForestConfig,
    LinearModel,
    RandomForest,
    SvmConfig,
    decision_value,
    importances,
    select_features,
    train_forest,
    train_linear,
    train_rbf,
)
from .motion import (
    EulerTriple,
    Frame,
    Joint,
    Skeleton,
    Trajectory,
    default_skeleton,
    frame_distance,
    from_euler,
    quat_distance,
    to_euler,
)
from .patterns import CANONICAL_PATTERNS, PATTERN_IDS, ErrorPattern, LabeledSample, PatternLabel
from .segmentation import SegmentConfig, SegmentLabel, Segmentation, extract_segment, segment
from .synth import ErrorSpec, GenConfig, SubjectStyle, generate_corpus, inject_error

__version__ = "0.1.0"
