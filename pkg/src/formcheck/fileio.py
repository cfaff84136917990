"""Versioned text formats: trajectories, annotations, segments, model bundles,
and score reports.

Everything is plain text for diffability. Floats are written with repr, the
shortest form that restores the exact double, so write -> read -> write is
byte-identical. Unknown major versions are hard errors.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .classifiers import (
    LadderConfig,
    LadderVariant,
    PatternModel,
    TrainedLadder,
)
from .errors import ParseError, VersionError
from .evaluation import FoldPlan, LatencyStats, PatternScore, ScoreReport
from .features import FeatureSet, Scaler
from .learn import (
    DecisionTree,
    FeatureMask,
    ForestConfig,
    LinearModel,
    RandomForest,
    RbfModel,
    SvmConfig,
)
from .motion import Joint, Skeleton, Trajectory
from .patterns import LabeledSample, PatternLabel
from .segmentation import Boundary, SegmentConfig, SegmentLabel, Segmentation

TRAJ_FORMAT = "formcheck-trajectory"
ANNO_FORMAT = "formcheck-annotations"
SEG_FORMAT = "formcheck-segments"
BUNDLE_FORMAT = "formcheck-bundle"
REPORT_FORMAT = "formcheck-report"
MAJOR_VERSION = 1


def _fmt(x: float) -> str:
    return repr(float(x))


def _check_header(line: str, expected: str, path: str):
    parts = line.strip().split()
    if len(parts) != 3 or parts[0] != "#" or parts[1] != expected:
        raise ParseError(f"expected '# {expected} v{MAJOR_VERSION}' header", path, 1)
    if not parts[2].startswith("v") or not parts[2][1:].isdigit():
        raise ParseError(f"malformed version field {parts[2]!r}", path, 1)
    if int(parts[2][1:]) != MAJOR_VERSION:
        raise VersionError(
            f"unsupported {expected} version {parts[2]}", path, 1
        )


# ---------------------------------------------------------------------------
# trajectories


def write_trajectory(t: Trajectory, path: str) -> None:
    lines = [f"# {TRAJ_FORMAT} v{MAJOR_VERSION}"]
    lines.append(f"k {t.n_joints}")
    lines.append(f"sample_rate {_fmt(t.sample_rate)}")
    lines.append(f"subject_id {t.subject_id}")
    lines.append(f"sample_id {t.sample_id}")
    for j in t.skeleton.joints:
        parent = -1 if j.parent is None else j.parent
        lines.append(f"joint {j.index} {j.name} {parent}")
    lines.append("data")
    for f in range(t.n_frames):
        row = list(t.rotations[f].reshape(-1)) + list(t.positions[f].reshape(-1))
        lines.append(" ".join(_fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trajectory(path: str) -> Trajectory:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", path, 1)
    _check_header(lines[0], TRAJ_FORMAT, path)
    meta: Dict[str, str] = {}
    joints: List[Joint] = []
    data_start = None
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "data":
            data_start = ln
            break
        if parts[0] == "joint":
            if len(parts) != 4:
                raise ParseError("joint line needs index, name, parent", path, ln)
            idx, name, parent = int(parts[1]), parts[2], int(parts[3])
            joints.append(Joint(idx, name, None if parent < 0 else parent))
        elif len(parts) == 2:
            meta[parts[0]] = parts[1]
        else:
            raise ParseError(f"unrecognized header line {line!r}", path, ln)
    if data_start is None:
        raise ParseError("missing 'data' section", path, len(lines))
    for key in ("k", "sample_rate", "subject_id", "sample_id"):
        if key not in meta:
            raise ParseError(f"missing header field {key!r}", path, 1)
    k = int(meta["k"])
    if len(joints) != k:
        raise ParseError(f"expected {k} joint lines, found {len(joints)}", path, data_start)
    skeleton = Skeleton(tuple(joints))
    width = 7 * k
    rots, poss = [], []
    for ln, line in enumerate(lines[data_start:], start=data_start + 1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != width:
            raise ParseError(
                f"row has {len(fields)} fields, expected {width} (7k)", path, ln
            )
        try:
            vals = np.array([float(v) for v in fields])
        except ValueError:
            raise ParseError("non-numeric field in data row", path, ln) from None
        quats = vals[: 4 * k].reshape(k, 4)
        norms = np.linalg.norm(quats, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-3):
            raise ParseError(
                f"quaternion norm off by {np.abs(norms - 1.0).max():.2e} (> 1e-3)",
                path, ln,
            )
        rots.append(quats)
        poss.append(vals[4 * k :].reshape(k, 3))
    if not rots:
        raise ParseError("no data rows", path, data_start + 1)
    return Trajectory(
        np.stack(rots), np.stack(poss), float(meta["sample_rate"]),
        meta["subject_id"], meta["sample_id"], skeleton,
    )


# ---------------------------------------------------------------------------
# annotations


def write_annotations(samples: Sequence[LabeledSample], path: str) -> None:
    """One row per non-unlabeled (sample, pattern); missing rows mean unlabeled."""
    lines = [f"# {ANNO_FORMAT} v{MAJOR_VERSION}", "subject_id,sample_id,pattern_id,label"]
    for s in samples:
        for pid in sorted(s.labels):
            lab = s.labels[pid]
            if lab is PatternLabel.UNLABELED:
                continue
            lines.append(f"{s.subject_id},{s.sample_id},{pid},{lab.value}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_annotations(path: str) -> Dict[Tuple[str, str], Dict[str, PatternLabel]]:
    """(subject_id, sample_id) -> {pattern_id: present/absent}."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", path, 1)
    _check_header(lines[0], ANNO_FORMAT, path)
    if len(lines) < 2 or lines[1] != "subject_id,sample_id,pattern_id,label":
        raise ParseError("missing column header", path, 2)
    out: Dict[Tuple[str, str], Dict[str, PatternLabel]] = {}
    seen = set()
    for ln, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"expected 4 comma-separated fields, got {len(parts)}", path, ln)
        subject, sample, pid, label = parts
        key = (subject, sample, pid)
        if key in seen:
            raise ParseError(f"duplicate annotation for {key}", path, ln)
        seen.add(key)
        if label not in (PatternLabel.PRESENT.value, PatternLabel.ABSENT.value):
            raise ParseError(f"label must be 'present' or 'absent', got {label!r}", path, ln)
        out.setdefault((subject, sample), {})[pid] = PatternLabel(label)
    return out


# ---------------------------------------------------------------------------
# segmentations


def write_segmentations(boundaries: Mapping[str, Segmentation], path: str) -> None:
    lines = [f"# {SEG_FORMAT} v{MAJOR_VERSION}", "sample_id,label,start,end"]
    for sid in sorted(boundaries):
        for b in boundaries[sid].boundaries:
            lines.append(f"{sid},{b.label.value},{b.start},{b.end}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_segmentations(path: str) -> Dict[str, Segmentation]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", path, 1)
    _check_header(lines[0], SEG_FORMAT, path)
    if len(lines) < 2 or lines[1] != "sample_id,label,start,end":
        raise ParseError("missing column header", path, 2)
    rows: Dict[str, List[Boundary]] = {}
    for ln, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, got {len(parts)}", path, ln)
        sid, label, start, end = parts
        try:
            rows.setdefault(sid, []).append(
                Boundary(SegmentLabel(label), int(start), int(end))
            )
        except ValueError as e:
            raise ParseError(str(e), path, ln) from None
    return {sid: Segmentation(tuple(bs)) for sid, bs in rows.items()}


# ---------------------------------------------------------------------------
# corpus directories


def write_corpus(
    samples: Sequence[LabeledSample],
    out_dir: str,
    boundaries: Optional[Mapping[str, Segmentation]] = None,
) -> None:
    traj_dir = os.path.join(out_dir, "trajectories")
    os.makedirs(traj_dir, exist_ok=True)
    for s in samples:
        write_trajectory(s.trajectory, os.path.join(traj_dir, f"{s.sample_id}.traj"))
    write_annotations(samples, os.path.join(out_dir, "annotations.txt"))
    if boundaries is not None:
        write_segmentations(boundaries, os.path.join(out_dir, "segments.txt"))


def read_corpus(
    corpus_dir: str,
) -> Tuple[List[LabeledSample], Optional[Dict[str, Segmentation]]]:
    traj_dir = os.path.join(corpus_dir, "trajectories")
    anno = read_annotations(os.path.join(corpus_dir, "annotations.txt"))
    samples = []
    for name in sorted(os.listdir(traj_dir)):
        if not name.endswith(".traj"):
            continue
        t = read_trajectory(os.path.join(traj_dir, name))
        labels = anno.get((t.subject_id, t.sample_id), {})
        samples.append(LabeledSample(t, labels))
    seg_path = os.path.join(corpus_dir, "segments.txt")
    boundaries = read_segmentations(seg_path) if os.path.exists(seg_path) else None
    return samples, boundaries


# ---------------------------------------------------------------------------
# model bundles


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _arr(a) -> list:
    return np.asarray(a).tolist()


def _enc_trajectory(t: Trajectory) -> dict:
    return {
        "rotations": _arr(t.rotations),
        "positions": _arr(t.positions),
        "sample_rate": float(t.sample_rate),
        "subject_id": t.subject_id,
        "sample_id": t.sample_id,
        "joints": [[j.name, -1 if j.parent is None else j.parent] for j in t.skeleton.joints],
    }


def _dec_trajectory(d: dict) -> Trajectory:
    joints = tuple(
        Joint(i, name, None if parent < 0 else parent)
        for i, (name, parent) in enumerate(d["joints"])
    )
    return Trajectory(
        np.array(d["rotations"]), np.array(d["positions"]), d["sample_rate"],
        d["subject_id"], d["sample_id"], Skeleton(joints),
    )


def trajectory_hash(t: Trajectory) -> str:
    return hashlib.sha256(_canonical_json(_enc_trajectory(t)).encode()).hexdigest()


def _enc_segmentation(s: Segmentation) -> list:
    return [[b.label.value, b.start, b.end] for b in s.boundaries]


def _dec_segmentation(rows: list) -> Segmentation:
    return Segmentation(tuple(Boundary(SegmentLabel(l), s, e) for l, s, e in rows))


def _enc_labels(s: LabeledSample) -> dict:
    return {pid: lab.value for pid, lab in sorted(s.labels.items())}


def _enc_pattern_model(pm: PatternModel) -> dict:
    out: dict = {"pattern": pm.pattern}
    if pm.scaler is not None:
        out["scaler"] = {"mean": _arr(pm.scaler.mean), "std": _arr(pm.scaler.std)}
    if pm.mask is not None:
        out["mask"] = {
            "indices": _arr(pm.mask.indices),
            "n_total": pm.mask.n_total,
            "threshold": pm.mask.threshold,
            "fallback": pm.mask.fallback,
        }
    if pm.linear is not None:
        out["linear"] = {
            "weights": _arr(pm.linear.weights),
            "bias": pm.linear.bias,
            "C": pm.linear.C,
        }
    if pm.rbf is not None:
        out["rbf"] = {
            "support": _arr(pm.rbf.support),
            "alpha_y": _arr(pm.rbf.alpha_y),
            "gamma": pm.rbf.gamma,
            "C": pm.rbf.C,
        }
    if pm.forest is not None:
        out["forest"] = {
            "seed": pm.forest.seed,
            "oob_accuracy": pm.forest.oob_accuracy,
            "importances": _arr(pm.forest.importances_),
            "trees": [
                {
                    "feature": _arr(tr.feature),
                    "threshold": _arr(tr.threshold),
                    "left": _arr(tr.left),
                    "right": _arr(tr.right),
                    "value": _arr(tr.value),
                }
                for tr in pm.forest.trees
            ],
        }
    if pm.segment_label is not None:
        out["segment_label"] = pm.segment_label.value
    if pm.segment_accuracies:
        out["segment_accuracies"] = [[l, a] for l, a in pm.segment_accuracies]
    return out


def _dec_pattern_model(d: dict) -> PatternModel:
    scaler = mask = linear = rbf = forest = None
    if "scaler" in d:
        scaler = Scaler(np.array(d["scaler"]["mean"]), np.array(d["scaler"]["std"]))
    if "mask" in d:
        m = d["mask"]
        mask = FeatureMask(
            np.array(m["indices"], dtype=np.int64), m["n_total"], m["threshold"], m["fallback"]
        )
    if "linear" in d:
        l = d["linear"]
        linear = LinearModel(np.array(l["weights"]), l["bias"], l["C"])
    if "rbf" in d:
        r = d["rbf"]
        rbf = RbfModel(np.array(r["support"]), np.array(r["alpha_y"]), r["gamma"], r["C"])
    if "forest" in d:
        f = d["forest"]
        trees = tuple(
            DecisionTree(
                np.array(tr["feature"], dtype=np.int64),
                np.array(tr["threshold"]),
                np.array(tr["left"], dtype=np.int64),
                np.array(tr["right"], dtype=np.int64),
                np.array(tr["value"]),
            )
            for tr in f["trees"]
        )
        imp = np.array(f["importances"])
        imp.setflags(write=False)
        forest = RandomForest(trees, imp, f["oob_accuracy"], f["seed"])
    seg_label = SegmentLabel(d["segment_label"]) if "segment_label" in d else None
    accs = tuple((l, a) for l, a in d.get("segment_accuracies", []))
    return PatternModel(
        d["pattern"], scaler=scaler, mask=mask, linear=linear, rbf=rbf,
        forest=forest, segment_label=seg_label, segment_accuracies=accs,
    )


def _enc_config(cfg: LadderConfig) -> dict:
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


def _dec_config(d: dict) -> LadderConfig:
    return LadderConfig(
        variant=LadderVariant(d["variant"]),
        feature_set=FeatureSet(d["feature_set"]),
        kernel=d["kernel"],
        rbf_gamma=d["rbf_gamma"],
        svm=SvmConfig(**d["svm"]),
        forest=ForestConfig(**d["forest"]),
        probes_per_frame=d["probes_per_frame"],
        fallback_top_k=d["fallback_top_k"],
        segmentation=SegmentConfig.from_dict(d["segmentation"]),
        inner_folds=d["inner_folds"],
        use_manual_segments=d["use_manual_segments"],
        seed=d["seed"],
    )


def bundle_to_dict(ladder: TrainedLadder) -> dict:
    out: dict = {
        "format": BUNDLE_FORMAT,
        "version": MAJOR_VERSION,
        "variant": ladder.variant.value,
        "config": _enc_config(ladder.config),
        "patterns": list(ladder.patterns),
        "skipped": dict(ladder.skipped),
        "per_pattern": {
            p: _enc_pattern_model(pm) for p, pm in sorted(ladder.per_pattern.items())
        },
    }
    if ladder.reference is not None:
        out["reference"] = _enc_trajectory(ladder.reference)
        out["reference_hash"] = trajectory_hash(ladder.reference)
    if ladder.reference_segmentation is not None:
        out["reference_segmentation"] = _enc_segmentation(ladder.reference_segmentation)
    if ladder.segment_references is not None:
        out["segment_references"] = {
            l.value: _enc_trajectory(t) for l, t in sorted(ladder.segment_references.items())
        }
    if ladder.neighbors is not None:
        out["neighbors"] = [
            {"trajectory": _enc_trajectory(s.trajectory), "labels": _enc_labels(s)}
            for s in ladder.neighbors
        ]
    if ladder.warped_neighbors is not None:
        out["warped_neighbors"] = [_enc_trajectory(t) for t in ladder.warped_neighbors]
    if ladder.neighbor_segments is not None:
        out["neighbor_segments"] = {
            l.value: [_enc_trajectory(t) for t in ts]
            for l, ts in sorted(ladder.neighbor_segments.items())
        }
    return out


def bundle_from_dict(d: dict) -> TrainedLadder:
    if d.get("format") != BUNDLE_FORMAT:
        raise ParseError(f"not a {BUNDLE_FORMAT} file")
    if d.get("version") != MAJOR_VERSION:
        raise VersionError(f"unsupported bundle version {d.get('version')}")
    reference = _dec_trajectory(d["reference"]) if "reference" in d else None
    if reference is not None and d.get("reference_hash") != trajectory_hash(reference):
        raise ParseError("reference trajectory hash mismatch")
    neighbors = None
    if "neighbors" in d:
        neighbors = tuple(
            LabeledSample(
                _dec_trajectory(n["trajectory"]),
                {p: PatternLabel(v) for p, v in n["labels"].items()},
            )
            for n in d["neighbors"]
        )
    return TrainedLadder(
        variant=LadderVariant(d["variant"]),
        config=_dec_config(d["config"]),
        patterns=tuple(d["patterns"]),
        per_pattern={p: _dec_pattern_model(pm) for p, pm in d["per_pattern"].items()},
        skipped=dict(d["skipped"]),
        reference=reference,
        reference_segmentation=(
            _dec_segmentation(d["reference_segmentation"])
            if "reference_segmentation" in d else None
        ),
        segment_references=(
            {SegmentLabel(l): _dec_trajectory(t) for l, t in d["segment_references"].items()}
            if "segment_references" in d else None
        ),
        neighbors=neighbors,
        warped_neighbors=(
            tuple(_dec_trajectory(t) for t in d["warped_neighbors"])
            if "warped_neighbors" in d else None
        ),
        neighbor_segments=(
            {
                SegmentLabel(l): tuple(_dec_trajectory(t) for t in ts)
                for l, ts in d["neighbor_segments"].items()
            }
            if "neighbor_segments" in d else None
        ),
    )


def write_model_bundle(ladder: TrainedLadder, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(_canonical_json(bundle_to_dict(ladder)) + "\n")


def read_model_bundle(path: str) -> TrainedLadder:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", path, e.lineno) from None
    return bundle_from_dict(d)


def pattern_model_bytes(ladder: TrainedLadder, pattern: str) -> bytes:
    """Canonical bytes of one pattern's model, for leakage hashing."""
    return _canonical_json(_enc_pattern_model(ladder.per_pattern[pattern])).encode()


# ---------------------------------------------------------------------------
# reports


def report_to_dict(report: ScoreReport) -> dict:
    return {
        "format": REPORT_FORMAT,
        "version": MAJOR_VERSION,
        "variant": report.variant,
        "seed": report.seed,
        "k": report.k,
        "config": dict(report.config),
        "fold_plan": [list(f) for f in report.fold_plan.folds],
        "per_pattern": [
            {
                "pattern": p.pattern,
                "accuracy_mean": p.accuracy_mean,
                "accuracy_sd": p.accuracy_sd,
                "f1_mean": p.f1_mean,
                "f1_sd": p.f1_sd,
                "roc_auc_mean": p.roc_auc_mean,
                "roc_auc_sd": p.roc_auc_sd,
                "n_scored": p.n_scored,
                "folds_with_roc": p.folds_with_roc,
                "flags": list(p.flags),
            }
            for p in report.per_pattern
        ],
        "fold_details": {p: [dict(d) for d in ds] for p, ds in report.fold_details.items()},
        "latency": {
            "median_ms": dict(report.latency.median_ms),
            "p95_ms": dict(report.latency.p95_ms),
            "n_queries": report.latency.n_queries,
        },
    }


def report_from_dict(d: dict) -> ScoreReport:
    if d.get("format") != REPORT_FORMAT:
        raise ParseError(f"not a {REPORT_FORMAT} file")
    if d.get("version") != MAJOR_VERSION:
        raise VersionError(f"unsupported report version {d.get('version')}")
    return ScoreReport(
        variant=d["variant"],
        seed=d["seed"],
        k=d["k"],
        config=d["config"],
        per_pattern=tuple(
            PatternScore(
                pattern=p["pattern"],
                accuracy_mean=p["accuracy_mean"],
                accuracy_sd=p["accuracy_sd"],
                f1_mean=p["f1_mean"],
                f1_sd=p["f1_sd"],
                roc_auc_mean=p["roc_auc_mean"],
                roc_auc_sd=p["roc_auc_sd"],
                n_scored=p["n_scored"],
                folds_with_roc=p["folds_with_roc"],
                flags=tuple(p["flags"]),
            )
            for p in d["per_pattern"]
        ),
        fold_plan=FoldPlan(tuple(tuple(f) for f in d["fold_plan"])),
        fold_details={p: tuple(ds) for p, ds in d["fold_details"].items()},
        latency=LatencyStats(
            d["latency"]["median_ms"], d["latency"]["p95_ms"], d["latency"]["n_queries"]
        ),
    )


def write_report(report: ScoreReport, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(_canonical_json(report_to_dict(report)) + "\n")


def read_report(path: str) -> ScoreReport:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", path, e.lineno) from None
    return report_from_dict(d)


def format_report_text(report: ScoreReport) -> str:
    """Fixed-width table for terminals and logs."""
    head = (
        f"variant={report.variant} k={report.k} seed={report.seed} "
        f"queries={report.latency.n_queries}"
    )
    lines = [head, "-" * len(head)]
    lines.append(
        f"{'pattern':36s} {'acc':>7s} {'sd':>6s} {'f1':>7s} {'sd':>6s} {'roc':>7s}"
    )
    for p in report.per_pattern:
        roc = f"{p.roc_auc_mean:.3f}" if p.roc_auc_mean is not None else "-"
        lines.append(
            f"{p.pattern:36s} {p.accuracy_mean:7.3f} {p.accuracy_sd:6.3f} "
            f"{p.f1_mean:7.3f} {p.f1_sd:6.3f} {roc:>7s}"
        )
    lat = report.latency.median_ms
    lines.append(
        "latency median ms: "
        + " ".join(f"{k}={lat[k]:.2f}" for k in ("align", "feature", "classify", "total"))
    )
    return "\n".join(lines) + "\n"


def write_scores_csv(report: ScoreReport, path: str) -> None:
    """Per-pattern score table for external plotting."""
    lines = ["pattern,accuracy_mean,accuracy_sd,f1_mean,f1_sd,roc_auc_mean,roc_auc_sd"]
    for p in report.per_pattern:
        roc_m = "" if p.roc_auc_mean is None else _fmt(p.roc_auc_mean)
        roc_s = "" if p.roc_auc_sd is None else _fmt(p.roc_auc_sd)
        lines.append(
            f"{p.pattern},{_fmt(p.accuracy_mean)},{_fmt(p.accuracy_sd)},"
            f"{_fmt(p.f1_mean)},{_fmt(p.f1_sd)},{roc_m},{roc_s}"
        )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
