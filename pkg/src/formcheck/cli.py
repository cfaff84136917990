"""Command-line front end: gen, segment, train, classify, crossval, bench.

A JSON config file carries the hyperparameter surface; a handful of flags
override its scalars. Every run prints its resolved config and seed so any
report can be reproduced from its logged header. Exit codes: 0 success,
2 configuration problems, 3 data problems, 4 model-bundle problems.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from typing import Dict, Optional

from . import fileio
from .classifiers import LadderConfig, LadderVariant, predict, train_ladder
from .errors import (
    ConfigError,
    FormcheckError,
    ParseError,
    VersionError,
)
from .evaluation import bench_latency, run_crossval
from .features import FeatureSet
from .learn import ForestConfig, SvmConfig
from .patterns import PATTERN_IDS
from .segmentation import SegmentConfig, segment
from .synth import GenConfig, generate_corpus

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_MODEL = 4

CONFIG_ENV_VAR = "FORMCHECK_CONFIG"

_TOP_KEYS = {
    "variant", "feature_set", "kernel", "rbf_gamma", "svm", "forest",
    "probes_per_frame", "fallback_top_k", "segmentation", "inner_folds",
    "use_manual_segments", "seed", "folds", "workers", "generator",
}
_SVM_KEYS = {"C", "max_epochs", "tol", "seed"}
_FOREST_KEYS = {"n_trees", "seed"}
_GEN_KEYS = {
    "n_subjects", "samples_per_subject", "max_samples", "sample_rate",
    "duration_scale", "seed", "error_rates", "labeled_fractions",
    "intensity_ranges",
}


def _strict(d: Dict, allowed, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} config keys: {sorted(unknown)}")


def load_run_config(path: Optional[str]) -> Dict:
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return {}
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e.msg} (line {e.lineno})") from None
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    _strict(raw, _TOP_KEYS, "top-level")
    _strict(raw.get("svm", {}), _SVM_KEYS, "svm")
    _strict(raw.get("forest", {}), _FOREST_KEYS, "forest")
    _strict(raw.get("generator", {}), _GEN_KEYS, "generator")
    # SegmentConfig.from_dict is strict on its own keys.
    return raw


def ladder_config_from(raw: Dict, overrides: argparse.Namespace) -> LadderConfig:
    variant = getattr(overrides, "variant", None) or raw.get("variant", "segment-rf-svm")
    seed = overrides.seed if overrides.seed is not None else raw.get("seed", 0)
    try:
        cfg = LadderConfig(
            variant=LadderVariant(variant),
            feature_set=FeatureSet(raw.get("feature_set", "euler+positions")),
            kernel=raw.get("kernel", "linear"),
            rbf_gamma=raw.get("rbf_gamma", 0.01),
            svm=SvmConfig(**raw.get("svm", {})),
            forest=ForestConfig(**raw.get("forest", {})),
            probes_per_frame=raw.get("probes_per_frame", 20),
            fallback_top_k=raw.get("fallback_top_k", 32),
            segmentation=SegmentConfig.from_dict(raw.get("segmentation", {})),
            inner_folds=raw.get("inner_folds", 3),
            use_manual_segments=raw.get("use_manual_segments", False),
            seed=seed,
        )
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from None
    return cfg


def gen_config_from(raw: Dict, args: argparse.Namespace) -> GenConfig:
    g = dict(raw.get("generator", {}))
    if args.seed is not None:
        g["seed"] = args.seed
    if getattr(args, "subjects", None) is not None:
        g["n_subjects"] = args.subjects
    if getattr(args, "samples_per_subject", None) is not None:
        g["samples_per_subject"] = args.samples_per_subject
    try:
        return GenConfig(**g)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def _log_header(command: str, cfg_dict: Dict) -> None:
    print(f"[formcheck {command}] " + json.dumps(cfg_dict, sort_keys=True), file=sys.stderr)


def _cmd_gen(args) -> int:
    raw = load_run_config(args.config)
    gcfg = gen_config_from(raw, args)
    _log_header("gen", {"generator": gcfg.seed, "out": args.out,
                        "n_subjects": gcfg.n_subjects,
                        "samples_per_subject": gcfg.samples_per_subject})
    corpus = generate_corpus(gcfg)
    fileio.write_corpus(corpus.samples, args.out, corpus.boundaries)
    print(f"wrote {len(corpus.samples)} samples to {args.out}")
    return EXIT_OK


def _cmd_segment(args) -> int:
    raw = load_run_config(args.config)
    seg_cfg = SegmentConfig.from_dict(raw.get("segmentation", {}))
    _log_header("segment", {"corpus": args.corpus, "segmentation": seg_cfg.to_dict()})
    samples, _ = fileio.read_corpus(args.corpus)
    boundaries = {}
    for s in samples:
        boundaries[s.sample_id] = segment(s.trajectory, seg_cfg)
    if args.out:
        fileio.write_segmentations(boundaries, args.out)
        print(f"wrote segment boundaries for {len(boundaries)} samples to {args.out}")
    else:
        for sid in sorted(boundaries):
            parts = ", ".join(
                f"{b.label.value}[{b.start}:{b.end}]" for b in boundaries[sid].boundaries
            )
            print(f"{sid}: {parts}")
    return EXIT_OK


def _cmd_train(args) -> int:
    raw = load_run_config(args.config)
    cfg = ladder_config_from(raw, args)
    _log_header("train", {"corpus": args.corpus, "model": args.model,
                          "config": fileio._enc_config(cfg)})
    samples, boundaries = fileio.read_corpus(args.corpus)
    ladder = train_ladder(samples, PATTERN_IDS, cfg, boundaries)
    fileio.write_model_bundle(ladder, args.model)
    skipped = f", skipped: {sorted(ladder.skipped)}" if ladder.skipped else ""
    print(f"trained {cfg.variant.value} on {len(samples)} samples -> {args.model}{skipped}")
    return EXIT_OK


def _cmd_classify(args) -> int:
    ladder = fileio.read_model_bundle(args.model)
    _log_header("classify", {"model": args.model, "variant": ladder.variant.value,
                             "seed": ladder.config.seed})
    for path in args.inputs:
        t = fileio.read_trajectory(path)
        pred = predict(ladder, t)
        lb = pred.latency
        print(f"{t.sample_id} ({path})")
        for pid in sorted(pred.per_pattern):
            pp = pred.per_pattern[pid]
            print(f"  {pid:36s} {pp.label.value:8s} score {pp.score:+.4f}")
        print(
            f"  latency ms: align {lb.align_ms:.2f}, feature {lb.feature_ms:.2f}, "
            f"classify {lb.classify_ms:.2f}, total {lb.total_ms:.2f}"
        )
    return EXIT_OK


def _cmd_crossval(args) -> int:
    raw = load_run_config(args.config)
    cfg = ladder_config_from(raw, args)
    k = args.folds if args.folds is not None else raw.get("folds", 5)
    _log_header("crossval", {"corpus": args.corpus, "k": k, "out": args.out,
                             "config": fileio._enc_config(cfg)})
    samples, boundaries = fileio.read_corpus(args.corpus)
    report = run_crossval(
        samples, cfg, PATTERN_IDS, k=k, seed=cfg.seed, boundaries=boundaries
    )
    fileio.write_report(report, args.out)
    if args.csv:
        fileio.write_scores_csv(report, args.csv)
    print(fileio.format_report_text(report), end="")
    print(f"report written to {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    raw = load_run_config(args.config)
    cfg = ladder_config_from(raw, args)
    _log_header("bench", {"corpus": args.corpus, "config": fileio._enc_config(cfg),
                          "queries": args.queries, "warmup": args.warmup,
                          "reps": args.reps})
    samples, boundaries = fileio.read_corpus(args.corpus)
    ladder = train_ladder(samples, PATTERN_IDS, cfg, boundaries)
    queries = samples[: args.queries]
    stats = bench_latency(ladder, queries, warmup=args.warmup, reps=args.reps,
                          boundaries=boundaries)
    out = {
        "variant": cfg.variant.value,
        "median_ms": stats.median_ms,
        "p95_ms": stats.p95_ms,
        "n_queries": stats.n_queries,
    }
    text = json.dumps(out, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="formcheck",
        description="Squat error-pattern classification pipeline",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, variant=True):
        p.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV_VAR})")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, default=0,
                       help="worker processes (0 = auto; latency bench pins 1)")
        if variant:
            p.add_argument("--variant", choices=[v.value for v in LadderVariant])

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    common(p, variant=False)
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--subjects", type=int)
    p.add_argument("--samples-per-subject", type=int, dest="samples_per_subject")
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("segment", help="segment a corpus into movement phases")
    common(p, variant=False)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="write boundaries file instead of printing")
    p.set_defaults(fn=_cmd_segment)

    p = sub.add_parser("train", help="train a classifier ladder")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True, help="output model bundle path")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("classify", help="classify query trajectories")
    common(p, variant=False)
    p.add_argument("--model", required=True)
    p.add_argument("inputs", nargs="+", help="trajectory files")
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("crossval", help="subject-disjoint cross-validation")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="report output path")
    p.add_argument("--csv", help="also write per-pattern scores as CSV")
    p.add_argument("--folds", type=int)
    p.set_defaults(fn=_cmd_crossval)

    p = sub.add_parser("bench", help="latency benchmark (single worker)")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")
    p.add_argument("--queries", type=int, default=5)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--reps", type=int, default=3)
    p.set_defaults(fn=_cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except VersionError as e:
        print(f"model error: {e}", file=sys.stderr)
        return EXIT_MODEL
    except FileNotFoundError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ParseError as e:
        kind = EXIT_MODEL if "bundle" in str(e) else EXIT_DATA
        print(f"data error: {e}", file=sys.stderr)
        return kind
    except FormcheckError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
