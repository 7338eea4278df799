"""Command line entry point: ``cogappraisal <subcommand>``.

Exit codes: 0 success, 1 configuration error, 2 data-validation error,
3 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import plotting
from .annotated import AnnotatedArrays, read_annotated, write_annotated
from .config import PipelineConfig, load_config
from .corpus import (
    expand_multilabel,
    load_envent,
    load_thinking_trap,
    split_records,
    write_expanded,
    write_summary,
)
from .errors import ConfigError, DataValidationError, PipelineError
from .manifest import RunManifest, digest_dir
from .stats import NegativeGroup, significance_matrix

logger = logging.getLogger("cogappraisal")


def _plots(manifest: RunManifest, fn, *args, **kwargs) -> None:
    """Render one figure; a plotting failure is logged and leaves data outputs intact."""
    try:
        for p in fn(*args, **kwargs):
            manifest.add_output(p)
    except Exception:  # noqa: BLE001
        logger.exception("plot %s failed", getattr(fn, "__name__", fn))


# -- corpus -----------------------------------------------------------------

def load_thoughts(cfg: PipelineConfig):
    main = cfg.require_input("thinking_trap")
    extra = cfg.require_input("extra_no_distortion") if cfg.paths.extra_no_distortion else None
    records = load_thinking_trap(main, extra, cfg.thinking_trap_columns,
                                 extra_columns=cfg.extra_columns, taxonomy=cfg.taxonomy(),
                                 delimiter=cfg.paths.delimiter)
    return records, [p for p in (main, extra) if p is not None]


def cmd_prepare(cfg: PipelineConfig, out_dir: str | Path | None = None) -> dict[str, Path]:
    out_dir = Path(out_dir) if out_dir else cfg.output_dir() / "corpus"
    manifest = RunManifest("prepare", cfg.to_dict())
    records, inputs = load_thoughts(cfg)
    for p in inputs:
        manifest.add_input(p)
    expanded = expand_multilabel(records)
    paths = {"expanded": out_dir / "expanded.tsv", "summary": out_dir / "summary.json"}
    write_expanded(expanded, paths["expanded"])
    write_summary(expanded, paths["summary"], sources=[str(p) for p in inputs])
    for p in paths.values():
        manifest.add_output(p)
    paths["manifest"] = manifest.write(out_dir / "manifest_prepare.json")
    logger.info("expanded %d records into %d rows", len(records), len(expanded))
    return paths


def load_events(cfg: PipelineConfig) -> tuple[dict, list[Path]]:
    if cfg.paths.envent:
        path = cfg.require_input("envent")
        records, inputs = load_envent(path, cfg.envent_columns, delimiter=cfg.paths.delimiter), [path]
    else:
        records, inputs = [], []
        for split in ("train", "validation", "test"):
            path = cfg.require_input(f"envent_{split}")
            records += load_envent(path, cfg.envent_columns, split=split, delimiter=cfg.paths.delimiter)
            inputs.append(path)
    splits = split_records(records)
    for split, rows in splits.items():
        if not rows:
            raise ConfigError(f"crowd-enVent input has no {split} records (check paths.envent / columns)")
    return splits, inputs


# -- model ------------------------------------------------------------------

def cmd_train(cfg: PipelineConfig, out_dir: str | Path | None = None) -> dict[str, Path]:
    from .model import evaluate, gold_matrix, median_baseline, train, write_metrics

    out_dir = Path(out_dir) if out_dir else cfg.output_dir()
    ckpt_dir = out_dir / "checkpoint" if out_dir != cfg.output_dir() else cfg.checkpoint_dir()
    manifest = RunManifest("train", cfg.to_dict(), seed=cfg.train.seed)
    splits, inputs = load_events(cfg)
    for p in inputs:
        manifest.add_input(p)

    ckpt = train(cfg.train, splits["train"], splits["validation"], out_dir=ckpt_dir)
    test_texts = [r.text for r in splits["test"]]
    gold = gold_matrix(splits["test"])
    preds = ckpt.predict(test_texts)
    baseline = median_baseline(splits["train"])
    reports = {
        "model": evaluate(preds, gold),
        "model_clamped": evaluate(preds, gold, clamp=True),
        "median_baseline": evaluate(baseline.predict(test_texts), gold),
    }
    paths = {"checkpoint": ckpt_dir, "metrics": write_metrics(out_dir / "metrics.csv", reports)}
    summary = {name: r.macro_rmse for name, r in reports.items()}
    summary["selected_epoch"] = ckpt.selected_epoch
    summary["n_test"] = len(test_texts)
    paths["metrics_json"] = out_dir / "metrics.json"
    paths["metrics_json"].write_text(json.dumps(summary, indent=2) + "\n")
    manifest.add_output(paths["metrics"])
    manifest.add_output(paths["metrics_json"])
    manifest.checkpoint_hash = digest_dir(ckpt_dir)
    _plots(manifest, plotting.rmse_bars,
           {n: r.per_dimension_rmse for n, r in reports.items() if n != "model_clamped"},
           out_dir / "figures" / "rmse_per_dimension")
    paths["manifest"] = manifest.write(out_dir / "manifest_train.json")
    logger.info("test macro-RMSE model=%.4f clamped=%.4f median baseline=%.4f",
                summary["model"], summary["model_clamped"], summary["median_baseline"])
    return paths


def cmd_annotate(cfg: PipelineConfig, checkpoint: str | Path | None = None,
                 include_reframes: bool | None = None,
                 out_path: str | Path | None = None) -> dict[str, Path]:
    from .annotator import annotate
    from .model import Checkpoint

    ckpt_dir = Path(checkpoint) if checkpoint else cfg.checkpoint_dir()
    if include_reframes is None:
        include_reframes = cfg.annotate.include_reframes
    out_path = Path(out_path) if out_path else cfg.annotated_path()
    manifest = RunManifest("annotate", cfg.to_dict())
    records, inputs = load_thoughts(cfg)
    for p in inputs:
        manifest.add_input(p)
    ckpt = Checkpoint.load(ckpt_dir)
    manifest.checkpoint_hash = digest_dir(ckpt_dir)
    manifest.seed = ckpt.config.seed
    manifest.config["checkpoint"] = ckpt.metadata()
    manifest.config["include_reframes"] = include_reframes
    rows = annotate(ckpt, expand_multilabel(records), include_reframes=include_reframes,
                    workers=cfg.annotate.workers)
    write_annotated(rows, out_path, with_reframes=include_reframes)
    manifest.add_output(out_path)
    manifest_path = manifest.write(out_path.with_name(out_path.stem + "_manifest.json"))
    logger.info("wrote %d annotated rows to %s", len(rows), out_path)
    return {"annotated": out_path, "manifest": manifest_path}


# -- analyses ---------------------------------------------------------------

def cmd_analyze(annotated_path: str | Path, out_dir: str | Path, *,
                strategies=None, alpha: float = 0.05, comparison_count: int | None = None,
                exact_threshold: int = 20) -> dict[str, Path]:
    strategies = [NegativeGroup(s) for s in (strategies or list(NegativeGroup))]
    out_dir = Path(out_dir)
    manifest = RunManifest("analyze", {"strategies": [s.value for s in strategies], "alpha": alpha,
                                       "comparison_count": comparison_count,
                                       "exact_threshold": exact_threshold})
    manifest.add_input(annotated_path)
    arrays = AnnotatedArrays.from_rows(read_annotated(annotated_path))
    paths: dict[str, Path] = {}
    matrices = {}
    for s in strategies:
        m = significance_matrix(arrays, s, alpha, comparison_count=comparison_count,
                                exact_threshold=exact_threshold)
        matrices[s] = m
        for kind, p in m.write(out_dir).items():
            paths[f"{s.value}_{kind}"] = p
            manifest.add_output(p)
        manifest.config["corrected_threshold"] = m.corrected_threshold
    if {NegativeGroup.EXCLUSIVE, NegativeGroup.ALL_OTHERS} <= set(matrices):
        same = bool(np.array_equal(matrices[NegativeGroup.EXCLUSIVE].significant,
                                   matrices[NegativeGroup.ALL_OTHERS].significant))
        manifest.config["exclusive_equals_all_others"] = same
        logger.info("exclusive and all_others decision grids identical: %s", same)
    for s, m in matrices.items():
        _plots(manifest, plotting.significance_heatmap, m.significant, m.rows,
               f"negative group: {s.value}", out_dir / "figures" / f"significance_{s.value}")
    paths["manifest"] = manifest.write(out_dir / "manifest_analyze.json")
    return paths


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name.lower()).strip("_")


def cmd_profile(annotated_path: str | Path, out_dir: str | Path, *,
                selected: list[str] | None = None) -> dict[str, Path]:
    from .profiles import all_profiles, write_profiles

    out_dir = Path(out_dir)
    selected = selected or ["Mind reading", "Catastrophizing"]
    manifest = RunManifest("profile", {"selected_classes": selected})
    manifest.add_input(annotated_path)
    base, per_class, relative = all_profiles(read_annotated(annotated_path))
    paths = {"profiles": out_dir / "profiles.csv", "relative": out_dir / "relative_profiles.csv"}
    write_profiles([base, *per_class], paths["profiles"])
    write_profiles(relative, paths["relative"])
    for p in paths.values():
        manifest.add_output(p)

    fig_dir = out_dir / "figures"
    _plots(manifest, plotting.profile_lines, {"baseline": base.medians}, fig_dir / "baseline_profile",
           ylabel="median appraisal", title=f"baseline (n={base.n})", zero_line=False)
    _plots(manifest, plotting.profile_lines, {r.label: r.deltas for r in relative},
           fig_dir / "relative_profiles", ylabel="score(distortion) - score(baseline)")
    for r in relative:
        _plots(manifest, plotting.profile_lines, {r.label: r.deltas},
               fig_dir / "relative" / _slug(r.label), ylabel="score(distortion) - score(baseline)",
               title=f"{r.label} (n={r.n})")
    chosen = {r.label: r.deltas for r in relative if r.label in selected}
    if chosen:
        _plots(manifest, plotting.profile_lines, chosen, fig_dir / "selected_profiles",
               ylabel="score(distortion) - score(baseline)")
    paths["manifest"] = manifest.write(out_dir / "manifest_profile.json")
    return paths


def cmd_reframe_shift(annotated_path: str | Path, out_dir: str | Path, *,
                      paired: bool = False) -> dict[str, Path]:
    from .profiles import all_shifts, write_profiles

    out_dir = Path(out_dir)
    manifest = RunManifest("reframe-shift", {"paired": paired})
    manifest.add_input(annotated_path)
    shifts = all_shifts(read_annotated(annotated_path), paired=paired)
    if not shifts:
        raise DataValidationError(
            f"{annotated_path} has no reframe appraisals; annotate with --reframes")
    paths = {"shifts": out_dir / "reframe_shift.csv"}
    write_profiles(shifts, paths["shifts"])
    manifest.add_output(paths["shifts"])
    _plots(manifest, plotting.profile_lines, {s.label: s.deltas for s in shifts},
           out_dir / "figures" / "reframe_shift", ylabel="median(reframe) - median(original)")
    paths["manifest"] = manifest.write(out_dir / "manifest_reframe_shift.json")
    return paths


def cmd_report(annotated_path, out_dir, cfg: PipelineConfig) -> dict[str, Path]:
    out_dir = Path(out_dir)
    paths = {}
    a = cfg.analyze
    paths.update(cmd_analyze(annotated_path, out_dir / "significance", strategies=a.strategies,
                             alpha=a.alpha, comparison_count=a.comparison_count,
                             exact_threshold=a.exact_threshold))
    paths.update({f"profile_{k}": v for k, v in cmd_profile(
        annotated_path, out_dir / "profiles", selected=cfg.profile.selected_classes).items()})
    rows = read_annotated(annotated_path)
    if any(r.reframe_appraisals is not None for r in rows):
        paths.update({f"shift_{k}": v for k, v in cmd_reframe_shift(
            annotated_path, out_dir / "reframe", paired=cfg.profile.paired_shift).items()})
    else:
        logger.info("no reframe appraisals in %s; skipping reframe shift", annotated_path)
    return paths


# -- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cogappraisal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(p, required=False):
        p.add_argument("--config", "-c", required=required, help="pipeline YAML config")

    p = sub.add_parser("prepare", help="expand the distortion corpus and summarise it")
    with_config(p, True)
    p.add_argument("--out", help="output directory (default <output_dir>/corpus)")

    p = sub.add_parser("train", help="train the appraisal model and write test RMSE")
    with_config(p, True)
    p.add_argument("--out", help="output directory (default paths.output_dir)")
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--learning-rate", type=float)

    p = sub.add_parser("annotate", help="predict appraisals for the expanded corpus")
    with_config(p, True)
    p.add_argument("--checkpoint")
    p.add_argument("--out", help="annotated TSV path")
    p.add_argument("--reframes", dest="reframes", action="store_true", default=None)
    p.add_argument("--no-reframes", dest="reframes", action="store_false")

    def analysis(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("annotated", help="annotated corpus file")
        p.add_argument("--out", required=True, help="output directory")
        with_config(p)
        return p

    p = analysis("analyze", "Mann-Whitney significance grids and heatmaps")
    p.add_argument("--strategies", nargs="+", choices=[s.value for s in NegativeGroup])
    p.add_argument("--alpha", type=float)
    p.add_argument("--comparison-count", type=int)
    p.add_argument("--exact-threshold", type=int)

    p = analysis("profile", "baseline, per-class and relative median profiles")
    p.add_argument("--selected", nargs="+", help="classes for the selected-profile figure")

    p = analysis("reframe-shift", "median appraisal shift after reframing")
    p.add_argument("--paired", action="store_true", default=None,
                   help="median of per-row differences instead of difference of medians")

    analysis("report", "regenerate every analysis table and figure")
    return parser


def run(args: argparse.Namespace) -> None:
    cfg = load_config(getattr(args, "config", None))
    if args.command == "prepare":
        cmd_prepare(cfg, args.out)
    elif args.command == "train":
        overrides = {k: v for k, v in (("max_epochs", args.max_epochs), ("seed", args.seed),
                                       ("learning_rate", args.learning_rate)) if v is not None}
        cfg.train = replace(cfg.train, **overrides)
        cmd_train(cfg, args.out)
    elif args.command == "annotate":
        cmd_annotate(cfg, args.checkpoint, args.reframes, args.out)
    elif args.command == "analyze":
        a = cfg.analyze
        cmd_analyze(args.annotated, args.out, strategies=args.strategies or a.strategies,
                    alpha=args.alpha if args.alpha is not None else a.alpha,
                    comparison_count=args.comparison_count or a.comparison_count,
                    exact_threshold=args.exact_threshold or a.exact_threshold)
    elif args.command == "profile":
        cmd_profile(args.annotated, args.out, selected=args.selected or cfg.profile.selected_classes)
    elif args.command == "reframe-shift":
        paired = cfg.profile.paired_shift if args.paired is None else args.paired
        cmd_reframe_shift(args.annotated, args.out, paired=paired)
    elif args.command == "report":
        cmd_report(args.annotated, args.out, cfg)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except PipelineError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except Exception:  # noqa: BLE001
        logger.exception("internal error")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
