"""Pipeline configuration: one YAML file with a section per stage.

Relative input paths under ``paths`` resolve against the data directory, taken
from ``$COGAPPRAISAL_DATA_DIR`` when set, else ``data_dir`` in the file
(relative to the config file), else the directory holding the config file.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .corpus import EnventColumns, ThinkingTrapColumns
from .errors import ConfigError
from .model import TrainConfig
from .stats import DEFAULT_EXACT_THRESHOLD, STRATEGIES
from .taxonomy import Taxonomy, TaxonomyError

DATA_DIR_ENV = "COGAPPRAISAL_DATA_DIR"


@dataclass
class PathsConfig:
    envent: str | None = None
    envent_train: str | None = None
    envent_validation: str | None = None
    envent_test: str | None = None
    thinking_trap: str | None = None
    extra_no_distortion: str | None = None
    output_dir: str = "runs/default"
    checkpoint: str | None = None
    annotated: str | None = None
    delimiter: str | None = None


@dataclass
class AnnotateConfig:
    include_reframes: bool = True
    workers: int = 1


@dataclass
class AnalyzeConfig:
    strategies: list[str] = field(default_factory=lambda: [s.value for s in STRATEGIES])
    alpha: float = 0.05
    comparison_count: int | None = None
    exact_threshold: int = DEFAULT_EXACT_THRESHOLD


@dataclass
class ProfileConfig:
    selected_classes: list[str] = field(default_factory=lambda: ["Mind reading", "Catastrophizing"])
    paired_shift: bool = False


@dataclass
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    envent_columns: EnventColumns = field(default_factory=EnventColumns)
    thinking_trap_columns: ThinkingTrapColumns = field(default_factory=ThinkingTrapColumns)
    extra_columns: ThinkingTrapColumns | None = None
    class_aliases: dict[str, str] = field(default_factory=dict)
    dimension_aliases: dict[str, str] = field(default_factory=dict)
    train: TrainConfig = field(default_factory=TrainConfig)
    annotate: AnnotateConfig = field(default_factory=AnnotateConfig)
    analyze: AnalyzeConfig = field(default_factory=AnalyzeConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    data_dir: str | None = None
    source: str | None = None

    def taxonomy(self) -> Taxonomy:
        return Taxonomy(self.class_aliases, self.dimension_aliases)

    def input_path(self, key: str) -> Path | None:
        """Resolved input path for ``paths.<key>``; ``None`` when unset."""
        value = getattr(self.paths, key)
        if value is None:
            return None
        p = Path(os.path.expandvars(value)).expanduser()
        if not p.is_absolute():
            p = self.data_root() / p
        return p

    def require_input(self, key: str) -> Path:
        p = self.input_path(key)
        if p is None:
            raise ConfigError(f"config key paths.{key} is not set")
        if not p.is_file():
            raise ConfigError(f"config key paths.{key}: file not found: {p}")
        return p

    def data_root(self) -> Path:
        if os.environ.get(DATA_DIR_ENV):
            return Path(os.environ[DATA_DIR_ENV])
        here = Path(self.source).parent if self.source else Path.cwd()
        return here / self.data_dir if self.data_dir else here

    def output_dir(self) -> Path:
        return Path(self.paths.output_dir)

    def checkpoint_dir(self) -> Path:
        return Path(self.paths.checkpoint) if self.paths.checkpoint else self.output_dir() / "checkpoint"

    def annotated_path(self) -> Path:
        return Path(self.paths.annotated) if self.paths.annotated else self.output_dir() / "annotated.tsv"

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, data: Any, section: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"config section {section!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in section {section!r}: {', '.join(sorted(unknown))}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"section {section!r}: {exc}") from exc


def _envent_columns(data: dict | None) -> EnventColumns:
    if not data:
        return EnventColumns()
    data = dict(data)
    ratings = data.pop("ratings", None)
    cols = _build(EnventColumns, data, "columns.envent")
    if ratings:
        taxonomy = Taxonomy()
        merged = dict(cols.ratings)
        merged.update({taxonomy.dimension(k): v for k, v in ratings.items()})
        cols = EnventColumns(cols.text, cols.split, cols.record_id, merged)
    return cols


_TOP_LEVEL = {"paths", "columns", "taxonomy-aliases", "train", "annotate", "analyze", "profile",
              "data_dir"}


def config_from_dict(raw: dict | None, source: str | None = None) -> PipelineConfig:
    raw = raw or {}
    unknown = set(raw) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
    columns = raw.get("columns") or {}
    aliases = raw.get("taxonomy-aliases") or {}
    try:
        return _pipeline_config(raw, columns, aliases, source)
    except TaxonomyError as exc:
        raise ConfigError(f"{source or 'config'}: {exc}") from exc


def _pipeline_config(raw: dict, columns: dict, aliases: dict, source: str | None) -> PipelineConfig:
    cfg = PipelineConfig(
        paths=_build(PathsConfig, raw.get("paths"), "paths"),
        envent_columns=_envent_columns(columns.get("envent")),
        thinking_trap_columns=_build(ThinkingTrapColumns, columns.get("thinking_trap"),
                                     "columns.thinking_trap"),
        extra_columns=(_build(ThinkingTrapColumns, columns["extra_no_distortion"],
                              "columns.extra_no_distortion")
                       if columns.get("extra_no_distortion") else None),
        class_aliases=dict(aliases.get("classes") or {}),
        dimension_aliases=dict(aliases.get("dimensions") or {}),
        train=_build(TrainConfig, raw.get("train"), "train"),
        annotate=_build(AnnotateConfig, raw.get("annotate"), "annotate"),
        analyze=_build(AnalyzeConfig, raw.get("analyze"), "analyze"),
        profile=_build(ProfileConfig, raw.get("profile"), "profile"),
        data_dir=raw.get("data_dir"),
        source=source,
    )
    cfg.taxonomy()  # fail early on bad alias targets
    return cfg


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(raw, str(path))
