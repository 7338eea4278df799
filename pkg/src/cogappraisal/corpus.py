"""Loading, validation and multi-label expansion of the two source corpora.

crowd-enVent provides event descriptions with gold appraisal ratings; the
Thinking Trap corpus provides thoughts with one or more distortion labels and a
reframed thought.  Column names are resolved through :class:`EnventColumns` and
:class:`ThinkingTrapColumns` so that upstream renames only touch the config.
"""
from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, DataValidationError
from .taxonomy import (
    CLASS_NAMES,
    DIMENSION_NAMES,
    N_DIMENSIONS,
    NO_DISTORTION,
    Taxonomy,
    class_index,
)

logger = logging.getLogger(__name__)

SPLITS = ("train", "validation", "test")
_SPLIT_ALIASES = {"train": "train", "training": "train", "validation": "validation",
                  "valid": "validation", "val": "validation", "dev": "validation",
                  "test": "test", "testing": "test"}

# crowd-enVent release column names, in canonical dimension order.
ENVENT_RATING_COLUMNS = (
    "suddenness", "familiarity", "predict_event", "pleasantness", "unpleasantness",
    "goal_relevance", "chance_responsblt", "self_responsblt", "other_responsblt",
    "predict_conseq", "goal_support", "urgency", "self_control", "other_control",
    "chance_control", "accept_conseq", "standards", "social_norms", "attention",
    "not_consider", "effort",
)


@dataclass
class EnventColumns:
    text: str = "generated_text"
    split: str | None = "split"
    record_id: str | None = "text_id"
    ratings: dict[str, str] = field(
        default_factory=lambda: dict(zip(DIMENSION_NAMES, ENVENT_RATING_COLUMNS)))

    def __post_init__(self):
        missing = [d for d in DIMENSION_NAMES if d not in self.ratings]
        if missing:
            raise ConfigError(f"columns.envent.ratings lacks dimensions: {', '.join(missing)}")


@dataclass
class ThinkingTrapColumns:
    text: str = "thought"
    distortions: str = "thinking_traps_addressed"
    reframe: str | None = "reframe"
    record_id: str | None = None
    label_separator: str = ","


@dataclass(frozen=True)
class EventRecord:
    text: str
    ratings: tuple[int, ...]
    split: str
    record_id: str = ""

    def __post_init__(self):
        if not self.text.strip():
            raise DataValidationError(f"record {self.record_id!r}: empty text")
        if len(self.ratings) != N_DIMENSIONS:
            raise DataValidationError(
                f"record {self.record_id!r}: expected {N_DIMENSIONS} ratings, got {len(self.ratings)}")
        bad = [r for r in self.ratings if r not in (1, 2, 3, 4, 5)]
        if bad:
            raise DataValidationError(f"record {self.record_id!r}: ratings outside 1..5: {bad}")
        if self.split not in SPLITS:
            raise DataValidationError(f"record {self.record_id!r}: unknown split {self.split!r}")


@dataclass(frozen=True)
class ThoughtRecord:
    record_id: str
    text: str
    distortions: tuple[str, ...]
    reframe: str | None = None

    def __post_init__(self):
        if not self.distortions:
            raise DataValidationError(f"record {self.record_id!r}: no distortion labels")
        unknown = [d for d in self.distortions if d not in CLASS_NAMES]
        if unknown:
            raise DataValidationError(f"record {self.record_id!r}: non-canonical labels {unknown}")
        if NO_DISTORTION in self.distortions and len(self.distortions) > 1:
            raise DataValidationError(
                f"record {self.record_id!r}: {NO_DISTORTION!r} mixed with distortion labels")
        if len(set(self.distortions)) != len(self.distortions):
            raise DataValidationError(f"record {self.record_id!r}: repeated labels")


@dataclass(frozen=True)
class ExpandedRecord:
    record_id: str
    text: str
    distortion: str
    reframe: str | None = None


def detect_delimiter(path: str | Path, delimiter: str | None = None) -> str:
    if delimiter:
        return "\t" if delimiter in ("tab", "\\t") else delimiter
    suffix = Path(path).suffix.lower()
    if suffix in (".tsv", ".tab", ".txt"):
        return "\t"
    if suffix == ".csv":
        return ","
    raise ConfigError(f"cannot infer delimiter from extension of {path}; pass one explicitly")


def read_table(path: str | Path, delimiter: str | None = None) -> tuple[list[str], list[dict]]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh, delimiter=detect_delimiter(path, delimiter))
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def _require_columns(header: Sequence[str], columns: Iterable[str | None], path) -> None:
    for col in columns:
        if col is not None and col not in header:
            raise ConfigError(f"column {col!r} not found in {path}")


def _clean(value: str | None) -> str | None:
    if value is None:
        return None
    value = value.strip()
    return value or None


def _parse_rating(raw: str | None) -> int:
    value = float(str(raw).strip())
    if not value.is_integer():
        raise ValueError(f"non-integer rating {raw!r}")
    return int(value)


def load_envent(path: str | Path, columns: EnventColumns | None = None, *,
                split: str | None = None, delimiter: str | None = None) -> list[EventRecord]:
    """Load crowd-enVent rows as :class:`EventRecord`.

    Either the file carries a split column (``columns.split``) or the whole file
    belongs to the split given by ``split``.  Rows with ratings outside 1..5 are
    skipped and logged; a missing column is a :class:`ConfigError`.
    """
    columns = columns or EnventColumns()
    header, rows = read_table(path, delimiter)
    split_col = None if split is not None else columns.split
    if split is None and split_col is None:
        raise ConfigError("load_envent needs either a split column or an explicit split")
    _require_columns(header, [columns.text, split_col, columns.record_id,
                              *(columns.ratings[d] for d in DIMENSION_NAMES)], path)

    records: list[EventRecord] = []
    for i, row in enumerate(rows):
        rid = _clean(row[columns.record_id]) if columns.record_id else None
        rid = rid or f"{Path(path).stem}-{i:05d}"
        try:
            ratings = tuple(_parse_rating(row[columns.ratings[d]]) for d in DIMENSION_NAMES)
            raw_split = split if split is not None else (row[split_col] or "")
            record_split = _SPLIT_ALIASES.get(raw_split.strip().lower(), raw_split.strip())
            records.append(EventRecord(row[columns.text] or "", ratings, record_split, rid))
        except (ValueError, TypeError) as exc:
            logger.warning("rejected crowd-enVent record %s: %s", rid, exc)
    counts = Counter(r.split for r in records)
    logger.info("loaded %d crowd-enVent records from %s (%s)", len(records), path,
                ", ".join(f"{s}={counts.get(s, 0)}" for s in SPLITS))
    return records


def split_records(records: Iterable[EventRecord]) -> dict[str, list[EventRecord]]:
    out: dict[str, list[EventRecord]] = {s: [] for s in SPLITS}
    for r in records:
        out[r.split].append(r)
    return out


def _parse_labels(raw: str | None, separator: str, taxonomy: Taxonomy) -> tuple[str, ...]:
    parts = [p for p in (raw or "").split(separator) if p.strip()]
    labels = {taxonomy.distortion(p) for p in parts}
    return tuple(sorted(labels, key=class_index))


def _load_thoughts(path, columns: ThinkingTrapColumns, taxonomy: Taxonomy, *,
                   force_label: str | None, id_prefix: str, delimiter: str | None):
    header, rows = read_table(path, delimiter)
    wanted = [columns.text, columns.reframe, columns.record_id]
    if force_label is None:
        wanted.append(columns.distortions)
    # reframes and ids are optional in the extra no-distortion file
    _require_columns(header, [c for c in wanted
                              if force_label is None or c == columns.text], path)

    out = []
    for i, row in enumerate(rows):
        rid = _clean(row.get(columns.record_id)) if columns.record_id else None
        rid = rid or f"{id_prefix}-{i:05d}"
        text = _clean(row.get(columns.text))
        if text is None:
            logger.warning("rejected thought record %s: empty text", rid)
            continue
        if force_label is not None:
            labels: tuple[str, ...] = (force_label,)
        else:
            labels = _parse_labels(row.get(columns.distortions), columns.label_separator, taxonomy)
            if not labels:
                logger.warning("rejected thought record %s: no distortion labels", rid)
                continue
        reframe = _clean(row.get(columns.reframe)) if columns.reframe else None
        try:
            out.append(ThoughtRecord(rid, text, labels, reframe))
        except DataValidationError as exc:
            logger.warning("rejected thought record %s: %s", rid, exc)
    return out


def load_thinking_trap(main_path: str | Path | None,
                       extra_no_distortion_path: str | Path | None = None,
                       columns: ThinkingTrapColumns | None = None, *,
                       extra_columns: ThinkingTrapColumns | None = None,
                       taxonomy: Taxonomy | None = None,
                       delimiter: str | None = None) -> list[ThoughtRecord]:
    """Load the Thinking Trap corpus merged with an extra no-distortion file.

    Every record of the extra file is labelled "Not distorted".  Duplicate
    record ids across the two inputs keep the first occurrence.  An unknown
    distortion label raises :class:`TaxonomyError`.
    """
    columns = columns or ThinkingTrapColumns()
    taxonomy = taxonomy or Taxonomy()
    records: list[ThoughtRecord] = []
    if main_path is not None:
        records += _load_thoughts(main_path, columns, taxonomy, force_label=None,
                                  id_prefix="tt", delimiter=delimiter)
    if extra_no_distortion_path is not None:
        extra = _load_thoughts(extra_no_distortion_path, extra_columns or columns, taxonomy,
                               force_label=NO_DISTORTION, id_prefix="nd", delimiter=delimiter)
        logger.info("extra no-distortion input %s: %d records", extra_no_distortion_path, len(extra))
        records += extra

    seen: set[str] = set()
    merged = []
    for r in records:
        if r.record_id in seen:
            logger.warning("duplicate record id %s dropped (first occurrence kept)", r.record_id)
            continue
        seen.add(r.record_id)
        merged.append(r)
    return merged


def expand_multilabel(records: Iterable[ThoughtRecord]) -> list[ExpandedRecord]:
    """One row per (record, label) pair, in input order then canonical label order."""
    return [ExpandedRecord(r.record_id, r.text, label, r.reframe)
            for r in records for label in r.distortions]


def class_distribution(records: Iterable[ExpandedRecord]) -> dict[str, int]:
    counts = Counter(r.distortion for r in records)
    return {name: counts.get(name, 0) for name in CLASS_NAMES}


THOUGHT_COLUMNS = ThinkingTrapColumns(text="text", distortions="distortions", reframe="reframe",
                                      record_id="record_id", label_separator=";")


def write_thought_records(records: Iterable[ThoughtRecord], path: str | Path) -> None:
    """Serialize in the canonical layout; reload with ``columns=THOUGHT_COLUMNS``."""
    _write_rows(path, ["record_id", "text", "distortions", "reframe"],
                ([r.record_id, r.text, ";".join(r.distortions), r.reframe or ""] for r in records))


def write_expanded(records: Iterable[ExpandedRecord], path: str | Path) -> None:
    _write_rows(path, ["record_id", "text", "distortion", "reframe"],
                ([r.record_id, r.text, r.distortion, r.reframe or ""] for r in records))


def read_expanded(path: str | Path, delimiter: str | None = None) -> list[ExpandedRecord]:
    header, rows = read_table(path, delimiter)
    _require_columns(header, ["record_id", "text", "distortion", "reframe"], path)
    taxonomy = Taxonomy()
    return [ExpandedRecord(row["record_id"], row["text"], taxonomy.distortion(row["distortion"]),
                           _clean(row["reframe"]))
            for row in rows]


def write_summary(records: Sequence[ExpandedRecord], path: str | Path, **provenance) -> dict:
    summary = {
        "n_rows": len(records),
        "n_records": len({r.record_id for r in records}),
        "n_with_reframe": sum(r.reframe is not None for r in records),
        "class_distribution": class_distribution(records),
        **provenance,
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary


def _write_rows(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=detect_delimiter(path), lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
