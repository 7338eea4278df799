"""The annotated corpus: one distortion label plus 21 predicted appraisals per row.

This file format is the hand-off between annotation and all statistics, so the
statistics and profile code only ever needs this module, never the model.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import detect_delimiter, read_table
from .errors import ConfigError, DataValidationError
from .taxonomy import CLASS_NAMES, DIMENSION_NAMES, N_DIMENSIONS, Taxonomy

DECIMALS = 6
REFRAME_PREFIX = "reframe_"


@dataclass(frozen=True)
class AnnotatedThought:
    record_id: str
    text: str
    distortion: str
    appraisals: tuple[float, ...]
    reframe: str | None = None
    reframe_appraisals: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.distortion not in CLASS_NAMES:
            raise DataValidationError(f"row {self.record_id!r}: unknown class {self.distortion!r}")
        if len(self.appraisals) != N_DIMENSIONS:
            raise DataValidationError(f"row {self.record_id!r}: need {N_DIMENSIONS} appraisals")
        if self.reframe_appraisals is not None:
            if self.reframe is None:
                raise DataValidationError(f"row {self.record_id!r}: reframe appraisals without reframe")
            if len(self.reframe_appraisals) != N_DIMENSIONS:
                raise DataValidationError(f"row {self.record_id!r}: need {N_DIMENSIONS} reframe appraisals")


@dataclass
class AnnotatedArrays:
    """Column view of an annotated corpus used by the statistics code."""

    record_ids: np.ndarray
    labels: np.ndarray          # class index per row
    appraisals: np.ndarray      # (rows, 21)
    reframe_appraisals: np.ndarray  # (rows, 21), NaN where absent
    has_reframe: np.ndarray

    @classmethod
    def from_rows(cls, data: Sequence[AnnotatedThought]) -> "AnnotatedArrays":
        n = len(data)
        reframed = np.full((n, N_DIMENSIONS), np.nan)
        has = np.zeros(n, dtype=bool)
        for i, row in enumerate(data):
            if row.reframe_appraisals is not None:
                reframed[i] = row.reframe_appraisals
                has[i] = True
        return cls(
            record_ids=np.array([r.record_id for r in data], dtype=object),
            labels=np.array([CLASS_NAMES.index(r.distortion) for r in data], dtype=int),
            appraisals=np.array([r.appraisals for r in data], dtype=float).reshape(n, N_DIMENSIONS),
            reframe_appraisals=reframed,
            has_reframe=has,
        )


def annotated_columns(with_reframes: bool) -> list[str]:
    cols = ["record_id", "distortion", "text", *DIMENSION_NAMES]
    if with_reframes:
        cols += ["reframe", *(REFRAME_PREFIX + d for d in DIMENSION_NAMES)]
    return cols


def _fmt(value: float) -> str:
    return f"{value:.{DECIMALS}f}"


def write_annotated(rows: Iterable[AnnotatedThought], path: str | Path,
                    with_reframes: bool | None = None) -> None:
    """Write the annotated corpus with values at fixed 6-decimal precision."""
    rows = list(rows)
    if with_reframes is None:
        with_reframes = any(r.reframe_appraisals is not None for r in rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=detect_delimiter(path), lineterminator="\n")
        writer.writerow(annotated_columns(with_reframes))
        for r in rows:
            line = [r.record_id, r.distortion, r.text, *map(_fmt, r.appraisals)]
            if with_reframes:
                if r.reframe_appraisals is None:
                    line += [r.reframe or ""] + [""] * N_DIMENSIONS
                else:
                    line += [r.reframe, *map(_fmt, r.reframe_appraisals)]
            writer.writerow(line)


def read_annotated(path: str | Path, delimiter: str | None = None) -> list[AnnotatedThought]:
    header, table = read_table(path, delimiter)
    base = annotated_columns(False)
    for col in base:
        if col not in header:
            raise ConfigError(f"column {col!r} not found in {path}")
    with_reframes = "reframe" in header
    taxonomy = Taxonomy()
    rows = []
    for i, row in enumerate(table):
        try:
            appraisals = tuple(float(row[d]) for d in DIMENSION_NAMES)
            reframe = (row.get("reframe") or "").strip() or None
            reframe_appraisals = None
            if with_reframes and reframe is not None and row.get(REFRAME_PREFIX + DIMENSION_NAMES[0]):
                reframe_appraisals = tuple(float(row[REFRAME_PREFIX + d]) for d in DIMENSION_NAMES)
            rows.append(AnnotatedThought(row["record_id"], row["text"],
                                         taxonomy.distortion(row["distortion"]),
                                         appraisals, reframe, reframe_appraisals))
        except (TypeError, ValueError) as exc:
            raise DataValidationError(f"{path}: malformed row {i + 1}: {exc}") from exc
    return rows
