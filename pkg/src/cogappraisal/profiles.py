"""Median appraisal profiles: baseline, per-distortion, relative, reframing shift."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .annotated import AnnotatedArrays, AnnotatedThought
from .errors import DataValidationError
from .taxonomy import CLASS_NAMES, DIMENSION_NAMES, DISTORTION_NAMES, NO_DISTORTION

BASELINE = "baseline"


@dataclass(frozen=True)
class AppraisalProfile:
    label: str
    medians: tuple[float, ...]
    n: int


@dataclass(frozen=True)
class RelativeProfile:
    label: str
    deltas: tuple[float, ...]
    baseline_label: str
    n: int = 0


def median_vector(values: np.ndarray) -> tuple[float, ...]:
    """Column medians; an even count takes the mean of the two middle values."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] == 0:
        raise ValueError("median_vector needs a nonempty (rows, dims) array")
    return tuple(float(v) for v in np.median(values, axis=0))


def _arrays(data) -> AnnotatedArrays:
    return data if isinstance(data, AnnotatedArrays) else AnnotatedArrays.from_rows(data)


def _class_rows(arrays: AnnotatedArrays, name: str) -> np.ndarray:
    if name not in CLASS_NAMES:
        raise ValueError(f"unknown class {name!r}")
    return arrays.labels == CLASS_NAMES.index(name)


def distortion_profile(data: Sequence[AnnotatedThought] | AnnotatedArrays,
                       name: str) -> AppraisalProfile:
    arrays = _arrays(data)
    rows = _class_rows(arrays, name)
    if not rows.any():
        raise DataValidationError(f"no rows labelled {name!r}")
    return AppraisalProfile(name, median_vector(arrays.appraisals[rows]), int(rows.sum()))


def baseline_profile(data: Sequence[AnnotatedThought] | AnnotatedArrays) -> AppraisalProfile:
    """Medians over the no-distortion rows only."""
    profile = distortion_profile(data, NO_DISTORTION)
    return AppraisalProfile(BASELINE, profile.medians, profile.n)


def relative_profile(profile: AppraisalProfile, baseline: AppraisalProfile) -> RelativeProfile:
    deltas = tuple(p - b for p, b in zip(profile.medians, baseline.medians, strict=True))
    return RelativeProfile(profile.label, deltas, baseline.label, profile.n)


def reframe_shift(data: Sequence[AnnotatedThought] | AnnotatedArrays, name: str, *,
                  paired: bool = False) -> RelativeProfile:
    """Median appraisal after reframing minus median before, for one class.

    Only rows with reframe appraisals enter both medians.  ``paired=True``
    instead takes the median of per-row differences.
    """
    arrays = _arrays(data)
    rows = _class_rows(arrays, name) & arrays.has_reframe
    if not rows.any():
        raise DataValidationError(f"no reframed rows labelled {name!r}")
    before = arrays.appraisals[rows]
    after = arrays.reframe_appraisals[rows]
    if paired:
        deltas = median_vector(after - before)
    else:
        deltas = tuple(a - b for a, b in zip(median_vector(after), median_vector(before)))
    return RelativeProfile(name, deltas, f"{name} (original)", int(rows.sum()))


def aggregate_reframe_shift(data, *, paired: bool = False) -> RelativeProfile:
    """Shift over every reframed distorted row, ignoring class."""
    arrays = _arrays(data)
    rows = (arrays.labels != CLASS_NAMES.index(NO_DISTORTION)) & arrays.has_reframe
    if not rows.any():
        raise DataValidationError("no reframed distorted rows")
    before, after = arrays.appraisals[rows], arrays.reframe_appraisals[rows]
    if paired:
        deltas = median_vector(after - before)
    else:
        deltas = tuple(a - b for a, b in zip(median_vector(after), median_vector(before)))
    return RelativeProfile("all distortions", deltas, "original", int(rows.sum()))


def all_profiles(data) -> tuple[AppraisalProfile, list[AppraisalProfile], list[RelativeProfile]]:
    arrays = _arrays(data)
    base = baseline_profile(arrays)
    per_class = [distortion_profile(arrays, c) for c in DISTORTION_NAMES
                 if (arrays.labels == CLASS_NAMES.index(c)).any()]
    return base, per_class, [relative_profile(p, base) for p in per_class]


def all_shifts(data, *, paired: bool = False) -> list[RelativeProfile]:
    arrays = _arrays(data)
    out = []
    for c in DISTORTION_NAMES:
        if ((arrays.labels == CLASS_NAMES.index(c)) & arrays.has_reframe).any():
            out.append(reframe_shift(arrays, c, paired=paired))
    return out


def write_profiles(profiles: Iterable[AppraisalProfile | RelativeProfile], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "n", *DIMENSION_NAMES])
        for p in profiles:
            values = p.medians if isinstance(p, AppraisalProfile) else p.deltas
            writer.writerow([p.label, p.n, *(format(v, ".17g") for v in values)])


def read_profiles(path: str | Path) -> list[tuple[str, int, tuple[float, ...]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [(row["label"], int(row["n"]), tuple(float(row[d]) for d in DIMENSION_NAMES))
                for row in reader]
