"""Synthetic stand-ins for the real corpora, for CI and desk-scale runs."""
from __future__ import annotations

import csv
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .annotated import AnnotatedThought
from .corpus import ENVENT_RATING_COLUMNS, SPLITS, EventRecord, ThoughtRecord
from .taxonomy import (
    CLASS_NAMES,
    DIMENSION_NAMES,
    DISTORTION_NAMES,
    N_DIMENSIONS,
    NO_DISTORTION,
    REFERENCE_CLASS_COUNTS,
    class_index,
)

ORIGINAL_NO_DISTORTION = 19
EXTRA_NO_DISTORTION = 77

_SUBJECTS = ["my boss", "my partner", "my friend", "my sister", "the teacher", "my coworker",
             "my neighbour", "my mother", "the doctor", "my roommate"]
_SITUATIONS = ["ignored my message", "cancelled our plans", "criticised my work",
               "forgot my birthday", "was late again", "did not reply", "changed the plan",
               "asked me a question", "looked at me", "gave me feedback"]


def thinking_trap_like(seed: int = 0, counts: dict[str, int] | None = None,
                       max_labels: int = 3) -> tuple[list[ThoughtRecord], list[ThoughtRecord]]:
    """Multi-label thought records whose expansion reproduces ``counts``.

    Returns ``(main, extra)``: ``extra`` holds the 77 added no-distortion
    records, ``main`` everything else including 19 original no-distortion ones.
    """
    counts = dict(counts or REFERENCE_CLASS_COUNTS)
    rng = np.random.default_rng(seed)
    n_extra = min(EXTRA_NO_DISTORTION, counts.get(NO_DISTORTION, 0))
    n_orig_none = counts.get(NO_DISTORTION, 0) - n_extra
    remaining = np.array([counts.get(c, 0) for c in DISTORTION_NAMES])

    label_sets: list[tuple[str, ...]] = []
    while remaining.sum() > 0:
        k = min(int(rng.integers(1, max_labels + 1)), int((remaining > 0).sum()))
        chosen = rng.choice(len(DISTORTION_NAMES), size=k, replace=False,
                            p=remaining / remaining.sum())
        remaining[chosen] -= 1
        label_sets.append(tuple(DISTORTION_NAMES[i] for i in sorted(chosen)))
    label_sets += [(NO_DISTORTION,)] * n_orig_none
    rng.shuffle(label_sets)

    def text(labels, i):
        who = _SUBJECTS[i % len(_SUBJECTS)]
        what = _SITUATIONS[(i * 7) % len(_SITUATIONS)]
        mood = " and ".join(l.lower() for l in labels)
        return f"{who} {what}, I keep {mood} about it ({i})"

    main = [ThoughtRecord(f"tt-{i:05d}", text(labels, i), labels,
                          f"maybe {_SUBJECTS[i % len(_SUBJECTS)]} was just busy ({i})")
            for i, labels in enumerate(label_sets)]
    extra = [ThoughtRecord(f"nd-{i:05d}", f"{_SUBJECTS[i % len(_SUBJECTS)]} called me today ({i})",
                           (NO_DISTORTION,))
             for i in range(n_extra)]
    return main, extra


_EVENT_WORDS = {
    # word -> per-dimension effect (dimension name -> rating offset)
    "wonderful": {"pleasantness": 2.0, "unpleasantness": -2.0, "goal_support": 1.5},
    "terrible": {"pleasantness": -1.5, "unpleasantness": 2.0, "effort": 1.0},
    "suddenly": {"suddenness": 2.0, "event_predictability": -1.5},
    "again": {"familiarity": 2.0, "event_predictability": 1.0},
    "myself": {"self_responsibility": 2.0, "self_control": 1.0},
    "someone": {"others_responsibility": 2.0, "others_control": 1.5},
    "luck": {"situational_responsibility": 2.0, "chance_control": 2.0},
    "urgent": {"urgency": 2.0, "attention": 1.5},
    "unfair": {"external_standards": 2.0, "internal_standards": 1.5},
    "ignored": {"not_consider": 2.0, "attention": -1.0},
    "important": {"goal_relevance": 2.0, "anticipated_consequence": 1.0},
    "fine": {"consequence_acceptance": 2.0},
}
_FILLER = ["today", "at work", "with my family", "on the bus", "in the evening", "last week",
           "at school", "during dinner"]


def envent_like(n_train: int = 600, n_validation: int = 150, n_test: int = 200,
                seed: int = 0) -> list[EventRecord]:
    """Event descriptions whose gold ratings depend on the words they contain."""
    rng = np.random.default_rng(seed)
    words = list(_EVENT_WORDS)
    records = []
    sizes = dict(zip(SPLITS, (n_train, n_validation, n_test)))
    i = 0
    for split in SPLITS:
        for _ in range(sizes[split]):
            chosen = rng.choice(len(words), size=int(rng.integers(1, 4)), replace=False)
            latent = np.full(N_DIMENSIONS, 3.0)
            for w in chosen:
                for dim, eff in _EVENT_WORDS[words[w]].items():
                    latent[DIMENSION_NAMES.index(dim)] += eff
            ratings = np.clip(np.rint(latent + rng.normal(0, 0.8, N_DIMENSIONS)), 1, 5).astype(int)
            text = "I felt it when " + " ".join(words[w] for w in chosen) + " " + \
                _FILLER[int(rng.integers(len(_FILLER)))]
            records.append(EventRecord(text, tuple(int(r) for r in ratings), split, f"ev-{i:05d}"))
            i += 1
    return records


def _quantile_sample(n: int, center: float, scale: float, rng) -> np.ndarray:
    dist = NormalDist(center, scale)
    grid = np.array([dist.inv_cdf((k + 0.5) / n) for k in range(n)])
    return rng.permutation(grid)


def planted_annotated(shift: float = 3.0, distortion: str = "Catastrophizing",
                      dimension: str = "pleasantness", *, counts: dict[str, int] | None = None,
                      reframe_delta: np.ndarray | None = None, seed: int = 0,
                      center: float = 3.0, scale: float = 0.7) -> list[AnnotatedThought]:
    """Annotated rows whose appraisals share one distribution across classes.

    Each class receives evenly spaced quantiles of the same normal distribution
    in every dimension, so no class differs from any other; ``shift`` is then
    added to ``dimension`` for rows of ``distortion``.  With ``reframe_delta``
    each row also gets reframe appraisals equal to its appraisals plus that
    vector.
    """
    counts = counts or REFERENCE_CLASS_COUNTS
    rng = np.random.default_rng(seed)
    d_shift = DIMENSION_NAMES.index(dimension)
    rows = []
    for cls in CLASS_NAMES:
        n = counts.get(cls, 0)
        if n == 0:
            continue
        values = np.column_stack([_quantile_sample(n, center, scale, rng) for _ in range(N_DIMENSIONS)])
        if cls == distortion:
            values[:, d_shift] += shift
        for k in range(n):
            vec = tuple(float(v) for v in values[k])
            reframe, reframed = None, None
            if reframe_delta is not None:
                reframe = f"reframed {cls} {k}"
                reframed = tuple(float(v) for v in values[k] + reframe_delta)
            rows.append(AnnotatedThought(f"{class_index(cls):02d}-{k:04d}", f"{cls} text {k}",
                                         cls, vec, reframe, reframed))
    return rows


def write_synthetic_inputs(out_dir: str | Path, seed: int = 0, *, n_train: int = 600,
                           n_validation: int = 150, n_test: int = 200) -> dict[str, Path]:
    """Write raw input files laid out like the public releases (default column names)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"envent": out_dir / "envent.tsv", "thinking_trap": out_dir / "thinking_trap.csv",
             "extra_no_distortion": out_dir / "no_distortion.csv"}
    with paths["envent"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["text_id", "generated_text", "split", *ENVENT_RATING_COLUMNS])
        for r in envent_like(n_train, n_validation, n_test, seed=seed):
            w.writerow([r.record_id, r.text, r.split, *r.ratings])
    main, extra = thinking_trap_like(seed=seed)
    with paths["thinking_trap"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["thought", "thinking_traps_addressed", "reframe"])
        for r in main:
            w.writerow([r.text, ",".join(d.lower() for d in r.distortions), r.reframe or ""])
    with paths["extra_no_distortion"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["thought"])
        w.writerows([r.text] for r in extra)
    return paths
