"""Apply a trained appraisal model to the expanded distortion corpus."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

from .annotated import AnnotatedThought
from .corpus import ExpandedRecord
from .model import Checkpoint

logger = logging.getLogger(__name__)


def annotate(checkpoint: Checkpoint | str | Path, records: Sequence[ExpandedRecord], *,
             include_reframes: bool = True, workers: int = 1) -> list[AnnotatedThought]:
    """Predict appraisals for every row, and for reframes when requested.

    Each distinct text is encoded once and its prediction is shared by all rows
    carrying it, so replicas of a multi-label record get identical vectors.
    Reframes go through the same checkpoint and inference settings.
    """
    if not isinstance(checkpoint, Checkpoint):
        checkpoint = Checkpoint.load(checkpoint)
    texts = list(dict.fromkeys(r.text for r in records))
    if include_reframes:
        reframes = [r.reframe for r in records if r.reframe is not None]
        seen = set(texts)
        texts += [t for t in dict.fromkeys(reframes) if t not in seen]
        missing = sum(r.reframe is None for r in records)
        if missing:
            logger.info("%d row(s) without a reframe; reframe appraisals left empty", missing)
    if not texts:
        return []
    vectors = checkpoint.predict(texts, workers=workers)
    lookup = {t: tuple(float(v) for v in vec) for t, vec in zip(texts, vectors)}
    logger.info("annotated %d rows from %d unique texts", len(records), len(texts))
    return [
        AnnotatedThought(
            r.record_id, r.text, r.distortion, lookup[r.text], r.reframe,
            lookup[r.reframe] if include_reframes and r.reframe is not None else None,
        )
        for r in records
    ]
