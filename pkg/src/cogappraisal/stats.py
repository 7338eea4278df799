"""Mann-Whitney U significance between distortion presence and appraisal values.

For every (distortion, dimension) cell the appraisal values of rows carrying the
distortion are compared against a negative group chosen by one of three
strategies, and the resulting p-values are judged against a Bonferroni
corrected threshold.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .annotated import AnnotatedArrays, AnnotatedThought
from .errors import DataValidationError
from .taxonomy import (
    CLASS_NAMES,
    DIMENSION_NAMES,
    DISTORTION_NAMES,
    N_DIMENSIONS,
    N_DISTORTIONS,
    NO_DISTORTION,
)

EXACT = "exact"
NORMAL = "normal_approximation"
DEFAULT_EXACT_THRESHOLD = 20
# C(66, 33) overflows int64
_MAX_EXACT_N = 60


class NegativeGroup(str, Enum):
    NO_DISTORTION = "no_distortion"
    EXCLUSIVE = "exclusive"
    ALL_OTHERS = "all_others"


STRATEGIES = tuple(NegativeGroup)


@dataclass(frozen=True)
class TestResult:
    u_statistic: float
    p_value: float
    method: str
    n_a: int
    n_b: int

    __test__ = False  # not a pytest class


def midranks(values) -> tuple[np.ndarray, np.ndarray]:
    """Return 1-based midranks of ``values`` and the sizes of each tie group."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    new_group = np.r_[True, xs[1:] != xs[:-1]]
    starts = np.flatnonzero(new_group)
    ends = np.r_[starts[1:], len(xs)]
    group_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(len(x))
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks, ends - starts


def _exact_two_sided(doubled_ranks: np.ndarray, n_a: int, u2_obs: int) -> float:
    """Exact permutation p-value conditional on the observed (mid)ranks.

    Counts the size-``n_a`` subsets of the pooled doubled ranks whose U deviates
    from its null mean at least as far as the observed one; all arithmetic is
    on integers (U doubled) so ties at the boundary are counted exactly.
    """
    n = len(doubled_ranks)
    n_b = n - n_a
    max_sum = int(doubled_ranks.sum())
    counts = np.zeros((n_a + 1, max_sum + 1), dtype=np.int64)
    counts[0, 0] = 1
    for i, r in enumerate(doubled_ranks.astype(int)):
        for k in range(min(i + 1, n_a), 0, -1):
            counts[k, r:] += counts[k - 1, : max_sum + 1 - r]
    sums = np.arange(max_sum + 1)
    u2 = sums - n_a * (n_a + 1)
    dev = np.abs(u2 - n_a * n_b)
    total = counts[n_a].sum()
    extreme = counts[n_a][dev >= abs(u2_obs - n_a * n_b)].sum()
    return float(extreme) / float(total)


def _normal_two_sided(u: float, n_a: int, n_b: int, tie_sizes: np.ndarray) -> float | None:
    n = n_a + n_b
    tie_term = float(np.sum(tie_sizes.astype(float) ** 3 - tie_sizes))
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return None
    z = max(abs(u - n_a * n_b / 2.0) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def mann_whitney_u(a: Sequence[float], b: Sequence[float], *,
                   exact_threshold: int = DEFAULT_EXACT_THRESHOLD,
                   method: str = "auto") -> TestResult:
    """Two-sided Mann-Whitney U test.

    ``u_statistic`` is U for ``a``: the number of pairs with ``a_i > b_j``
    plus one half per tie.  With ``method="auto"`` the exact permutation null is
    used when ``len(a) + len(b) <= exact_threshold``, otherwise the normal
    approximation with tie-corrected variance and continuity correction.  If
    the pooled values are all identical the p-value is 1.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n_a, n_b = len(a), len(b)
    if n_a == 0 or n_b == 0:
        raise ValueError("mann_whitney_u needs two nonempty samples")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("mann_whitney_u got non-finite values")
    if method not in ("auto", EXACT, NORMAL):
        raise ValueError(f"unknown method {method!r}")

    ranks, tie_sizes = midranks(np.concatenate([a, b]))
    doubled = np.rint(2 * ranks).astype(np.int64)
    u2 = int(doubled[:n_a].sum()) - n_a * (n_a + 1)
    u = u2 / 2.0

    use_exact = method == EXACT or (method == "auto" and n_a + n_b <= exact_threshold)
    if use_exact:
        if n_a + n_b > _MAX_EXACT_N:
            raise ValueError(f"exact test limited to {_MAX_EXACT_N} observations")
        return TestResult(u, _exact_two_sided(doubled, n_a, u2), EXACT, n_a, n_b)
    p = _normal_two_sided(u, n_a, n_b, tie_sizes)
    return TestResult(u, 1.0 if p is None else p, NORMAL, n_a, n_b)


def bonferroni_threshold(alpha: float = 0.05, n_distortions: int = N_DISTORTIONS,
                         n_dimensions: int = N_DIMENSIONS,
                         comparison_count: int | None = None) -> float:
    """``alpha`` divided by the number of comparisons.

    The comparison count defaults to ``n_distortions * n_dimensions``;
    ``comparison_count`` overrides it (307 reproduces the constant quoted in the
    original analysis, whose product would otherwise be 294).
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    count = comparison_count if comparison_count is not None else n_distortions * n_dimensions
    if count <= 0 or n_distortions <= 0 or n_dimensions <= 0:
        raise ValueError("comparison counts must be positive")
    return alpha / count


@dataclass
class GroupPair:
    distortion: str
    dimension: str
    strategy: NegativeGroup
    positive: np.ndarray
    negative: np.ndarray
    positive_rows: np.ndarray
    negative_rows: np.ndarray
    # record ids present in both groups via multi-label replicas
    shared_records: int = 0


def negative_mask(labels: np.ndarray, class_idx: int, strategy: NegativeGroup) -> np.ndarray:
    strategy = NegativeGroup(strategy)
    no_idx = CLASS_NAMES.index(NO_DISTORTION)
    if strategy is NegativeGroup.NO_DISTORTION:
        return labels == no_idx
    if strategy is NegativeGroup.EXCLUSIVE:
        return (labels != class_idx) & (labels != no_idx)
    return labels != class_idx


def _groups(arrays: AnnotatedArrays, distortion: str, dimension: str,
            strategy: NegativeGroup) -> GroupPair:
    if distortion == NO_DISTORTION or distortion not in DISTORTION_NAMES:
        raise ValueError(f"positive group must be a distortion class, got {distortion!r}")
    c = CLASS_NAMES.index(distortion)
    d = DIMENSION_NAMES.index(dimension)
    pos = np.flatnonzero(arrays.labels == c)
    neg = np.flatnonzero(negative_mask(arrays.labels, c, strategy))
    if len(pos) == 0 or len(neg) == 0:
        which = "positive" if len(pos) == 0 else "negative"
        raise DataValidationError(
            f"empty {which} group for {distortion!r} under strategy {NegativeGroup(strategy).value}")
    shared = len(set(arrays.record_ids[pos]) & set(arrays.record_ids[neg]))
    return GroupPair(distortion, dimension, NegativeGroup(strategy),
                     arrays.appraisals[pos, d], arrays.appraisals[neg, d], pos, neg, shared)


def build_groups(data: Sequence[AnnotatedThought], distortion: str, dimension: str,
                 strategy: NegativeGroup | str) -> GroupPair:
    """Positive and negative appraisal samples for one distortion-dimension cell.

    Groups are disjoint in rows of the expanded corpus.  A multi-label record
    can still contribute one replica to each side; ``shared_records`` counts
    such records.
    """
    return _groups(AnnotatedArrays.from_rows(data), distortion, dimension, NegativeGroup(strategy))


@dataclass
class SignificanceMatrix:
    strategy: NegativeGroup
    p_values: np.ndarray
    u_statistics: np.ndarray
    methods: np.ndarray
    significant: np.ndarray
    alpha: float
    corrected_threshold: float
    comparison_count: int
    n_positive: np.ndarray
    n_negative: np.ndarray
    rows: tuple[str, ...] = field(default=DISTORTION_NAMES)
    columns: tuple[str, ...] = field(default=DIMENSION_NAMES)

    def recompute_decisions(self) -> np.ndarray:
        return self.p_values < self.corrected_threshold

    def metadata(self) -> dict:
        methods, counts = np.unique(self.methods, return_counts=True)
        return {
            "strategy": self.strategy.value,
            "alpha": self.alpha,
            "comparison_count": self.comparison_count,
            "corrected_threshold": self.corrected_threshold,
            "n_significant": int(self.significant.sum()),
            "method_counts": {str(m): int(c) for m, c in zip(methods, counts)},
            "n_positive": dict(zip(self.rows, map(int, self.n_positive))),
            "n_negative": dict(zip(self.rows, map(int, self.n_negative))),
        }

    def write(self, out_dir: str | Path, prefix: str | None = None) -> dict[str, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        prefix = prefix or self.strategy.value
        paths = {
            "p_values": out_dir / f"{prefix}_pvalues.csv",
            "decisions": out_dir / f"{prefix}_significant.csv",
            "metadata": out_dir / f"{prefix}_meta.json",
        }
        _write_grid(paths["p_values"], self.rows, self.columns,
                    [[format(float(v), ".17g") for v in row] for row in self.p_values])
        _write_grid(paths["decisions"], self.rows, self.columns,
                    [[str(int(v)) for v in row] for row in self.significant])
        paths["metadata"].write_text(json.dumps(self.metadata(), indent=2) + "\n", encoding="utf-8")
        return paths


def _write_grid(path: Path, rows, columns, cells) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["distortion", *columns])
        for name, row in zip(rows, cells):
            writer.writerow([name, *row])


def read_grid(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names, values = [], []
        for row in reader:
            names.append(row[0])
            values.append([float(v) for v in row[1:]])
    return names, header[1:], np.array(values)


def significance_matrix(data: Sequence[AnnotatedThought] | AnnotatedArrays,
                        strategy: NegativeGroup | str = NegativeGroup.NO_DISTORTION,
                        alpha: float = 0.05, *, comparison_count: int | None = None,
                        exact_threshold: int = DEFAULT_EXACT_THRESHOLD) -> SignificanceMatrix:
    strategy = NegativeGroup(strategy)
    arrays = data if isinstance(data, AnnotatedArrays) else AnnotatedArrays.from_rows(data)
    threshold = bonferroni_threshold(alpha, N_DISTORTIONS, N_DIMENSIONS, comparison_count)
    shape = (N_DISTORTIONS, N_DIMENSIONS)
    p = np.ones(shape)
    u = np.zeros(shape)
    methods = np.empty(shape, dtype=object)
    n_pos = np.zeros(N_DISTORTIONS, dtype=int)
    n_neg = np.zeros(N_DISTORTIONS, dtype=int)
    for i, distortion in enumerate(DISTORTION_NAMES):
        for j, dimension in enumerate(DIMENSION_NAMES):
            try:
                pair = _groups(arrays, distortion, dimension, strategy)
            except DataValidationError as exc:
                raise DataValidationError(f"cell ({i}, {j}) [{distortion} x {dimension}]: {exc}") from exc
            res = mann_whitney_u(pair.positive, pair.negative, exact_threshold=exact_threshold)
            p[i, j], u[i, j], methods[i, j] = res.p_value, res.u_statistic, res.method
        n_pos[i], n_neg[i] = len(pair.positive), len(pair.negative)
    return SignificanceMatrix(
        strategy=strategy, p_values=p, u_statistics=u, methods=methods,
        significant=p < threshold, alpha=alpha, corrected_threshold=threshold,
        comparison_count=comparison_count or N_DISTORTIONS * N_DIMENSIONS,
        n_positive=n_pos, n_negative=n_neg,
    )
