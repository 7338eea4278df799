import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from cogappraisal.annotated import AnnotatedThought
from cogappraisal.errors import DataValidationError
from cogappraisal.stats import (
    EXACT,
    NORMAL,
    NegativeGroup,
    STRATEGIES,
    bonferroni_threshold,
    build_groups,
    mann_whitney_u,
    midranks,
    read_grid,
    significance_matrix,
)
from cogappraisal.synthetic import planted_annotated
from cogappraisal.taxonomy import DIMENSION_NAMES, DISTORTION_NAMES, NO_DISTORTION, REFERENCE_CLASS_COUNTS

from .oracles import brute_force_mwu_p, u_by_pairs

likert = st.lists(st.integers(1, 5), min_size=1, max_size=8)


def test_identical_samples():
    res = mann_whitney_u([1, 2, 3], [1, 2, 3])
    assert res.u_statistic == 4.5
    assert res.p_value == pytest.approx(1.0)


def test_separated_pairs_exact():
    res = mann_whitney_u([1, 2], [3, 4])
    assert res.u_statistic == 0
    assert res.method == EXACT
    assert res.p_value == pytest.approx(1 / 3, abs=1e-15)


def test_tied_blocks_exact():
    res = mann_whitney_u([1, 1, 1], [5, 5, 5])
    assert res.u_statistic == 0
    assert res.p_value == pytest.approx(0.1, abs=1e-15)


def test_midranks_with_ties():
    ranks, ties = midranks([10, 20, 10, 30, 20, 20])
    np.testing.assert_array_equal(ranks, [1.5, 4, 1.5, 6, 4, 4])
    assert sorted(ties.tolist()) == [1, 2, 3]


@pytest.mark.parametrize("method", [EXACT, NORMAL])
def test_all_values_identical_gives_p_one(method):
    res = mann_whitney_u([2.0] * 4, [2.0] * 30, method=method)
    assert res.p_value == 1.0
    assert res.method == method


def test_empty_sample_rejected():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1.0])


def test_auto_switches_method_at_threshold():
    assert mann_whitney_u(range(10), range(10, 20)).method == EXACT
    assert mann_whitney_u(range(10), range(10, 21)).method == NORMAL
    assert mann_whitney_u(range(10), range(10, 21), exact_threshold=21).method == EXACT


@given(likert, likert)
def test_exact_matches_enumeration(a, b):
    assert mann_whitney_u(a, b, method=EXACT).p_value == pytest.approx(brute_force_mwu_p(a, b), abs=1e-12)


@given(likert, likert)
def test_u_matches_pair_count(a, b):
    res = mann_whitney_u(a, b)
    assert res.u_statistic == u_by_pairs(a, b)
    assert 0 <= res.u_statistic <= len(a) * len(b)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=30),
       st.lists(st.floats(-50, 50), min_size=1, max_size=30))
def test_symmetry(a, b):
    ab, ba = mann_whitney_u(a, b), mann_whitney_u(b, a)
    assert ab.p_value == pytest.approx(ba.p_value, abs=1e-12)
    assert ab.u_statistic + ba.u_statistic == len(a) * len(b)


def test_normal_branch_matches_scipy_asymptotic():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = rng.integers(1, 6, rng.integers(5, 60))
        b = rng.integers(1, 6, rng.integers(5, 60))
        ours = mann_whitney_u(a, b, method=NORMAL).p_value
        ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic").pvalue
        assert ours == pytest.approx(ref, abs=1e-12)


def test_exact_branch_matches_scipy_without_ties():
    rng = np.random.default_rng(4)
    for _ in range(30):
        a, b = rng.normal(size=rng.integers(1, 10)), rng.normal(size=rng.integers(1, 10))
        ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="exact").pvalue
        assert mann_whitney_u(a, b, method=EXACT).p_value == pytest.approx(ref, abs=1e-12)


small_pair = st.integers(1, 15).flatmap(lambda n_a: st.tuples(
    st.lists(st.integers(1, 5), min_size=n_a, max_size=n_a),
    st.lists(st.integers(1, 5), min_size=1, max_size=16 - n_a)))


@given(small_pair)
def test_methods_agree_on_significance_away_from_threshold(pair):
    a, b = pair
    threshold = bonferroni_threshold(0.05, 14, 21)
    exact = mann_whitney_u(a, b, method=EXACT).p_value
    approx = mann_whitney_u(a, b, method=NORMAL).p_value
    if not 0.5 * threshold < exact < 2 * threshold:
        assert (exact < threshold) == (approx < threshold)


@pytest.mark.parametrize("seed", range(20))
def test_shift_monotonicity(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(3, 1, rng.integers(3, 25))
    b = a.copy()
    ps = [mann_whitney_u(a, b + c).p_value for c in (0, 1, 2, 3)]
    assert all(later <= earlier + 1e-15 for earlier, later in zip(ps, ps[1:]))


def test_bonferroni_examples():
    assert bonferroni_threshold(0.05, 14, 21) == pytest.approx(0.05 / 294, abs=1e-15)
    assert bonferroni_threshold(0.05, 14, 21) == pytest.approx(1.70068e-4, rel=1e-5)
    assert bonferroni_threshold(0.05, 1, 1) == 0.05
    assert bonferroni_threshold(0.01, 2, 3) == pytest.approx(1.6667e-3, rel=1e-4)
    assert bonferroni_threshold(0.05, 14, 21, comparison_count=307) == 0.05 / 307


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
def test_bonferroni_rejects_bad_alpha(alpha):
    with pytest.raises(ValueError):
        bonferroni_threshold(alpha, 14, 21)


@pytest.fixture(scope="module")
def reference_rows():
    return planted_annotated(shift=0.0)


@pytest.mark.parametrize("strategy, n_neg", [("no_distortion", 96), ("exclusive", 906), ("all_others", 1002)])
def test_group_sizes_on_reference_counts(reference_rows, strategy, n_neg):
    pair = build_groups(reference_rows, "Blaming", "pleasantness", strategy)
    assert len(pair.positive) == 34
    assert len(pair.negative) == n_neg
    assert not set(pair.positive_rows) & set(pair.negative_rows)


def test_all_others_partitions_rows(reference_rows):
    for name in DISTORTION_NAMES:
        pair = build_groups(reference_rows, name, "effort", NegativeGroup.ALL_OTHERS)
        assert len(pair.positive) + len(pair.negative) == len(reference_rows)


def test_no_distortion_cannot_be_positive(reference_rows):
    with pytest.raises(ValueError):
        build_groups(reference_rows, NO_DISTORTION, "effort", "exclusive")


def test_multilabel_replicas_counted_as_shared():
    vec = tuple([3.0] * 21)
    rows = [AnnotatedThought("r1", "t", "Blaming", vec), AnnotatedThought("r1", "t", "Labeling", vec),
            AnnotatedThought("r2", "u", NO_DISTORTION, vec)]
    pair = build_groups(rows, "Blaming", "effort", "all_others")
    assert pair.shared_records == 1
    assert len(pair.negative) == 2


def test_empty_negative_group_names_cell():
    rows = [AnnotatedThought(f"r{i}", "t", "Blaming", tuple([3.0] * 21)) for i in range(3)]
    with pytest.raises(DataValidationError, match=r"cell \(0, 0\).*no_distortion"):
        significance_matrix(rows + [AnnotatedThought("x", "t", "Labeling", tuple([3.0] * 21))], "no_distortion")


@pytest.fixture(scope="module")
def planted_rows():
    return planted_annotated(shift=3.0, distortion="Mind reading", dimension="others_control")


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_planted_cell_is_the_only_significant_one(planted_rows, strategy):
    m = significance_matrix(planted_rows, strategy)
    hits = np.argwhere(m.significant).tolist()
    assert hits == [[DISTORTION_NAMES.index("Mind reading"), DIMENSION_NAMES.index("others_control")]]
    np.testing.assert_array_equal(m.recompute_decisions(), m.significant)


def test_null_column_is_not_significant(planted_rows):
    m = significance_matrix(planted_rows, "no_distortion")
    assert not m.significant[:, DIMENSION_NAMES.index("pleasantness")].any()


def test_matrix_files_round_trip(planted_rows, tmp_path):
    m = significance_matrix(planted_rows, "exclusive", alpha=0.01, comparison_count=307)
    paths = m.write(tmp_path)
    rows, cols, p = read_grid(paths["p_values"])
    _, _, dec = read_grid(paths["decisions"])
    assert rows == list(DISTORTION_NAMES) and cols == list(DIMENSION_NAMES)
    np.testing.assert_array_equal(p, m.p_values)
    np.testing.assert_array_equal(dec.astype(bool), p < m.corrected_threshold)
    meta = json.loads(paths["metadata"].read_text())
    assert meta["corrected_threshold"] == 0.01 / 307
    assert meta["method_counts"] == {"normal_approximation": 294}
    assert meta["n_positive"]["Mind reading"] == REFERENCE_CLASS_COUNTS["Mind reading"]
