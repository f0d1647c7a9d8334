import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trimrank.errors import StructuralError
from trimrank.model import (ComparisonDataset, ComparisonRecord, DatasetBuilder, EvalMetrics,
                            OutlierMask, ScoreVector, mismatch_count, residual, residuals,
                            trimmed_objective)

from conftest import make_dataset


@pytest.mark.parametrize("scores, record, expected", [
    ((0.5, -0.5), ComparisonRecord("a", 0, 1, 1), 0.0),
    ((0.0, 0.0), ComparisonRecord("a", 0, 1, 1), -1.0),
    ((0.3, -0.3), ComparisonRecord("a", 1, 0, 1), -1.6),
])
def test_residual_examples(scores, record, expected):
    assert residual(record, ScoreVector(np.array(scores))) == pytest.approx(expected, abs=1e-15)


def test_residual_index_out_of_range():
    with pytest.raises(StructuralError):
        residual(ComparisonRecord("a", 0, 2, 1), ScoreVector(np.zeros(2)))


@pytest.mark.parametrize("scores, triples, expected", [
    ((1, 0), [(0, 1, 1)], 0),
    ((1, 0), [(0, 1, -1)], 1),
    ((0, 0), [(0, 1, 1), (1, 0, 1)], 2),
])
def test_mismatch_count_examples(scores, triples, expected):
    ds = make_dataset(2, triples)
    assert mismatch_count(ds, np.array(scores, dtype=float)) == expected


def test_mismatch_count_rejects_wrong_length():
    with pytest.raises(StructuralError):
        mismatch_count(make_dataset(2, [(0, 1, 1)]), np.zeros(3))


@pytest.mark.parametrize("kwargs", [
    dict(item_i=1, item_j=1, y=1),
    dict(item_i=0, item_j=1, y=0),
    dict(item_i=0, item_j=1, y=2),
    dict(item_i=0, item_j=1, y=1, weight=0.0),
    dict(item_i=0, item_j=1, y=1, weight=-1.0),
])
def test_record_invariants(kwargs):
    with pytest.raises(ValueError):
        ComparisonRecord("r", **kwargs)


def test_dataset_rejects_out_of_range_item():
    with pytest.raises(StructuralError):
        make_dataset(2, [(0, 2, 1)])


def test_dataset_is_immutable():
    ds = make_dataset(3, [(0, 1, 1), (1, 2, -1)])
    with pytest.raises(ValueError):
        ds.y[0] = -1.0
    with pytest.raises(AttributeError):
        ds.n_items = 4


def test_builder_and_records_round_trip():
    b = DatasetBuilder(3, labels=("a", "b", "c"))
    b.add("r1", 0, 1, 1)
    b.add("r2", 2, 1, -1, weight=2.5)
    ds = b.seal()
    assert ds.n_records == 2
    assert ds.records[1] == ComparisonRecord("r2", 2, 1, -1, 2.5)
    assert ComparisonDataset.from_records(3, ds.records) == ds
    assert ds.label(2) == "c"


def test_score_vector_gauge_enforced():
    with pytest.raises(ValueError):
        ScoreVector(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        ScoreVector(np.array([np.inf, -np.inf]))
    s = ScoreVector.gauged([3.0, 1.0, 2.0])
    assert s.scores.sum() == pytest.approx(0.0, abs=1e-12)
    assert list(s.ranking()) == [0, 2, 1]


def test_ranking_ties_break_by_index():
    assert list(ScoreVector(np.zeros(3)).ranking()) == [0, 1, 2]


def test_outlier_mask_counts():
    mask = OutlierMask.from_outliers(5, [1, 3])
    assert mask.outlier_count() == 2
    assert list(mask.outliers()) == [1, 3]
    assert len(mask) == 5
    assert mask == OutlierMask(np.array([True, False, True, False, True]))


finite = st.floats(-10, 10, allow_nan=False)


@given(si=finite, sj=finite, y=st.sampled_from([1, -1]),
       w=st.floats(0.1, 5))
def test_flipping_a_record_leaves_squared_residual_unchanged(si, sj, y, w):
    s = ScoreVector.gauged([si, sj])
    rec = ComparisonRecord("r", 0, 1, y, w)
    assert residual(rec, s) ** 2 == pytest.approx(residual(rec.flipped(), s) ** 2, abs=1e-9)
    ds = ComparisonDataset.from_records(2, [rec])
    flipped = ComparisonDataset.from_records(2, [rec.flipped()])
    keep = OutlierMask.all_keep(1)
    assert trimmed_objective(ds, s, keep) == pytest.approx(
        trimmed_objective(flipped, s, keep), abs=1e-9)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.sampled_from([1, -1]))
                .filter(lambda t: t[0] != t[1]), min_size=1, max_size=20),
       st.lists(st.integers(-3, 3), min_size=5, max_size=5),
       st.integers(-100, 100))
def test_mismatch_count_shift_invariant(triples, scores, shift):
    ds = make_dataset(5, triples)
    s = np.array(scores, dtype=float)
    assert mismatch_count(ds, s) == mismatch_count(ds, s + shift)


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_eval_metrics_identities(tp, fp, fn, tn):
    m = EvalMetrics(tp, fp, fn, tn)
    assert m.precision == (tp / (tp + fp) if tp + fp else 1.0)
    assert m.recall == (tp / (tp + fn) if tp + fn else 1.0)
    if m.precision + m.recall > 0:
        assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))
    else:
        assert m.f1 == 0.0
    for v in (m.precision, m.recall, m.f1):
        assert 0.0 <= v <= 1.0


def test_eval_metrics_rejects_negative_counts():
    with pytest.raises(ValueError):
        EvalMetrics(-1, 0, 0, 0)


def test_residuals_vector_matches_scalar():
    ds = make_dataset(3, [(0, 1, 1), (2, 1, -1), (0, 2, 1)])
    s = ScoreVector.gauged([0.2, -0.1, 0.4])
    assert np.allclose(residuals(ds, s), [residual(r, s) for r in ds.records])
