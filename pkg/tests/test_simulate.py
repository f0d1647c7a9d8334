import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trimrank.hodge import connected_components, trimmed_least_squares
from trimrank.simulate import SimulationSpec, generate


def test_two_items_one_record():
    sim = generate(SimulationSpec(2, 1, 0.0, 7))
    ds = sim.dataset
    assert ds.n_records == 1
    top = sim.ground_truth_order[0]
    winner = ds.item_i[0] if ds.y[0] > 0 else ds.item_j[0]
    assert winner == top


def test_outlier_count_table_setting():
    sim = generate(SimulationSpec(16, 1000, 0.05, 0))
    assert sim.true_outliers.outlier_count() == 50


@pytest.mark.parametrize("op, sn, on", [(0.29, 100, 29), (0.1, 1000, 100), (0.5, 3, 1),
                                        (1.0, 7, 7)])
def test_outlier_count_floor(op, sn, on):
    assert SimulationSpec(4, sn, op).outlier_count == on


def test_deterministic_given_seed():
    a = generate(SimulationSpec(16, 500, 0.2, 99))
    b = generate(SimulationSpec(16, 500, 0.2, 99))
    assert a.dataset == b.dataset
    assert np.array_equal(a.ground_truth_order, b.ground_truth_order)
    assert a.true_outliers == b.true_outliers
    c = generate(SimulationSpec(16, 500, 0.2, 100))
    assert not np.array_equal(a.dataset.y, c.dataset.y) or \
        not np.array_equal(a.dataset.item_i, c.dataset.item_i)


@pytest.mark.parametrize("kwargs", [dict(n_items=1), dict(sample_count=0),
                                    dict(outlier_percentage=1.5), dict(seed=-1)])
def test_invalid_specs(kwargs):
    with pytest.raises(ValueError):
        generate(SimulationSpec(**kwargs))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 20), sn=st.integers(1, 400), op=st.floats(0, 1),
       seed=st.integers(0, 2**64 - 1))
def test_reversals_disagree_and_the_rest_agree(n, sn, op, seed):
    sim = generate(SimulationSpec(n, sn, op, seed))
    ds = sim.dataset
    assert sim.true_outliers.outlier_count() == SimulationSpec(n, sn, op).outlier_count
    s = sim.true_scores
    agrees = np.sign(s[ds.item_i] - s[ds.item_j]) == ds.y
    assert np.array_equal(agrees, sim.true_outliers.keep)
    # flipping every outlier restores full agreement
    fixed = ds.with_y(np.where(sim.true_outliers.keep, ds.y, -ds.y))
    assert np.all(np.sign(s[fixed.item_i] - s[fixed.item_j]) == fixed.y)
    assert sorted(sim.ground_truth_order) == list(range(n))


def test_clean_data_large_sample_recovers_order():
    for seed in range(10):
        sim = generate(SimulationSpec(16, 5000, 0.0, seed))
        assert len(connected_components(sim.dataset)) == 1
        s, _ = trimmed_least_squares(sim.dataset)
        assert list(s.ranking()) == list(sim.ground_truth_order)


def test_edge_coverage():
    n = 16
    pairs = n * (n - 1) // 2
    covered = 0
    for seed in range(100):
        ds = generate(SimulationSpec(n, 10 * pairs, 0.0, seed)).dataset
        covered += len(set(zip(ds.item_i.tolist(), ds.item_j.tolist()))) == pairs
    assert covered >= 99
