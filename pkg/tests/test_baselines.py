import random

import numpy as np
import pytest

from relsim import AttributedGraph, DegenerateTaskError, NodePartition
from relsim.baselines import weighted_vote

import cases
import oracles


def test_single_vote_frozen():
    # node 2 hears class 0 with weight 2 and class 1 with weight 1
    g = AttributedGraph(3, edges=[(0, 2, 2.0), (1, 2, 1.0)],
                        labels={0: 0, 1: 1}, class_count=2)
    res = weighted_vote(g)
    assert np.allclose(res.estimates[2], [2 / 3, 1 / 3])
    assert res.assignments == {2: 0}


def test_labeled_rows_clamped():
    g = AttributedGraph(3, edges=[(0, 1), (1, 2)], labels={0: 0, 2: 1}, class_count=2)
    res = weighted_vote(g)
    assert np.array_equal(res.estimates[0], [1.0, 0.0])
    assert np.array_equal(res.estimates[2], [0.0, 1.0])
    assert np.allclose(res.estimates[1], [0.5, 0.5])  # symmetric pull


def test_isolated_keeps_histogram():
    g = AttributedGraph(4, edges=[(0, 1)], labels={0: 0, 1: 0, 2: 1}, class_count=2)
    res = weighted_vote(g)
    assert np.allclose(res.estimates[3], [2 / 3, 1 / 3])


def test_damping_slows_but_agrees():
    g = AttributedGraph(3, edges=[(0, 2, 2.0), (1, 2, 1.0)],
                        labels={0: 0, 1: 1}, class_count=2)
    fast = weighted_vote(g)
    slow = weighted_vote(g, damping=0.6)
    assert slow.assignments == fast.assignments
    assert slow.iterations >= fast.iterations
    with pytest.raises(ValueError):
        weighted_vote(g, damping=1.0)


def test_degenerate_classes():
    g = AttributedGraph(2, labels={0: 0}, class_count=1)
    with pytest.raises(DegenerateTaskError):
        weighted_vote(g)


def test_tombstoned_graph():
    g = AttributedGraph(4, edges=[(0, 2, 2.0), (1, 2, 1.0), (2, 3)],
                        labels={0: 0, 1: 1}, class_count=2)
    g.delete_node(3)
    res = weighted_vote(g)
    assert res.assignments == {2: 0}
    assert res.estimates[3].tolist() == [0.0, 0.0]


def test_matches_reference():
    rng = random.Random(31)
    for _ in range(40):
        case, _ = cases.random_case(rng)
        res = weighted_vote(cases.to_graph(case))
        want_assign, want_P = oracles.neighbor_vote(case, case["labels"])
        assert np.abs(res.estimates - np.array(want_P)).max() < 1e-9
        assert res.assignments == want_assign


def test_respects_partition_mask():
    g = AttributedGraph(3, edges=[(0, 1), (1, 2)], labels={0: 0, 1: 0, 2: 1},
                        class_count=2)
    part = NodePartition.from_graph(g).mask({1})
    res = weighted_vote(g, part)
    assert 1 in res.assignments
    assert np.allclose(res.estimates[1], [0.5, 0.5])
