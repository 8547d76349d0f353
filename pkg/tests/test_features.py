import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relsim import AttributedGraph, FeatureMatrix, topology_features
from relsim.features import (
    Column,
    FeatureError,
    TOPOLOGY_COLUMNS,
    append_meta_features,
    apply_norm,
    core_numbers,
    pagerank,
    relational_attr_features,
    relational_class_features,
)

import cases
import oracles


def complete_graph(n):
    return AttributedGraph(n, edges=[(i, j) for i in range(n) for j in range(i + 1, n)])


def topo_dict(g):
    F = topology_features(g)
    return {name: F.values[:, i] for i, name in enumerate(TOPOLOGY_COLUMNS)}


class TestTopologyHandCases:
    def test_k4(self):
        cols = topo_dict(complete_graph(4))
        assert np.all(cols["degree"] == 3)
        assert np.all(cols["triangles"] == 3)
        assert np.all(cols["clustering"] == 1.0)
        assert np.all(cols["kcore"] == 3)
        assert np.allclose(cols["pagerank"], 0.25)
        assert np.all(cols["star3"] == 1)     # C(3,3)
        assert np.all(cols["clique4"] == 1)
        assert np.all(cols["cycle4"] == 3)    # three distinct 4-cycles in K4

    def test_star_with_five_leaves(self):
        g = AttributedGraph(6, edges=[(0, i) for i in range(1, 6)])
        cols = topo_dict(g)
        assert cols["degree"][0] == 5 and np.all(cols["degree"][1:] == 1)
        assert np.all(cols["triangles"] == 0)
        assert np.all(cols["clustering"] == 0.0)
        assert np.all(cols["kcore"] == 1)
        assert cols["star3"][0] == 10         # C(5,3)
        assert np.all(cols["star3"][1:] == 0)
        assert np.all(cols["clique4"] == 0)
        assert np.all(cols["cycle4"] == 0)

    def test_six_cycle(self):
        g = AttributedGraph(6, edges=[(i, (i + 1) % 6) for i in range(6)])
        cols = topo_dict(g)
        assert np.all(cols["degree"] == 2)
        assert np.all(cols["triangles"] == 0)
        assert np.all(cols["kcore"] == 2)
        assert np.all(cols["cycle4"] == 0)
        assert np.allclose(cols["pagerank"], 1 / 6)

    def test_four_cycle(self):
        g = AttributedGraph(4, edges=[(0, 1), (1, 2), (2, 3), (3, 0)])
        cols = topo_dict(g)
        # exactly one chordless square through every node
        assert np.all(cols["cycle4"] == 1)
        assert np.all(cols["clique4"] == 0)

    def test_path_pagerank_rational_fixpoint(self):
        g = AttributedGraph(3, edges=[(0, 1), (1, 2)])
        pr = topo_dict(g)["pagerank"]
        # solving p = 0.15/3 + 0.85 * vote for the 1-2-1 degree path
        assert np.allclose(pr, [19 / 74, 36 / 74, 19 / 74], atol=1e-7)

    def test_empty_and_edgeless(self):
        empty = topology_features(AttributedGraph(0))
        assert empty.values.shape == (0, 8)
        lone = topology_features(AttributedGraph(3))
        assert np.all(lone.values[:, :4] == 0)
        assert np.allclose(lone.values[:, 4], 1 / 3)  # uniform pagerank

    def test_requires_compact_graph(self):
        g = complete_graph(4)
        g.delete_node(1)
        with pytest.raises(FeatureError):
            topology_features(g)


class TestTopologyAgainstEnumeration:
    def test_random_graphs_integer_exact(self):
        rng = random.Random(17)
        for _ in range(40):
            case = cases.random_topology_case(rng, max_n=12)
            g = cases.to_graph(case)
            got = topology_features(g).values
            want = np.array(oracles.topology_columns(case)).reshape(case["n"], 8)
            # integer-valued columns must match exactly
            for j in (0, 1, 3, 5, 6, 7):
                assert np.array_equal(got[:, j], want[:, j]), TOPOLOGY_COLUMNS[j]
            assert np.allclose(got[:, 2], want[:, 2], atol=1e-12)
            assert np.allclose(got[:, 4], want[:, 4], atol=1e-9)

    def test_against_networkx(self):
        nx = pytest.importorskip("networkx")
        rng = random.Random(23)
        for _ in range(10):
            case = cases.random_topology_case(rng, max_n=14)
            g = cases.to_graph(case)
            G = nx.Graph()
            G.add_nodes_from(range(case["n"]))
            G.add_edges_from((u, v) for u, v, _ in case["edges"])
            got = topology_features(g)
            tri = nx.triangles(G)
            assert [tri[v] for v in range(case["n"])] == list(got.values[:, 1])
            assert list(core_numbers(g)) == [nx.core_number(G)[v] for v in range(case["n"])]
            if case["n"] > 0:
                pr = nx.pagerank(G, alpha=0.85, tol=1e-10, max_iter=1000)
                assert np.allclose(pagerank(g), [pr[v] for v in range(case["n"])],
                                   atol=1e-6)


class TestNormalization:
    def test_minmax_maps_to_unit_interval(self):
        X = np.array([[1.0, 5.0], [3.0, 5.0], [2.0, 5.0]])
        out = apply_norm(X, "minmax")
        assert np.allclose(out[:, 0], [0.0, 1.0, 0.5])
        assert np.all(out[:, 1] == 0.0)  # constant column collapses to zero

    def test_minmax_idempotent(self):
        X = np.random.default_rng(2).normal(size=(6, 4))
        once = apply_norm(X, "minmax")
        assert np.allclose(apply_norm(once, "minmax"), once)

    def test_l1_rows(self):
        X = np.array([[2.0, 2.0], [0.0, 0.0], [1.0, 3.0]])
        out = apply_norm(X, "l1-row")
        assert np.allclose(out[0], [0.5, 0.5])
        assert np.all(out[1] == 0.0)
        assert np.allclose(out[2].sum(), 1.0)

    @given(st.integers(0, 20))
    def test_minmax_range_property(self, seed):
        X = np.random.default_rng(seed).normal(size=(5, 3)) * 10
        out = apply_norm(X, "minmax")
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_append_reapplies_normalization(self):
        F = FeatureMatrix(np.array([[0.0], [2.0]]), [Column("a", "raw")]).normalized("minmax")
        G = F.append(np.array([[5.0], [9.0]]), [Column("b", "topology")])
        assert G.norm == "minmax"
        assert np.allclose(G.values, [[0.0, 0.0], [1.0, 1.0]])

    def test_descriptor_alignment_enforced(self):
        with pytest.raises(FeatureError):
            FeatureMatrix(np.zeros((2, 2)), [Column("a", "raw")])
        with pytest.raises(FeatureError):
            Column("x", "mystery")
        F = FeatureMatrix(np.zeros((2, 1)), [Column("a", "raw")])
        with pytest.raises(FeatureError):
            F.append(np.zeros((3, 1)), [Column("b", "raw")])

    def test_family_mask(self):
        F = FeatureMatrix(np.zeros((1, 2)), [Column("a", "raw"), Column("b", "meta")])
        assert list(F.family_mask("meta")) == [False, True]


class TestRelationalFeatures:
    def g(self):
        # 0 labeled(0) - 1 unlabeled - 2 labeled(1); 3 isolated
        return AttributedGraph(4, edges=[(0, 1), (1, 2)],
                               features=np.array([[0.0], [1.0], [2.0], [3.0]]),
                               labels={0: 0, 2: 1}, class_count=2)

    def test_class_block_uses_hard_rows_for_labeled(self):
        g = self.g()
        P = np.full((4, 2), 0.5)
        vals, cols = relational_class_features(g, P, 1, g.labels)
        # node 1 sees one-hot rows of 0 and 2, averaged
        assert np.allclose(vals[1, :2], [0.5, 0.5])
        assert np.allclose(vals[1, 2:], [1.0, 1.0])  # one labeled neighbor per class
        # node 0 sees only node 1's soft row
        assert np.allclose(vals[0, :2], [0.5, 0.5])
        assert np.allclose(vals[0, 2:], [0.0, 0.0])
        assert np.all(vals[3] == 0.0)  # isolated
        assert len(cols) == 4

    def test_class_block_two_hops(self):
        g = self.g()
        P = np.full((4, 2), 0.5)
        P[1] = [0.9, 0.1]
        vals, _ = relational_class_features(g, P, 2, g.labels)
        # node 0 now also sees node 2's one-hot
        assert np.allclose(vals[0, :2], [(0.9 + 0.0) / 2, (0.1 + 1.0) / 2])
        assert np.allclose(vals[0, 2:], [0.0, 1.0])

    def test_attr_block_defaults_to_graph_features(self):
        g = self.g()
        vals, cols = relational_attr_features(g, 1)
        assert np.allclose(vals[:, 0], [1.0, 1.0, 1.0, 0.0])
        assert cols[0].family == "relational-attr"

    def test_attr_block_aggregations(self):
        g = self.g()
        base = g.features
        for how, want in (("sum", 2.0), ("max", 2.0), ("mean", 1.0)):
            vals, _ = relational_attr_features(g, 1, base, aggregation=how)
            assert vals[1, 0] == pytest.approx(want)

    def test_row_alignment_checked(self):
        g = self.g()
        with pytest.raises(FeatureError):
            relational_class_features(g, np.zeros((3, 2)), 1)
        with pytest.raises(FeatureError):
            relational_attr_features(g, 1, np.zeros((2, 2)))


class TestMetaFeatures:
    def test_append_selected_blocks(self):
        F = FeatureMatrix(np.zeros((3, 1)), [Column("a", "raw")])
        out = append_meta_features(
            F, ("estimates", "certainty"),
            estimates=np.full((3, 2), 0.5),
            certainty=np.zeros(3),
        )
        assert out.width == 4
        assert [c.family for c in out.columns[1:]] == ["meta"] * 3

    def test_missing_block_rejected(self):
        F = FeatureMatrix(np.zeros((3, 1)), [Column("a", "raw")])
        with pytest.raises(FeatureError):
            append_meta_features(F, ("estimates",))
        with pytest.raises(FeatureError):
            append_meta_features(F, ("destiny",), estimates=np.zeros((3, 2)))

    def test_empty_selection_is_identity(self):
        F = FeatureMatrix(np.zeros((3, 1)), [Column("a", "raw")])
        assert append_meta_features(F, ()) is F
