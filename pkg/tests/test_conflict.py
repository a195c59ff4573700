import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecocip import conflict as cf
from ecocip.codebook import generate_exhaustive
from ecocip.errors import InvalidPartitionError, PreconditionError

from helpers import random_graph_edges

TRIANGLE = cf.ConflictGraph(3, np.array([[0, 1], [1, 2], [0, 2]]))
# the example graph with two different edge clique covers (nodes x1..x6 as 0..5)
TWO_COVERS = cf.ConflictGraph(6, np.array([[0, 1], [0, 2], [1, 2], [1, 3], [2, 3], [1, 5], [4, 5]]))


def popcount_infeasible(k, rho, upper=None):
    """Independent count: columns as bit masks over rows 2..k, distance = popcount(xor)."""
    n = 2 ** (k - 1) - 1
    codes = np.arange(n, dtype=np.int64)
    x = codes[:, None] ^ codes[None, :]
    d = np.zeros_like(x)
    for b in range(k - 1):
        d += (x >> b) & 1
    iu = np.triu_indices(n, 1)
    dd = d[iu]
    bad = dd < rho
    if upper is not None:
        bad |= dd > upper
    return int(bad.sum())


class TestClassify:
    @pytest.mark.parametrize("k,rho,expected", [(10, 3, 11475), (11, 3, 28105), (12, 4, 236313)])
    def test_table_counts(self, k, rho, expected):
        pc = cf.classify_pairs(generate_exhaustive(k), rho)
        assert pc.n_infeasible == expected
        assert pc.n_pairs_total == (2 ** (k - 1) - 1) * (2 ** (k - 1) - 2) // 2
        assert pc.n_feasible + pc.n_infeasible == pc.n_pairs_total

    @pytest.mark.parametrize("k", range(4, 15))
    def test_matches_closed_form(self, k):
        M = generate_exhaustive(k)
        for rho in range(1, k // 2 + 1):
            got = cf.classify_pairs(M, rho).n_infeasible
            assert got == cf.infeasible_count_closed_form(k, rho)
            if k <= 12:
                assert got == popcount_infeasible(k, rho)

    def test_upper_bound_active(self):
        M = generate_exhaustive(7)
        for rho, upper in [(2, 4), (1, 3), (3, 3)]:
            assert cf.classify_pairs(M, rho, upper).n_infeasible == popcount_infeasible(7, rho, upper)

    def test_pairs_sorted_and_violating(self):
        M = generate_exhaustive(6)
        pc = cf.classify_pairs(M, 2, 4)
        pairs = pc.infeasible
        assert np.all(pairs[:, 0] < pairs[:, 1])
        assert pairs.tolist() == sorted(pairs.tolist())
        for i, j in pairs.tolist():
            d = int(np.sum(M.entries[:, i] != M.entries[:, j]))
            assert d < 2 or d > 4

    def test_preconditions(self):
        M = generate_exhaustive(5)
        with pytest.raises(PreconditionError):
            cf.classify_pairs(M, 0)
        with pytest.raises(PreconditionError):
            cf.classify_pairs(M, 3, 2)


class TestClosedForm:
    def test_examples(self):
        assert cf.infeasible_count_closed_form(10, 3) == 11475
        assert cf.infeasible_count_closed_form(14, 4) == 1543815
        assert all(cf.infeasible_count_closed_form(k, 1) == 0 for k in range(3, 20))

    def test_guards(self):
        with pytest.raises(PreconditionError):
            cf.infeasible_count_closed_form(2, 1)
        with pytest.raises(PreconditionError):
            cf.infeasible_count_closed_form(8, 8)
        with pytest.raises(Exception):
            cf.infeasible_count_closed_form(41, 3)


class TestGraph:
    def test_triangle(self):
        pc = cf.PairClassification(3, 2, None, 3, np.array([[0, 1], [1, 2], [0, 2]]))
        G = cf.build_graph(pc)
        assert G.n_nodes == 3 and G.n_edges == 3
        assert G.neighbors(0) == {1, 2}

    def test_edgeless(self):
        G = cf.build_graph(cf.classify_pairs(generate_exhaustive(5), 1))
        assert G.n_edges == 0 and G.n_nodes == 15
        assert np.all(G.degree() == 0)

    def test_k10(self, graph10):
        assert graph10.n_nodes == 511 and graph10.n_edges == 11475

    def test_no_self_loops(self):
        with pytest.raises(Exception):
            cf.ConflictGraph(3, np.array([[1, 1]]))


class TestCover:
    def test_triangle(self):
        cover = cf.edge_clique_cover(TRIANGLE)
        assert cover.cliques == [(0, 1, 2)]

    def test_two_cover_graph(self):
        cover = cf.edge_clique_cover(TWO_COVERS)
        assert cf.validate_cover(TWO_COVERS, cover) == []
        assert len(cover) in (3, 4)
        assert (4, 5) in cover.cliques and (1, 5) in cover.cliques

    def test_k10_quality(self, graph10, cover10):
        assert cf.validate_cover(graph10, cover10) == []
        assert len(cover10) <= 1400

    def test_empty_graph(self):
        assert len(cf.edge_clique_cover(cf.ConflictGraph(4, np.zeros((0, 2), int)))) == 0

    def test_deterministic(self, graph10, cover10):
        assert cf.edge_clique_cover(graph10, seed=0).cliques == cover10.cliques

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 40), st.floats(0.0, 0.6), st.integers(0, 10**6))
    def test_random_graphs_valid(self, n, p, seed):
        G = cf.ConflictGraph(n, random_graph_edges(np.random.default_rng(seed), n, p))
        cover = cf.edge_clique_cover(G, seed)
        assert cf.validate_cover(G, cover) == []
        assert len(cover) <= max(G.n_edges, 0)


class TestValidateCover:
    def test_valid(self):
        assert cf.validate_cover(TRIANGLE, cf.CliqueCover([(0, 1, 2)])) == []

    def test_uncovered(self):
        v = cf.validate_cover(TRIANGLE, cf.CliqueCover([(0, 1)]))
        assert sorted(x.indices for x in v if x.kind == "uncovered-edge") == [(0, 2), (1, 2)]

    def test_contained(self):
        v = cf.validate_cover(TRIANGLE, cf.CliqueCover([(0, 1, 2), (0, 1)]))
        assert [x.kind for x in v] == ["contained"]

    def test_not_a_clique(self):
        G = cf.ConflictGraph(3, np.array([[0, 1], [1, 2]]))
        kinds = {x.kind for x in cf.validate_cover(G, cf.CliqueCover([(0, 1, 2)]))}
        assert "not-a-clique" in kinds

    def test_too_small(self):
        kinds = {x.kind for x in cf.validate_cover(TRIANGLE, cf.CliqueCover([(0, 1, 2), (1,)]))}
        assert "too-small" in kinds


class TestCliqueCollapse:
    @pytest.mark.parametrize("n", range(2, 7))
    def test_pairwise_equals_clique_constraint(self, n):
        for x in itertools.product((0, 1), repeat=n):
            pairwise = all(x[i] + x[j] <= 1 for i, j in itertools.combinations(range(n), 2))
            assert pairwise == (sum(x) <= 1)


class TestPartition:
    def test_single_part(self):
        assert cf.partition_edges(TRIANGLE, 1)[0] is TRIANGLE

    def test_triangle_three_parts(self):
        parts = cf.partition_edges(TRIANGLE, 3, seed=4)
        assert sorted(p.n_edges for p in parts) == [1, 1, 1]
        edges = sorted(tuple(e) for p in parts for e in p.edges.tolist())
        assert edges == sorted(tuple(e) for e in TRIANGLE.edges.tolist())

    def test_k10_two_parts(self, graph10):
        parts = cf.partition_edges(graph10, 2, seed=1)
        assert sum(p.n_edges for p in parts) == 11475
        codes = [set(p.edge_codes().tolist()) for p in parts]
        assert not codes[0] & codes[1]
        assert codes[0] | codes[1] == set(graph10.edge_codes().tolist())

    def test_deterministic(self, graph10):
        a = cf.partition_edges(graph10, 3, seed=9)
        b = cf.partition_edges(graph10, 3, seed=9)
        assert all(np.array_equal(x.edges, y.edges) for x, y in zip(a, b))

    def test_bad_m(self):
        with pytest.raises(PreconditionError):
            cf.partition_edges(TRIANGLE, 4)
        with pytest.raises(PreconditionError):
            cf.partition_edges(TRIANGLE, 0)


class TestMerge:
    def test_identity(self):
        cover = cf.edge_clique_cover(TWO_COVERS)
        assert sorted(cf.merge_covers([cover], TWO_COVERS).cliques) == sorted(cover.cliques)

    def test_two_subgraphs(self):
        parts = [cf.ConflictGraph(6, TWO_COVERS.edges[:5]), cf.ConflictGraph(6, TWO_COVERS.edges[5:])]
        merged = cf.merge_covers([cf.edge_clique_cover(p) for p in parts], TWO_COVERS)
        assert cf.validate_cover(TWO_COVERS, merged) == []

    def test_k10_four_parts(self, graph10):
        merged = cf.cover_in_parts(graph10, 4, seed=2)
        assert cf.validate_cover(graph10, merged) == []

    def test_threads_match_sequential(self, graph10):
        a = cf.cover_in_parts(graph10, 3, seed=5, workers=1)
        b = cf.cover_in_parts(graph10, 3, seed=5, workers=3)
        assert a.cliques == b.cliques

    def test_incomplete_parts_rejected(self):
        part = cf.edge_clique_cover(cf.ConflictGraph(6, TWO_COVERS.edges[:5]))
        with pytest.raises(InvalidPartitionError):
            cf.merge_covers([part], TWO_COVERS)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 120), st.floats(0.01, 0.2), st.integers(1, 8), st.integers(0, 10**6))
    def test_partition_merge_random(self, n, p, m, seed):
        G = cf.ConflictGraph(n, random_graph_edges(np.random.default_rng(seed), n, p))
        m = min(m, max(G.n_edges, 1))
        if G.n_edges == 0:
            return
        merged = cf.cover_in_parts(G, m, seed)
        assert cf.validate_cover(G, merged) == []


class TestIO:
    def test_edge_list_round_trip(self, tmp_path):
        path = tmp_path / "g.txt"
        cf.write_edge_list(TWO_COVERS, path)
        text = path.read_text().splitlines()
        assert text[1] == "1 2"
        back = cf.read_edge_list(path)
        assert back.n_nodes == 6 and np.array_equal(back.edges, TWO_COVERS.edges)

    def test_cover_json_round_trip(self):
        cover = cf.edge_clique_cover(TWO_COVERS, seed=3)
        back = cf.cover_from_json(cf.cover_to_json(cover))
        assert back.cliques == cover.cliques
        assert min(min(c) for c in json.loads(cf.cover_to_json(cover))["cliques"]) >= 1

    def test_bad_edge_list(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 2\n3\n")
        with pytest.raises(Exception, match="line 2"):
            cf.read_edge_list(path)
