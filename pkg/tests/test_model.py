import itertools
import math

import numpy as np
import pytest

from ecocip import model as md
from ecocip.codebook import Codebook, generate_exhaustive
from ecocip.conflict import CliqueCover, build_graph, classify_pairs, edge_clique_cover
from ecocip.errors import PreconditionError, SizeLimitError
from ecocip.solve import solve_highs

from helpers import enumerate_max_min

# three columns at pairwise distance 2: with rho=3 the conflict graph is a triangle
TRIANGLE_CODE = Codebook(np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]))


def stats(model):
    return md.model_stats(model)


class TestIp1:
    def test_k3_by_hand(self):
        m = md.build_ip1(generate_exhaustive(3), 3, 2)
        s = stats(m)
        assert s.n_binary_vars == 6 and s.n_continuous_vars == 1
        assert [n for n in m.var_names if n.startswith("y_")] == ["y_1_2", "y_1_3", "y_2_3"]
        assert s.breakdown == {"budget": 1, "column-separation": 6, "and-linearization": 9, "objective-link": 3}
        assert s.n_constraints == 19

    def test_k10_accounting(self, exhaustive10):
        s = stats(md.build_ip1(exhaustive10, 20, 3))
        assert s.n_binary_vars == 511 + math.comb(511, 2) == 130816
        assert s.n_constraints == 5 * 130305 + 45 + 1 == 651571
        assert sum(s.breakdown.values()) == s.n_constraints

    def test_guard(self):
        with pytest.raises(SizeLimitError):
            md.build_ip1(generate_exhaustive(12), 20, 4)

    def test_separation_forces_y_zero(self):
        M = generate_exhaustive(4)
        m = md.build_ip1(M, 7, 2)
        idx = m.var_index()
        v = np.zeros(m.n_vars)
        # columns 1 and 2 are at distance 1: selecting both is infeasible
        v[idx["x_1"]] = v[idx["x_2"]] = v[idx["y_1_2"]] = 1
        assert not m.is_feasible(v)
        v[idx["y_1_2"]] = 0
        assert not m.is_feasible(v)
        v[idx["x_2"]] = 0
        assert m.is_feasible(v)


class TestIp2Ip3:
    def test_k10_pairwise_count(self, exhaustive10):
        s = stats(md.build_ip2(exhaustive10, 20, 3))
        assert s.breakdown == {"budget": 1, "pairwise-conflict": 11475, "objective-link": 45}
        assert s.n_binary_vars == 511 and s.n_continuous_vars == 1

    def test_no_conflicts(self):
        s = stats(md.build_ip2(generate_exhaustive(5), 10, 1))
        assert {f for f, n in s.breakdown.items() if n} == {"budget", "objective-link"}

    def test_triangle_collapses(self):
        ip2 = md.build_ip2(TRIANGLE_CODE, 2, 3)
        ip3 = md.build_ip3(TRIANGLE_CODE, 2, 3, CliqueCover([(0, 1, 2)]))
        assert stats(ip2).breakdown["pairwise-conflict"] == 3
        assert stats(ip3).breakdown["clique"] == 1

    def test_invalid_cover(self):
        with pytest.raises(PreconditionError):
            md.build_ip3(TRIANGLE_CODE, 2, 3, CliqueCover([(0, 1)]))

    def test_k10_cover(self, exhaustive10, cover10):
        s = stats(md.build_ip3(exhaustive10, 20, 3, cover10))
        assert s.breakdown["clique"] == len(cover10)

    @pytest.mark.parametrize("k", [4, 5])
    def test_feasible_sets_agree(self, k):
        M = generate_exhaustive(k)
        for rho, L in [(2, 4), (2, 7), (3, 5)]:
            cover = edge_clique_cover(build_graph(classify_pairs(M, rho)))
            ip2, ip3 = md.build_ip2(M, L, rho), md.build_ip3(M, L, rho, cover)
            for size in range(0, min(L, 4) + 1):
                for sel in itertools.combinations(range(M.L), size):
                    x = np.zeros(M.L)
                    x[list(sel)] = 1
                    v2 = np.append(x, 0.0)
                    assert ip2.is_feasible(v2) == ip3.is_feasible(v2)

    @pytest.mark.parametrize("k,L,rho", [(4, 3, 1), (4, 5, 2), (5, 6, 2), (5, 9, 2)])
    def test_enumerated_optima_agree(self, k, L, rho):
        M = generate_exhaustive(k)
        cover = edge_clique_cover(build_graph(classify_pairs(M, rho)))
        values = {enumerate_max_min(f)[0] for f in (md.build_ip1(M, L, rho), md.build_ip2(M, L, rho),
                                                    md.build_ip3(M, L, rho, cover))}
        assert len(values) == 1


class TestLinkCoefficients:
    @pytest.mark.parametrize("k", range(2, 9))
    def test_binary_and_sum(self, k):
        C, pairs = md.link_coefficients(generate_exhaustive(k))
        assert set(np.unique(C)) <= {0, 1}
        assert len(pairs) == math.comb(k, 2)
        assert np.all(C.sum(axis=1) == 2 ** (k - 2))


class TestDistribution:
    def test_zero_targets(self):
        M = generate_exhaustive(4)
        m = md.set_objective_distribution(md.build_ip2(M, 5, 1), md.TargetDistances.constant(4, 0))
        sol = solve_highs(m)
        assert sol.objective_value == 0 and sol.selected_columns == []

    def test_realized_targets(self):
        M = generate_exhaustive(5)
        chosen = [0, 5, 9, 12]
        D = np.array([[np.sum(M.entries[p, chosen] != M.entries[q, chosen]) for q in range(5)] for p in range(5)])
        m = md.set_objective_distribution(md.build_ip2(M, 4, 1), md.TargetDistances(D))
        assert solve_highs(m).objective_value == 0

    def test_matches_subset_oracle(self):
        M = generate_exhaustive(5)
        E = M.entries
        best = math.inf
        for size in range(0, 11):
            for sel in itertools.combinations(range(15), size):
                s = list(sel)
                dev = sum(abs(int(np.sum(E[p, s] != E[q, s])) - 8) for p, q in itertools.combinations(range(5), 2))
                best = min(best, dev)
        m = md.set_objective_distribution(md.build_ip2(M, 10, 1), md.TargetDistances.constant(5, 8))
        assert solve_highs(m).objective_value == best
        s = stats(m)
        assert s.breakdown["abs-deviation"] == 20 and s.n_continuous_vars == 10

    def test_dimension_mismatch(self):
        m = md.build_ip2(generate_exhaustive(4), 3, 1)
        with pytest.raises(PreconditionError):
            md.set_objective_distribution(m, md.TargetDistances.constant(5, 1))

    def test_target_validation(self):
        with pytest.raises(ValueError):
            md.TargetDistances(np.array([[0, 1], [2, 0]]))
        with pytest.raises(ValueError):
            md.TargetDistances(np.array([[0, -1], [-1, 0]]))


class TestLp:
    def test_k3_text(self):
        text = md.to_lp(md.build_ip2(generate_exhaustive(3), 3, 2))
        assert "x_1 + x_2 + x_3 <= 3" in text
        binaries = text.split("Binaries")[1].split("End")[0].split()
        assert binaries == ["x_1", "x_2", "x_3"]
        assert text.rstrip().endswith("End")

    def _same(self, a, b):
        assert md.model_stats(a).to_dict() == md.model_stats(b).to_dict()
        assert a.var_names == b.var_names
        assert a.objective_sense == b.objective_sense
        np.testing.assert_array_equal(a.objective, b.objective)
        # the reader may regroup blocks; compare rows per (family, sense)
        def rows(m):
            out = {}
            for blk in m.blocks:
                A = blk.A.tocsr()
                for r, name in enumerate(blk.names):
                    row = A.getrow(r)
                    out[name] = (blk.family, blk.sense, float(blk.rhs[r]),
                                 tuple(row.indices.tolist()), tuple(row.data.tolist()))
            return out
        ra, rb = rows(a), rows(b)
        assert ra.keys() == rb.keys()
        for name in ra:
            fa, sa, ha, ia, da = ra[name]
            fb, sb, hb, ib, db = rb[name]
            assert (fa, sa, ha) == (fb, sb, hb)
            assert dict(zip(ia, da)) == dict(zip(ib, db))

    def test_round_trips(self, tmp_path):
        M = generate_exhaustive(5)
        cover = edge_clique_cover(build_graph(classify_pairs(M, 2)))
        models = [md.build_ip1(M, 6, 2, 3), md.build_ip2(M, 6, 2), md.build_ip3(M, 6, 2, cover),
                  md.set_objective_distribution(md.build_ip2(M, 6, 2), md.TargetDistances.constant(5, 3.5))]
        for m in models:
            path = tmp_path / "m.lp"
            md.export_lp(m, path)
            back = md.read_lp(path)
            self._same(m, back)
            assert back.provenance == m.provenance

    def test_k10_ip3_round_trip(self, exhaustive10, cover10):
        m = md.build_ip3(exhaustive10, 20, 3, cover10)
        self._same(m, md.from_lp(md.to_lp(m)))

    def test_parse_error_has_line(self):
        with pytest.raises(Exception, match="line"):
            md.from_lp("Maximize\n obj: t\nSubject To\n c1: x_1 + + <= 2\nEnd\n")
