import json

import numpy as np
import pytest

from polyseq import (
    AttentionContext,
    DisconnectedError,
    auto_repeat_for_lga,
    build_context,
    fold_equivalent,
    parse,
    periodic_context,
    star_link,
)
from polyseq.context import EDGE_CODES, edge_code
from polyseq.graphs import Atom, Bond, MolGraph


def ctx_of(psmiles, d_thres=3, linked=True):
    g = parse(psmiles)
    if linked:
        g = star_link(g).as_graph()
    return build_context(g, d_thres)


class TestInvariants:
    @pytest.mark.parametrize("s", ["*CONO*", "*CC(C)OC(=O)*",
                                   "*c1ccc(*)cc1", "*CC(c1ccccc1)O*"])
    def test_distance_matrix(self, s):
        ctx = ctx_of(s)
        assert np.array_equal(ctx.dist, ctx.dist.T)
        assert np.all(np.diag(ctx.dist) == 0)
        # triangle inequality over all triples
        d = ctx.dist
        assert np.all(d[:, :, None] + d[None, :, :] >= d[:, None, :])

    @pytest.mark.parametrize("s", ["*CONO*", "*CC(c1ccccc1)O*"])
    def test_path_counts_sum_to_distance(self, s):
        ctx = ctx_of(s)
        assert np.array_equal(ctx.path_counts.sum(axis=2), ctx.dist)

    def test_path_codes_match_counts(self):
        ctx = ctx_of("*CC(=O)Oc1ccc(C)cc1*", d_thres=6)
        for i in range(ctx.n):
            for j in range(ctx.n):
                codes = ctx.path_codes(i, j)
                assert len(codes) == ctx.dist[i, j]
                for c, cnt in enumerate(ctx.path_counts[i, j]):
                    assert codes.count(c) == cnt

    def test_mask_diagonal_always_on(self):
        ctx = ctx_of("*CONO*", d_thres=1)
        assert np.array_equal(ctx.local_mask, np.eye(4, dtype=bool))

    def test_strict_threshold(self):
        # 4-cycle at d_thres=2 keeps self plus the two hop-1 neighbors
        ctx = ctx_of("*CONO*", d_thres=2)
        assert np.all(ctx.local_mask.sum(axis=1) == 3)
        assert not ctx.local_mask[0, 2]

    def test_edge_codes_recorded(self):
        star = star_link(parse("*CC=CC*"))
        ctx = build_context(star.as_graph(), 4)
        assert ctx.path_codes(1, 2) == (edge_code("double"),)
        # 0-3 goes through the link edge, recorded as a single bond
        assert ctx.path_codes(0, 3) == (edge_code("single"),)

    def test_deterministic_tie_break(self):
        g = star_link(parse("*CONO*")).as_graph()
        a = build_context(g, 3)
        b = build_context(g, 3)
        assert np.array_equal(a.parent, b.parent)
        # opposite corner of the 4-cycle: two equal paths, lowest-index
        # predecessor wins
        assert a.parent[0, 2] == 1

    def test_onehot_means(self):
        ctx = ctx_of("*CC=CC*", d_thres=5)
        means = ctx.path_onehot_means()
        sums = means.sum(axis=2)
        off = ~np.eye(ctx.n, dtype=bool)
        assert np.allclose(sums[off], 1.0)
        assert np.allclose(sums[~off], 0.0)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            build_context(parse("*CC*"), 0)
        with pytest.raises(DisconnectedError):
            build_context(MolGraph([Atom("C"), Atom("C")], []), 2)


class TestPeriodic:
    def test_k1_equals_plain(self):
        g = parse("*CC(C)O*")
        a = periodic_context(g, 1, 3)
        b = build_context(g, 3)
        assert np.array_equal(a.dist, b.dist)
        assert np.array_equal(a.path_counts, b.path_counts)

    def test_unroll_sizes(self):
        g = parse("*CONO*")
        ctx = periodic_context(g, 3, 3)
        assert ctx.n == 12
        assert ctx.dist[0, 11] == 11

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            periodic_context(parse("*CC*"), 0, 2)


class TestFolding:
    @pytest.mark.parametrize("s,dt", [("*CONO*", 2), ("*CC(C)OC(=O)*", 3),
                                      ("*CC*", 2), ("*C*", 2)])
    def test_positive(self, s, dt):
        m, _ = auto_repeat_for_lga(parse(s), dt)
        star = star_link(m)
        star_ctx = build_context(star.as_graph(), dt)
        k = 2 * 3 + 3
        un_ctx = periodic_context(star.monomer, k, dt)
        assert fold_equivalent(star_ctx, un_ctx, star.monomer.n, k // 2)

    def test_negative_without_auto_repeat(self):
        # boundary distance 2 is too short for d_thres=3: the cycle wraps
        g = parse("*CNO*")
        star = star_link(g)
        star_ctx = build_context(star.as_graph(), 3)
        un_ctx = periodic_context(g, 9, 3)
        assert not fold_equivalent(star_ctx, un_ctx, g.n, 4)


class TestSerialization:
    def test_to_json(self):
        ctx = ctx_of("*CONO*", d_thres=2)
        doc = json.loads(ctx.to_json())
        assert doc["n"] == 4 and doc["d_thres"] == 2
        assert doc["dist"][0] == [0, 1, 2, 1]
        assert doc["mask"][0] == "1101"
        assert len(EDGE_CODES) == 5
