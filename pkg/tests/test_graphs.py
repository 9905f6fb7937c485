import json

import numpy as np
import pytest

from polyseq import (
    Atom,
    Bond,
    DisconnectedError,
    MolGraph,
    MonomerGraph,
    apply_backbone_embedding,
    auto_repeat_for_lga,
    detect_backbone,
    featurize,
    parse,
    repeat_monomer,
    ring_stats,
    star_link,
    strategy_transform,
)
from polyseq.graphs import dump_star_graph, feature_dim, relabel


def chain(elements, head=None, tail=None):
    atoms = [Atom(e) for e in elements]
    bonds = [Bond(i, i + 1) for i in range(len(elements) - 1)]
    return MonomerGraph(atoms, bonds, head or 0,
                        len(elements) - 1 if tail is None else tail)


class TestRepeat:
    def test_sizes_and_junctions(self):
        g = parse("*CONO*")
        r = repeat_monomer(g, 3)
        assert r.n == 12
        assert len(r.bonds) == 3 * len(g.bonds) + 2
        assert r.head == 0 and r.tail == 11
        assert r.bond_order(3, 4) == "single"
        assert r.bond_order(7, 8) == "single"

    def test_k1_identity(self):
        g = parse("*CC(C)O*")
        r = repeat_monomer(g, 1)
        assert r.n == g.n and len(r.bonds) == len(g.bonds)

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            repeat_monomer(parse("*CC*"), 0)


class TestStarLink:
    def test_simple_cycle(self):
        star = star_link(parse("*CONO*"))
        assert star.auto_repeat_k == 1
        assert star.link.pair() == (0, 3)
        g = star.as_graph()
        assert all(g.degree(i) == 2 for i in range(g.n))

    def test_coincident_boundaries_repeat(self):
        # single-atom unit: boundaries coincide, then stay adjacent at k=2
        star = star_link(parse("*C*"))
        assert star.auto_repeat_k == 3
        assert star.monomer.n == 3

    def test_adjacent_boundaries_repeat(self):
        star = star_link(parse("*CC*"))
        assert star.auto_repeat_k == 2
        assert star.monomer.n == 4

    def test_link_never_merges_edges(self):
        for s in ("*C*", "*CC*", "*CCC*", "*CC(C)O*"):
            star = star_link(parse(s))
            m = star.monomer
            pairs = [b.pair() for b in m.bonds] + [star.link.pair()]
            assert len(set(pairs)) == len(pairs)


class TestBackbone:
    def test_path_only(self):
        g = parse("*CC(C)O*")
        assert detect_backbone(g) == [True, True, False, True]

    def test_ring_on_path_absorbed(self):
        # spiro ring shares its host atom with the boundary path
        g = parse("*CC1(CCC1)C*")
        mask = detect_backbone(g)
        assert all(mask)

    def test_pendant_ring_excluded(self):
        g = parse("*CC(c1ccccc1)C*")
        mask = detect_backbone(g)
        assert sum(mask) == 3
        assert not any(mask[i] for i, a in enumerate(g.atoms) if a.aromatic)

    def test_relabeling_covariance(self):
        g = parse("*CC(C)OC(=O)*")
        perm = [3, 1, 5, 0, 2, 4]
        h = relabel(g, perm)
        mask_g = detect_backbone(g)
        mask_h = detect_backbone(h)
        for new, old in enumerate(perm):
            assert mask_h[new] == mask_g[old]


class TestAutoRepeat:
    def test_distance_three(self):
        g = chain("CCCC")  # boundary distance 3
        m, k = auto_repeat_for_lga(g, 3)
        assert k == 2
        assert m.boundary_distance() == 7

    def test_already_satisfied(self):
        g = chain("CCCCCCCCCCC")  # boundary distance 10
        _, k = auto_repeat_for_lga(g, 3)
        assert k == 1

    def test_single_atom(self):
        g = parse("*C*")  # boundary distance 0
        m, k = auto_repeat_for_lga(g, 2)
        assert k == 5
        assert m.boundary_distance() == 4

    @pytest.mark.parametrize("s,dt", [("*CC*", 2), ("*CCC*", 3),
                                      ("*CC(C)O*", 3)])
    def test_minimality(self, s, dt):
        g = parse(s)
        m, k = auto_repeat_for_lga(g, dt)
        assert m.boundary_distance() > 2 * dt - 1
        if k > 1:
            prev = repeat_monomer(g, k - 1)
            assert prev.boundary_distance() <= 2 * dt - 1

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            auto_repeat_for_lga(parse("*CC*"), 0)


class TestFeatures:
    def test_shape(self):
        g = star_link(parse("*CC(C)O*")).as_graph()
        x = featurize(g)
        assert x.shape == (feature_dim(), 4)

    def test_one_hot_blocks(self):
        g = parse("*c1ccc(*)cc1")
        x = featurize(g)
        n_elem = 13
        assert np.allclose(x[:n_elem].sum(axis=0), 1.0)
        assert np.allclose(x[n_elem:n_elem + 7].sum(axis=0), 1.0)

    def test_ring_flag(self):
        g = parse("*CC(c1ccccc1)C*")
        x = featurize(g)
        ring_row = 13 + 7 + 5 + 1
        assert x[ring_row].sum() == 6

    def test_implicit_hydrogens(self):
        g = parse("*CC(=O)O*")
        x = featurize(g)
        h_block = x[13 + 7 + 5 + 2:]
        # head C has 3 implicit H before linking, carbonyl C and its O have
        # none, hydroxyl O has 1
        assert h_block[3, 0] == 1.0
        assert h_block[0, 1] == 1.0
        assert h_block[0, 2] == 1.0
        assert h_block[1, 3] == 1.0


class TestBackboneEmbedding:
    def test_masked_columns_only(self):
        x = np.zeros((3, 4))
        b = np.array([1.0, 2.0, 3.0])
        out = apply_backbone_embedding(x, [True, False, True, False], b)
        assert np.allclose(out[:, 0], b) and np.allclose(out[:, 2], b)
        assert np.allclose(out[:, 1], 0) and np.allclose(out[:, 3], 0)

    def test_all_true_shifts_everything(self):
        x = np.ones((2, 3))
        out = apply_backbone_embedding(x, [True] * 3, np.array([1.0, -1.0]))
        assert np.allclose(out, x + np.array([[1.0], [-1.0]]))

    def test_dim_checks(self):
        x = np.zeros((3, 2))
        with pytest.raises(ValueError):
            apply_backbone_embedding(x, [True, False], np.zeros(4))
        with pytest.raises(ValueError):
            apply_backbone_embedding(x, [True], np.zeros(3))


class TestStrategies:
    def test_keep_adds_stars(self):
        g = parse("*CC*")
        out = strategy_transform(g, "keep")
        assert out.n == 4
        assert out.atoms[2].element == "*" and out.atoms[3].element == "*"

    def test_remove_drops_boundary_marks(self):
        g = parse("*CC*")
        out = strategy_transform(g, "remove")
        assert out.n == 2 and len(out.bonds) == 1

    def test_substitute_caps_with_h(self):
        out = strategy_transform(parse("*CC*"), "substitute")
        assert [a.element for a in out.atoms[2:]] == ["H", "H"]

    def test_link_closes_cycle(self):
        out = strategy_transform(parse("*CONO*"), "link")
        assert out.cyclomatic_number() == 1

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            strategy_transform(parse("*CC*"), "nope")


class TestRingStats:
    def test_counts_and_skips(self):
        graphs = [parse("*CC*"), parse("*c1ccc(*)cc1"), None,
                  parse("*CC(c1ccccc1)c1ccccc1*")]
        mean, frac, skipped = ring_stats(graphs)
        assert skipped == 1
        assert mean == pytest.approx(1.0)
        assert frac == 0.0

    def test_empty(self):
        assert ring_stats([None]) == (0.0, 0.0, 1)


class TestGraphBasics:
    def test_bridges_of_ring_with_tail(self):
        g = parse("*CC1CCC1*")
        ring = g.ring_atoms()
        assert len(ring) == 4
        assert (0, 1) in g.bridges()

    def test_sssr(self):
        g = parse("*c1ccc2ccccc2c1*")
        rings = g.sssr()
        assert len(rings) == 2
        assert all(len(r) == 6 for r in rings)

    def test_duplicate_bond_rejected(self):
        with pytest.raises(ValueError):
            MolGraph([Atom("C"), Atom("C")],
                     [Bond(0, 1), Bond(1, 0, "double")])

    def test_disconnected_star_link(self):
        g = MonomerGraph([Atom("C"), Atom("C")], [], 0, 1)
        with pytest.raises(DisconnectedError):
            star_link(g)

    def test_dump_star_graph_fields(self):
        doc = json.loads(dump_star_graph(star_link(parse("*CONO*"))))
        assert [a["element"] for a in doc["atoms"]] == ["C", "O", "N", "O"]
        assert doc["link_edge"] == [0, 3]
        assert doc["meta"]["auto_repeat_k"] == 1
        assert doc["atoms"][0]["is_boundary"]
        assert all(a["is_backbone"] for a in doc["atoms"])
