"""Monomer and star-linking graphs, strategies, backbone detection, features.

The data model is deliberately small: an attributed graph is a list of
:class:`Atom` plus a list of :class:`Bond`.  A :class:`MonomerGraph` adds the
two polymerization boundary atoms; a :class:`StarLinkGraph` adds the edge that
joins them (closing the repeat unit into a cycle) together with the backbone
mask.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import DisconnectedError

BOND_ORDERS = ("single", "double", "triple", "aromatic")
BOND_VALENCE = {"single": 1.0, "double": 2.0, "triple": 3.0, "aromatic": 1.5}

# Written bare (outside brackets); anything else needs bracket notation.
ORGANIC_SUBSET = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC_CAPABLE = ("B", "C", "N", "O", "P", "S", "Se", "As")

# Default valences used only to derive implicit hydrogen counts for features.
DEFAULT_VALENCE = {
    "B": 3, "C": 4, "N": 3, "O": 2, "P": 3, "S": 2,
    "F": 1, "Cl": 1, "Br": 1, "I": 1,
}

FEATURE_ELEMENTS = ORGANIC_SUBSET + ("H", "*")


@dataclass(frozen=True)
class Atom:
    element: str
    aromatic: bool = False
    charge: int = 0
    hcount: int | None = None  # explicit H count from brackets; None = implicit
    isotope: int | None = None

    def attr_key(self) -> tuple:
        return (self.element, self.aromatic, self.charge, self.hcount, self.isotope)


@dataclass(frozen=True)
class Bond:
    u: int
    v: int
    order: str = "single"

    def pair(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)


class MolGraph:
    """Plain attributed graph: atoms + bonds, no polymer bookkeeping."""

    def __init__(self, atoms: list[Atom], bonds: list[Bond]):
        self.atoms = list(atoms)
        self.bonds = list(bonds)
        self._adj: dict[int, list[tuple[int, str]]] | None = None
        pairs = [b.pair() for b in bonds]
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate bond between the same atom pair")
        for b in bonds:
            if b.u == b.v or not (0 <= b.u < len(atoms) and 0 <= b.v < len(atoms)):
                raise ValueError(f"bond endpoints out of range: {b}")

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def n(self) -> int:
        return len(self.atoms)

    def adjacency(self) -> dict[int, list[tuple[int, str]]]:
        if self._adj is None:
            adj: dict[int, list[tuple[int, str]]] = {i: [] for i in range(self.n)}
            for b in self.bonds:
                adj[b.u].append((b.v, b.order))
                adj[b.v].append((b.u, b.order))
            for i in adj:
                adj[i].sort()
            self._adj = adj
        return self._adj

    def neighbors(self, i: int) -> list[int]:
        return [j for j, _ in self.adjacency()[i]]

    def degree(self, i: int) -> int:
        return len(self.adjacency()[i])

    def bond_order(self, u: int, v: int) -> str:
        for j, order in self.adjacency()[u]:
            if j == v:
                return order
        raise KeyError((u, v))

    def has_bond(self, u: int, v: int) -> bool:
        return any(j == v for j, _ in self.adjacency()[u])

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n

    def bfs_distances(self, source: int) -> list[int]:
        dist = [-1] * self.n
        dist[source] = 0
        queue = [source]
        while queue:
            nxt = []
            for u in queue:
                for v in self.neighbors(u):
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            queue = nxt
        return dist

    def bridges(self) -> set[tuple[int, int]]:
        """Edges whose removal disconnects the graph (iterative Tarjan)."""
        disc = [-1] * self.n
        low = [0] * self.n
        out: set[tuple[int, int]] = set()
        timer = 0
        for root in range(self.n):
            if disc[root] >= 0:
                continue
            stack: list[tuple[int, int, int]] = [(root, -1, 0)]
            while stack:
                u, parent, idx = stack.pop()
                if idx == 0:
                    disc[u] = low[u] = timer
                    timer += 1
                nbrs = self.neighbors(u)
                advanced = False
                while idx < len(nbrs):
                    v = nbrs[idx]
                    idx += 1
                    if v == parent:
                        continue
                    if disc[v] < 0:
                        stack.append((u, parent, idx))
                        stack.append((v, u, 0))
                        advanced = True
                        break
                    low[u] = min(low[u], disc[v])
                if advanced:
                    continue
                if parent >= 0:
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        out.add((min(u, parent), max(u, parent)))
        return out

    def ring_atoms(self) -> set[int]:
        """Atoms incident to at least one non-bridge edge (i.e. on a cycle)."""
        bridge_set = self.bridges()
        out: set[int] = set()
        for b in self.bonds:
            if b.pair() not in bridge_set:
                out.add(b.u)
                out.add(b.v)
        return out

    def sssr(self) -> list[set[int]]:
        """Smallest set of smallest rings, as atom-index sets."""
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from((b.u, b.v) for b in self.bonds)
        return [set(cycle) for cycle in nx.minimum_cycle_basis(g)]

    def cyclomatic_number(self) -> int:
        return len(self.bonds) - self.n + 1


class MonomerGraph(MolGraph):
    """Repeat-unit graph with the two polymerization boundary atoms."""

    def __init__(self, atoms, bonds, head: int, tail: int,
                 stereo_discarded: bool = False):
        super().__init__(atoms, bonds)
        if not (0 <= head < len(atoms) and 0 <= tail < len(atoms)):
            raise ValueError("boundary index out of range")
        self.head = head
        self.tail = tail
        self.stereo_discarded = stereo_discarded

    def boundary_distance(self) -> int:
        return self.bfs_distances(self.head)[self.tail]


@dataclass
class StarLinkGraph:
    """Monomer graph closed by the boundary-linking edge.

    ``monomer`` is the repeat unit actually linked; it may be an auto-repeated
    copy of the input when the original boundary atoms coincide or are already
    bonded (linking those directly would merge edges and change neighbor
    multisets).  ``auto_repeat_k`` records the repeat count used.
    """

    monomer: MonomerGraph
    link: Bond
    backbone: list[bool]
    auto_repeat_k: int = 1
    _graph: MolGraph | None = field(default=None, repr=False)

    def as_graph(self) -> MolGraph:
        if self._graph is None:
            self._graph = MolGraph(self.monomer.atoms,
                                   self.monomer.bonds + [self.link])
        return self._graph


def repeat_monomer(g: MonomerGraph, k: int) -> MonomerGraph:
    """Open chain of k copies, copy-i tail bonded to copy-(i+1) head."""
    if k < 1:
        raise ValueError("repeat count must be >= 1")
    n = g.n
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    for c in range(k):
        off = c * n
        atoms.extend(g.atoms)
        bonds.extend(Bond(b.u + off, b.v + off, b.order) for b in g.bonds)
        if c > 0:
            bonds.append(Bond((c - 1) * n + g.tail, off + g.head, "single"))
    return MonomerGraph(atoms, bonds, g.head, (k - 1) * n + g.tail,
                        g.stereo_discarded)


def unroll(g: MonomerGraph, k: int) -> MonomerGraph:
    """Finite open-chain truncation of the infinite polymer (no wraparound)."""
    return repeat_monomer(g, k)


def star_link(g: MonomerGraph) -> StarLinkGraph:
    """Close the repeat unit by bonding its boundary atoms.

    The linking edge is formed as a set union, so a monomer whose boundaries
    coincide or are already bonded is repeated until they are distinct and
    non-adjacent; this keeps every atom's neighbor multiset identical to its
    counterpart in the infinite chain.
    """
    if not g.is_connected():
        raise DisconnectedError("monomer graph is not connected")
    k = 1
    m = g
    while m.head == m.tail or m.has_bond(m.head, m.tail):
        k += 1
        m = repeat_monomer(g, k)
    link = Bond(m.head, m.tail, "single")
    mask = detect_backbone(m, link)
    return StarLinkGraph(m, link, mask, auto_repeat_k=k)


def shortest_boundary_path(g: MonomerGraph) -> list[int]:
    """Lexicographically smallest shortest head-to-tail path (atom indices)."""
    dist = g.bfs_distances(g.tail)
    if dist[g.head] < 0:
        raise DisconnectedError("boundary atoms not connected")
    path = [g.head]
    u = g.head
    while u != g.tail:
        u = min(v for v in g.neighbors(u) if dist[v] == dist[u] - 1)
        path.append(u)
    return path


def detect_backbone(g: MonomerGraph, link: Bond | None = None) -> list[bool]:
    """Backbone mask: boundary shortest-path atoms plus rings touching them.

    The path is computed inside the monomer (the linking edge never counts),
    and every SSSR ring of the monomer sharing at least one atom with the
    path is absorbed into the backbone.
    """
    path = set(shortest_boundary_path(g))
    marked = set(path)
    for ring in g.sssr():
        if ring & path:
            marked |= ring
    return [i in marked for i in range(g.n)]


def strategy_transform(g: MonomerGraph, strategy: str) -> MolGraph:
    """One of the four endpoint-handling strategies.

    ``keep`` reinstates the two stars as pseudo-atoms, ``remove`` drops them,
    ``substitute`` caps the boundaries with hydrogens, ``link`` bonds the
    boundaries together.
    """
    if strategy == "remove":
        return MolGraph(g.atoms, g.bonds)
    if strategy == "link":
        return star_link(g).as_graph()
    if strategy == "keep":
        cap = Atom("*")
    elif strategy == "substitute":
        cap = Atom("H")
    else:
        raise ValueError(f"unknown strategy: {strategy!r}")
    atoms = list(g.atoms) + [cap, cap]
    bonds = list(g.bonds) + [Bond(g.head, g.n, "single"),
                             Bond(g.tail, g.n + 1, "single")]
    return MolGraph(atoms, bonds)


def implicit_hydrogens(g: MolGraph, i: int) -> int:
    atom = g.atoms[i]
    if atom.hcount is not None:
        return atom.hcount
    default = DEFAULT_VALENCE.get(atom.element, 0)
    used = sum(BOND_VALENCE[order] for _, order in g.adjacency()[i])
    return max(0, default - math.ceil(used))


def feature_dim() -> int:
    # element one-hot (+other), degree 0-6, charge -2..2, aromatic, in-ring,
    # implicit H 0-4
    return (len(FEATURE_ELEMENTS) + 1) + 7 + 5 + 1 + 1 + 5


def featurize(g: MolGraph) -> np.ndarray:
    """Per-atom feature vectors, one column per atom (shape d_atom x n)."""
    d = feature_dim()
    x = np.zeros((d, g.n))
    ring = g.ring_atoms()
    n_elem = len(FEATURE_ELEMENTS) + 1
    for i, atom in enumerate(g.atoms):
        row = 0
        try:
            e = FEATURE_ELEMENTS.index(atom.element)
        except ValueError:
            e = n_elem - 1
        x[row + e, i] = 1.0
        row += n_elem
        x[row + min(g.degree(i), 6), i] = 1.0
        row += 7
        x[row + min(max(atom.charge, -2), 2) + 2, i] = 1.0
        row += 5
        x[row, i] = 1.0 if atom.aromatic else 0.0
        row += 1
        x[row, i] = 1.0 if i in ring else 0.0
        row += 1
        x[row + min(implicit_hydrogens(g, i), 4), i] = 1.0
    return x


def apply_backbone_embedding(x: np.ndarray, mask, b: np.ndarray) -> np.ndarray:
    """Add the backbone vector to the masked columns only."""
    b = np.asarray(b, dtype=float)
    if b.shape != (x.shape[0],):
        raise ValueError(f"backbone vector dim {b.shape} != feature dim "
                         f"({x.shape[0]},)")
    m = np.asarray(mask, dtype=float)
    if m.shape != (x.shape[1],):
        raise ValueError("mask length does not match atom count")
    return x + np.outer(b, m)


def auto_repeat_for_lga(g: MonomerGraph, d_thres: int) -> tuple[MonomerGraph, int]:
    """Repeat the monomer until the boundary distance exceeds 2*d_thres - 1.

    A k-fold repeat has boundary distance k*d_b + (k - 1), where d_b is the
    single-monomer boundary distance.  Returns the repeated monomer and the
    minimal k.
    """
    if d_thres < 1:
        raise ValueError("d_thres must be >= 1")
    d_b = g.boundary_distance()
    k = 1
    while k * d_b + (k - 1) <= 2 * d_thres - 1:
        k += 1
    return (g if k == 1 else repeat_monomer(g, k)), k


def ring_stats(graphs) -> tuple[float, float, int]:
    """(mean rings per polymer, fraction with >2 rings, skipped count).

    Accepts an iterable of MonomerGraph-or-None; ``None`` entries count as
    skipped (unparsable corpus lines).
    """
    counts = []
    skipped = 0
    for g in graphs:
        if g is None:
            skipped += 1
            continue
        counts.append(g.cyclomatic_number())
    if not counts:
        return 0.0, 0.0, skipped
    mean = sum(counts) / len(counts)
    frac = sum(1 for c in counts if c > 2) / len(counts)
    return mean, frac, skipped


def dump_star_graph(star: StarLinkGraph) -> str:
    """Stable JSON dump of a star-linking graph (diff-friendly field order)."""
    m = star.monomer
    atoms = [
        {
            "index": i,
            "element": a.element,
            "aromatic": a.aromatic,
            "charge": a.charge,
            "hcount": a.hcount,
            "is_boundary": i in (m.head, m.tail),
            "is_backbone": star.backbone[i],
        }
        for i, a in enumerate(m.atoms)
    ]
    bonds = [{"u": b.u, "v": b.v, "order": b.order} for b in m.bonds]
    doc = {
        "atoms": atoms,
        "bonds": bonds,
        "link_edge": [star.link.u, star.link.v],
        "meta": {"auto_repeat_k": star.auto_repeat_k},
    }
    return json.dumps(doc, separators=(",", ":"))


def relabel(g: MolGraph, perm: list[int]) -> MolGraph:
    """Apply a permutation: atom i of the result is atom perm[i] of g."""
    inv = [0] * g.n
    for new, old in enumerate(perm):
        inv[old] = new
    atoms = [g.atoms[old] for old in perm]
    bonds = [Bond(inv[b.u], inv[b.v], b.order) for b in g.bonds]
    if isinstance(g, MonomerGraph):
        return MonomerGraph(atoms, bonds, inv[g.head], inv[g.tail],
                            g.stereo_discarded)
    return MolGraph(atoms, bonds)
