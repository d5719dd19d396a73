"""Interference topology graph, maximum spanning forest, and spin algebra.

Vertices are two-way links; an edge connects two links whenever any of the
eight cross-link INR values between them exceeds the threshold. Each edge
carries the largest change in received interference power that flipping the
pair's relative spin can cause; the maximum spanning forest over these
weights keeps the edges whose spin choice matters most.

A relative spin is the XOR of the two links' absolute spins. Relative spins
are symmetric and XOR to zero around every cycle, so fixing them on a
spanning forest determines them everywhere.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Mapping
from dataclasses import dataclass

import numpy as np

from .channel import DEFAULT_INR_EDGE_THRESHOLD, LinkInstance

Edge = tuple[int, int, float]

GRAPH_SCHEMA = "spinopt.graph/1"
TREE_SCHEMA = "spinopt.tree/1"


def _norm_edge(k: int, l: int) -> tuple[int, int]:
    if k == l:
        raise ValueError(f"self-pair ({k},{l}) is not a valid edge")
    return (k, l) if k < l else (l, k)


class RelativeSpins(Mapping):
    """Relative spins keyed by unordered link pair.

    Lookup is symmetric: ``spins[k, l] == spins[l, k]``. Values are 0/1.
    """

    __slots__ = ("_spins",)

    def __init__(self, spins: Mapping[tuple[int, int], int] = ()):
        normalized = {}
        for (k, l), bit in dict(spins).items():
            if bit not in (0, 1):
                raise ValueError(f"relative spin for ({k},{l}) must be 0 or 1, got {bit!r}")
            normalized[_norm_edge(int(k), int(l))] = int(bit)
        self._spins = normalized

    def __getitem__(self, edge: tuple[int, int]) -> int:
        return self._spins[_norm_edge(*edge)]

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self._spins))

    def __len__(self) -> int:
        return len(self._spins)

    def __repr__(self) -> str:
        inner = ", ".join(f"({k},{l}): {b}" for (k, l), b in sorted(self._spins.items()))
        return f"RelativeSpins({{{inner}}})"

    def as_dict(self) -> dict[tuple[int, int], int]:
        return dict(self._spins)


@dataclass(frozen=True)
class TopologyGraph:
    """Undirected weighted link-interference graph.

    Edges are (k, l, weight) with k < l, sorted by (k, l), no duplicates.
    """

    num_vertices: int
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        if self.num_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        seen = set()
        adjacency: list[list[int]] = [[] for _ in range(self.num_vertices)]
        weights = {}
        for k, l, w in self.edges:
            if not 0 <= k < l < self.num_vertices:
                raise ValueError(f"edge ({k},{l}) out of range or not ordered k < l")
            if (k, l) in seen:
                raise ValueError(f"duplicate edge ({k},{l})")
            if w < 0:
                raise ValueError(f"edge ({k},{l}) has negative weight {w}")
            seen.add((k, l))
            adjacency[k].append(l)
            adjacency[l].append(k)
            weights[(k, l)] = float(w)
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        object.__setattr__(
            self, "_adjacency", tuple(tuple(sorted(nbrs)) for nbrs in adjacency)
        )
        object.__setattr__(self, "_weights", weights)

    def neighbors(self, l: int) -> tuple[int, ...]:
        return self._adjacency[l]

    def has_edge(self, k: int, l: int) -> bool:
        return _norm_edge(k, l) in self._weights

    def weight(self, k: int, l: int) -> float:
        return self._weights[_norm_edge(k, l)]

    def edge_keys(self) -> tuple[tuple[int, int], ...]:
        return tuple((k, l) for k, l, _ in self.edges)

    def components(self) -> tuple[tuple[int, ...], ...]:
        """Connected components as sorted vertex tuples, ordered by minimum vertex."""
        dsu = _DisjointSet(self.num_vertices)
        for k, l, _ in self.edges:
            dsu.union(k, l)
        groups: dict[int, list[int]] = {}
        for v in range(self.num_vertices):
            groups.setdefault(dsu.find(v), []).append(v)
        return tuple(tuple(sorted(g)) for g in sorted(groups.values(), key=min))


@dataclass(frozen=True)
class RootedTree:
    """Rooted maximum spanning forest of a topology graph.

    One root per connected component (the component's lowest-index vertex);
    ``parent[v]`` is -1 for roots, children are listed in ascending order,
    and ``order`` is a breadth-first ordering in which every parent precedes
    its children.
    """

    num_vertices: int
    roots: tuple[int, ...]
    parent: tuple[int, ...]
    children: tuple[tuple[int, ...], ...]
    tree_edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        order = []
        seen = set()
        for root in self.roots:
            queue = [root]
            while queue:
                v = queue.pop(0)
                order.append(v)
                seen.add(v)
                queue.extend(self.children[v])
        if len(order) != self.num_vertices or len(seen) != self.num_vertices:
            raise ValueError("tree does not reach every vertex exactly once")
        object.__setattr__(self, "_order", tuple(order))

    @property
    def order(self) -> tuple[int, ...]:
        return self._order

    @property
    def max_children(self) -> int:
        """Largest child count of any vertex; drives the DP's 2**D cost."""
        return max(len(c) for c in self.children)

    def tree_neighbors(self, l: int) -> frozenset[int]:
        nbrs = set(self.children[l])
        if self.parent[l] >= 0:
            nbrs.add(self.parent[l])
        return frozenset(nbrs)

    def edge_keys(self) -> tuple[tuple[int, int], ...]:
        return tuple((k, l) for k, l, _ in self.tree_edges)

    def total_weight(self) -> float:
        # fsum: correctly rounded regardless of edge order
        return math.fsum(w for _, _, w in self.tree_edges)


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def edge_weight(instance: LinkInstance, k: int, l: int) -> float:
    """Largest spin-induced change in interference power between two links.

    For each receive direction of each link, flipping the pair's relative
    spin swaps which end of the other link interferes; the weight is the
    maximum absolute difference over the four receive directions. Symmetric
    in (k, l).
    """
    if k == l:
        raise ValueError("edge weight needs two distinct links")
    inr = instance.inr
    return float(
        max(
            abs(inr[k, l, 1, 1] - inr[k, l, 0, 1]),
            abs(inr[k, l, 0, 0] - inr[k, l, 1, 0]),
            abs(inr[l, k, 1, 1] - inr[l, k, 0, 1]),
            abs(inr[l, k, 0, 0] - inr[l, k, 1, 0]),
        )
    )


def build_graph(
    instance: LinkInstance, threshold: float = DEFAULT_INR_EDGE_THRESHOLD
) -> TopologyGraph:
    """Topology graph: edge {k, l} iff any of the 8 cross INRs exceeds threshold."""
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    inr = instance.inr
    peak = inr.max(axis=(2, 3))
    peak = np.maximum(peak, peak.T)

    diff = np.maximum(
        np.abs(inr[:, :, 1, 1] - inr[:, :, 0, 1]),
        np.abs(inr[:, :, 0, 0] - inr[:, :, 1, 0]),
    )
    weight = np.maximum(diff, diff.T)

    edges = []
    for k, l in zip(*np.nonzero(np.triu(peak > threshold, 1))):
        edges.append((int(k), int(l), float(weight[k, l])))
    return TopologyGraph(num_vertices=instance.num_links, edges=tuple(edges))


def maximum_spanning_tree(graph: TopologyGraph) -> RootedTree:
    """Maximum-weight spanning forest, rooted per component.

    Kruskal on edges sorted by descending weight with ascending (k, l) as
    the tie-break, so equal-weight choices are deterministic. Each
    component is rooted at its lowest-index vertex; children are ordered
    ascending.
    """
    dsu = _DisjointSet(graph.num_vertices)
    kept: list[Edge] = []
    for k, l, w in sorted(graph.edges, key=lambda e: (-e[2], e[0], e[1])):
        if dsu.union(k, l):
            kept.append((k, l, w))

    adjacency: list[list[int]] = [[] for _ in range(graph.num_vertices)]
    for k, l, _ in kept:
        adjacency[k].append(l)
        adjacency[l].append(k)

    comp_root: dict[int, int] = {}
    for v in range(graph.num_vertices):
        r = dsu.find(v)
        comp_root[r] = min(comp_root.get(r, v), v)
    roots = tuple(sorted(comp_root.values()))

    parent = [-1] * graph.num_vertices
    children: list[tuple[int, ...]] = [()] * graph.num_vertices
    visited = [False] * graph.num_vertices
    for root in roots:
        visited[root] = True
        queue = [root]
        while queue:
            v = queue.pop(0)
            kids = tuple(u for u in sorted(adjacency[v]) if not visited[u])
            children[v] = kids
            for u in kids:
                visited[u] = True
                parent[u] = v
            queue.extend(kids)

    return RootedTree(
        num_vertices=graph.num_vertices,
        roots=roots,
        parent=tuple(parent),
        children=tuple(children),
        tree_edges=tuple(sorted(kept)),
    )


def _require_keys(spins: RelativeSpins, keys: tuple[tuple[int, int], ...], what: str) -> None:
    expected = set(keys)
    given = set(spins.as_dict())
    missing = expected - given
    if missing:
        raise ValueError(f"{what} missing relative spin for edge(s) {sorted(missing)}")
    extra = given - expected
    if extra:
        raise ValueError(f"{what} has relative spins for non-tree edge(s) {sorted(extra)}")


def _root_parity(tree: RootedTree, tree_spins: RelativeSpins) -> np.ndarray:
    """XOR of tree-edge spins along each vertex's path to its root."""
    parity = np.zeros(tree.num_vertices, dtype=np.int8)
    for v in tree.order:
        p = tree.parent[v]
        if p >= 0:
            parity[v] = parity[p] ^ tree_spins[p, v]
    return parity


def complete_relative_spins(
    graph: TopologyGraph, tree: RootedTree, tree_spins: RelativeSpins
) -> RelativeSpins:
    """Extend tree-edge spins to every graph edge via cycle parity.

    Each non-tree edge closes a unique cycle with the tree; its spin is the
    XOR of the tree-edge spins along the tree path between its endpoints,
    which makes the XOR around the cycle zero.
    """
    _require_keys(tree_spins, tree.edge_keys(), "tree_spins")
    parity = _root_parity(tree, tree_spins)
    full = dict(tree_spins.as_dict())
    for k, l in graph.edge_keys():
        if (k, l) not in full:
            full[(k, l)] = int(parity[k] ^ parity[l])
    return RelativeSpins(full)


def spins_from_relative(
    tree: RootedTree, tree_spins: RelativeSpins, root_spin: int = 0
) -> np.ndarray:
    """Absolute spins consistent with the given tree-edge relative spins.

    Every root takes ``root_spin``; each child's spin is its parent's XOR
    the connecting edge's relative spin. Flipping ``root_spin`` complements
    the whole assignment and leaves all relative spins unchanged.
    """
    if root_spin not in (0, 1):
        raise ValueError(f"root_spin must be 0 or 1, got {root_spin!r}")
    _require_keys(tree_spins, tree.edge_keys(), "tree_spins")
    spins = _root_parity(tree, tree_spins)
    if root_spin:
        spins ^= 1
    return spins


def relative_from_spins(graph: TopologyGraph, spins: np.ndarray) -> RelativeSpins:
    """Relative spin of every graph edge: XOR of the endpoint spins."""
    spins = np.asarray(spins)
    if spins.shape != (graph.num_vertices,):
        raise ValueError(
            f"spins must have shape ({graph.num_vertices},), got {spins.shape}"
        )
    if not np.isin(spins, (0, 1)).all():
        raise ValueError("spins must be 0/1")
    return RelativeSpins({(k, l): int(spins[k] ^ spins[l]) for k, l in graph.edge_keys()})


def graph_to_json(graph: TopologyGraph) -> dict:
    return {
        "schema": GRAPH_SCHEMA,
        "num_vertices": graph.num_vertices,
        "edges": [[k, l, w] for k, l, w in graph.edges],
    }


def tree_to_json(tree: RootedTree) -> dict:
    return {
        "schema": TREE_SCHEMA,
        "num_vertices": tree.num_vertices,
        "roots": list(tree.roots),
        "parent": list(tree.parent),
        "edges": [[k, l, w] for k, l, w in tree.tree_edges],
        "max_children": tree.max_children,
    }


def graph_to_edge_list(graph: TopologyGraph) -> str:
    """Plain-text edge list ("k l weight" per line) for visualization tools."""
    lines = [f"{k} {l} {w!r}" for k, l, w in graph.edges]
    return "\n".join(lines) + ("\n" if lines else "")
