"""Shared builders and oracles for the test suite."""

import math
from itertools import combinations

import numpy as np

from spinopt.channel import LinkInstance, ScenarioConfig, generate_instance
from spinopt.topology import TopologyGraph


def build_instance(inr, snr=None, kinds=None) -> LinkInstance:
    """Hand-crafted instance from an (M, M, 2, 2) INR tensor."""
    inr = np.asarray(inr, dtype=float)
    m = inr.shape[0]
    if snr is None:
        snr = np.full((m, 2), 100.0)
    if kinds is None:
        kinds = np.zeros(m, dtype=np.int8)
    return LinkInstance(
        num_links=m,
        positions=np.zeros((m, 2, 2)),
        kinds=np.asarray(kinds, dtype=np.int8),
        snr=np.asarray(snr, dtype=float),
        inr=inr,
        shadowing=np.ones((2 * m, 2 * m)),
        seed_key=(0, 0),
    )


def random_instance(num_links, seed, link_mix=0.5, **overrides):
    cfg = ScenarioConfig(num_links=num_links, link_mix=link_mix, seed=seed, **overrides)
    return cfg, generate_instance(cfg, drop_seed=seed)


def enumerate_cycles(graph: TopologyGraph) -> list[list[int]]:
    """All simple cycles (length >= 3) of a small undirected graph.

    DFS from each start vertex over neighbors larger than the start, closing
    back to the start; each cycle is found once (canonical start = min
    vertex, second vertex < last vertex breaks the direction symmetry).
    """
    cycles = []

    def extend(path: list[int]) -> None:
        head = path[-1]
        for nxt in graph.neighbors(head):
            if nxt == path[0] and len(path) >= 3:
                if path[1] < path[-1]:
                    cycles.append(path.copy())
            elif nxt > path[0] and nxt not in path:
                path.append(nxt)
                extend(path)
                path.pop()

    for start in range(graph.num_vertices):
        extend([start])
    return cycles


def spanning_tree_weights(graph: TopologyGraph) -> list[float]:
    """Total weights of every spanning tree of a small connected graph."""
    n = graph.num_vertices
    weights = []
    for subset in combinations(graph.edges, n - 1):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        acyclic = True
        for k, l, _ in subset:
            rk, rl = find(k), find(l)
            if rk == rl:
                acyclic = False
                break
            parent[rk] = rl
        if acyclic:
            weights.append(math.fsum(w for _, _, w in subset))
    return weights
