"""Spin-configuration optimizers.

Absolute spins are enumerated directly in the exhaustive search: fixing one
vertex per connected component to 0 removes the global-flip symmetry, and
the cycle-parity constraints are satisfied automatically because relative
spins are derived from absolute ones.

The tree heuristic prunes the graph to its maximum spanning forest and
optimizes the tree-edge relative spins by max-sum dynamic programming. Each
vertex's approximate utility depends only on the spins of its own tree
edges, so messages flow leaf-to-root and the chosen spins come back down by
backpropagation. Per-vertex work grows as 2**children, the reason the tree
is built to keep child counts small.

All tie-breaking is deterministic: among equal-objective candidates the
lexicographically smallest bit pattern wins.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .channel import LinkInstance
from .sinr import (
    UtilityKind,
    approx_network_utility,
    network_utility,
)
from .topology import (
    RelativeSpins,
    RootedTree,
    TopologyGraph,
    complete_relative_spins,
    relative_from_spins,
    spins_from_relative,
)

EXHAUSTIVE_CAP_DEFAULT = 20
CHILD_CAP_DEFAULT = 24
TREE_EDGE_CAP_DEFAULT = 20

_BATCH = 1 << 13

RESULT_SCHEMA = "spinopt.result/1"


@dataclass(frozen=True)
class DpMessage:
    """Subtree values a vertex reports to its parent.

    ``mu0``/``mu1`` are the best achievable subtree utilities given the
    parent-edge spin, and ``best_child_bits[i]`` stores the child-edge spins
    (in ascending-child order) that achieve ``mu_i``.
    """

    mu0: float
    mu1: float
    best_child_bits: tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class OptimizationResult:
    """A spin assignment with its objective values.

    ``relative`` covers every graph edge and always equals the XOR pattern
    of ``spins``; ``objective_exact`` is the exact-SINR network utility of
    that pattern. ``objective_approx`` is the tree-restricted objective and
    is set only by the tree-based optimizers.
    """

    algorithm: str
    spins: np.ndarray
    relative: RelativeSpins
    objective_exact: float
    objective_approx: float | None
    elapsed_s: float
    warning: str | None = None

    def to_json(self, include_timing: bool = True) -> dict:
        data = {
            "algorithm": self.algorithm,
            "spins": [int(s) for s in self.spins],
            "relative_spins": {f"{k}-{l}": b for (k, l), b in sorted(self.relative.as_dict().items())},
            "objective_exact": self.objective_exact,
            "objective_approx": self.objective_approx,
            "warning": self.warning,
        }
        if include_timing:
            data["elapsed_s"] = self.elapsed_s
        return data


def _interference_terms(instance: LinkInstance, graph: TopologyGraph):
    """Masked per-pair INR terms (same_slot, opposite_slot) per direction.

    ``t0_lr[k, l]`` is what edge {k, l} adds to link l's L->R denominator
    when the relative spin is 0, ``t1_lr`` when it is 1; non-edges are 0.
    """
    m = graph.num_vertices
    mask = np.zeros((m, m))
    for k, l in graph.edge_keys():
        mask[k, l] = 1.0
        mask[l, k] = 1.0
    inr = instance.inr
    t0_lr = inr[:, :, 0, 1] * mask
    t1_lr = inr[:, :, 1, 1] * mask
    t0_rl = inr[:, :, 1, 0] * mask
    t1_rl = inr[:, :, 0, 0] * mask
    return t0_lr, t1_lr, t0_rl, t1_rl


def _rates_to_utilities(rates: np.ndarray, kind: UtilityKind) -> np.ndarray:
    """Per-assignment network utility from (N, M) per-link two-way rates."""
    if kind is UtilityKind.TWO_WAY_SUM_RATE:
        return rates.sum(axis=1)
    with np.errstate(divide="ignore"):
        return np.log(rates).sum(axis=1)


def _spin_batch_utilities(
    instance: LinkInstance, graph: TopologyGraph, kind: UtilityKind, spins: np.ndarray
) -> np.ndarray:
    """Exact network utility for a batch of absolute spin vectors (N, M)."""
    t0_lr, t1_lr, t0_rl, t1_rl = _interference_terms(instance, graph)
    s = spins.astype(float)
    c = 1.0 - s
    snr = instance.snr

    def dens(t0, t1):
        # neighbor k contributes t1 when s_k XOR s_l = 1, else t0; summing
        # selected non-negative terms (never t0 + diff) avoids cancellation
        # when the two INR values differ by orders of magnitude
        when_l0 = s @ t1 + c @ t0
        when_l1 = s @ t0 + c @ t1
        return 1.0 + np.where(spins == 0, when_l0, when_l1)

    den_lr = dens(t0_lr, t1_lr)
    den_rl = dens(t0_rl, t1_rl)
    rates = np.log2(1.0 + snr[:, 0] / den_lr) + np.log2(1.0 + snr[:, 1] / den_rl)
    return _rates_to_utilities(rates, kind)


def exhaustive_search(
    instance: LinkInstance,
    graph: TopologyGraph,
    kind: UtilityKind,
    cap: int = EXHAUSTIVE_CAP_DEFAULT,
) -> OptimizationResult:
    """Globally optimal spins by enumeration.

    Fixes the lowest-index vertex of every connected component to spin 0 and
    enumerates all remaining assignments, so a connected graph costs
    2**(M-1) evaluations. Ties go to the lexicographically smallest spin
    vector. Refuses M above ``cap``.
    """
    t_start = time.perf_counter()
    m = graph.num_vertices
    if m > cap:
        raise ValueError(
            f"exhaustive search refused: {m} links exceeds the cap of {cap} "
            f"(2**(M-1) assignments)"
        )
    fixed = {comp[0] for comp in graph.components()}
    free = [v for v in range(m) if v not in fixed]
    nbits = len(free)

    best_value = -np.inf
    best_spins = np.zeros(m, dtype=np.int8)
    for start in range(0, 1 << nbits, _BATCH):
        count = min(_BATCH, (1 << nbits) - start)
        codes = np.arange(start, start + count, dtype=np.int64)
        batch = np.zeros((count, m), dtype=np.int8)
        for j, v in enumerate(free):
            batch[:, v] = (codes >> (nbits - 1 - j)) & 1
        utilities = _spin_batch_utilities(instance, graph, kind, batch)
        i = int(np.argmax(utilities))
        if utilities[i] > best_value:
            best_value = float(utilities[i])
            best_spins = batch[i].copy()

    relative = relative_from_spins(graph, best_spins)
    objective = network_utility(instance, graph, kind, relative)
    warning = None
    if best_value == -np.inf:
        warning = "all assignments have -inf utility; returning the all-zero spins"
    return OptimizationResult(
        algorithm="exhaustive",
        spins=best_spins,
        relative=relative,
        objective_exact=objective,
        objective_approx=None,
        elapsed_s=time.perf_counter() - t_start,
        warning=warning,
    )


def _bit_matrix(nbits: int) -> np.ndarray:
    """(2**nbits, nbits) rows of bit patterns; row index == bits read MSB-first."""
    codes = np.arange(1 << nbits, dtype=np.int64)
    shifts = np.arange(nbits - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(float)


def _local_utilities(
    instance: LinkInstance,
    graph: TopologyGraph,
    tree: RootedTree,
    kind: UtilityKind,
    l: int,
    bits: np.ndarray,
    parent_spin: int,
) -> np.ndarray:
    """Vertex l's approximate utility for every child-edge spin combination.

    Non-tree neighbors enter as constants (average of their two INR values);
    tree neighbors contribute the INR selected by their edge spin. Terms are
    selected, never reconstructed as base-plus-difference, so pairs whose
    two INR values differ by orders of magnitude stay exact.
    """
    inr = instance.inr
    tree_nbrs = tree.tree_neighbors(l)
    base_lr = 1.0
    base_rl = 1.0
    for k in graph.neighbors(l):
        if k not in tree_nbrs:
            base_lr += (inr[k, l, 0, 1] + inr[k, l, 1, 1]) / 2.0
            base_rl += (inr[k, l, 1, 0] + inr[k, l, 0, 0]) / 2.0
    p = tree.parent[l]
    if p >= 0:
        base_lr += inr[p, l, 1, 1] if parent_spin else inr[p, l, 0, 1]
        base_rl += inr[p, l, 0, 0] if parent_spin else inr[p, l, 1, 0]

    den_lr = np.full(len(bits), base_lr)
    den_rl = np.full(len(bits), base_rl)
    for j, k in enumerate(tree.children[l]):
        chosen = bits[:, j] == 1.0
        den_lr += np.where(chosen, inr[k, l, 1, 1], inr[k, l, 0, 1])
        den_rl += np.where(chosen, inr[k, l, 0, 0], inr[k, l, 1, 0])

    snr = instance.snr
    rates = np.log2(1.0 + snr[l, 0] / den_lr) + np.log2(1.0 + snr[l, 1] / den_rl)
    if kind is UtilityKind.TWO_WAY_SUM_RATE:
        return rates
    with np.errstate(divide="ignore"):
        return np.log(rates)


def mst_dp(
    instance: LinkInstance,
    graph: TopologyGraph,
    tree: RootedTree,
    kind: UtilityKind,
    child_cap: int = CHILD_CAP_DEFAULT,
) -> OptimizationResult:
    """Spanning-forest pruning plus max-sum dynamic programming.

    Leaf-to-root pass: every vertex maximizes its local approximate utility
    plus its children's messages over all child-edge spin combinations, once
    per parent-edge spin value, and reports the two maxima upward. The root
    does the same without a parent edge. Backpropagation then walks the
    chosen spins down the tree, non-tree edges follow by cycle parity, and
    the exact objective of the final assignment is evaluated for reporting.
    """
    t_start = time.perf_counter()
    if tree.max_children > child_cap:
        raise ValueError(
            f"tree DP refused: a vertex has {tree.max_children} children, cap is "
            f"{child_cap} (2**children combinations per vertex)"
        )

    messages: dict[int, DpMessage] = {}
    root_bits: dict[int, tuple[int, ...]] = {}
    root_values: dict[int, float] = {}
    for l in reversed(tree.order):
        kids = tree.children[l]
        bits = _bit_matrix(len(kids))
        message_sum = np.zeros(len(bits))
        for j, k in enumerate(kids):
            msg = messages[k]
            message_sum += np.where(bits[:, j] == 1.0, msg.mu1, msg.mu0)

        def solve(parent_spin: int) -> tuple[float, tuple[int, ...]]:
            total = (
                _local_utilities(instance, graph, tree, kind, l, bits, parent_spin)
                + message_sum
            )
            best = int(np.argmax(total))
            return float(total[best]), tuple(int(b) for b in bits[best])

        if tree.parent[l] < 0:
            root_values[l], root_bits[l] = solve(0)
        else:
            mu0, bits0 = solve(0)
            mu1, bits1 = solve(1)
            messages[l] = DpMessage(mu0=mu0, mu1=mu1, best_child_bits=(bits0, bits1))

    objective_approx = float(sum(root_values.values()))

    chosen: dict[tuple[int, int], int] = {}
    stack = [(root, root_bits[root]) for root in tree.roots]
    while stack:
        v, bits_v = stack.pop()
        for j, k in enumerate(tree.children[v]):
            b = bits_v[j]
            chosen[(min(v, k), max(v, k))] = b
            stack.append((k, messages[k].best_child_bits[b]))

    tree_spins = RelativeSpins(chosen)
    relative = complete_relative_spins(graph, tree, tree_spins)
    spins = spins_from_relative(tree, tree_spins, 0)
    objective_exact = network_utility(instance, graph, kind, relative)
    warning = None
    if objective_approx == -np.inf:
        warning = "all assignments have -inf utility; returning the all-zero spins"
    return OptimizationResult(
        algorithm="mst_dp",
        spins=spins,
        relative=relative,
        objective_exact=objective_exact,
        objective_approx=objective_approx,
        elapsed_s=time.perf_counter() - t_start,
        warning=warning,
    )


def random_spins(
    instance: LinkInstance, graph: TopologyGraph, kind: UtilityKind, seed: int
) -> OptimizationResult:
    """Uniform random spin baseline, evaluated exactly."""
    t_start = time.perf_counter()
    rng = np.random.default_rng(seed)
    spins = rng.integers(0, 2, size=graph.num_vertices, dtype=np.int8)
    relative = relative_from_spins(graph, spins)
    return OptimizationResult(
        algorithm="random",
        spins=spins,
        relative=relative,
        objective_exact=network_utility(instance, graph, kind, relative),
        objective_approx=None,
        elapsed_s=time.perf_counter() - t_start,
    )


def tree_brute_force(
    instance: LinkInstance,
    graph: TopologyGraph,
    tree: RootedTree,
    kind: UtilityKind,
    cap: int = TREE_EDGE_CAP_DEFAULT,
) -> OptimizationResult:
    """Enumerate all tree-edge spin assignments against the approximate objective.

    Reference oracle for the DP (intentionally straightforward and per-link);
    meant for tests, cost 2**edges.
    """
    t_start = time.perf_counter()
    edges = tree.edge_keys()
    nbits = len(edges)
    if nbits > cap:
        raise ValueError(f"tree brute force refused: {nbits} tree edges exceeds cap {cap}")

    best_value = -np.inf
    best_assignment: dict[tuple[int, int], int] = {}
    for code in range(1 << nbits):
        assignment = {
            edge: (code >> (nbits - 1 - j)) & 1 for j, edge in enumerate(edges)
        }
        value = approx_network_utility(
            instance, graph, tree, kind, RelativeSpins(assignment)
        )
        if value > best_value:
            best_value = value
            best_assignment = assignment

    tree_spins = RelativeSpins(best_assignment)
    relative = complete_relative_spins(graph, tree, tree_spins)
    spins = spins_from_relative(tree, tree_spins, 0)
    return OptimizationResult(
        algorithm="tree_brute_force",
        spins=spins,
        relative=relative,
        objective_exact=network_utility(instance, graph, kind, relative),
        objective_approx=float(best_value),
        elapsed_s=time.perf_counter() - t_start,
    )
