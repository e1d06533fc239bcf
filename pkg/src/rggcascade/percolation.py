"""Connected components of node subsets, as a finite-size proxy for the
infinite-component statements.

A finite graph has no infinite component, so "giant component present" is
decided by a size cutoff. Two fractions are reported for the largest component
of a subset: relative to the subset and relative to the whole network. The
network fraction is the Theta(n) notion of a giant component and is the
default basis of :func:`gc_present`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_GC_THRESHOLD = 0.1
MIN_SUBSET = 10


class UnionFind:
    """Disjoint sets over ``0..n-1`` with union by size and path compression."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


@dataclass(frozen=True)
class ComponentReport:
    component_sizes: list[int]
    subset_size: int
    total_nodes: int
    largest_members: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0, np.int64))

    @property
    def largest(self) -> int:
        return self.component_sizes[0] if self.component_sizes else 0

    @property
    def largest_fraction(self) -> float:
        """Largest component over the analysed subset (0 for an empty subset)."""
        return self.largest / self.subset_size if self.subset_size else 0.0

    @property
    def network_fraction(self) -> float:
        """Largest component over all nodes of the graph."""
        return self.largest / self.total_nodes if self.total_nodes else 0.0


def components(graph, subset) -> ComponentReport:
    """Components of the subgraph induced by ``subset`` (ids or a boolean mask)."""
    subset = np.asarray(subset)
    if subset.dtype == bool:
        mask = subset
        ids = np.flatnonzero(mask)
    else:
        ids = np.unique(subset.astype(np.int64))
        mask = np.zeros(graph.n, dtype=bool)
        mask[ids] = True
    if ids.size == 0:
        return ComponentReport([], 0, graph.n)

    local = np.full(graph.n, -1, dtype=np.int64)
    local[ids] = np.arange(ids.size)
    edges = graph.edges()
    if edges.size:
        edges = edges[mask[edges[:, 0]] & mask[edges[:, 1]]]
    uf = UnionFind(ids.size)
    for a, b in local[edges].tolist():
        uf.union(a, b)
    roots = np.fromiter((uf.find(i) for i in range(ids.size)), dtype=np.int64, count=ids.size)
    counts = np.bincount(roots, minlength=ids.size)
    sizes = sorted((int(c) for c in counts if c), reverse=True)
    # ties between equal-size components go to the lowest root id
    best = int(np.argmax(counts))
    return ComponentReport(sizes, int(ids.size), graph.n, ids[roots == best])


def gc_present(
    report: ComponentReport,
    threshold_fraction: float = DEFAULT_GC_THRESHOLD,
    basis: str = "network",
) -> bool:
    """Decide whether the largest component counts as giant.

    ``basis="subset"`` compares :attr:`ComponentReport.largest_fraction`,
    ``basis="network"`` compares :attr:`ComponentReport.network_fraction`.
    Subsets with fewer than 10 nodes never hold a giant component.
    """
    if not 0.0 < threshold_fraction < 1.0:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    if basis == "subset":
        frac = report.largest_fraction
    elif basis == "network":
        frac = report.network_fraction
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return report.subset_size >= MIN_SUBSET and frac >= threshold_fraction
