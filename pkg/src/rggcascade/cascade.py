"""Node attributes, highly-vulnerable / highly-reliable classification, and the
threshold failure dynamics.

A functional node fails when it has at least one failed neighbour and the sum
of its neighbours' current states drops below its threshold. A failed node's
state is zero. The rule is monotone (failures only lower neighbour sums), so
the final failed set does not depend on the update order; ``run_cascade`` uses
synchronous rounds and records how many nodes fail in each.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import DistributionSpec
from .percolation import components
from .rgg import SpatialGraph


class NodeClass(enum.IntEnum):
    HIGHLY_VULNERABLE = 0
    HIGHLY_RELIABLE = 1
    WEAK_OTHER = 2

    @property
    def code(self) -> str:
        return _CODES[self]


_CODES = {
    NodeClass.HIGHLY_VULNERABLE: "HV",
    NodeClass.HIGHLY_RELIABLE: "HR",
    NodeClass.WEAK_OTHER: "W",
}


class SeedPolicyError(RuntimeError):
    pass


@dataclass(frozen=True)
class Classification:
    """Per-node flags plus the single label derived from them.

    A degree-1 node whose neighbour has state ``s > 1/2`` and whose threshold
    lies in ``(1 - s, s]`` satisfies both definitions; its label is HV but
    ``highly_reliable`` stays True, so the weak set (``~highly_reliable``)
    is exact.
    """

    highly_vulnerable: np.ndarray
    highly_reliable: np.ndarray

    @property
    def label(self) -> np.ndarray:
        out = np.full(len(self.highly_vulnerable), NodeClass.WEAK_OTHER, dtype=np.int8)
        out[self.highly_reliable] = NodeClass.HIGHLY_RELIABLE
        out[self.highly_vulnerable] = NodeClass.HIGHLY_VULNERABLE
        return out

    @property
    def weak(self) -> np.ndarray:
        return ~self.highly_reliable


def min_neighbor_state(graph: SpatialGraph, initial_state: np.ndarray) -> np.ndarray:
    """Minimum initial state over each node's neighbours (+inf for isolated nodes)."""
    out = np.full(graph.n, np.inf)
    deg = graph.degree
    has = deg > 0
    if graph.indices.size:
        mins = np.minimum.reduceat(initial_state[graph.indices], graph.indptr[:-1][has])
        out[has] = mins
    return out


def classify(graph: SpatialGraph, initial_state: np.ndarray, threshold: np.ndarray) -> Classification:
    k = graph.degree
    smin = min_neighbor_state(graph, initial_state)
    connected = k >= 1
    with np.errstate(invalid="ignore"):
        hv = connected & (threshold > k - smin)
        hr = ~connected | (threshold <= smin)
    return Classification(hv, hr)


@dataclass
class NodeEnsemble:
    initial_state: np.ndarray
    threshold: np.ndarray
    classes: Classification
    failed: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.failed is None:
            self.failed = np.zeros(len(self.initial_state), dtype=bool)

    @property
    def n(self) -> int:
        return len(self.initial_state)

    @property
    def label(self) -> np.ndarray:
        return self.classes.label

    @property
    def state(self) -> np.ndarray:
        return np.where(self.failed, 0.0, self.initial_state)

    def copy(self) -> "NodeEnsemble":
        return NodeEnsemble(
            self.initial_state.copy(), self.threshold.copy(), self.classes, self.failed.copy()
        )


def assign_attributes(
    graph: SpatialGraph,
    state_dist: DistributionSpec,
    threshold_dist: DistributionSpec,
    rng,
) -> NodeEnsemble:
    """Draw i.i.d. initial states and thresholds and classify every node.

    ``rng`` is either one Generator, from which two child streams are spawned,
    or a ``(state_rng, threshold_rng)`` pair.
    """
    lo, hi = state_dist.support
    if lo < 0.0 or hi > 1.0:
        raise ValueError(f"state distribution {state_dist.describe()} is not supported in (0, 1]")
    if isinstance(rng, np.random.Generator):
        state_rng, threshold_rng = rng.spawn(2)
    else:
        state_rng, threshold_rng = rng
    s = np.asarray(state_dist.sample(state_rng, graph.n), dtype=float)
    phi = np.asarray(threshold_dist.sample(threshold_rng, graph.n), dtype=float)
    return NodeEnsemble(s, phi, classify(graph, s, phi))


@dataclass
class CascadeResult:
    failed: np.ndarray
    rounds: list[int]
    seed_ids: np.ndarray

    @property
    def failed_ids(self) -> np.ndarray:
        return np.flatnonzero(self.failed)

    @property
    def n_failed(self) -> int:
        return int(self.failed.sum())


def run_cascade(graph: SpatialGraph, ensemble: NodeEnsemble, seed_ids) -> CascadeResult:
    """Fail the seeds, then apply synchronous rounds until nothing changes.

    ``ensemble.failed`` is updated in place.
    """
    seeds = np.unique(np.fromiter(seed_ids, dtype=np.int64))
    if seeds.size and (seeds.min() < 0 or seeds.max() >= graph.n):
        raise IndexError("seed id out of range")
    failed = ensemble.failed
    failed[seeds] = True
    A = graph.adjacency
    phi = ensemble.threshold
    rounds = []
    if failed.any():
        while True:
            state = np.where(failed, 0.0, ensemble.initial_state)
            nbr_sum = A @ state
            nbr_failed = (A @ failed.astype(np.float64)) > 0
            new = ~failed & nbr_failed & (nbr_sum < phi)
            count = int(new.sum())
            if count == 0:
                break
            failed |= new
            rounds.append(count)
    return CascadeResult(failed.copy(), rounds, seeds)


@dataclass(frozen=True)
class SeedPolicy:
    """How to choose the single initially failed node.

    kinds: ``node`` (fixed id), ``random``, ``hv_giant`` (uniform member of the
    largest highly-vulnerable component), ``nearest`` (closest to a point).
    """

    kind: str
    node: int | None = None
    x: float | None = None
    y: float | None = None

    KINDS = ("node", "random", "hv_giant", "nearest")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown seed policy {self.kind!r}")
        if self.kind == "node" and (self.node is None or self.node < 0):
            raise ValueError("node policy needs a non-negative id")
        if self.kind == "nearest" and (self.x is None or self.y is None):
            raise ValueError("nearest policy needs x and y")

    @classmethod
    def parse(cls, text: str) -> "SeedPolicy":
        """Parse ``random``, ``hv_giant``, ``node:7`` or ``nearest:1.5,2``."""
        kind, _, arg = text.strip().partition(":")
        kind = kind.replace("-", "_")
        if kind == "node":
            return cls("node", node=int(arg))
        if kind == "nearest":
            x, y = (float(v) for v in arg.split(","))
            return cls("nearest", x=x, y=y)
        if arg:
            raise ValueError(f"policy {kind!r} takes no argument")
        return cls(kind)

    def __str__(self):
        if self.kind == "node":
            return f"node:{self.node}"
        if self.kind == "nearest":
            return f"nearest:{self.x:g},{self.y:g}"
        return self.kind


def pick_seed(
    graph: SpatialGraph,
    ensemble: NodeEnsemble,
    policy: SeedPolicy,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    if graph.n == 0:
        raise SeedPolicyError("graph has no nodes")
    if policy.kind == "node":
        if policy.node >= graph.n:
            raise SeedPolicyError(f"node {policy.node} out of range (n={graph.n})")
        return np.array([policy.node])
    if policy.kind == "nearest":
        d = np.hypot(graph.coords[:, 0] - policy.x, graph.coords[:, 1] - policy.y)
        return np.array([int(np.argmin(d))])
    if rng is None:
        raise ValueError(f"policy {policy.kind} needs an rng")
    if policy.kind == "random":
        return np.array([int(rng.integers(graph.n))])
    hv = ensemble.classes.highly_vulnerable
    if not hv.any():
        raise SeedPolicyError("no highly vulnerable nodes to seed from")
    report = components(graph, np.flatnonzero(hv))
    members = np.sort(report.largest_members)
    return np.array([int(rng.choice(members))])


def closure_violations(graph: SpatialGraph, ensemble: NodeEnsemble, seeds) -> list[int]:
    """Nodes whose final status contradicts the failure rule."""
    failed = ensemble.failed
    state = np.where(failed, 0.0, ensemble.initial_state)
    seeds = set(int(s) for s in seeds)
    bad = []
    for i in range(graph.n):
        nb = graph.neighbors(i)
        has_failed = bool(failed[nb].any())
        below = math.fsum(state[nb]) < ensemble.threshold[i]
        if failed[i] and i not in seeds and not (has_failed and below):
            bad.append(i)
        if not failed[i] and has_failed and below:
            bad.append(i)
    return bad
