import math
from collections import deque

import numpy as np
import pytest

from rggcascade.cascade import NodeEnsemble, classify
from rggcascade.rgg import RegionSpec, build_graph

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_instance(rng, n_max=50, torus=None):
    """Small random geometric graph with drawn states and thresholds."""
    n = int(rng.integers(2, n_max + 1))
    density = rng.uniform(0.5, 6.0)
    side = math.sqrt(n / density)
    if torus is None:
        torus = bool(rng.integers(2))
    region = RegionSpec(side, side, "torus" if torus else "box")
    coords = rng.random((n, 2)) * side
    g = build_graph(coords, 1.0, region)
    s = 1.0 - rng.random(n)
    mu = rng.choice([0.05, 0.2, 0.5, 1.0, 3.0])
    phi = rng.exponential(1.0 / mu, n)
    return g, NodeEnsemble(s, phi, classify(g, s, phi))


def sequential_closure(graph, initial_state, threshold, seeds, order):
    """Apply the failure rule one node at a time in ``order`` until stable."""
    nbrs = [graph.neighbors(i).tolist() for i in range(graph.n)]
    failed = set(int(s) for s in seeds)
    changed = True
    while changed:
        changed = False
        for i in order:
            if i in failed:
                continue
            nb = nbrs[i]
            if not any(j in failed for j in nb):
                continue
            total = sum(0.0 if j in failed else initial_state[j] for j in nb)
            if total < threshold[i]:
                failed.add(i)
                changed = True
    return failed


def bfs_components(graph, subset):
    subset = set(int(i) for i in subset)
    seen = set()
    sizes = []
    for start in sorted(subset):
        if start in seen:
            continue
        seen.add(start)
        q = deque([start])
        size = 0
        while q:
            u = q.popleft()
            size += 1
            for v in graph.neighbors(u).tolist():
                if v in subset and v not in seen:
                    seen.add(v)
                    q.append(v)
        sizes.append(size)
    return sorted(sizes, reverse=True)
