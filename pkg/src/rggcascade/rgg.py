"""Point processes in a rectangle and the geometric graph built on them."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class Boundary(str, enum.Enum):
    BOX = "box"
    TORUS = "torus"


@dataclass(frozen=True)
class RegionSpec:
    width: float
    height: float
    boundary: Boundary = Boundary.BOX

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"region must have positive size, got {self.width} x {self.height}")
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def torus(self) -> bool:
        return self.boundary is Boundary.TORUS

    def scaled(self, factor: float) -> "RegionSpec":
        return RegionSpec(self.width * factor, self.height * factor, self.boundary)


@dataclass(frozen=True)
class PointProcessSpec:
    """Either ``poisson`` with ``density`` (nodes per unit area) or
    ``fixed_count`` with exactly ``n`` nodes."""

    mode: str
    density: float | None = None
    n: int | None = None

    def __post_init__(self):
        if self.mode == "poisson":
            if self.density is None or not self.density > 0:
                raise ValueError("poisson mode needs density > 0")
        elif self.mode == "fixed_count":
            if self.n is None or self.n < 0:
                raise ValueError("fixed_count mode needs n >= 0")
        else:
            raise ValueError(f"unknown point process mode {self.mode!r}")

    @classmethod
    def poisson(cls, density: float) -> "PointProcessSpec":
        return cls("poisson", density=float(density))

    @classmethod
    def fixed_count(cls, n: int) -> "PointProcessSpec":
        return cls("fixed_count", n=int(n))


def sample_points(region: RegionSpec, pp: PointProcessSpec, rng: np.random.Generator) -> np.ndarray:
    """Return an ``(N, 2)`` array of i.i.d. uniform positions in the region.

    In poisson mode N is itself drawn as Poisson(density * area).
    """
    if pp.mode == "poisson":
        count = int(rng.poisson(pp.density * region.area))
    else:
        count = pp.n
    u = rng.random((count, 2))
    return u * np.array([region.width, region.height])


def normalize_scale(density: float, radius: float) -> tuple[float, float]:
    """Map (density, radius) to the unit-radius graph with the same connectivity law.

    Coordinates rescale by ``1 / radius``; the density scales by ``radius**2``.
    """
    if not (density > 0 and radius > 0):
        raise ValueError("density and radius must be positive")
    return density * radius * radius, 1.0


def _cell_counts(region: RegionSpec, radius: float) -> tuple[int, int]:
    # cell side >= radius, so every neighbour sits in the 3x3 block
    return max(1, int(region.width // radius)), max(1, int(region.height // radius))


@dataclass(frozen=True, eq=False)
class SpatialGraph:
    """Nodes with coordinates and a CSR adjacency (sorted neighbour lists).

    ``grid_index`` maps a ``(cx, cy)`` cell to the ids of the nodes inside it.
    """

    coords: np.ndarray
    radius: float
    region: RegionSpec
    indptr: np.ndarray
    indices: np.ndarray
    grid_index: dict

    @property
    def n(self) -> int:
        return len(self.coords)

    def __len__(self):
        return self.n

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    @cached_property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def edges(self) -> np.ndarray:
        """``(E, 2)`` array of undirected edges with ``i < j``."""
        rows = np.repeat(np.arange(self.n), self.degree)
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    def cell_of(self, xy) -> tuple[int, int]:
        nx_, ny_ = _cell_counts(self.region, self.radius)
        return _cell_ids(np.atleast_2d(xy), self.region, nx_, ny_)[0]


def _cell_ids(coords, region, nx_, ny_):
    cx = np.minimum((coords[:, 0] / region.width * nx_).astype(np.int64), nx_ - 1)
    cy = np.minimum((coords[:, 1] / region.height * ny_).astype(np.int64), ny_ - 1)
    return [tuple(c) for c in np.column_stack([np.maximum(cx, 0), np.maximum(cy, 0)]).tolist()]


def pair_distance(a: np.ndarray, b: np.ndarray, region: RegionSpec) -> np.ndarray:
    """Distances between rows of ``a`` and rows of ``b`` under the region metric."""
    d = np.abs(a[:, None, :] - b[None, :, :])
    if region.torus:
        size = np.array([region.width, region.height])
        d = np.minimum(d, size - d)
    return np.sqrt((d * d).sum(axis=-1))


def build_graph(coords, radius: float, region: RegionSpec) -> SpatialGraph:
    """Link every pair of nodes within ``radius`` using a bucket grid."""
    if not radius > 0:
        raise ValueError("radius must be > 0")
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    n = len(coords)
    if n and (
        coords.min() < 0 or np.any(coords[:, 0] > region.width) or np.any(coords[:, 1] > region.height)
    ):
        raise ValueError("coordinates fall outside the region")

    nx_, ny_ = _cell_counts(region, radius)
    cells = _cell_ids(coords, region, nx_, ny_)
    grid: dict[tuple[int, int], list[int]] = {}
    for i, c in enumerate(cells):
        grid.setdefault(c, []).append(i)
    grid_index = {c: np.array(ids, dtype=np.int64) for c, ids in grid.items()}

    rows, cols = [], []
    for (cx, cy), ids in grid_index.items():
        block = set()
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                x, y = cx + dx, cy + dy
                if region.torus:
                    x %= nx_
                    y %= ny_
                elif not (0 <= x < nx_ and 0 <= y < ny_):
                    continue
                block.add((x, y))
        cand = np.concatenate([grid_index[c] for c in sorted(block) if c in grid_index])
        d = pair_distance(coords[ids], coords[cand], region)
        ii, jj = np.nonzero(d <= radius)
        src, dst = ids[ii], cand[jj]
        keep = src != dst
        rows.append(src[keep])
        cols.append(dst[keep])

    if rows:
        src = np.concatenate(rows)
        dst = np.concatenate(cols)
    else:
        src = dst = np.empty(0, dtype=np.int64)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return SpatialGraph(coords, float(radius), region, indptr, dst.astype(np.int64), grid_index)


def rescale_graph(graph: SpatialGraph) -> SpatialGraph:
    """Rebuild ``graph`` in unit-radius coordinates."""
    f = 1.0 / graph.radius
    return build_graph(graph.coords * f, 1.0, graph.region.scaled(f))


def write_nodes_csv(path, coords) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y"])
        for i, (x, y) in enumerate(coords):
            w.writerow([i, f"{x:.6f}", f"{y:.6f}"])


def expected_degree(density: float, radius: float = 1.0) -> float:
    return density * math.pi * radius * radius
