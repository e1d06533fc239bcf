"""Seeded Monte Carlo replicates and their CSV artifacts.

Random streams: every replicate ``r`` gets independent generators derived from
``SeedSequence(master_seed, spawn_key=(r, purpose))`` with ``purpose`` one of
:data:`POSITIONS`, :data:`STATES`, :data:`THRESHOLDS`, :data:`SEED_PICK`.
A replicate therefore depends only on (config, master_seed, r), never on how
many replicates ran before it or in which process.
"""

from __future__ import annotations

import csv
import json
import math
import secrets
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .cascade import NodeClass, SeedPolicy, SeedPolicyError, assign_attributes, pick_seed, run_cascade
from .distributions import DistributionSpec
from .percolation import DEFAULT_GC_THRESHOLD, components, gc_present
from .rgg import PointProcessSpec, RegionSpec, build_graph, sample_points

POSITIONS, STATES, THRESHOLDS, SEED_PICK = range(4)

NODE_HEADER = ["id", "x", "y", "state", "threshold", "class", "failed"]


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


def stream(master_seed: int, replicate: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(replicate, purpose))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class ExperimentConfig:
    mu: float
    density: float | None = 4.0
    n: int | None = None
    width: float = 20.0
    height: float = 20.0
    torus: bool = False
    radius: float = 1.0
    state: str = "uniform_unit"
    seed_policy: str = "random"
    gc_threshold: float = DEFAULT_GC_THRESHOLD
    gc_basis: str = "network"
    replicates: int = 1
    master_seed: int | None = None
    lambda1: float | None = None
    k_max: int = 10

    def __post_init__(self):
        def bad(name, why):
            raise ConfigError(f"{name}: {why}")

        if not (isinstance(self.mu, (int, float)) and self.mu > 0 and math.isfinite(self.mu)):
            bad("mu", f"must be a positive number, got {self.mu!r}")
        if self.n is None and (self.density is None or not self.density > 0):
            bad("lambda", "need a positive density or a node count n")
        if self.n is not None and (not isinstance(self.n, int) or self.n < 0):
            bad("n", f"must be a non-negative integer, got {self.n!r}")
        if not (self.width > 0 and self.height > 0):
            bad("box", f"must be positive, got {self.width} x {self.height}")
        if not self.radius > 0:
            bad("radius", "must be > 0")
        if self.state != "uniform_unit":
            bad("state", f"only uniform_unit is supported, got {self.state!r}")
        try:
            SeedPolicy.parse(self.seed_policy)
        except ValueError as exc:
            bad("seed_policy", str(exc))
        if not 0 < self.gc_threshold < 1:
            bad("gc_threshold", "must lie in (0, 1)")
        if self.gc_basis not in ("network", "subset"):
            bad("gc_basis", "must be 'network' or 'subset'")
        if not isinstance(self.replicates, int) or self.replicates < 1:
            bad("replicates", "must be an integer >= 1")
        if self.master_seed is not None and not (
            isinstance(self.master_seed, int) and 0 <= self.master_seed < 2**64
        ):
            bad("seed", "must be an unsigned 64-bit integer")
        if self.lambda1 is not None and self.density is not None and not self.density > self.lambda1 > 0:
            bad("lambda1", "need lambda > lambda1 > 0")

    @property
    def region(self) -> RegionSpec:
        return RegionSpec(self.width, self.height, "torus" if self.torus else "box")

    @property
    def point_process(self) -> PointProcessSpec:
        if self.n is not None:
            return PointProcessSpec.fixed_count(self.n)
        return PointProcessSpec.poisson(self.density)

    @property
    def state_dist(self) -> DistributionSpec:
        return DistributionSpec.uniform_unit()

    @property
    def threshold_dist(self) -> DistributionSpec:
        return DistributionSpec.exponential(self.mu)

    @property
    def policy(self) -> SeedPolicy:
        return SeedPolicy.parse(self.seed_policy)

    def with_seed(self) -> "ExperimentConfig":
        """Return a copy whose master seed is set, drawing one if missing."""
        if self.master_seed is not None:
            return self
        return replace(self, master_seed=secrets.randbits(64))

    def to_json(self) -> dict:
        d = asdict(self)
        out = {
            "mu": d["mu"],
            "lambda": d["density"],
            "n": d["n"],
            "box": [d["width"], d["height"]],
            "torus": d["torus"],
            "radius": d["radius"],
            "state": d["state"],
            "seed_policy": d["seed_policy"],
            "gc_threshold": d["gc_threshold"],
            "gc_basis": d["gc_basis"],
            "replicates": d["replicates"],
            "seed": d["master_seed"],
            "lambda1": d["lambda1"],
            "k_max": d["k_max"],
        }
        return out


# flat JSON key -> ExperimentConfig field
_KEYS = {
    "mu": "mu",
    "lambda": "density",
    "n": "n",
    "torus": "torus",
    "radius": "radius",
    "state": "state",
    "seed_policy": "seed_policy",
    "gc_threshold": "gc_threshold",
    "gc_basis": "gc_basis",
    "replicates": "replicates",
    "seed": "master_seed",
    "lambda1": "lambda1",
    "k_max": "k_max",
}
# keys that belong to the run rather than to the experiment
RUN_KEYS = {"out", "mu_grid", "jobs"}


def config_from_mapping(values: dict) -> ExperimentConfig:
    """Build a config from flat keys (JSON file merged with CLI overrides)."""
    kw = {}
    for key, val in values.items():
        if val is None or key in RUN_KEYS:
            continue
        if key == "box":
            try:
                w, h = (float(v) for v in val)
            except (TypeError, ValueError):
                raise ConfigError(f"box: expected [width, height], got {val!r}") from None
            kw["width"], kw["height"] = w, h
        elif key in _KEYS:
            kw[_KEYS[key]] = val
        else:
            raise ConfigError(f"{key}: unknown configuration key")
    if "mu" not in kw:
        raise ConfigError("mu: required")
    for name in ("mu", "density", "width", "height", "radius", "gc_threshold", "lambda1"):
        if name in kw and kw[name] is not None:
            try:
                kw[name] = float(kw[name])
            except (TypeError, ValueError):
                raise ConfigError(f"{name}: expected a number, got {kw[name]!r}") from None
    for name in ("n", "replicates", "master_seed", "k_max"):
        if name in kw and kw[name] is not None:
            v = kw[name]
            if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
                raise ConfigError(f"{name}: expected an integer, got {v!r}")
            try:
                kw[name] = int(v)
            except (TypeError, ValueError):
                raise ConfigError(f"{name}: expected an integer, got {v!r}") from None
    if "torus" in kw and not isinstance(kw["torus"], bool):
        raise ConfigError(f"torus: expected true/false, got {kw['torus']!r}")
    return ExperimentConfig(**kw)


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    return data


@dataclass
class ReplicateSummary:
    replicate: int
    n: int
    seed_node: int
    seed_error: str
    hv_count: int
    hv_largest: int
    hv_largest_fraction: float
    hv_network_fraction: float
    weak_count: int
    weak_largest: int
    weak_largest_fraction: float
    weak_network_fraction: float
    failed_count: int
    failed_largest: int
    failed_network_fraction: float
    rounds: int
    hv_gc: bool
    weak_gc: bool
    cascade: bool

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                out.append(str(int(v)))
            elif isinstance(v, float):
                out.append(f"{v:.6f}")
            else:
                out.append(str(v))
        return out


@dataclass
class ReplicateRun:
    summary: ReplicateSummary
    coords: np.ndarray
    initial_state: np.ndarray
    threshold: np.ndarray
    label: np.ndarray
    failed: np.ndarray
    graph: object = None

    def node_rows(self):
        codes = [NodeClass(c).code for c in self.label.tolist()]
        for i in range(len(self.coords)):
            x, y = self.coords[i]
            yield [
                i,
                f"{x:.6f}",
                f"{y:.6f}",
                f"{self.initial_state[i]:.6f}",
                f"{self.threshold[i]:.6e}",
                codes[i],
                int(self.failed[i]),
            ]


def run_replicate(config: ExperimentConfig, index: int, keep_graph: bool = False) -> ReplicateRun:
    if config.master_seed is None:
        raise ConfigError("seed: master seed must be set before running replicates")
    seed = config.master_seed
    coords = sample_points(config.region, config.point_process, stream(seed, index, POSITIONS))
    graph = build_graph(coords, config.radius, config.region)
    ens = assign_attributes(
        graph,
        config.state_dist,
        config.threshold_dist,
        (stream(seed, index, STATES), stream(seed, index, THRESHOLDS)),
    )
    n = graph.n
    thr, basis = config.gc_threshold, config.gc_basis
    hv = components(graph, ens.classes.highly_vulnerable)
    weak = components(graph, ens.classes.weak)

    seed_node, seed_error = -1, ""
    try:
        seeds = pick_seed(graph, ens, config.policy, stream(seed, index, SEED_PICK))
    except SeedPolicyError as exc:
        seeds = np.empty(0, dtype=np.int64)
        seed_error = str(exc)
    else:
        seed_node = int(seeds[0])
    result = run_cascade(graph, ens, seeds)
    failed = components(graph, result.failed)

    summary = ReplicateSummary(
        replicate=index,
        n=n,
        seed_node=seed_node,
        seed_error=seed_error,
        hv_count=hv.subset_size,
        hv_largest=hv.largest,
        hv_largest_fraction=hv.largest_fraction,
        hv_network_fraction=hv.network_fraction,
        weak_count=weak.subset_size,
        weak_largest=weak.largest,
        weak_largest_fraction=weak.largest_fraction,
        weak_network_fraction=weak.network_fraction,
        failed_count=failed.subset_size,
        failed_largest=failed.largest,
        failed_network_fraction=failed.network_fraction,
        rounds=len(result.rounds),
        hv_gc=gc_present(hv, thr, basis),
        weak_gc=gc_present(weak, thr, basis),
        # the failed set grows from one seed and is always connected, so only
        # the network basis can tell a cascade from a local failure
        cascade=gc_present(failed, thr, "network"),
    )
    return ReplicateRun(
        summary,
        graph.coords,
        ens.initial_state,
        ens.threshold,
        ens.label,
        result.failed,
        graph if keep_graph else None,
    )


def _summary_only(args):
    config, index = args
    return run_replicate(config, index).summary


def _full(args):
    config, index = args
    return run_replicate(config, index)


def iter_replicates(config: ExperimentConfig, jobs: int = 1, summaries_only: bool = False):
    """Yield replicate results in index order, optionally across processes."""
    fn = _summary_only if summaries_only else _full
    tasks = [(config, i) for i in range(config.replicates)]
    if jobs <= 1:
        yield from map(fn, tasks)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs)))


def write_nodes(path, run: ReplicateRun) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NODE_HEADER)
        w.writerows(run.node_rows())


def simulate(config: ExperimentConfig, out_dir, jobs: int = 1) -> list[ReplicateSummary]:
    """Run every replicate; write ``nodes_XXXX.csv``, ``summary.csv`` and ``config.json``."""
    config = config.with_seed()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ReplicateSummary.header())
        for run in iter_replicates(config, jobs):
            write_nodes(out / f"nodes_{run.summary.replicate:04d}.csv", run)
            w.writerow(run.summary.row())
            summaries.append(run.summary)
    with open(out / "config.json", "w") as fh:
        json.dump(config.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summaries


def _mean_se(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=float)
    if a.size < 2:
        return float(a.mean()) if a.size else 0.0, 0.0
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))


SWEEP_HEADER = [
    "mu",
    "replicates",
    "hv_gc_fraction_mean",
    "hv_gc_fraction_se",
    "weak_gc_fraction_mean",
    "weak_gc_fraction_se",
    "failed_fraction_mean",
    "failed_fraction_se",
    "hv_gc_prob",
    "weak_gc_prob",
    "cascade_prob",
]


def aggregate(mu: float, summaries: list[ReplicateSummary]) -> dict:
    hv = _mean_se([s.hv_network_fraction for s in summaries])
    weak = _mean_se([s.weak_network_fraction for s in summaries])
    failed = _mean_se([s.failed_count / s.n if s.n else 0.0 for s in summaries])
    return {
        "mu": mu,
        "replicates": len(summaries),
        "hv_gc_fraction_mean": hv[0],
        "hv_gc_fraction_se": hv[1],
        "weak_gc_fraction_mean": weak[0],
        "weak_gc_fraction_se": weak[1],
        "failed_fraction_mean": failed[0],
        "failed_fraction_se": failed[1],
        "hv_gc_prob": float(np.mean([s.hv_gc for s in summaries])),
        "weak_gc_prob": float(np.mean([s.weak_gc for s in summaries])),
        "cascade_prob": float(np.mean([s.cascade for s in summaries])),
    }


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` (inclusive of b up to rounding) or a comma list."""
    try:
        if ":" in text:
            a, b, step = (float(v) for v in text.split(":"))
            if not step > 0 or b < a:
                raise ValueError
            count = int(math.floor((b - a) / step + 1e-9)) + 1
            grid = [round(a + i * step, 12) for i in range(count)]
        else:
            grid = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"mu_grid: cannot parse {text!r}; use a:b:step or a,b,c") from None
    if not grid or any(g <= 0 for g in grid) or grid != sorted(grid):
        raise ConfigError("mu_grid: need a nonempty ascending list of positive rates")
    return grid


def sweep(config: ExperimentConfig, mu_grid: list[float], out_dir, jobs: int = 1) -> list[dict]:
    """Aggregate replicates at each rate; every rate reuses the same streams."""
    config = config.with_seed()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for mu in mu_grid:
        cfg = replace(config, mu=float(mu))
        rows.append(aggregate(mu, list(iter_replicates(cfg, jobs, summaries_only=True))))
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([repr(r["mu"]), r["replicates"]] + [f"{r[k]:.6f}" for k in SWEEP_HEADER[2:]])
    with open(out / "config.json", "w") as fh:
        d = config.to_json()
        d["mu_grid"] = list(mu_grid)
        json.dump(d, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return rows
