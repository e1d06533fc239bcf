"""Acceptance criteria, one test per criterion (criterion 6 is split by property).

Each test appends a ``CRITERION n: PASS|FAIL ...`` line to the session log,
which is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from rggcascade.analysis import critical_mu, rho_k, sigma_k, solve_m_prime, theorem2_lhs
from rggcascade.cascade import classify, closure_violations, run_cascade, NodeEnsemble
from rggcascade.cli import main
from rggcascade.distributions import DistributionSpec
from rggcascade.experiment import ExperimentConfig, iter_replicates, run_replicate
from rggcascade.percolation import components
from rggcascade.rgg import RegionSpec, build_graph

from conftest import bfs_components, random_instance, sequential_closure

U = DistributionSpec.uniform_unit()


def E(mu):
    return DistributionSpec.exponential(mu)


def report(log, label, ok, detail):
    line = f"CRITERION {label}: {'PASS' if ok else 'FAIL'}  {detail}"
    log.append(line)
    print(line)
    return ok


def test_criterion_1_closed_form(acceptance_log):
    t0 = time.perf_counter()
    worst_rho = worst_sigma = 0.0
    for mu in (0.05, 0.075, 0.1, 1.0, 10.0):
        for k in range(1, 11):
            exact = math.exp(k * (math.log(math.expm1(mu)) - math.log(mu)) - mu * k * k)
            worst_rho = max(worst_rho, abs(rho_k(U, E(mu), k) - exact))
        exact = 1 + (math.exp(-mu) - 1) / mu
        worst_sigma = max(worst_sigma, abs(sigma_k(U, E(mu), 1) - exact))
    elapsed = time.perf_counter() - t0
    ok = worst_rho <= 1e-8 and worst_sigma <= 1e-8 and elapsed < 1.0
    assert report(
        acceptance_log, "1", ok,
        f"max|rho err|={worst_rho:.2e} max|sigma err|={worst_sigma:.2e} time={elapsed:.3f}s",
    )


def test_criterion_2_m_prime(acceptance_log):
    t0 = time.perf_counter()
    root = solve_m_prime(3.85 / 4)
    elapsed = time.perf_counter() - t0
    ok = 0.076 <= root <= 0.078 and elapsed < 0.1
    assert report(acceptance_log, "2", ok, f"m'={root:.10f} time={elapsed:.4f}s")


def test_criterion_3_critical_mu(acceptance_log):
    t0 = time.perf_counter()
    mu_star = critical_mu(4.0)
    hi = theorem2_lhs(U, E(1357.0), 4.0, 1e-12)
    lo = theorem2_lhs(U, E(1300.0), 4.0, 1e-12)
    elapsed = time.perf_counter() - t0
    ok = (
        1352 <= mu_star <= 1362
        and hi.value + hi.truncation_bound < 1 / 27
        and lo.value - lo.truncation_bound >= 1 / 27
        and elapsed < 10
    )
    assert report(
        acceptance_log, "3", ok,
        f"mu*={mu_star:.2f} LHS(1357)={hi.value:.10f} LHS(1300)={lo.value:.10f} "
        f"1/27={1 / 27:.10f} time={elapsed:.2f}s",
    )


def test_criterion_4_cascade_regime(acceptance_log):
    cfg = ExperimentConfig(
        mu=0.075, n=1600, width=20, height=20, seed_policy="hv_giant", replicates=100, master_seed=20240001
    )
    t0 = time.perf_counter()
    summaries = list(iter_replicates(cfg, summaries_only=True))
    elapsed = time.perf_counter() - t0
    hits = sum(s.hv_largest_fraction >= 0.1 and s.cascade for s in summaries)
    ok = hits >= 80 and elapsed < 60
    assert report(
        acceptance_log, "4", ok,
        f"HV-GC and cascade in {hits}/100 replicates "
        f"(mean failed {np.mean([s.failed_count for s in summaries]):.0f}/1600) time={elapsed:.1f}s",
    )


def test_criterion_5_no_cascade_regime(acceptance_log):
    cfg = ExperimentConfig(
        mu=1360.0, n=1600, width=20, height=20, seed_policy="random", replicates=100, master_seed=20240002
    )
    t0 = time.perf_counter()
    summaries = list(iter_replicates(cfg, summaries_only=True))
    elapsed = time.perf_counter() - t0
    hits = sum((not s.weak_gc) and s.failed_count <= 20 for s in summaries)
    ok = hits >= 95 and elapsed < 60
    assert report(
        acceptance_log, "5", ok,
        f"no weak-GC and <=20 failed in {hits}/100 replicates "
        f"(max failed {max(s.failed_count for s in summaries)}) time={elapsed:.1f}s",
    )


def test_criterion_6a_order_independence(acceptance_log):
    rng = np.random.default_rng(60001)
    mismatches = 0
    for _ in range(1000):
        g, ens = random_instance(rng, n_max=50)
        seeds = rng.choice(g.n, size=int(rng.integers(1, 3)), replace=False)
        got = set(run_cascade(g, ens.copy(), seeds).failed_ids.tolist())
        order = rng.permutation(g.n).tolist()
        if sequential_closure(g, ens.initial_state, ens.threshold, seeds, order) != got:
            mismatches += 1
    assert report(acceptance_log, "6a", mismatches == 0, f"order independence: {mismatches}/1000 mismatches")


def test_criterion_6b_monotonicity(acceptance_log):
    rng = np.random.default_rng(60002)
    bad = 0
    for _ in range(500):
        g, ens = random_instance(rng)
        a = rng.choice(g.n, size=1)
        b = np.union1d(a, rng.choice(g.n, size=min(3, g.n), replace=False))
        fa = run_cascade(g, ens.copy(), a).failed
        fb = run_cascade(g, ens.copy(), b).failed
        bumped = ens.threshold + rng.exponential(0.5, g.n)
        ens2 = NodeEnsemble(ens.initial_state, bumped, classify(g, ens.initial_state, bumped))
        ft = run_cascade(g, ens2, a).failed
        bad += int(not np.all(fb[fa])) + int(not np.all(ft[fa]))
    assert report(acceptance_log, "6b", bad == 0, f"seed/threshold monotonicity: {bad} violations in 500 instances")


def test_criterion_6c_closure_soundness(acceptance_log):
    rng = np.random.default_rng(60003)
    bad = 0
    for _ in range(500):
        g, ens = random_instance(rng)
        seeds = set(rng.choice(g.n, size=1).tolist())
        run_cascade(g, ens, seeds)
        bad += len(closure_violations(g, ens, seeds))
    assert report(acceptance_log, "6c", bad == 0, f"closure soundness: {bad} violating nodes in 500 instances")


def test_criterion_6d_union_find_vs_bfs(acceptance_log):
    rng = np.random.default_rng(60004)
    bad = 0
    for _ in range(500):
        g, _ = random_instance(rng, n_max=120)
        mask = rng.random(g.n) < rng.uniform(0.1, 1.0)
        rep = components(g, mask)
        if sorted(rep.component_sizes, reverse=True) != bfs_components(g, np.flatnonzero(mask)):
            bad += 1
    assert report(acceptance_log, "6d", bad == 0, f"union-find vs BFS: {bad}/500 mismatches")


def _brute(coords, r, region):
    d = coords[:, None, :] - coords[None, :, :]
    d = np.abs(d)
    if region.torus:
        d = np.minimum(d, np.array([region.width, region.height]) - d)
    adj = np.hypot(d[..., 0], d[..., 1]) <= r
    np.fill_diagonal(adj, False)
    return [np.flatnonzero(row).tolist() for row in adj]


def test_criterion_6e_grid_vs_brute_force(acceptance_log):
    rng = np.random.default_rng(60005)
    bad = 0
    for trial in range(300):
        w, h = rng.uniform(0.5, 15, 2)
        region = RegionSpec(w, h, "torus" if trial % 2 else "box")
        n = int(rng.integers(0, 400))
        r = rng.uniform(0.2, 3.0)
        coords = rng.random((n, 2)) * [w, h]
        g = build_graph(coords, r, region)
        if [g.neighbors(i).tolist() for i in range(n)] != _brute(coords, r, region):
            bad += 1
    assert report(acceptance_log, "6e", bad == 0, f"grid vs brute-force adjacency: {bad}/300 mismatches")


def _degree_tallies(mu, replicates, master_seed):
    cfg = ExperimentConfig(mu=mu, density=4.0, width=20, height=20, torus=True, master_seed=master_seed)
    deg_all, hv_all, hr_all = [], [], []
    for i in range(replicates):
        run = run_replicate(cfg, i, keep_graph=True)
        c = classify(run.graph, run.initial_state, run.threshold)
        deg_all.append(run.graph.degree)
        hv_all.append(c.highly_vulnerable)
        hr_all.append(c.highly_reliable)
    return np.concatenate(deg_all), np.concatenate(hv_all), np.concatenate(hr_all)


@pytest.mark.parametrize("mu", [0.075, 1.0, 1360.0])
def test_criterion_6f_degree_class_frequencies(acceptance_log, mu):
    """Per-degree HV/HR frequencies against rho_k / sigma_k within 3 binomial SE."""
    deg, hv, hr = _degree_tallies(mu, 50, 60006)
    worst = []
    checked = failed = 0
    for k in range(1, int(deg.max()) + 1):
        sel = deg == k
        n_k = int(sel.sum())
        if n_k < 200:
            continue
        for name, flags, p in (("HV", hv, rho_k(U, E(mu), k)), ("HR", hr, sigma_k(U, E(mu), k))):
            f = flags[sel].mean()
            se = math.sqrt(p * (1 - p) / n_k)
            checked += 1
            if abs(f - p) > 3 * se:
                failed += 1
                worst.append((abs(f - p) / se if se > 0 else math.inf, name, k, f, p))
    worst.sort(reverse=True)
    detail = f"per-degree class frequencies mu={mu:g}: {checked - failed}/{checked} (k, class) cells within 3 SE"
    if worst:
        z, name, k, f, p = worst[0]
        detail += f"; worst {name} k={k}: empirical {f:.4f} vs predicted {p:.3g} ({z:.1f} SE)"
    assert report(acceptance_log, f"6f[mu={mu:g}]", checked > 0 and failed == 0, detail)


def test_criterion_7_determinism(acceptance_log, tmp_path):
    args = ["--mu", "0.075", "--n", "400", "--box", "10", "10", "--replicates", "3", "--seed", "77"]
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert main(["simulate", *args, "--seed-policy", "hv_giant", "--out", str(d)]) == 0
    a = {p.name: p.read_bytes() for p in sorted(dirs[0].iterdir())}
    b = {p.name: p.read_bytes() for p in sorted(dirs[1].iterdir())}
    ok = a == b and len(a) == 5
    assert report(acceptance_log, "7", ok, f"{len(a)} files compared, identical={a == b}")
