"""Command line entry point: ``rggcascade {analyze,simulate,sweep,render}``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .analysis import analyze
from .distributions import DistributionSpec, QuadratureError
from .experiment import (
    ConfigError,
    ExperimentConfig,
    config_from_mapping,
    load_config_file,
    parse_grid,
    simulate,
    sweep,
)
from .render import NodeFileError, read_nodes, render_svg

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with flat experiment keys")
    p.add_argument("--lambda", dest="lambda_", type=float, help="node density (per unit area)")
    p.add_argument("--lambda1", type=float, help="comparison density for the vulnerable condition")
    p.add_argument("--mu", type=float, help="exponential threshold rate")
    p.add_argument("--n", type=int, help="fixed node count (default: Poisson with --lambda)")
    p.add_argument("--box", nargs=2, type=float, metavar=("W", "H"))
    p.add_argument("--torus", action="store_true", default=None, help="wrap the region")
    p.add_argument("--radius", type=float)
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int, help="master seed (u64); drawn and printed if omitted")
    p.add_argument("--seed-policy", help="random | hv_giant | node:ID | nearest:X,Y")
    p.add_argument("--gc-threshold", type=float)
    p.add_argument("--gc-basis", choices=["network", "subset"])
    p.add_argument("--k-max", type=int)
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for replicates")


def _merged(args) -> dict:
    values = load_config_file(args.config) if args.config else {}
    overrides = {
        "lambda": args.lambda_,
        "lambda1": args.lambda1,
        "mu": args.mu,
        "n": args.n,
        "box": args.box,
        "torus": args.torus,
        "radius": args.radius,
        "replicates": args.replicates,
        "seed": args.seed,
        "seed_policy": args.seed_policy,
        "gc_threshold": args.gc_threshold,
        "gc_basis": args.gc_basis,
        "k_max": args.k_max,
        "out": str(args.out) if args.out else None,
    }
    if getattr(args, "mu_grid", None) is not None:
        overrides["mu_grid"] = args.mu_grid
    values.update({k: v for k, v in overrides.items() if v is not None})
    return values


def _out_dir(values: dict) -> Path:
    return Path(values.get("out") or ".")


def _seeded(config: ExperimentConfig) -> ExperimentConfig:
    if config.master_seed is None:
        config = config.with_seed()
        print(f"master seed: {config.master_seed}", file=sys.stderr)
    return config


def cmd_analyze(args) -> int:
    values = _merged(args)
    if values.get("mu") is None:
        raise ConfigError("mu: required")
    cfg = config_from_mapping({k: v for k, v in values.items() if k not in ("replicates",)})
    if cfg.density is None:
        raise ConfigError("lambda: required for analyze")
    rep = analyze(
        DistributionSpec.uniform_unit(),
        DistributionSpec.exponential(cfg.mu),
        cfg.density,
        cfg.lambda1,
        k_max=cfg.k_max,
        find_critical=args.critical,
    )
    out = _out_dir(values)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "analysis.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity", "k", "value", "error_bound"])
        for q, k, v, e in rep.rows():
            w.writerow([q, k, f"{v:.17e}", f"{e:.17e}"])
    text = rep.summary()
    (out / "analysis.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    values = _merged(args)
    cfg = _seeded(config_from_mapping(values))
    summaries = simulate(cfg, _out_dir(values), jobs=args.jobs)
    n = len(summaries)
    print(
        f"{n} replicates: hv_gc {sum(s.hv_gc for s in summaries)}/{n}, "
        f"weak_gc {sum(s.weak_gc for s in summaries)}/{n}, "
        f"cascade {sum(s.cascade for s in summaries)}/{n}"
    )
    errors = [s for s in summaries if s.seed_error]
    if errors:
        print(f"{len(errors)} replicates had no valid seed ({errors[0].seed_error})", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    values = _merged(args)
    grid_text = values.get("mu_grid")
    if grid_text is None:
        raise ConfigError("mu_grid: required for sweep")
    grid = parse_grid(grid_text) if isinstance(grid_text, str) else parse_grid(",".join(map(str, grid_text)))
    values.setdefault("mu", grid[0])
    cfg = _seeded(config_from_mapping(values))
    rows = sweep(cfg, grid, _out_dir(values), jobs=args.jobs)
    for r in rows:
        print(
            f"mu={r['mu']:<10g} hv_gc={r['hv_gc_prob']:.3f} weak_gc={r['weak_gc_prob']:.3f} "
            f"cascade={r['cascade_prob']:.3f} failed={r['failed_fraction_mean']:.4f}"
        )
    return 0


def cmd_render(args) -> int:
    try:
        table = read_nodes(args.nodes)
    except OSError as exc:
        raise ConfigError(f"nodes: cannot read {args.nodes}: {exc.strerror}") from None
    try:
        svg = render_svg(
            table,
            style=args.style,
            radius=args.radius,
            box=tuple(args.box) if args.box else None,
            seed_node=args.seed_node,
            draw_edges=not args.no_edges,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = args.out or Path(args.nodes).with_suffix(".svg")
    Path(out).write_text(svg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rggcascade",
        description="Continuous-state cascading failure on random geometric graphs.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="evaluate the analytic cascade conditions")
    _experiment_flags(p)
    p.add_argument("--critical", action="store_true", help="also search the critical threshold rate")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run seeded replicates and write node/summary CSVs")
    _experiment_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="aggregate replicates over a grid of threshold rates")
    _experiment_flags(p)
    p.add_argument("--mu-grid", help="a:b:step or comma list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", help="draw a node CSV as SVG")
    p.add_argument("nodes", type=Path)
    p.add_argument("--out", type=Path, help="SVG path (default: next to the CSV)")
    p.add_argument("--style", choices=sorted(["class", "weak", "failed"]), default="class")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--box", nargs=2, type=float, metavar=("W", "H"))
    p.add_argument("--seed-node", type=int, help="draw an arrow at this node id")
    p.add_argument("--no-edges", action="store_true")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, NodeFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
