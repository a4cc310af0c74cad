"""Command-line front end: pattern generation, strategy search, benchmarks, server."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, bridge, presets
from .config import WorldConfig, default_config, load_config
from .patterns import (
    GRID,
    POISSON_DISK,
    Pattern,
    PatternSpec,
    load_pattern,
    sample_pattern,
    save_pattern,
    spec_from_dict,
)
from .rules import combo_name, parse_combo
from .search import grasp_search, monte_carlo_eval


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="world config JSON file")
    p.add_argument("--robots", type=int, default=2, help="robot count for the default station")
    p.add_argument("--belt-speed", type=float, default=None, help="belt speed override, m/s")


def _cfg_from_args(args: argparse.Namespace) -> WorldConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = default_config(n_robots=args.robots)
    if args.belt_speed is not None:
        cfg = cfg.with_belt_speed(args.belt_speed)
    return cfg


def _load_source(token: str, belt_width: float) -> "PatternSpec | Pattern":
    """A source token is a pattern file, a spec file, or a name like grid-s0.15."""
    path = Path(token)
    if path.exists():
        doc = json.loads(path.read_text())
        if "objects" in doc:
            return load_pattern(path)
        return spec_from_dict(doc)
    spec = presets.named_pattern_spec(token, belt_width=belt_width)
    if spec is None:
        raise SystemExit(f"no such pattern file or name: {token}")
    return spec


def _load_sources(tokens: str, belt_width: float) -> list:
    out = []
    for token in tokens.split(","):
        token = token.strip()
        if not token:
            continue
        path = Path(token)
        if path.is_dir():
            for child in sorted(path.glob("*.json")):
                out.append(_load_source(str(child), belt_width))
        else:
            out.append(_load_source(token, belt_width))
    if not out:
        raise SystemExit("no pattern sources given")
    return out


def _as_pattern(source, seed: int | None = None) -> Pattern:
    if isinstance(source, Pattern):
        return source
    if seed is not None:
        from dataclasses import replace

        source = replace(source, seed=seed)
    return sample_pattern(source)


def _cmd_pattern_gen(args: argparse.Namespace) -> None:
    if (args.r is None) == (args.s is None):
        raise SystemExit("give exactly one of --r (poisson) or --s (grid)")
    if args.r is not None:
        spec = PatternSpec(
            kind=POISSON_DISK, region_length=args.length, belt_width=args.width,
            min_radius_r=args.r, seed=args.seed,
        )
    else:
        spec = PatternSpec(
            kind=GRID, region_length=args.length, belt_width=args.width,
            spacing_s=args.s, seed=args.seed, grid_jitter=args.jitter,
        )
    pattern = sample_pattern(spec)
    save_pattern(pattern, args.out)
    print(f"wrote {len(pattern)} objects to {args.out}")


def _cmd_strategy_eval(args: argparse.Namespace) -> None:
    cfg = _cfg_from_args(args)
    combo = parse_combo(args.combo)
    if len(combo) != cfg.n_robots:
        raise SystemExit(f"combo has {len(combo)} rules for {cfg.n_robots} robots")
    sources = _load_sources(args.patterns, cfg.belt_width)
    n_samples = args.n_samples if args.n_samples else max(len(sources), 8)
    report = monte_carlo_eval(combo, sources, n_samples, cfg, args.seed)
    print(json.dumps(
        {
            "combo": combo_name(combo),
            "mean_picked_fraction": report.mean_picked_fraction,
            "mean_picks_per_minute": report.mean_picks_per_minute,
            "mean_reward_weighted_rate": report.mean_reward_weighted_rate,
            "mean_weighted_rate_per_minute": report.mean_weighted_rate_per_minute,
            "patterns": len(report.per_pattern),
        },
        indent=2,
    ))


def _cmd_strategy_search(args: argparse.Namespace) -> None:
    cfg = _cfg_from_args(args)
    sources = _load_sources(args.patterns, cfg.belt_width)
    result = grasp_search(
        sources, cfg, iterations=args.iterations, rcl_size=args.rcl_size,
        seed=args.seed, n_samples=args.n_samples,
    )
    if args.trace:
        with open(args.trace, "w") as fh:
            for row in result.trace:
                fh.write(json.dumps(row, separators=(",", ":")) + "\n")
    print(json.dumps(
        {
            "best_combo": combo_name(result.best_combo),
            "mean_picked_fraction": result.report.mean_picked_fraction,
            "mean_weighted_rate_per_minute": result.report.mean_weighted_rate_per_minute,
        },
        indent=2,
    ))


def _cmd_bench_compare(args: argparse.Namespace) -> None:
    cfg = _cfg_from_args(args)
    controllers = [bench.parse_controller(tok) for tok in args.controllers.split(",") if tok]
    if args.preset:
        patterns = presets.preset_patterns(args.preset, belt_width=cfg.belt_width)
    else:
        sources = _load_sources(args.patterns, cfg.belt_width)
        patterns = [(f"pattern-{i}", _as_pattern(s, args.seed)) for i, s in enumerate(sources)]
    result = bench.compare(controllers, patterns, cfg)
    for row in result.rows:
        print(
            f"{row['controller']:<24} {row['pattern']:<16} "
            f"picked {100 * row['picked_fraction']:6.1f}%  "
            f"time {row['completion_time']:7.1f} s  "
            f"{row['picks_per_minute']:6.2f} picks/min"
        )
    for b in result.benefits:
        print(
            f"{b['other']} vs {b['base']} on {b['pattern']}: "
            f"{b['benefit_pct']:+.1f}% picks/min"
        )
    if args.out:
        bench.export_plot_data(list(result.rows), args.out)
        print(f"wrote {args.out}")


def _cmd_bench_maxspeed(args: argparse.Namespace) -> None:
    cfg = _cfg_from_args(args)
    name, factory = bench.parse_controller(args.controller)
    pattern = _as_pattern(_load_source(args.pattern, cfg.belt_width), args.seed)
    speed = bench.max_belt_speed(
        factory, pattern, cfg, lo=args.lo, hi=args.hi, tol=args.tol
    )
    print(f"{name}: max belt speed {speed:.3f} m/s (bracket [{args.lo}, {args.hi}], tol {args.tol})")


def _cmd_serve(args: argparse.Namespace) -> None:
    cfg = _cfg_from_args(args)
    if args.stdio:
        bridge.serve_stdio(cfg, sys.stdin, sys.stdout)
        return
    # bind before announcing so --port 0 reports the real ephemeral port
    with bridge.BridgeServer((args.host, args.port), cfg) as server:
        host, port = server.server_address[:2]
        print(f"serving on {host}:{port}", file=sys.stderr, flush=True)
        server.serve_forever()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beltsort")
    sub = parser.add_subparsers(dest="command", required=True)

    p_pat = sub.add_parser("pattern", help="pattern tools")
    pat_sub = p_pat.add_subparsers(dest="pattern_command", required=True)
    p_gen = pat_sub.add_parser("gen", help="sample a pattern to a JSON file")
    p_gen.add_argument("--kind", choices=["poisson", "grid"], help="inferred from --r/--s")
    p_gen.add_argument("--r", type=float, default=None, help="poisson minimum radius, m")
    p_gen.add_argument("--s", type=float, default=None, help="grid spacing, m")
    p_gen.add_argument("--length", type=float, default=1.5)
    p_gen.add_argument("--width", type=float, default=0.6)
    p_gen.add_argument("--jitter", type=float, default=0.0)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_pattern_gen)

    p_strat = sub.add_parser("strategy", help="rule-combination evaluation and search")
    strat_sub = p_strat.add_subparsers(dest="strategy_command", required=True)
    p_eval = strat_sub.add_parser("eval", help="Monte-Carlo score of one combo")
    p_eval.add_argument("--combo", required=True, help="e.g. SPT,FIFO")
    p_eval.add_argument("--patterns", required=True, help="files, dirs, or names, comma separated")
    p_eval.add_argument("--n-samples", type=int, default=None)
    p_eval.add_argument("--seed", type=int, default=0)
    _add_config_args(p_eval)
    p_eval.set_defaults(func=_cmd_strategy_eval)
    p_search = strat_sub.add_parser("search", help="GRASP over rule combinations")
    p_search.add_argument("--patterns", required=True)
    p_search.add_argument("--iterations", type=int, default=8)
    p_search.add_argument("--rcl-size", type=int, default=2)
    p_search.add_argument("--n-samples", type=int, default=None)
    p_search.add_argument("--seed", type=int, default=0)
    p_search.add_argument("--trace", help="write the search trace as JSON lines")
    _add_config_args(p_search)
    p_search.set_defaults(func=_cmd_strategy_search)

    p_bench = sub.add_parser("bench", help="controller benchmarks")
    bench_sub = p_bench.add_subparsers(dest="bench_command", required=True)
    p_cmp = bench_sub.add_parser("compare", help="controllers x patterns table")
    p_cmp.add_argument("--preset", help=f"named pattern set, e.g. {presets.EVAL4}")
    p_cmp.add_argument("--patterns", help="used when no preset is given")
    p_cmp.add_argument("--controllers", required=True,
                       help="robust-gt,greedy-gt,combo:SPT+FIFO,bridge:host:port")
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--out", help="write long-format CSV here")
    _add_config_args(p_cmp)
    p_cmp.set_defaults(func=_cmd_bench_compare)
    p_max = bench_sub.add_parser("maxspeed", help="bisect the fastest all-picked belt speed")
    p_max.add_argument("--controller", required=True)
    p_max.add_argument("--pattern", required=True)
    p_max.add_argument("--seed", type=int, default=None)
    p_max.add_argument("--lo", type=float, default=0.01)
    p_max.add_argument("--hi", type=float, default=0.20)
    p_max.add_argument("--tol", type=float, default=0.001)
    _add_config_args(p_max)
    p_max.set_defaults(func=_cmd_bench_maxspeed)

    p_serve = sub.add_parser("serve", help="run the reset/act episode server")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=7331)
    p_serve.add_argument("--stdio", action="store_true", help="serve one session over stdio")
    _add_config_args(p_serve)
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
