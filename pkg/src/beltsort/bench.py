"""Benchmark harness: controller comparisons, belt-speed limits, CSV export."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .bridge import BridgeClient, build_obs
from .config import WorldConfig
from .patterns import Pattern
from .presets import robust_combo
from .rules import Rule, combo_controller, parse_combo
from .search import greedy_gt
from .sim import Controller, DecisionRequest, run_episode

#: A controller factory sees the (possibly respeeded) config and the concrete
#: pattern, so per-pattern searchers and remote policies both fit.
ControllerFactory = Callable[[WorldConfig, Pattern], Controller]

METRICS = ("picked_pct", "completion_s", "picks_per_min")


class NoFeasibleSpeedError(RuntimeError):
    pass


def rule_combo_factory(combo: Sequence[Rule]) -> ControllerFactory:
    fixed = tuple(combo)
    return lambda cfg, pattern: combo_controller(fixed)


def robust_gt_factory() -> ControllerFactory:
    return lambda cfg, pattern: combo_controller(robust_combo(cfg.n_robots))


def greedy_gt_factory() -> ControllerFactory:
    return lambda cfg, pattern: combo_controller(greedy_gt(pattern, cfg).combo)


def bridge_policy_factory(host: str, port: int) -> ControllerFactory:
    """Controller that defers each decision to a remote policy server.

    The policy server speaks one-line JSON: {"cmd":"decide","obs":[...],
    "mask":[...]} in, {"slot": k} out.  A slot pointing at a padded/masked
    entry counts as a decline.
    """

    def factory(cfg: WorldConfig, pattern: Pattern) -> Controller:
        client = BridgeClient(host, port)

        def controller(req: DecisionRequest) -> int | None:
            obs, mask = build_obs(cfg, req)
            reply = client.request({"cmd": "decide", "obs": obs, "mask": mask})
            slot = reply.get("slot")
            if not isinstance(slot, int) or not (0 <= slot < len(req.candidates)):
                return None
            return slot

        return controller

    return factory


def parse_controller(text: str) -> tuple[str, ControllerFactory]:
    """Parse CLI controller names: robust-gt, greedy-gt, combo:SPT+FIFO, bridge:host:port."""
    name = text.strip()
    if name == "robust-gt":
        return name, robust_gt_factory()
    if name == "greedy-gt":
        return name, greedy_gt_factory()
    if name.startswith("combo:"):
        combo = parse_combo(name[len("combo:"):])
        return name, rule_combo_factory(combo)
    if name.startswith("bridge:"):
        rest = name[len("bridge:"):]
        host, _, port = rest.rpartition(":")
        if not host:
            raise ValueError(f"bridge controller needs host:port, got {rest!r}")
        return name, bridge_policy_factory(host, int(port))
    raise ValueError(f"unknown controller {text!r}")


def run_controller(
    factory: ControllerFactory, pattern: Pattern, cfg: WorldConfig
) -> dict:
    stats, _ = run_episode(cfg, pattern, factory(cfg, pattern))
    return {
        "picked_fraction": stats.n_picked / stats.n_total if stats.n_total else 1.0,
        "completion_time": stats.completion_time,
        "picks_per_minute": stats.picks_per_minute,
    }


def benefit_pct(base: float, other: float) -> float:
    """Relative gain of `other` over `base`, in percent."""
    if base == 0.0:
        return float("inf") if other > 0.0 else 0.0
    return 100.0 * (other - base) / base


@dataclass(frozen=True)
class CompareResult:
    rows: tuple[dict, ...]
    benefits: tuple[dict, ...]


def compare(
    controllers: Sequence[tuple[str, ControllerFactory]],
    patterns: Sequence[tuple[str, Pattern]],
    cfg: WorldConfig,
) -> CompareResult:
    """Every controller against every pattern, plus pairwise picks/min gains."""
    if not controllers or not patterns:
        raise ValueError("need at least one controller and one pattern")
    rows = []
    for cname, factory in controllers:
        for pname, pattern in patterns:
            r = run_controller(factory, pattern, cfg)
            rows.append({"controller": cname, "pattern": pname, **r})
    by_pair = {(r["controller"], r["pattern"]): r for r in rows}
    benefits = []
    for aname, _ in controllers:
        for bname, _ in controllers:
            if aname == bname:
                continue
            for pname, _ in patterns:
                a = by_pair[(aname, pname)]["picks_per_minute"]
                b = by_pair[(bname, pname)]["picks_per_minute"]
                benefits.append(
                    {
                        "base": aname,
                        "other": bname,
                        "pattern": pname,
                        "metric": "picks_per_minute",
                        "benefit_pct": benefit_pct(a, b),
                    }
                )
    return CompareResult(rows=tuple(rows), benefits=tuple(benefits))


def all_picked(factory: ControllerFactory, pattern: Pattern, cfg: WorldConfig,
               belt_speed: float) -> bool:
    probe = cfg.with_belt_speed(belt_speed)
    stats, _ = run_episode(probe, pattern, factory(probe, pattern))
    return stats.n_picked == stats.n_total


def feasibility_profile(
    factory: ControllerFactory,
    pattern: Pattern,
    cfg: WorldConfig,
    speeds: Sequence[float],
) -> list[tuple[float, bool]]:
    return [(v, all_picked(factory, pattern, cfg, v)) for v in speeds]


def max_belt_speed(
    factory: ControllerFactory,
    pattern: Pattern,
    cfg: WorldConfig,
    lo: float = 0.01,
    hi: float = 0.20,
    tol: float = 0.001,
) -> float:
    """Largest belt speed at which the controller still picks everything.

    Bisection over [lo, hi]; meaningful only where feasibility is monotone in
    the speed (check with feasibility_profile first).  The bracket must stay
    below every robot's end-effector speed.
    """
    if not (0.0 < lo < hi):
        raise ValueError(f"bad bracket [{lo}, {hi}]")
    if not all_picked(factory, pattern, cfg, lo):
        raise NoFeasibleSpeedError(f"objects are already missed at {lo} m/s")
    if all_picked(factory, pattern, cfg, hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if all_picked(factory, pattern, cfg, mid):
            lo = mid
        else:
            hi = mid
    return lo


def rows_to_long(rows: Sequence[dict]) -> list[dict]:
    """Comparison rows to long-format (controller, pattern, metric, value)."""
    long_rows = []
    for r in rows:
        values = {
            "picked_pct": 100.0 * r["picked_fraction"],
            "completion_s": r["completion_time"],
            "picks_per_min": r["picks_per_minute"],
        }
        for metric in METRICS:
            long_rows.append(
                {
                    "controller": r["controller"],
                    "pattern": r["pattern"],
                    "metric": metric,
                    "value": values[metric],
                }
            )
    return long_rows


def export_plot_data(rows: Sequence[dict], path: str | Path) -> None:
    """Write comparison rows as long-format CSV with a stable header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["controller", "pattern", "metric", "value"])
        for r in rows_to_long(rows):
            writer.writerow([r["controller"], r["pattern"], r["metric"], repr(r["value"])])


def load_plot_data(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["controller", "pattern", "metric", "value"]:
            raise ValueError(f"unexpected plot-data header {reader.fieldnames}")
        return [
            {
                "controller": row["controller"],
                "pattern": row["pattern"],
                "metric": row["metric"],
                "value": float(row["value"]),
            }
            for row in reader
        ]
