"""Strategy-combination search: Monte-Carlo scoring, GRASP, and exact baselines.

Scores compare combinations on a shared pattern sample (common random
numbers), so differences between combos are never masked by sampling noise.
The search objective is the mean reward-weighted picking rate per minute,
with mean picked fraction as the tie-breaker.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from itertools import product
from typing import Sequence

from .config import WorldConfig
from .patterns import Pattern, PatternSpec, sample_pattern
from .rules import RULES, Rule, combo_controller, combo_name
from .sim import Episode, EpisodeStats, run_episode

#: Exhaustive combo enumeration is capped at 6 robots (6^6 episodes per pattern).
MAX_EXHAUSTIVE_ROBOTS = 6


def weighted_rate_per_minute(stats: EpisodeStats) -> float:
    if stats.completion_time <= 0.0:
        return 0.0
    return 60.0 * stats.reward_sum_picked / stats.completion_time


def sample_eval_patterns(
    sources: Sequence["PatternSpec | Pattern"], n_samples: int, seed: int
) -> list[Pattern]:
    """n_samples patterns, round-robin over the sources, seeds derived from seed.

    Concrete Pattern instances pass through unchanged; specs are resampled
    with a per-slot seed so the set is reproducible and shared across combos.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not sources:
        raise ValueError("no pattern sources")
    out = []
    for j in range(n_samples):
        src = sources[j % len(sources)]
        if isinstance(src, Pattern):
            out.append(src)
        else:
            out.append(sample_pattern(replace(src, seed=seed * 1_000_003 + j)))
    return out


@dataclass(frozen=True)
class EvalReport:
    combo: tuple
    mean_picked_fraction: float
    mean_picks_per_minute: float
    mean_reward_weighted_rate: float
    mean_weighted_rate_per_minute: float
    per_pattern: tuple[dict, ...]

    @property
    def score(self) -> tuple[float, float]:
        return (self.mean_weighted_rate_per_minute, self.mean_picked_fraction)


def monte_carlo_eval(
    combo: Sequence[Rule | None],
    pattern_specs: Sequence["PatternSpec | Pattern"],
    n_samples: int,
    cfg: WorldConfig,
    seed: int,
    patterns: list[Pattern] | None = None,
) -> EvalReport:
    """Average episode metrics of a combo over a sampled pattern set.

    Passing a pre-sampled `patterns` list pins the sample (common random
    numbers); otherwise the set is derived deterministically from `seed`.
    """
    if patterns is None:
        patterns = sample_eval_patterns(pattern_specs, n_samples, seed)
    controller = combo_controller(combo)
    rows = []
    for j, pattern in enumerate(patterns):
        stats, _ = run_episode(cfg, pattern, controller)
        rows.append(
            {
                "pattern": j,
                "n_total": stats.n_total,
                "n_picked": stats.n_picked,
                "picked_fraction": stats.n_picked / stats.n_total if stats.n_total else 1.0,
                "completion_time": stats.completion_time,
                "picks_per_minute": stats.picks_per_minute,
                "reward_weighted_rate": stats.reward_weighted_rate,
                "weighted_rate_per_minute": weighted_rate_per_minute(stats),
            }
        )
    n = len(rows)

    def mean(key: str) -> float:
        return sum(r[key] for r in rows) / n

    return EvalReport(
        combo=tuple(combo),
        mean_picked_fraction=mean("picked_fraction"),
        mean_picks_per_minute=mean("picks_per_minute"),
        mean_reward_weighted_rate=mean("reward_weighted_rate"),
        mean_weighted_rate_per_minute=mean("weighted_rate_per_minute"),
        per_pattern=tuple(rows),
    )


@dataclass(frozen=True)
class GraspResult:
    best_combo: tuple[Rule, ...]
    report: EvalReport
    trace: tuple[dict, ...]


def grasp_search(
    pattern_specs: Sequence["PatternSpec | Pattern"],
    cfg: WorldConfig,
    iterations: int = 8,
    rcl_size: int = 2,
    seed: int = 0,
    n_samples: int | None = None,
) -> GraspResult:
    """Greedy-randomized construction plus one-change hill climbing.

    Construction assigns rules robot by robot, scoring each option with the
    robots downstream still inert, and draws uniformly from the rcl_size best.
    Local search moves to the best one-rule swap until no swap improves.  All
    combos within one call share the same pattern sample, and scores are
    cached, so revisited combos cost nothing.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if rcl_size < 1:
        raise ValueError("rcl_size must be >= 1")
    rng = random.Random(seed)
    if n_samples is None:
        n_samples = max(len(pattern_specs), 8)
    patterns = sample_eval_patterns(pattern_specs, n_samples, seed)
    n = cfg.n_robots
    cache: dict[tuple, EvalReport] = {}

    def evaluate(combo: tuple) -> EvalReport:
        rep = cache.get(combo)
        if rep is None:
            rep = monte_carlo_eval(combo, pattern_specs, n_samples, cfg, seed, patterns=patterns)
            cache[combo] = rep
        return rep

    trace: list[dict] = []
    best: tuple[tuple[Rule, ...], EvalReport] | None = None
    for it in range(iterations):
        partial: list[Rule | None] = [None] * n
        for i in range(n):
            scored = []
            for rule in RULES:
                partial[i] = rule
                scored.append((evaluate(tuple(partial)).score, rule))
            partial[i] = None
            scored.sort(key=lambda t: t[0], reverse=True)
            rcl = scored[:rcl_size]
            choice = rng.choice(rcl)
            partial[i] = choice[1]
            trace.append(
                {
                    "iteration": it,
                    "phase": "construct",
                    "robot": i,
                    "rcl": [r.value for _, r in rcl],
                    "chosen": choice[1].value,
                    "objective": choice[0][0],
                }
            )
        current = tuple(partial)
        current_rep = evaluate(current)
        while True:
            best_move = None
            for i in range(n):
                for rule in RULES:
                    if rule is current[i]:
                        continue
                    cand = current[:i] + (rule,) + current[i + 1 :]
                    rep = evaluate(cand)
                    if best_move is None or rep.score > best_move[1].score:
                        best_move = (cand, rep)
            if best_move is None or best_move[1].score <= current_rep.score:
                break
            current, current_rep = best_move
            trace.append(
                {
                    "iteration": it,
                    "phase": "local",
                    "combo": combo_name(current),
                    "objective": current_rep.score[0],
                    "picked_fraction": current_rep.mean_picked_fraction,
                }
            )
        trace.append(
            {
                "iteration": it,
                "phase": "iterate",
                "combo": combo_name(current),
                "objective": current_rep.score[0],
                "picked_fraction": current_rep.mean_picked_fraction,
            }
        )
        if best is None or current_rep.score > best[1].score:
            best = (current, current_rep)
    assert best is not None
    return GraspResult(best_combo=best[0], report=best[1], trace=tuple(trace))


@dataclass(frozen=True)
class GreedyGtResult:
    combo: tuple[Rule, ...]
    stats: EpisodeStats
    trace: tuple[dict, ...]


def greedy_gt(pattern: Pattern, cfg: WorldConfig) -> GreedyGtResult:
    """Best combo for one concrete pattern by full enumeration.

    Maximizes picks per minute; ties go to the lower completion time, then to
    the first combo in canonical rule order.  Above MAX_EXHAUSTIVE_ROBOTS the
    enumeration is replaced by a GRASP run on the same single pattern.
    """
    n = cfg.n_robots
    if n > MAX_EXHAUSTIVE_ROBOTS:
        result = grasp_search((pattern,), cfg, iterations=4, rcl_size=2, seed=0, n_samples=1)
        stats, _ = run_episode(cfg, pattern, combo_controller(result.best_combo))
        trace = ({"phase": "fallback", "reason": f"{n} robots exceed exhaustive cap"},)
        return GreedyGtResult(combo=result.best_combo, stats=stats, trace=trace)
    best: tuple[tuple[float, float], tuple[Rule, ...], EpisodeStats] | None = None
    trace = []
    for combo in product(RULES, repeat=n):
        stats, _ = run_episode(cfg, pattern, combo_controller(combo))
        key = (stats.picks_per_minute, -stats.completion_time)
        trace.append(
            {
                "combo": combo_name(combo),
                "n_picked": stats.n_picked,
                "picks_per_minute": stats.picks_per_minute,
                "completion_time": stats.completion_time,
            }
        )
        if best is None or key > best[0]:
            best = (key, combo, stats)
    assert best is not None
    return GreedyGtResult(combo=best[1], stats=best[2], trace=tuple(trace))


def exhaustive_best_picks(cfg: WorldConfig, pattern: Pattern, max_nodes: int = 2_000_000) -> int:
    """Maximum pick count over every assignment sequence, by branching search.

    At each decision request the search tries every candidate in turn
    (assignment sequences always pick, mirroring the rules).  States reached
    by different orders are deduplicated on (tick, object states, task
    signature).  Exponential in principle; intended for small instances.
    """
    ep = Episode(cfg, pattern)
    memo: dict[tuple, int] = {}
    budget = [max_nodes]

    def state_key() -> tuple:
        tasks = tuple(
            (t.object_id, t.intercept_time, t.carry_end_time, p) if t is not None else None
            for t, p in zip(ep._tasks, ep._pick_pending)
        )
        return (ep.tick, ep._state.tobytes(), tasks, frozenset(ep._acted))

    def explore() -> int:
        while True:
            req = ep.next_decision()
            if req is not None:
                break
            if ep.done:
                return ep.n_picked
            ep.advance()
        key = state_key()
        hit = memo.get(key)
        if hit is not None:
            return hit
        budget[0] -= 1
        if budget[0] < 0:
            raise RuntimeError("exhaustive search exceeded its node budget")
        snap = ep.snapshot()
        best = 0
        for k in range(len(req.candidates)):
            ep.restore(snap)
            ep.commit_pick(req.robot_index, req.candidates[k].object_id, slot=k)
            best = max(best, explore())
        ep.restore(snap)
        memo[key] = best
        return best

    return explore()
