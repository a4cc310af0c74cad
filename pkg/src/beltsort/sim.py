"""Discrete-time world model: belt advection, pick-and-place lifecycle, rewards.

The episode is the unit of work.  It advances in fixed ticks; between ticks,
idle robots with at least one feasible candidate raise decision requests that
a controller answers with a candidate index (or None to wait a tick).  All
decision geometry is planned from the robot's rest point, which is where the
end effector parks between tasks and where every carry ends.

Event logs are lists of dicts with fixed key order, so two runs with equal
inputs serialize to byte-identical JSON lines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .config import WorldConfig, validate_config
from .kinematics import EPS, intercept_tau, plan_intercept, rest_reach_window
from .patterns import Pattern, PatternObject

ON_BELT = "on_belt"
TARGETED = "targeted"
PICKED = "picked"
MISSED = "missed"

_S_ON_BELT, _S_TARGETED, _S_PICKED, _S_MISSED = 0, 1, 2, 3
_STATE_NAMES = (ON_BELT, TARGETED, PICKED, MISSED)


class SimError(Exception):
    pass


class SimDoneError(SimError):
    """Raised when the episode is advanced past its done tick."""


class RobotBusyError(SimError):
    pass


class NotACandidateError(SimError):
    pass


def reward_of(area_A: float, p_detection: float, p_grasp: float, k: float) -> float:
    """Object reward: p_detection * p_grasp * logistic(k * area_A), in [0, 1]."""
    if area_A < 0.0:
        raise ValueError(f"negative area {area_A}")
    if not (0.0 <= p_detection <= 1.0):
        raise ValueError(f"p_detection {p_detection} outside [0, 1]")
    if not (0.0 <= p_grasp <= 1.0):
        raise ValueError(f"p_grasp {p_grasp} outside [0, 1]")
    return p_detection * p_grasp / (1.0 + math.exp(-k * area_A))


@dataclass(frozen=True)
class WasteObject:
    """Snapshot of one item on the belt."""

    id: int
    x: float
    y: float
    area_cm2: float
    p_detection: float
    p_grasp: float
    reward_r: float
    state: str


@dataclass(frozen=True)
class PnPTask:
    robot_index: int
    object_id: int
    decision_time: float
    intercept_point: tuple[float, float]
    intercept_time: float
    carry_end_time: float

    @property
    def t_process(self) -> float:
        return self.carry_end_time - self.decision_time


@dataclass(frozen=True)
class CandidateFeature:
    object_id: int
    x_rel: float
    y_rel: float
    t_process: float
    reward_r: float


@dataclass(frozen=True)
class DecisionRequest:
    """One idle robot's view of its feasible candidates at the current tick.

    Candidates are sorted by descending belt progress and truncated to
    action_slots.  other_robots lists (robot_index, busy, t_available) for
    every robot except the deciding one, in ascending index order.
    """

    robot_index: int
    sim_time: float
    candidates: tuple[CandidateFeature, ...]
    other_robots: tuple[tuple[int, bool, float], ...]


@dataclass(frozen=True)
class EpisodeStats:
    n_total: int
    n_picked: int
    n_missed: int
    completion_time: float
    picks_per_minute: float
    reward_weighted_rate: float
    total_return: float
    reward_sum_picked: float
    reward_sum_total: float

    def as_dict(self) -> dict:
        return {
            "n_total": self.n_total,
            "n_picked": self.n_picked,
            "n_missed": self.n_missed,
            "completion_time": self.completion_time,
            "picks_per_minute": self.picks_per_minute,
            "reward_weighted_rate": self.reward_weighted_rate,
            "total_return": self.total_return,
            "reward_sum_picked": self.reward_sum_picked,
            "reward_sum_total": self.reward_sum_total,
        }


Controller = Callable[[DecisionRequest], "int | None"]


def intercept(robot, ee_pos, obj: WasteObject, t0: float, cfg: WorldConfig) -> PnPTask | None:
    """Full pick-and-place plan for one object, or None when infeasible."""
    if obj.state != ON_BELT:
        return None
    plan = plan_intercept(
        robot, ee_pos, obj.x, obj.y, cfg.belt_speed, cfg.belt_length, cfg.belt_width
    )
    if plan is None:
        return None
    tau, mx, my = plan
    carry = math.dist((mx, my), robot.rest)
    t_pick = t0 + tau
    return PnPTask(
        robot_index=robot.index,
        object_id=obj.id,
        decision_time=t0,
        intercept_point=(mx, my),
        intercept_time=t_pick,
        carry_end_time=t_pick + cfg.grasp_dwell + carry / robot.ee_speed + cfg.drop_dwell,
    )


class Episode:
    """One simulated run of a pattern through the station.

    The pattern is fed in leading object first: at t = 0 the object with the
    greatest pattern-local x sits at the belt entry (x = 0) and the rest trail
    upstream at negative x, advecting in at belt speed.
    """

    def __init__(self, cfg: WorldConfig, pattern: Pattern):
        self.cfg = validate_config(cfg)
        if abs(pattern.belt_width - cfg.belt_width) > 1e-9:
            raise SimError(
                f"pattern belt width {pattern.belt_width} does not match "
                f"config belt width {cfg.belt_width}"
            )
        objs = pattern.objects
        n = len(objs)
        span = pattern.span
        self._ids = [o.id for o in objs]
        self._index_of_id = {o.id: i for i, o in enumerate(objs)}
        if len(self._index_of_id) != n:
            raise SimError("pattern has duplicate object ids")
        self._x = np.array([o.x - span for o in objs], dtype=float)
        self._y = np.array([o.y for o in objs], dtype=float)
        self._area = np.array([o.area_cm2 for o in objs], dtype=float)
        self._pd = np.array([o.p_detection for o in objs], dtype=float)
        self._pg = np.array([o.p_grasp for o in objs], dtype=float)
        self._reward = np.array(
            [reward_of(o.area_cm2, o.p_detection, o.p_grasp, cfg.reward_k) for o in objs],
            dtype=float,
        )
        self._state = np.full(n, _S_ON_BELT, dtype=np.int8)
        self._exited = np.zeros(n, dtype=bool)

        # per-robot pickable-position windows, object missable once past all of them
        n_r = cfg.n_robots
        self._win_lo = np.full((n_r, n), np.inf)
        self._win_hi = np.full((n_r, n), -np.inf)
        for r in cfg.robots:
            for j in range(n):
                win = rest_reach_window(
                    r, float(self._y[j]), cfg.belt_speed, cfg.belt_length, cfg.belt_width
                )
                if win is not None:
                    self._win_lo[r.index, j], self._win_hi[r.index, j] = win
        self._miss_hi = (
            self._win_hi.max(axis=0) if n_r > 0 and n > 0 else np.full(n, -np.inf)
        )

        self.tick = 0
        self.sim_time = 0.0
        self.done = False
        self.completion_time = 0.0
        self.terminal_reward = 0.0
        self.n_picked = 0
        self.n_missed = 0
        self.total_return = 0.0
        self.reward_sum_picked = 0.0
        self.reward_sum_total = float(self._reward.sum())
        self._pending_reward = 0.0
        self._tasks: list[PnPTask | None] = [None] * n_r
        self._pick_pending = [False] * n_r
        self._acted: set[int] = set()
        self.events: list[dict] = []
        self._emit(
            "init",
            {
                "objects": n,
                "robots": n_r,
                "belt_speed": cfg.belt_speed,
                "tick_rate": cfg.tick_rate,
                "seed": cfg.rng_seed,
            },
        )
        self._resolve_tick()

    # -- bookkeeping ------------------------------------------------------

    def _emit(self, kind: str, payload: dict) -> None:
        self.events.append({"tick": self.tick, "kind": kind, "payload": payload})

    def objects(self) -> list[WasteObject]:
        return [self._object(i) for i in range(len(self._ids))]

    def _object(self, idx: int) -> WasteObject:
        return WasteObject(
            id=self._ids[idx],
            x=float(self._x[idx]),
            y=float(self._y[idx]),
            area_cm2=float(self._area[idx]),
            p_detection=float(self._pd[idx]),
            p_grasp=float(self._pg[idx]),
            reward_r=float(self._reward[idx]),
            state=_STATE_NAMES[self._state[idx]],
        )

    def object_state(self, object_id: int) -> str:
        return _STATE_NAMES[self._state[self._index_of_id[object_id]]]

    def task_of(self, robot_index: int) -> PnPTask | None:
        return self._tasks[robot_index]

    def ee_position(self, robot_index: int) -> tuple[float, float]:
        """Piecewise-linear end-effector position implied by the active task."""
        robot = self.cfg.robots[robot_index]
        task = self._tasks[robot_index]
        if task is None:
            return robot.rest
        t = self.sim_time
        if t >= task.carry_end_time:
            return robot.rest
        if t <= task.decision_time:
            return robot.rest
        mx, my = task.intercept_point
        if t < task.intercept_time:
            f = (t - task.decision_time) / (task.intercept_time - task.decision_time)
            rx, ry = robot.rest
            return (rx + f * (mx - rx), ry + f * (my - ry))
        grasp_end = task.intercept_time + self.cfg.grasp_dwell
        if t < grasp_end:
            return (mx, my)
        carry_time = task.carry_end_time - self.cfg.drop_dwell - grasp_end
        if carry_time <= 0.0 or t >= grasp_end + carry_time:
            return robot.rest
        f = (t - grasp_end) / carry_time
        rx, ry = robot.rest
        return (mx + f * (rx - mx), my + f * (ry - my))

    def take_pending_reward(self) -> float:
        r, self._pending_reward = self._pending_reward, 0.0
        return r

    def stats(self) -> EpisodeStats:
        ct = self.completion_time if self.done else self.sim_time
        ppm = 60.0 * self.n_picked / ct if ct > 0.0 else 0.0
        rwr = (
            self.reward_sum_picked / self.reward_sum_total
            if self.reward_sum_total > 0.0
            else 1.0
        )
        return EpisodeStats(
            n_total=len(self._ids),
            n_picked=self.n_picked,
            n_missed=self.n_missed,
            completion_time=ct,
            picks_per_minute=ppm,
            reward_weighted_rate=rwr,
            total_return=self.total_return,
            reward_sum_picked=self.reward_sum_picked,
            reward_sum_total=self.reward_sum_total,
        )

    # -- tick machinery ---------------------------------------------------

    def advance(self) -> None:
        """Advance one tick: advect, complete task phases, mark misses, check done."""
        if self.done:
            raise SimDoneError("step after done")
        self.tick += 1
        self.sim_time = self.tick * self.cfg.tick_dt
        moving = (self._state != _S_PICKED) & ~self._exited
        self._x[moving] += self.cfg.belt_speed * self.cfg.tick_dt
        self._acted.clear()
        self._resolve_tick()

    def _resolve_tick(self) -> None:
        for i in range(self.cfg.n_robots):
            self._advance_task_phases(i)
        self._mark_misses()
        self._mark_exits()
        self._check_done()

    def _advance_task_phases(self, i: int) -> None:
        task = self._tasks[i]
        if task is None:
            return
        if self._pick_pending[i] and self.sim_time >= task.intercept_time - EPS:
            idx = self._index_of_id[task.object_id]
            self._state[idx] = _S_PICKED
            self.n_picked += 1
            r = float(self._reward[idx])
            self.reward_sum_picked += r
            self.total_return += r
            self._pending_reward += r
            self._pick_pending[i] = False
            self._emit("pick", {"robot": i, "object": task.object_id, "reward": r})
        if not self._pick_pending[i] and self.sim_time >= task.carry_end_time - EPS:
            self._tasks[i] = None
            self._emit("drop", {"robot": i, "object": task.object_id})

    def _mark_misses(self) -> None:
        gone = (self._state == _S_ON_BELT) & (self._x > self._miss_hi + EPS)
        for idx in sorted(np.flatnonzero(gone), key=lambda j: self._ids[j]):
            self._state[idx] = _S_MISSED
            self.n_missed += 1
            self._emit("miss", {"object": self._ids[idx]})

    def _mark_exits(self) -> None:
        off = (
            (self._state != _S_PICKED)
            & ~self._exited
            & (self._x > self.cfg.belt_length + EPS)
        )
        for idx in sorted(np.flatnonzero(off), key=lambda j: self._ids[j]):
            self._exited[idx] = True
            self._emit("exit", {"object": self._ids[idx]})

    def _check_done(self) -> None:
        if self.done:
            return
        if not np.all((self._state == _S_PICKED) | self._exited):
            return
        self.done = True
        self.completion_time = self.sim_time
        rwr = (
            self.reward_sum_picked / self.reward_sum_total
            if self.reward_sum_total > 0.0
            else 1.0
        )
        self.terminal_reward = (
            self.cfg.terminal_bonus + self.cfg.terminal_rate_weight * rwr
        )
        self.total_return += self.terminal_reward
        self._pending_reward += self.terminal_reward
        self._emit(
            "done",
            {
                "n_picked": self.n_picked,
                "n_missed": self.n_missed,
                "completion_time": self.completion_time,
                "terminal_reward": self.terminal_reward,
            },
        )

    # -- decisions --------------------------------------------------------

    def next_decision(self) -> DecisionRequest | None:
        """The lowest-index idle robot with candidates that has not acted this tick."""
        if self.done:
            return None
        for i in range(self.cfg.n_robots):
            if self._tasks[i] is not None or i in self._acted:
                continue
            req = self.build_decision_request(i)
            if req is not None:
                return req
            # no candidates now; commits by other robots cannot add any this tick
            self._acted.add(i)
        return None

    def build_decision_request(self, i: int) -> DecisionRequest | None:
        robot = self.cfg.robots[i]
        near = (
            (self._state == _S_ON_BELT)
            & (self._x >= self._win_lo[i] - EPS)
            & (self._x <= self._win_hi[i] + EPS)
        )
        picks = []
        for idx in np.flatnonzero(near):
            plan = plan_intercept(
                robot,
                robot.rest,
                float(self._x[idx]),
                float(self._y[idx]),
                self.cfg.belt_speed,
                self.cfg.belt_length,
                self.cfg.belt_width,
            )
            if plan is not None:
                picks.append((int(idx), plan))
        if not picks:
            return None
        picks.sort(key=lambda p: (-self._x[p[0]], self._ids[p[0]]))
        picks = picks[: self.cfg.action_slots]
        feats = []
        for idx, (tau, mx, my) in picks:
            carry = math.dist((mx, my), robot.rest)
            feats.append(
                CandidateFeature(
                    object_id=self._ids[idx],
                    x_rel=float(self._x[idx]) - robot.base[0],
                    y_rel=float(self._y[idx]) - robot.base[1],
                    t_process=tau
                    + self.cfg.grasp_dwell
                    + carry / robot.ee_speed
                    + self.cfg.drop_dwell,
                    reward_r=float(self._reward[idx]),
                )
            )
        others = tuple(
            (
                j,
                self._tasks[j] is not None,
                max(0.0, self._tasks[j].carry_end_time - self.sim_time)
                if self._tasks[j] is not None
                else 0.0,
            )
            for j in range(self.cfg.n_robots)
            if j != i
        )
        return DecisionRequest(
            robot_index=i, sim_time=self.sim_time, candidates=tuple(feats), other_robots=others
        )

    def commit_pick(self, robot_index: int, object_id: int, slot: int = -1) -> PnPTask:
        if self.done:
            raise SimDoneError("commit after done")
        if self._tasks[robot_index] is not None:
            raise RobotBusyError(f"robot {robot_index} is busy")
        idx = self._index_of_id.get(object_id)
        if idx is None:
            raise NotACandidateError(f"no object with id {object_id}")
        if self._state[idx] != _S_ON_BELT:
            raise NotACandidateError(
                f"object {object_id} is {_STATE_NAMES[self._state[idx]]}, not on the belt"
            )
        robot = self.cfg.robots[robot_index]
        plan = plan_intercept(
            robot,
            robot.rest,
            float(self._x[idx]),
            float(self._y[idx]),
            self.cfg.belt_speed,
            self.cfg.belt_length,
            self.cfg.belt_width,
        )
        if plan is None:
            raise NotACandidateError(f"object {object_id} is out of robot {robot_index}'s reach")
        tau, mx, my = plan
        carry = math.dist((mx, my), robot.rest)
        t_pick = self.sim_time + tau
        task = PnPTask(
            robot_index=robot_index,
            object_id=object_id,
            decision_time=self.sim_time,
            intercept_point=(mx, my),
            intercept_time=t_pick,
            carry_end_time=t_pick
            + self.cfg.grasp_dwell
            + carry / robot.ee_speed
            + self.cfg.drop_dwell,
        )
        self._tasks[robot_index] = task
        self._pick_pending[robot_index] = True
        self._state[idx] = _S_TARGETED
        self._acted.add(robot_index)
        self._emit("assign", {"robot": robot_index, "object": object_id, "slot": slot})
        # a zero-travel intercept (or zero dwells) can complete within this tick
        self._advance_task_phases(robot_index)
        self._check_done()
        return task

    def decline(self, robot_index: int) -> None:
        """Explicit no-op: the robot waits out the current tick."""
        self._acted.add(robot_index)
        self._emit("noop", {"robot": robot_index})

    # -- branching support --------------------------------------------------

    def snapshot(self) -> dict:
        """Cheap copy of the mutable state, for search over decision branches."""
        return {
            "tick": self.tick,
            "sim_time": self.sim_time,
            "done": self.done,
            "completion_time": self.completion_time,
            "terminal_reward": self.terminal_reward,
            "n_picked": self.n_picked,
            "n_missed": self.n_missed,
            "total_return": self.total_return,
            "reward_sum_picked": self.reward_sum_picked,
            "pending": self._pending_reward,
            "x": self._x.copy(),
            "state": self._state.copy(),
            "exited": self._exited.copy(),
            "tasks": list(self._tasks),
            "pick_pending": list(self._pick_pending),
            "acted": set(self._acted),
            "n_events": len(self.events),
        }

    def restore(self, snap: dict) -> None:
        self.tick = snap["tick"]
        self.sim_time = snap["sim_time"]
        self.done = snap["done"]
        self.completion_time = snap["completion_time"]
        self.terminal_reward = snap["terminal_reward"]
        self.n_picked = snap["n_picked"]
        self.n_missed = snap["n_missed"]
        self.total_return = snap["total_return"]
        self.reward_sum_picked = snap["reward_sum_picked"]
        self._pending_reward = snap["pending"]
        self._x[:] = snap["x"]
        self._state[:] = snap["state"]
        self._exited[:] = snap["exited"]
        self._tasks = list(snap["tasks"])
        self._pick_pending = list(snap["pick_pending"])
        self._acted = set(snap["acted"])
        del self.events[snap["n_events"] :]


def max_episode_ticks(cfg: WorldConfig, pattern: Pattern) -> int:
    """Generous upper bound on episode length, used as a runaway guard."""
    travel = (pattern.span + cfg.belt_length) / cfg.belt_speed
    return int((travel + 120.0) * cfg.tick_rate)


def run_episode(
    cfg: WorldConfig,
    pattern: Pattern,
    controller: Controller,
    max_ticks: int | None = None,
) -> tuple[EpisodeStats, list[dict]]:
    """Drive a full episode; deterministic given (cfg, pattern, controller)."""
    ep = Episode(cfg, pattern)
    limit = max_ticks if max_ticks is not None else max_episode_ticks(cfg, pattern)
    while True:
        while (req := ep.next_decision()) is not None:
            choice = controller(req)
            if choice is None:
                ep.decline(req.robot_index)
            else:
                ep.commit_pick(req.robot_index, req.candidates[choice].object_id, slot=choice)
        if ep.done:
            return ep.stats(), ep.events
        if ep.tick >= limit:
            raise SimError(f"episode exceeded {limit} ticks without finishing")
        ep.advance()


def events_to_jsonl(events: Iterable[dict]) -> str:
    """Serialize an event log with stable key order, one JSON object per line."""
    return "".join(json.dumps(e, separators=(",", ":")) + "\n" for e in events)


def pattern_of_objects(objs: Iterable[PatternObject], belt_width: float) -> Pattern:
    """Convenience wrapper for hand-built object lists in tests and tools."""
    return Pattern(belt_width=belt_width, objects=tuple(objs))
