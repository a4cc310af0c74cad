import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beltsort.config import default_config
from beltsort.kinematics import plan_intercept
from beltsort.patterns import Pattern, PatternObject, PatternSpec, sample_pattern
from beltsort.rules import Rule, combo_controller
from beltsort.sim import (
    MISSED,
    ON_BELT,
    PICKED,
    TARGETED,
    Episode,
    NotACandidateError,
    RobotBusyError,
    SimDoneError,
    SimError,
    events_to_jsonl,
    max_episode_ticks,
    reward_of,
    run_episode,
)


def obj(i, x, y, area=100.0, pd=0.9, pg=0.8):
    return PatternObject(id=i, x=x, y=y, area_cm2=area, p_detection=pd, p_grasp=pg)


def one_object_pattern(y=-0.2):
    return Pattern(belt_width=0.6, objects=(obj(0, 0.0, y),))


def poisson(r, seed, length=1.2):
    return sample_pattern(PatternSpec(
        kind="poisson_disk", region_length=length, belt_width=0.6,
        min_radius_r=r, seed=seed,
    ))


# -- reward ---------------------------------------------------------------

def test_reward_zero_area_is_half():
    assert reward_of(0.0, 1.0, 1.0, 0.01) == 0.5


def test_reward_known_value():
    sigma1 = 1.0 / (1.0 + math.exp(-1.0))
    assert reward_of(100.0, 0.9, 0.8, 0.01) == pytest.approx(0.72 * sigma1, abs=1e-12)


def test_reward_domain_errors():
    with pytest.raises(ValueError):
        reward_of(-1.0, 0.9, 0.8, 0.01)
    with pytest.raises(ValueError):
        reward_of(10.0, 1.1, 0.8, 0.01)
    with pytest.raises(ValueError):
        reward_of(10.0, 0.9, -0.1, 0.01)


@settings(max_examples=300, deadline=None)
@given(
    area=st.floats(0.0, 10_000.0),
    pd=st.floats(0.0, 1.0),
    pg=st.floats(0.0, 1.0),
    k=st.floats(0.0001, 0.1),
)
def test_reward_bounded(area, pd, pg, k):
    r = reward_of(area, pd, pg, k)
    assert 0.0 <= r <= 1.0
    assert r <= pd * pg + 1e-12


def test_reward_monotone_in_area():
    rewards = [reward_of(a, 0.9, 0.9, 0.01) for a in (0.0, 50.0, 100.0, 500.0)]
    assert rewards == sorted(rewards)


# -- lifecycle ------------------------------------------------------------

def test_single_object_full_lifecycle():
    cfg = default_config(n_robots=1, belt_speed=0.05)
    ep = Episode(cfg, one_object_pattern())
    picked_task = None
    while not ep.done:
        req = ep.next_decision()
        if req is None:
            ep.advance()
            continue
        assert req.robot_index == 0
        assert len(req.candidates) == 1
        assert ep.object_state(0) == ON_BELT
        picked_task = ep.commit_pick(0, req.candidates[0].object_id)
        assert ep.object_state(0) in (TARGETED, PICKED)
    assert picked_task is not None
    st_ = ep.stats()
    assert st_.n_picked == 1 and st_.n_missed == 0
    kinds = [e["kind"] for e in ep.events]
    assert kinds[0] == "init" and kinds[-1] == "done"
    # the episode ends at the final pick, so the last carry never drops
    assert kinds.index("assign") < kinds.index("pick") < kinds.index("done")
    assert "drop" not in kinds


def test_pick_tick_matches_plan():
    cfg = default_config(n_robots=1, belt_speed=0.05)
    ep = Episode(cfg, one_object_pattern())
    task = None
    while not ep.done:
        req = ep.next_decision()
        if req is None:
            ep.advance()
            continue
        task = ep.commit_pick(0, req.candidates[0].object_id)
    pick = next(e for e in ep.events if e["kind"] == "pick")
    pick_time = pick["tick"] * cfg.tick_dt
    assert 0.0 <= pick_time - task.intercept_time < cfg.tick_dt + 1e-9
    # carry leg and dwells line up with the t_process invariant
    carry = math.dist(task.intercept_point, cfg.robots[0].rest)
    expect = (task.intercept_time - task.decision_time) + cfg.grasp_dwell \
        + carry / cfg.robots[0].ee_speed + cfg.drop_dwell
    assert task.t_process == pytest.approx(expect, abs=1e-12)


def test_unreachable_object_is_missed_then_exits():
    cfg = default_config(n_robots=1, belt_speed=0.10)
    # lane beyond every robot's reach disk: straight to miss
    pat = Pattern(belt_width=0.8, objects=(obj(0, 0.0, 0.39),))
    cfg = default_config(n_robots=1, belt_speed=0.10, belt_width=0.8)
    ep = Episode(cfg, pat)
    while not ep.done:
        assert ep.next_decision() is None
        ep.advance()
    assert ep.object_state(0) == MISSED
    kinds = [e["kind"] for e in ep.events]
    assert "miss" in kinds and "exit" in kinds and "done" in kinds
    st_ = ep.stats()
    assert st_.n_missed == 1 and st_.n_picked == 0
    assert st_.reward_weighted_rate == 0.0


def test_conservation_across_rules():
    cfg = default_config(n_robots=2, belt_speed=0.09)
    for seed in range(4):
        pat = poisson(0.16, seed)
        for rules in ((Rule.SPT, Rule.FIFO), (Rule.PP, Rule.LD)):
            stats, events = run_episode(cfg, pat, combo_controller(rules))
            assert stats.n_picked + stats.n_missed == stats.n_total
            picks = sum(1 for e in events if e["kind"] == "pick")
            misses = sum(1 for e in events if e["kind"] == "miss")
            assert picks == stats.n_picked
            assert misses == stats.n_missed
            assert stats.completion_time > 0.0


def test_missed_objects_still_reach_belt_end():
    # done requires the last object to leave the belt, not just be written off
    cfg = default_config(n_robots=1, belt_speed=0.10)
    pat = Pattern(belt_width=0.6, objects=(obj(0, 0.0, -0.28), obj(1, -0.4, 0.29)))
    stats, events = run_episode(cfg, pat, combo_controller((None,)))
    assert stats.n_missed == 2
    exit_ticks = [e["tick"] for e in events if e["kind"] == "exit"]
    miss_ticks = [e["tick"] for e in events if e["kind"] == "miss"]
    assert len(exit_ticks) == 2
    assert max(miss_ticks) < max(exit_ticks)
    done_tick = events[-1]["tick"]
    assert done_tick == max(exit_ticks)


def test_decline_emits_noop_and_skips_robot_for_tick():
    cfg = default_config(n_robots=1, belt_speed=0.05)
    ep = Episode(cfg, one_object_pattern())
    while ep.next_decision() is None and not ep.done:
        ep.advance()
    req = ep.next_decision()
    assert req is not None
    ep.decline(0)
    assert ep.next_decision() is None  # same tick: robot already acted
    assert any(e["kind"] == "noop" for e in ep.events)
    assert ep.task_of(0) is None


def test_commit_errors():
    cfg = default_config(n_robots=1, belt_speed=0.05)
    ep = Episode(cfg, one_object_pattern())
    while ep.next_decision() is None and not ep.done:
        ep.advance()
    with pytest.raises(NotACandidateError):
        ep.commit_pick(0, 999)
    ep.commit_pick(0, 0)
    with pytest.raises(RobotBusyError):
        ep.commit_pick(0, 0)
    while not ep.done:
        ep.advance()
    with pytest.raises(SimDoneError):
        ep.advance()


def test_pattern_width_mismatch_rejected():
    cfg = default_config(belt_width=0.6)
    with pytest.raises(SimError):
        Episode(cfg, Pattern(belt_width=0.5, objects=(obj(0, 0.0, 0.0),)))


def test_duplicate_ids_rejected():
    cfg = default_config()
    pat = Pattern(belt_width=0.6, objects=(obj(0, 0.0, 0.0), obj(0, -0.5, 0.1)))
    with pytest.raises(SimError):
        Episode(cfg, pat)


def test_ee_position_traces_task():
    cfg = default_config(n_robots=1, belt_speed=0.05)
    # second object trails far enough that the first task fully completes
    pat = Pattern(belt_width=0.6, objects=(obj(0, 1.5, -0.2), obj(1, 0.0, -0.2)))
    ep = Episode(cfg, pat)
    rest = cfg.robots[0].rest
    assert ep.ee_position(0) == rest
    task = None
    saw_rest_after_drop = False
    while not ep.done:
        req = ep.next_decision()
        if req is not None:
            task = ep.commit_pick(0, req.candidates[0].object_id)
        if ep.done:
            break
        ep.advance()
        pos = ep.ee_position(0)
        if task is not None and ep.sim_time < task.intercept_time:
            # outbound: strictly closer to the meet point than rest is
            d_meet = math.dist(pos, task.intercept_point)
            assert d_meet < math.dist(rest, task.intercept_point) + 1e-9
        if ep.task_of(0) is None and any(e["kind"] == "drop" for e in ep.events):
            assert pos == rest
            saw_rest_after_drop = True
    assert saw_rest_after_drop


def test_returns_accumulate():
    cfg = default_config(n_robots=2, belt_speed=0.07)
    pat = poisson(0.2, 3)
    ep = Episode(cfg, pat)
    harvested = 0.0
    while not ep.done:
        req = ep.next_decision()
        if req is None:
            ep.advance()
        else:
            ep.commit_pick(req.robot_index, req.candidates[0].object_id)
        harvested += ep.take_pending_reward()
    harvested += ep.take_pending_reward()
    st_ = ep.stats()
    assert harvested == pytest.approx(st_.total_return, abs=1e-9)
    assert st_.total_return == pytest.approx(
        st_.reward_sum_picked + ep.terminal_reward, abs=1e-9
    )
    assert ep.terminal_reward == pytest.approx(
        cfg.terminal_bonus + cfg.terminal_rate_weight * st_.reward_weighted_rate, abs=1e-12
    )


# -- decision requests ----------------------------------------------------

def test_candidates_sorted_and_truncated():
    cfg = default_config(n_robots=1, belt_speed=0.05, action_slots=3)
    objs = tuple(obj(i, -0.05 * i, -0.2 + 0.01 * i) for i in range(8))
    ep = Episode(cfg, Pattern(belt_width=0.6, objects=objs))
    req = None
    while req is None and not ep.done:
        req = ep.next_decision()
        if req is None:
            ep.advance()
    assert req is not None
    assert len(req.candidates) <= 3
    xs = [c.x_rel for c in req.candidates]
    assert xs == sorted(xs, reverse=True)


def test_candidate_features_are_relative_and_planned():
    cfg = default_config(n_robots=2, belt_speed=0.05)
    ep = Episode(cfg, one_object_pattern())
    req = None
    while req is None and not ep.done:
        req = ep.next_decision()
        if req is None:
            ep.advance()
    robot = cfg.robots[req.robot_index]
    c = req.candidates[0]
    # feature must match an exact replan from rest at this instant
    got = plan_intercept(
        robot, robot.rest, c.x_rel + robot.base[0], c.y_rel + robot.base[1],
        cfg.belt_speed, cfg.belt_length, cfg.belt_width,
    )
    assert got is not None
    tau, meet_x, meet_y = got
    carry = math.dist((meet_x, meet_y), robot.rest)
    expect_tp = tau + cfg.grasp_dwell + carry / robot.ee_speed + cfg.drop_dwell
    assert c.t_process == pytest.approx(expect_tp, abs=1e-12)
    assert len(req.other_robots) == 1
    j, busy, t_avail = req.other_robots[0]
    assert j != req.robot_index and busy is False and t_avail == 0.0


# -- determinism and replay ----------------------------------------------

def test_event_log_byte_identical():
    cfg = default_config(n_robots=2, belt_speed=0.06)
    pat = poisson(0.18, 11)
    ctrl = combo_controller((Rule.SPT, Rule.FIFO))
    _, ev1 = run_episode(cfg, pat, ctrl)
    _, ev2 = run_episode(cfg, pat, ctrl)
    assert events_to_jsonl(ev1) == events_to_jsonl(ev2)
    for line in events_to_jsonl(ev1).splitlines():
        json.loads(line)  # every line is valid standalone JSON


def test_snapshot_restore_resumes_identically():
    cfg = default_config(n_robots=2, belt_speed=0.06)
    pat = poisson(0.18, 5)
    ctrl = combo_controller((Rule.SPT, Rule.FIFO))

    def drive(ep, budget=None):
        steps = 0
        while not ep.done:
            req = ep.next_decision()
            if req is None:
                ep.advance()
                steps += 1
                if budget is not None and steps >= budget:
                    return
            else:
                choice = ctrl(req)
                if choice is None:
                    ep.decline(req.robot_index)
                else:
                    ep.commit_pick(req.robot_index, req.candidates[choice].object_id)

    ep = Episode(cfg, pat)
    drive(ep, budget=60)
    snap = ep.snapshot()
    drive(ep)
    first = events_to_jsonl(ep.events)
    first_stats = ep.stats()
    ep.restore(snap)
    drive(ep)
    assert events_to_jsonl(ep.events) == first
    assert ep.stats() == first_stats


def test_max_episode_ticks_bounds_runtime():
    cfg = default_config(n_robots=2, belt_speed=0.06)
    pat = poisson(0.2, 2)
    bound = max_episode_ticks(cfg, pat)
    stats, events = run_episode(cfg, pat, combo_controller((None, None)))
    assert events[-1]["tick"] <= bound
