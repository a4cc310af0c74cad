import math

import pytest

from beltsort.config import (
    ConfigError,
    RobotSpec,
    WorldConfig,
    collect_violations,
    config_from_dict,
    config_to_dict,
    default_config,
    load_config,
    save_config,
    validate_config,
    workspace_strip_overlap,
)


def codes(cfg):
    return {v.code for v in collect_violations(cfg)}


def test_default_config_is_valid():
    cfg = validate_config(default_config())
    assert cfg.n_robots == 2
    assert cfg.tick_dt == pytest.approx(0.1)
    # belt extends past the last robot's reach
    last = cfg.robots[-1]
    assert cfg.belt_length > last.base[0] + 0.0
    assert cfg.belt_length >= last.base[0] + last.reach


def test_default_config_geometry():
    cfg = default_config(n_robots=4)
    xs = [r.base[0] for r in cfg.robots]
    assert xs == sorted(xs)
    sides = [math.copysign(1.0, r.base[1]) for r in cfg.robots]
    assert sides == [-1.0, 1.0, -1.0, 1.0]
    for r in cfg.robots:
        assert abs(r.base[1]) == pytest.approx(cfg.belt_width / 2 + 0.15)


def test_rest_defaults_to_base():
    r = RobotSpec(index=0, base=(1.0, -0.45), reach=0.8, ee_speed=0.5)
    assert r.rest == r.base
    r2 = RobotSpec(index=0, base=(1.0, -0.45), reach=0.8, ee_speed=0.5, rest_point=(1.0, -0.3))
    assert r2.rest == (1.0, -0.3)


def test_belt_speed_must_be_positive():
    cfg = default_config().with_belt_speed(0.0)
    assert "belt-speed" in codes(cfg)
    with pytest.raises(ConfigError):
        validate_config(cfg)


def test_ee_must_outrun_belt():
    cfg = default_config(belt_speed=0.6, ee_speed=0.5)
    assert "ee-slower-than-belt" in codes(cfg)


def test_rest_point_must_be_reachable():
    bad = RobotSpec(index=0, base=(1.0, -0.45), reach=0.5, ee_speed=0.5, rest_point=(2.0, -0.45))
    cfg = default_config()
    cfg = WorldConfig(**{**config_as_kwargs(cfg), "robots": (bad,)})
    assert "rest-point-out-of-reach" in codes(cfg)


def config_as_kwargs(cfg):
    return {
        "belt_length": cfg.belt_length,
        "belt_width": cfg.belt_width,
        "belt_speed": cfg.belt_speed,
        "tick_rate": cfg.tick_rate,
        "robots": cfg.robots,
        "action_slots": cfg.action_slots,
        "grasp_dwell": cfg.grasp_dwell,
        "drop_dwell": cfg.drop_dwell,
        "terminal_bonus": cfg.terminal_bonus,
        "terminal_rate_weight": cfg.terminal_rate_weight,
        "reward_k": cfg.reward_k,
        "rng_seed": cfg.rng_seed,
    }


def test_out_of_order_robots_rejected():
    cfg = default_config()
    swapped = (cfg.robots[1], cfg.robots[0])
    bad = WorldConfig(**{**config_as_kwargs(cfg), "robots": swapped})
    assert "robots-out-of-order" in codes(bad)


def test_same_side_robots_rejected():
    a = RobotSpec(index=0, base=(1.0, -0.45), reach=0.8, ee_speed=0.5)
    b = RobotSpec(index=1, base=(2.4, -0.45), reach=0.8, ee_speed=0.5)
    cfg = WorldConfig(**{**config_as_kwargs(default_config()), "robots": (a, b)})
    assert "non-alternating-sides" in codes(cfg)


def test_overlapping_workspaces_rejected():
    # pitch 0.6 < combined strip footprints with reach 0.8
    cfg = default_config(base_pitch=0.6)
    assert "overlapping-workspaces" in codes(cfg)


def test_strip_overlap_zero_at_default_pitch():
    cfg = default_config()
    a, b = cfg.robots
    assert workspace_strip_overlap(a, b, cfg.belt_width) <= 1e-9


def test_strip_overlap_matches_sampled_oracle():
    # brute-force: max over y of the x-interval overlap inside the strip
    a = RobotSpec(index=0, base=(1.0, -0.45), reach=0.8, ee_speed=0.5)
    b = RobotSpec(index=1, base=(1.8, 0.45), reach=0.8, ee_speed=0.5)
    width = 0.6
    best = 0.0
    for i in range(2001):
        y = -width / 2 + width * i / 2000
        ha = a.reach**2 - (y - a.base[1]) ** 2
        hb = b.reach**2 - (y - b.base[1]) ** 2
        if ha <= 0 or hb <= 0:
            continue
        ha, hb = math.sqrt(ha), math.sqrt(hb)
        lo = max(a.base[0] - ha, b.base[0] - hb)
        hi = min(a.base[0] + ha, b.base[0] + hb)
        best = max(best, hi - lo)
    got = workspace_strip_overlap(a, b, width)
    assert got == pytest.approx(best, abs=1e-6)


def test_config_roundtrip(tmp_path):
    cfg = default_config(n_robots=3, belt_speed=0.07)
    d = config_to_dict(cfg)
    assert config_from_dict(d) == cfg
    p = tmp_path / "cfg.json"
    save_config(cfg, p)
    assert load_config(p) == cfg


def test_with_belt_speed_replaces_only_speed():
    cfg = default_config()
    faster = cfg.with_belt_speed(0.12)
    assert faster.belt_speed == 0.12
    assert faster.robots == cfg.robots
    assert faster.belt_length == cfg.belt_length
