import io
import json
import threading

import pytest

from beltsort.bridge import (
    BridgeClient,
    BridgeError,
    BridgeServer,
    BridgeSession,
    build_obs,
    obs_width,
    serve_stdio,
)
from beltsort.config import default_config
from beltsort.patterns import PatternSpec, pattern_to_dict, sample_pattern
from beltsort.rules import Rule, combo_controller
from beltsort.sim import run_episode

CFG = default_config(n_robots=2, belt_speed=0.08)


def spt_slot(reply):
    """argmin t_process over valid slots, from the wire features alone."""
    best, best_tp = None, None
    for slot, ok in enumerate(reply["mask"]):
        if not ok:
            continue
        tp = reply["obs"][slot * 4 + 2]
        if best_tp is None or tp < best_tp:
            best, best_tp = slot, tp
    return best


def drive_spt(session, pattern_ref, seed=0):
    reply = session.handle({"cmd": "reset", "pattern": pattern_ref, "seed": seed})
    assert "error" not in reply
    total = reply["reward"]
    while not reply["done"]:
        reply = session.handle({"cmd": "act", "slot": spt_slot(reply)})
        assert "error" not in reply
        total += reply["reward"]
    return reply, total


def test_obs_width_formula():
    assert obs_width(CFG) == 5 * CFG.action_slots + 2 * CFG.n_robots
    assert len(build_obs(CFG, None)[0]) == obs_width(CFG)


def test_obs_when_done_is_zero():
    obs, mask = build_obs(CFG, None)
    assert all(v == 0.0 for v in obs)
    assert all(m == 0 for m in mask)


def test_reset_reply_shape():
    session = BridgeSession(CFG)
    reply = session.handle({"cmd": "reset", "pattern": "poisson-r0.2", "seed": 7})
    assert list(reply.keys()) == ["v", "obs", "mask", "reward", "done", "info"]
    assert reply["v"] == 1
    assert len(reply["obs"]) == obs_width(CFG)
    assert len(reply["mask"]) == CFG.action_slots
    assert sum(reply["mask"]) >= 1
    assert reply["done"] is False
    assert reply["info"]["deciding_robot"] in (0, 1)
    assert reply["info"]["sim_time"] >= 0.0
    # mask echoed at the tail of the observation vector
    tail = reply["obs"][-CFG.action_slots - 2 * CFG.n_robots:][:0] or None
    assert reply["obs"][4 * CFG.action_slots + 2 * CFG.n_robots:] == [float(m) for m in reply["mask"]]


def test_full_episode_matches_in_process_spt():
    session = BridgeSession(CFG)
    reply, total = drive_spt(session, "poisson-r0.2", seed=21)
    # same pattern run in process with the SPT rule everywhere
    resolved = sample_pattern(PatternSpec(kind="poisson_disk", region_length=1.5,
                                          belt_width=CFG.belt_width, min_radius_r=0.2, seed=21))
    stats, _ = run_episode(CFG, resolved, combo_controller((Rule.SPT, Rule.SPT)))
    got = reply["info"]["stats"]
    assert got["n_picked"] == stats.n_picked
    assert got["n_missed"] == stats.n_missed
    assert got["completion_time"] == stats.completion_time
    assert got["picks_per_minute"] == stats.picks_per_minute
    assert total == pytest.approx(stats.total_return, abs=1e-9)


def test_pattern_dict_and_spec_dict_resets():
    session = BridgeSession(CFG)
    spec = PatternSpec(kind="grid", region_length=1.0, belt_width=CFG.belt_width,
                       spacing_s=0.3, seed=3)
    from beltsort.patterns import spec_to_dict

    r1 = session.handle({"cmd": "reset", "pattern": spec_to_dict(spec), "seed": 3})
    assert "error" not in r1
    pat = sample_pattern(spec)
    r2 = session.handle({"cmd": "reset", "pattern": pattern_to_dict(pat), "seed": 3})
    assert "error" not in r2
    assert r1["obs"] == r2["obs"]


def test_seed_changes_sampled_pattern():
    session = BridgeSession(CFG)
    a = session.handle({"cmd": "reset", "pattern": "poisson-r0.2", "seed": 1})
    b = session.handle({"cmd": "reset", "pattern": "poisson-r0.2", "seed": 2})
    c = session.handle({"cmd": "reset", "pattern": "poisson-r0.2", "seed": 1})
    assert a["obs"] != b["obs"]
    assert a["obs"] == c["obs"]


def test_error_paths():
    session = BridgeSession(CFG)
    assert session.handle({"cmd": "act", "slot": 0})["error"] == "no_episode"
    assert session.handle({"cmd": "reset", "pattern": "nope-x9"})["error"] == "unknown_pattern"
    assert session.handle({"cmd": "reset", "pattern": {"bogus": 1}})["error"] == "bad_pattern"
    assert session.handle({"cmd": "reset", "pattern": "grid-s0.3", "seed": "x"})["error"] == "bad_seed"
    assert session.handle({"cmd": "wat"})["error"] == "unknown_cmd"
    assert session.handle({"no_cmd": True})["error"] == "bad_message"
    ok = session.handle({"cmd": "reset", "pattern": "grid-s0.3", "seed": 0})
    assert "error" not in ok
    assert session.handle({"cmd": "act", "slot": -1})["error"] == "bad_slot"
    assert session.handle({"cmd": "act", "slot": CFG.action_slots})["error"] == "bad_slot"
    assert session.handle({"cmd": "act", "slot": "a"})["error"] == "bad_slot"


def test_masked_slot_becomes_noop():
    session = BridgeSession(CFG)
    reply = session.handle({"cmd": "reset", "pattern": "grid-s0.3", "seed": 0})
    dead = reply["mask"].index(0) if 0 in reply["mask"] else None
    assert dead is not None
    before = reply["info"]["deciding_robot"]
    reply = session.handle({"cmd": "act", "slot": dead})
    assert "error" not in reply
    assert reply["info"]["noop"] is True


def test_act_after_done_rejected():
    session = BridgeSession(CFG)
    reply, _ = drive_spt(session, "poisson-r0.3", seed=4)
    assert reply["done"] is True
    assert "stats" in reply["info"]
    assert session.handle({"cmd": "act", "slot": 0})["error"] == "episode_done"
    # but a fresh reset recovers the session
    again = session.handle({"cmd": "reset", "pattern": "poisson-r0.3", "seed": 4})
    assert "error" not in again


def test_serve_stdio_roundtrip():
    lines = [
        json.dumps({"cmd": "reset", "pattern": "grid-s0.3", "seed": 5}),
        "this is not json",
        json.dumps({"cmd": "act", "slot": 0}),
        json.dumps({"cmd": "close"}),
        json.dumps({"cmd": "act", "slot": 0}),  # after close: never read
    ]
    out = io.StringIO()
    serve_stdio(CFG, io.StringIO("\n".join(lines) + "\n"), out)
    replies = [json.loads(l) for l in out.getvalue().splitlines()]
    assert len(replies) == 4
    assert "error" not in replies[0]
    assert replies[1]["error"] == "parse"
    assert "error" not in replies[2]
    assert replies[3] == {"v": 1, "ok": True}


def test_tcp_server_and_client():
    server = BridgeServer(("127.0.0.1", 0), CFG)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        with BridgeClient("127.0.0.1", port) as client:
            step = client.reset("poisson-r0.25", seed=9)
            total = step.reward
            while not step.done:
                slot = next(i for i, m in enumerate(step.mask) if m)
                step = client.act(slot)
                total += step.reward
            assert step.info["stats"]["n_total"] > 0
            with pytest.raises(BridgeError):
                client.act(0)  # episode already done
    finally:
        server.shutdown()
        server.server_close()


def test_reply_is_compact_json():
    # wire framing: one line, no spaces, fixed key order
    out = io.StringIO()
    serve_stdio(CFG, io.StringIO(json.dumps({"cmd": "reset", "pattern": "grid-s0.3"}) + "\n"), out)
    raw = out.getvalue()
    assert raw.endswith("\n") and raw.count("\n") == 1
    assert '"v":1' in raw and ": " not in raw
    assert raw.index('"obs"') < raw.index('"mask"') < raw.index('"reward"')
