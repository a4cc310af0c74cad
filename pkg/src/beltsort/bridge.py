"""Reset/act episode server speaking JSON lines over TCP or stdio.

One session owns one episode stream.  A reset initializes an episode and
auto-advances to the first decision request; each act answers the pending
request and auto-advances to the next one (or to done), accumulating emitted
rewards in between.  Replies always carry protocol version "v": 1 and a fixed
key order, so transcripts of equal runs compare byte for byte.
"""

from __future__ import annotations

import json
import socket
import socketserver
from dataclasses import dataclass, replace
from typing import Callable, TextIO

from .config import WorldConfig
from .patterns import Pattern, PatternError, PatternSpec, pattern_from_dict, sample_pattern, spec_from_dict
from .presets import named_pattern_spec
from .sim import DecisionRequest, Episode

PatternResolver = Callable[[str], "PatternSpec | Pattern | None"]


def obs_width(cfg: WorldConfig) -> int:
    """4 features per action slot, 2 per robot, plus the slot validity mask."""
    return 5 * cfg.action_slots + 2 * cfg.n_robots


def build_obs(cfg: WorldConfig, req: DecisionRequest | None) -> tuple[list[float], list[int]]:
    """Fixed-width observation and slot mask for a request (zeros when done).

    Slot features come first, then (busy, t_available) per robot with the
    deciding robot leading and the rest following in ring order, so one policy
    can serve any seat.  The mask is appended to the vector and also returned
    separately.
    """
    k = cfg.action_slots
    n = cfg.n_robots
    obs: list[float] = []
    n_c = len(req.candidates) if req is not None else 0
    for slot in range(k):
        if req is not None and slot < n_c:
            c = req.candidates[slot]
            obs += [c.x_rel, c.y_rel, c.t_process, c.reward_r]
        else:
            obs += [0.0, 0.0, 0.0, 0.0]
    if req is not None:
        status = {j: (busy, t_avail) for j, busy, t_avail in req.other_robots}
        status[req.robot_index] = (False, 0.0)
        for d in range(n):
            busy, t_avail = status[(req.robot_index + d) % n]
            obs += [1.0 if busy else 0.0, t_avail]
    else:
        obs += [0.0, 0.0] * n
    mask = [1 if slot < n_c else 0 for slot in range(k)]
    obs += [float(m) for m in mask]
    return obs, mask


class BridgeError(Exception):
    pass


@dataclass(frozen=True)
class StepResult:
    obs: list[float]
    mask: list[int]
    reward: float
    done: bool
    info: dict


def default_resolver(cfg: WorldConfig) -> PatternResolver:
    def resolve(name: str) -> PatternSpec | None:
        return named_pattern_spec(name, belt_width=cfg.belt_width)

    return resolve


class BridgeSession:
    """Message handler for one client connection; strictly serial."""

    def __init__(self, cfg: WorldConfig, resolver: PatternResolver | None = None):
        self.cfg = cfg
        self.resolver = resolver if resolver is not None else default_resolver(cfg)
        self.ep: Episode | None = None
        self.req: DecisionRequest | None = None

    def handle(self, msg: dict) -> dict:
        if not isinstance(msg, dict) or "cmd" not in msg:
            return {"v": 1, "error": "bad_message"}
        cmd = msg["cmd"]
        if cmd == "reset":
            return self._reset(msg)
        if cmd == "act":
            return self._act(msg)
        if cmd == "close":
            return {"v": 1, "ok": True}
        return {"v": 1, "error": "unknown_cmd"}

    def _resolve_pattern(self, ref, seed: int | None) -> Pattern:
        if isinstance(ref, str):
            found = self.resolver(ref)
            if found is None:
                raise BridgeError("unknown_pattern")
            if isinstance(found, Pattern):
                return found
            if seed is not None:
                found = replace(found, seed=seed)
            return sample_pattern(found)
        if isinstance(ref, dict) and "objects" in ref:
            return pattern_from_dict(ref)
        if isinstance(ref, dict) and "kind" in ref:
            spec = spec_from_dict(ref)
            if seed is not None:
                spec = replace(spec, seed=seed)
            return sample_pattern(spec)
        raise BridgeError("bad_pattern")

    def _reset(self, msg: dict) -> dict:
        seed = msg.get("seed")
        if seed is not None and not isinstance(seed, int):
            return {"v": 1, "error": "bad_seed"}
        try:
            pattern = self._resolve_pattern(msg.get("pattern"), seed)
        except BridgeError as exc:
            return {"v": 1, "error": str(exc)}
        except PatternError as exc:
            return {"v": 1, "error": "bad_pattern", "detail": str(exc)}
        cfg = replace(self.cfg, rng_seed=seed if seed is not None else 0)
        try:
            self.ep = Episode(cfg, pattern)
        except Exception as exc:
            self.ep = None
            return {"v": 1, "error": "bad_pattern", "detail": str(exc)}
        return self._step_reply(noop=False)

    def _act(self, msg: dict) -> dict:
        if self.ep is None:
            return {"v": 1, "error": "no_episode"}
        if self.ep.done:
            return {"v": 1, "error": "episode_done"}
        slot = msg.get("slot")
        if not isinstance(slot, int) or not (0 <= slot < self.cfg.action_slots):
            return {"v": 1, "error": "bad_slot"}
        req = self.req
        if req is None:
            return {"v": 1, "error": "no_decision"}
        noop = slot >= len(req.candidates)
        if noop:
            self.ep.decline(req.robot_index)
        else:
            self.ep.commit_pick(req.robot_index, req.candidates[slot].object_id, slot=slot)
        return self._step_reply(noop=noop)

    def _advance_to_decision(self) -> DecisionRequest | None:
        assert self.ep is not None
        while True:
            req = self.ep.next_decision()
            if req is not None or self.ep.done:
                return req
            self.ep.advance()

    def _step_reply(self, noop: bool) -> dict:
        assert self.ep is not None
        self.req = self._advance_to_decision()
        reward = self.ep.take_pending_reward()
        obs, mask = build_obs(self.cfg, self.req)
        info: dict = {
            "sim_time": self.ep.sim_time,
            "deciding_robot": self.req.robot_index if self.req is not None else -1,
            "n_picked": self.ep.n_picked,
            "n_missed": self.ep.n_missed,
        }
        if noop:
            info["noop"] = True
        if self.ep.done:
            info["stats"] = self.ep.stats().as_dict()
        return {
            "v": 1,
            "obs": obs,
            "mask": mask,
            "reward": reward,
            "done": self.ep.done,
            "info": info,
        }


def _encode(reply: dict) -> bytes:
    return (json.dumps(reply, separators=(",", ":")) + "\n").encode()


class _BridgeHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        server: BridgeServer = self.server  # type: ignore[assignment]
        session = BridgeSession(server.cfg, server.resolver)
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            closing = False
            try:
                msg = json.loads(line)
            except json.JSONDecodeError:
                reply = {"v": 1, "error": "parse"}
            else:
                closing = isinstance(msg, dict) and msg.get("cmd") == "close"
                reply = session.handle(msg)
            self.wfile.write(_encode(reply))
            self.wfile.flush()
            if closing:
                break


class BridgeServer(socketserver.ThreadingTCPServer):
    """One thread per client session; sessions share nothing mutable."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], cfg: WorldConfig,
                 resolver: PatternResolver | None = None):
        self.cfg = cfg
        self.resolver = resolver
        super().__init__(address, _BridgeHandler)


def serve(cfg: WorldConfig, host: str = "127.0.0.1", port: int = 7331,
          resolver: PatternResolver | None = None) -> None:
    """Blocking server loop (CLI entry point)."""
    with BridgeServer((host, port), cfg, resolver) as server:
        server.serve_forever()


def serve_stdio(cfg: WorldConfig, stdin: TextIO, stdout: TextIO,
                resolver: PatternResolver | None = None) -> None:
    """Run one session over text streams, for subprocess embedding."""
    session = BridgeSession(cfg, resolver)
    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        closing = False
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            reply = {"v": 1, "error": "parse"}
        else:
            closing = isinstance(msg, dict) and msg.get("cmd") == "close"
            reply = session.handle(msg)
        stdout.write(json.dumps(reply, separators=(",", ":")) + "\n")
        stdout.flush()
        if closing:
            break


class BridgeClient:
    """Line-oriented client for the reset/act protocol."""

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rwb")

    def request(self, msg: dict) -> dict:
        self._file.write(_encode(msg))
        self._file.flush()
        raw = self._file.readline()
        if not raw:
            raise BridgeError("server closed the connection")
        reply = json.loads(raw.decode())
        if "error" in reply:
            raise BridgeError(reply["error"])
        return reply

    def _step(self, reply: dict) -> StepResult:
        return StepResult(
            obs=reply["obs"], mask=reply["mask"], reward=reply["reward"],
            done=reply["done"], info=reply["info"],
        )

    def reset(self, pattern, seed: int = 0) -> StepResult:
        return self._step(self.request({"cmd": "reset", "pattern": pattern, "seed": seed}))

    def act(self, slot: int) -> StepResult:
        return self._step(self.request({"cmd": "act", "slot": slot}))

    def close(self) -> None:
        try:
            self._file.write(_encode({"cmd": "close"}))
            self._file.flush()
            self._file.readline()
        except OSError:
            pass
        finally:
            self._file.close()
            self._sock.close()

    def __enter__(self) -> "BridgeClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
