"""World configuration: belt geometry, robot placement, timing constants.

The configuration is the simulation contract: every episode, strategy
evaluation and benchmark run starts from a validated ``WorldConfig``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

Point = tuple[float, float]

#: Logistic steepness for the object reward, tuned so realistic object
#: areas (tens to hundreds of cm^2) land in the upper half of the sigmoid.
DEFAULT_REWARD_K = 0.01


@dataclass(frozen=True)
class RobotSpec:
    """One pick-and-place arm: base placement, reach and end-effector speed.

    ``rest_point`` doubles as the drop-off bin; the end effector parks there
    between tasks and every carry ends there.
    """

    index: int
    base: Point
    reach: float
    ee_speed: float
    rest_point: Point | None = None

    def __post_init__(self) -> None:
        if self.rest_point is None:
            object.__setattr__(self, "rest_point", self.base)

    @property
    def rest(self) -> Point:
        assert self.rest_point is not None
        return self.rest_point


@dataclass(frozen=True)
class WorldConfig:
    belt_length: float
    belt_width: float
    belt_speed: float
    tick_rate: float
    robots: tuple[RobotSpec, ...]
    action_slots: int = 10
    grasp_dwell: float = 0.5
    drop_dwell: float = 0.5
    terminal_bonus: float = 1.0
    terminal_rate_weight: float = 10.0
    reward_k: float = DEFAULT_REWARD_K
    rng_seed: int = 0

    @property
    def n_robots(self) -> int:
        return len(self.robots)

    @property
    def tick_dt(self) -> float:
        return 1.0 / self.tick_rate

    def with_belt_speed(self, belt_speed: float) -> "WorldConfig":
        return replace(self, belt_speed=belt_speed)


@dataclass(frozen=True)
class ConfigViolation:
    """A single broken invariant, naming the robots involved (if any)."""

    code: str
    message: str
    robots: tuple[int, ...] = ()

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


class ConfigError(ValueError):
    def __init__(self, violations: list[ConfigViolation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


def _half_span(robot: RobotSpec, y: float) -> float:
    """Half-extent in x of the robot's reach disk at height y (NaN-free)."""
    dy = y - robot.base[1]
    d2 = robot.reach * robot.reach - dy * dy
    return math.sqrt(d2) if d2 > 0.0 else 0.0

def workspace_strip_overlap(a: RobotSpec, b: RobotSpec, belt_width: float) -> float:
    """Maximum x-overlap of two reach disks inside the belt strip.

    Positive means the strip-restricted workspaces share points.  The overlap
    width as a function of y is concave (min of concave arcs minus max of
    convex arcs), so a ternary search finds its maximum exactly enough.
    """
    half_w = belt_width / 2.0
    lo = max(-half_w, a.base[1] - a.reach, b.base[1] - b.reach)
    hi = min(half_w, a.base[1] + a.reach, b.base[1] + b.reach)
    if lo > hi:
        return -math.inf

    def overlap(y: float) -> float:
        right = min(a.base[0] + _half_span(a, y), b.base[0] + _half_span(b, y))
        left = max(a.base[0] - _half_span(a, y), b.base[0] - _half_span(b, y))
        return right - left

    for _ in range(120):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if overlap(m1) < overlap(m2):
            lo = m1
        else:
            hi = m2
    return overlap(0.5 * (lo + hi))


def collect_violations(cfg: WorldConfig) -> list[ConfigViolation]:
    """Check every WorldConfig invariant; return all violations found."""
    out: list[ConfigViolation] = []

    if cfg.belt_speed <= 0:
        out.append(ConfigViolation("belt-speed", f"belt_speed must be > 0, got {cfg.belt_speed}"))
    if cfg.belt_length <= 0:
        out.append(ConfigViolation("belt-length", f"belt_length must be > 0, got {cfg.belt_length}"))
    if cfg.belt_width <= 0:
        out.append(ConfigViolation("belt-width", f"belt_width must be > 0, got {cfg.belt_width}"))
    if cfg.tick_rate <= 0:
        out.append(ConfigViolation("tick-rate", f"tick_rate must be > 0, got {cfg.tick_rate}"))
    if cfg.action_slots < 1:
        out.append(ConfigViolation("action-slots", f"action_slots must be >= 1, got {cfg.action_slots}"))
    if cfg.grasp_dwell < 0 or cfg.drop_dwell < 0:
        out.append(ConfigViolation("dwell", "dwell times must be >= 0"))
    if not cfg.robots:
        out.append(ConfigViolation("no-robots", "at least one robot is required"))

    for r in cfg.robots:
        if r.reach <= 0:
            out.append(ConfigViolation("reach", f"robot {r.index}: reach must be > 0", (r.index,)))
        if r.ee_speed <= cfg.belt_speed:
            out.append(
                ConfigViolation(
                    "ee-slower-than-belt",
                    f"robot {r.index}: ee_speed {r.ee_speed} must exceed belt_speed "
                    f"{cfg.belt_speed} or downstream interception is impossible",
                    (r.index,),
                )
            )
        rest = r.rest
        if math.dist(rest, r.base) > r.reach + 1e-9:
            out.append(
                ConfigViolation(
                    "rest-point-out-of-reach",
                    f"robot {r.index}: rest point {rest} is outside reach {r.reach}",
                    (r.index,),
                )
            )

    for a, b in zip(cfg.robots, cfg.robots[1:]):
        if b.base[0] <= a.base[0]:
            out.append(
                ConfigViolation(
                    "robots-out-of-order",
                    f"robots {a.index},{b.index} are not ordered by increasing belt coordinate",
                    (a.index, b.index),
                )
            )
        if a.base[1] * b.base[1] >= 0:
            out.append(
                ConfigViolation(
                    "non-alternating-sides",
                    f"robots {a.index},{b.index} must sit on opposite sides of the belt",
                    (a.index, b.index),
                )
            )

    for i, a in enumerate(cfg.robots):
        for b in cfg.robots[i + 1 :]:
            gap = workspace_strip_overlap(a, b, cfg.belt_width)
            if gap > 1e-9:
                out.append(
                    ConfigViolation(
                        "overlapping-workspaces",
                        f"robots {a.index},{b.index}: workspaces overlap by {gap:.3f} m "
                        "inside the belt strip",
                        (a.index, b.index),
                    )
                )
    return out


def validate_config(cfg: WorldConfig) -> WorldConfig:
    """Return cfg unchanged iff every invariant holds, else raise ConfigError."""
    violations = collect_violations(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg


def default_config(
    n_robots: int = 2,
    belt_speed: float = 0.078,
    tick_rate: float = 10.0,
    ee_speed: float = 0.5,
    reach: float = 0.8,
    belt_width: float = 0.6,
    standoff: float = 0.15,
    first_base_x: float = 1.0,
    base_pitch: float = 1.4,
    action_slots: int = 10,
    rng_seed: int = 0,
) -> WorldConfig:
    """Build a station like the two-arm reference setup.

    Robots alternate sides of the strip, spaced so their strip workspaces
    stay disjoint; the belt extends past the last robot's reach.  Each bin
    sits at the strip edge in front of its robot, so carries cross only the
    standoff gap instead of returning all the way to the base.
    """
    robots = []
    for i in range(n_robots):
        side = -1.0 if i % 2 == 0 else 1.0
        base_x = first_base_x + base_pitch * i
        base = (base_x, side * (belt_width / 2.0 + standoff))
        bin_point = (base_x, side * (belt_width / 2.0))
        robots.append(
            RobotSpec(
                index=i, base=base, reach=reach, ee_speed=ee_speed, rest_point=bin_point
            )
        )
    belt_length = first_base_x + base_pitch * (n_robots - 1) + reach + 0.3
    return WorldConfig(
        belt_length=belt_length,
        belt_width=belt_width,
        belt_speed=belt_speed,
        tick_rate=tick_rate,
        robots=tuple(robots),
        action_slots=action_slots,
        rng_seed=rng_seed,
    )


def config_to_dict(cfg: WorldConfig) -> dict:
    d = asdict(cfg)
    d["robots"] = [asdict(r) for r in cfg.robots]
    return d


def config_from_dict(d: dict) -> WorldConfig:
    robots = tuple(
        RobotSpec(
            index=int(r["index"]),
            base=tuple(r["base"]),
            reach=float(r["reach"]),
            ee_speed=float(r["ee_speed"]),
            rest_point=tuple(r["rest_point"]) if r.get("rest_point") is not None else None,
        )
        for r in d["robots"]
    )
    kwargs = {k: v for k, v in d.items() if k != "robots"}
    return WorldConfig(robots=robots, **kwargs)


def save_config(cfg: WorldConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")


def load_config(path: str | Path) -> WorldConfig:
    return config_from_dict(json.loads(Path(path).read_text()))
