"""Named benchmark inputs shared by the CLI, the server, and the tests."""

from __future__ import annotations

import re

from .patterns import GRID, POISSON_DISK, Pattern, PatternSpec, sample_pattern
from .rules import Rule

#: Four held-out evaluation distributions: two grids, two blue-noise scatters.
EVAL4 = "eval-4"

_DEFAULT_REGION = 1.5
_NAME_RE = re.compile(r"^(grid|poisson)-([rs])(\d+(?:\.\d+)?)$")


def named_pattern_spec(
    name: str,
    belt_width: float = 0.6,
    region_length: float = _DEFAULT_REGION,
    seed: int = 0,
) -> PatternSpec | None:
    """Parse names like 'grid-s0.15' or 'poisson-r0.2' into a spec."""
    m = _NAME_RE.match(name.strip())
    if m is None:
        return None
    kind, param, value = m.group(1), m.group(2), float(m.group(3))
    if kind == "grid" and param == "s":
        return PatternSpec(
            kind=GRID, region_length=region_length, belt_width=belt_width,
            spacing_s=value, seed=seed,
        )
    if kind == "poisson" and param == "r":
        return PatternSpec(
            kind=POISSON_DISK, region_length=region_length, belt_width=belt_width,
            min_radius_r=value, seed=seed,
        )
    return None


def eval4_specs(
    belt_width: float = 0.6, region_length: float = _DEFAULT_REGION
) -> list[tuple[str, PatternSpec]]:
    out = []
    for name, seed in (
        ("grid-s0.15", 415),
        ("grid-s0.3", 430),
        ("poisson-r0.2", 520),
        ("poisson-r0.3", 530),
    ):
        spec = named_pattern_spec(name, belt_width, region_length, seed=seed)
        assert spec is not None
        out.append((name, spec))
    return out


def eval4_patterns(
    belt_width: float = 0.6, region_length: float = _DEFAULT_REGION
) -> list[tuple[str, Pattern]]:
    return [(name, sample_pattern(spec)) for name, spec in eval4_specs(belt_width, region_length)]


def preset_patterns(name: str, belt_width: float = 0.6) -> list[tuple[str, Pattern]]:
    if name == EVAL4:
        return eval4_patterns(belt_width)
    raise KeyError(f"unknown preset {name!r}; available: {EVAL4}")


def robust_combo(n_robots: int) -> tuple[Rule, ...]:
    """The distribution-robust rule assignment: SPT everywhere except the last
    robot, which plays FIFO because it is the final chance before a miss."""
    if n_robots < 1:
        raise ValueError("need at least one robot")
    if n_robots == 1:
        return (Rule.FIFO,)
    return (Rule.SPT,) * (n_robots - 1) + (Rule.FIFO,)
