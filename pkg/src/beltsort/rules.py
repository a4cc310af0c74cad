"""The six single-object dispatching rules and rule-driven controllers."""

from __future__ import annotations

import math
from enum import Enum
from typing import Sequence

from .sim import Controller, DecisionRequest


class Rule(str, Enum):
    # declaration order is the canonical (lexicographic) rule order
    FIFO = "FIFO"
    SPT = "SPT"
    LPT = "LPT"
    SD = "SD"
    LD = "LD"
    PP = "PP"


RULES: tuple[Rule, ...] = tuple(Rule)

#: One rule per robot index; None marks a robot that never picks.
StrategyCombo = tuple


class EmptyCandidatesError(ValueError):
    pass


def apply_rule(rule: Rule, request: DecisionRequest) -> int:
    """Chosen candidate index; ties always go to the lowest object id.

    FIFO takes the furthest-progressed object, SPT/LPT the extremes of the
    processing time, SD/LD the extremes of the distance to the robot base,
    PP the highest reward.
    """
    cands = request.candidates
    if not cands:
        raise EmptyCandidatesError("decision request has no candidates")

    if rule is Rule.FIFO:
        key = lambda c: -c.x_rel
    elif rule is Rule.SPT:
        key = lambda c: c.t_process
    elif rule is Rule.LPT:
        key = lambda c: -c.t_process
    elif rule is Rule.SD:
        key = lambda c: math.hypot(c.x_rel, c.y_rel)
    elif rule is Rule.LD:
        key = lambda c: -math.hypot(c.x_rel, c.y_rel)
    elif rule is Rule.PP:
        key = lambda c: -c.reward_r
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return min(range(len(cands)), key=lambda i: (key(cands[i]), cands[i].object_id))


def combo_controller(rules: Sequence[Rule | None]) -> Controller:
    """Controller playing rules[i] for robot i; None declines every request."""
    fixed = tuple(rules)

    def controller(request: DecisionRequest) -> int | None:
        rule = fixed[request.robot_index]
        if rule is None:
            return None
        return apply_rule(rule, request)

    return controller


def parse_combo(text: str) -> tuple[Rule, ...]:
    """Parse 'SPT,FIFO' (case-insensitive, ',' or '+' separated)."""
    parts = [p.strip().upper() for p in text.replace("+", ",").split(",") if p.strip()]
    if not parts:
        raise ValueError("empty strategy combo")
    try:
        return tuple(Rule[p] for p in parts)
    except KeyError as exc:
        raise ValueError(f"unknown rule {exc.args[0]!r}; expected one of "
                         f"{', '.join(r.value for r in RULES)}") from exc


def combo_name(rules: Sequence[Rule | None]) -> str:
    return "[" + ";".join(r.value if r is not None else "-" for r in rules) + "]"
