"""Interception kinematics for a point end effector chasing belt-borne objects.

Everything here is closed form.  The pursuit equation for an object drifting
downstream at belt speed and an end effector moving at constant speed is
quadratic in the meeting time.  The feasible-position window of a robot on a
fixed belt lane inverts exactly, because the launch position is strictly
increasing in the meeting abscissa whenever the end effector outruns the belt.
"""

from __future__ import annotations

import math

from .config import RobotSpec

EPS = 1e-9


def intercept_tau(dx: float, dy: float, belt_speed: float, ee_speed: float) -> float | None:
    """Earliest tau >= 0 with ||(dx + belt_speed*tau, dy)|| = ee_speed*tau.

    (dx, dy) is the object position minus the end-effector position at the
    launch instant.  Returns None when no nonnegative meeting time exists,
    which can only happen when ee_speed <= belt_speed.
    """
    a = belt_speed * belt_speed - ee_speed * ee_speed
    b = 2.0 * dx * belt_speed
    c = dx * dx + dy * dy
    if c == 0.0:
        return 0.0
    if a == 0.0:
        # equal speeds degenerate to a linear equation
        if b >= 0.0:
            return None
        return -c / b
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return None
    # cancellation-free root pair: q/a and c/q
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b if b != 0.0 else 1.0))
    roots = [q / a]
    if q != 0.0:
        roots.append(c / q)
    nonneg = [t for t in roots if t >= 0.0]
    return min(nonneg) if nonneg else None


def plan_intercept(
    robot: RobotSpec,
    ee_pos: tuple[float, float],
    obj_x: float,
    obj_y: float,
    belt_speed: float,
    belt_length: float,
    belt_width: float,
) -> tuple[float, float, float] | None:
    """Earliest meeting (tau, meet_x, meet_y) with the object, or None.

    Feasible iff a nonnegative meeting time exists, the meeting point is
    within reach of the robot base, and it lies on the belt strip.
    """
    tau = intercept_tau(obj_x - ee_pos[0], obj_y - ee_pos[1], belt_speed, robot.ee_speed)
    if tau is None:
        return None
    meet_x = obj_x + belt_speed * tau
    if math.dist((meet_x, obj_y), robot.base) > robot.reach + EPS:
        return None
    if meet_x < -EPS or meet_x > belt_length + EPS:
        return None
    if abs(obj_y) > belt_width / 2.0 + EPS:
        return None
    return tau, meet_x, obj_y


def rest_reach_window(
    robot: RobotSpec,
    lane_y: float,
    belt_speed: float,
    belt_length: float,
    belt_width: float,
) -> tuple[float, float] | None:
    """Object-position interval [p_lo, p_hi] pickable from rest on this lane.

    A launch toward meeting abscissa m works iff the object currently sits at
    p(m) = m - (v_b/v_e) * dist((m, lane_y), rest).  dp/dm >= 1 - v_b/v_e > 0,
    so p is strictly increasing and the pickable positions are exactly the
    image of the reachable meeting span.  Returns None for an empty window.
    """
    if abs(lane_y) > belt_width / 2.0 + EPS:
        return None
    span_sq = robot.reach * robot.reach - (lane_y - robot.base[1]) ** 2
    if span_sq <= 0.0:
        return None
    half = math.sqrt(span_sq)
    m_lo = max(0.0, robot.base[0] - half)
    m_hi = min(belt_length, robot.base[0] + half)
    if m_lo > m_hi:
        return None
    ratio = belt_speed / robot.ee_speed
    rest = robot.rest

    def launch_pos(m: float) -> float:
        return m - ratio * math.dist((m, lane_y), rest)

    return launch_pos(m_lo), launch_pos(m_hi)
