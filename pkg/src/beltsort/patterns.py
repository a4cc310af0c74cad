"""Waste-layout generators: blue-noise scatters and grid lattices.

A pattern is a bag of objects in pattern-local coordinates: x >= 0 with the
minimum at exactly 0, y within the belt strip.  Object ids are assigned in
arrival order (descending x, then ascending y), so id 0 reaches the robots
first once the pattern is fed onto the belt.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

POISSON_DISK = "poisson_disk"
GRID = "grid"

#: Attempts per active point in the Bridson sampler.
_BRIDSON_K = 30


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class AttributeRanges:
    """Uniform ranges the per-object attributes are drawn from."""

    area_cm2: tuple[float, float] = (20.0, 300.0)
    p_detection: tuple[float, float] = (0.7, 1.0)
    p_grasp: tuple[float, float] = (0.6, 1.0)

    def validate(self) -> None:
        lo, hi = self.area_cm2
        if not (0.0 <= lo <= hi):
            raise PatternError(f"bad area range {self.area_cm2}")
        for name, (a, b) in (("p_detection", self.p_detection), ("p_grasp", self.p_grasp)):
            if not (0.0 <= a <= b <= 1.0):
                raise PatternError(f"bad {name} range {(a, b)}")


@dataclass(frozen=True)
class PatternObject:
    id: int
    x: float
    y: float
    area_cm2: float
    p_detection: float
    p_grasp: float


@dataclass(frozen=True)
class Pattern:
    belt_width: float
    objects: tuple[PatternObject, ...]

    @property
    def span(self) -> float:
        return max((o.x for o in self.objects), default=0.0)

    def __len__(self) -> int:
        return len(self.objects)


@dataclass(frozen=True)
class PatternSpec:
    kind: str
    region_length: float
    belt_width: float
    min_radius_r: float | None = None
    spacing_s: float | None = None
    attributes: AttributeRanges = field(default_factory=AttributeRanges)
    seed: int = 0
    grid_jitter: float = 0.0

    def validate(self) -> None:
        if self.kind not in (POISSON_DISK, GRID):
            raise PatternError(f"unknown pattern kind {self.kind!r}")
        if self.region_length <= 0.0:
            raise PatternError(f"region_length must be > 0, got {self.region_length}")
        if self.belt_width <= 0.0:
            raise PatternError(f"belt_width must be > 0, got {self.belt_width}")
        if self.kind == POISSON_DISK and not (self.min_radius_r and self.min_radius_r > 0.0):
            raise PatternError("poisson_disk needs min_radius_r > 0")
        if self.kind == GRID and not (self.spacing_s and self.spacing_s > 0.0):
            raise PatternError("grid needs spacing_s > 0")
        if self.grid_jitter < 0.0:
            raise PatternError("grid_jitter must be >= 0")
        self.attributes.validate()


def _finish(points: list[tuple[float, float]], spec: PatternSpec, rng: random.Random) -> Pattern:
    """Translate to x >= 0, order by arrival, draw attributes, number the objects."""
    if points:
        min_x = min(p[0] for p in points)
        points = [(x - min_x, y) for x, y in points]
    points.sort(key=lambda p: (-p[0], p[1]))
    objs = []
    a_lo, a_hi = spec.attributes.area_cm2
    d_lo, d_hi = spec.attributes.p_detection
    g_lo, g_hi = spec.attributes.p_grasp
    for i, (x, y) in enumerate(points):
        objs.append(
            PatternObject(
                id=i,
                x=x,
                y=y,
                area_cm2=rng.uniform(a_lo, a_hi),
                p_detection=rng.uniform(d_lo, d_hi),
                p_grasp=rng.uniform(g_lo, g_hi),
            )
        )
    return Pattern(belt_width=spec.belt_width, objects=tuple(objs))


def sample_poisson_disk(spec: PatternSpec) -> Pattern:
    """Bridson dart throwing over the region, minimum pairwise gap min_radius_r."""
    spec.validate()
    if spec.kind != POISSON_DISK:
        raise PatternError(f"spec kind is {spec.kind!r}, not {POISSON_DISK!r}")
    rng = random.Random(spec.seed)
    r = spec.min_radius_r
    assert r is not None
    width, height = spec.region_length, spec.belt_width
    cell = r / math.sqrt(2.0)
    grid: dict[tuple[int, int], int] = {}
    points: list[tuple[float, float]] = []
    active: list[int] = []

    def cell_of(p: tuple[float, float]) -> tuple[int, int]:
        return int(p[0] / cell), int(p[1] / cell)

    def far_enough(p: tuple[float, float]) -> bool:
        cx, cy = cell_of(p)
        for gx in range(cx - 2, cx + 3):
            for gy in range(cy - 2, cy + 3):
                j = grid.get((gx, gy))
                if j is not None and math.dist(p, points[j]) < r:
                    return False
        return True

    def accept(p: tuple[float, float]) -> None:
        grid[cell_of(p)] = len(points)
        active.append(len(points))
        points.append(p)

    accept((rng.uniform(0.0, width), rng.uniform(0.0, height)))
    while active:
        slot = rng.randrange(len(active))
        base = points[active[slot]]
        for _ in range(_BRIDSON_K):
            rad = rng.uniform(r, 2.0 * r)
            ang = rng.uniform(0.0, 2.0 * math.pi)
            p = (base[0] + rad * math.cos(ang), base[1] + rad * math.sin(ang))
            if 0.0 <= p[0] <= width and 0.0 <= p[1] <= height and far_enough(p):
                accept(p)
                break
        else:
            active[slot] = active[-1]
            active.pop()

    centered = [(x, y - height / 2.0) for x, y in points]
    return _finish(centered, spec, rng)


def sample_grid(spec: PatternSpec) -> Pattern:
    """Lattice with pitch spacing_s, lanes centered across the belt width."""
    spec.validate()
    if spec.kind != GRID:
        raise PatternError(f"spec kind is {spec.kind!r}, not {GRID!r}")
    rng = random.Random(spec.seed)
    s = spec.spacing_s
    assert s is not None
    half_w = spec.belt_width / 2.0
    n_lanes = int(spec.belt_width / s + 1e-9) + 1
    lanes = [(j - (n_lanes - 1) / 2.0) * s for j in range(n_lanes)]
    lanes = [y for y in lanes if abs(y) <= half_w + 1e-9]
    n_cols = int(spec.region_length / s + 1e-9) + 1
    points = []
    for i in range(n_cols):
        for y in lanes:
            x = i * s
            if spec.grid_jitter > 0.0:
                x += rng.uniform(-spec.grid_jitter, spec.grid_jitter)
                y += rng.uniform(-spec.grid_jitter, spec.grid_jitter)
            points.append((x, y))
    return _finish(points, spec, rng)


def sample_pattern(spec: PatternSpec) -> Pattern:
    if spec.kind == POISSON_DISK:
        return sample_poisson_disk(spec)
    if spec.kind == GRID:
        return sample_grid(spec)
    raise PatternError(f"unknown pattern kind {spec.kind!r}")


def _check_object(d: dict) -> None:
    for key in ("id", "x", "y", "area_cm2", "p_detection", "p_grasp"):
        if key not in d:
            raise PatternError(f"object missing field {key!r}")
    if not (0.0 <= d["p_detection"] <= 1.0):
        raise PatternError(f"object {d['id']}: p_detection {d['p_detection']} outside [0,1]")
    if not (0.0 <= d["p_grasp"] <= 1.0):
        raise PatternError(f"object {d['id']}: p_grasp {d['p_grasp']} outside [0,1]")
    if d["area_cm2"] < 0.0:
        raise PatternError(f"object {d['id']}: negative area")


def pattern_to_dict(pattern: Pattern) -> dict:
    return {
        "belt_width": pattern.belt_width,
        "objects": [
            {
                "id": o.id,
                "x": o.x,
                "y": o.y,
                "area_cm2": o.area_cm2,
                "p_detection": o.p_detection,
                "p_grasp": o.p_grasp,
            }
            for o in pattern.objects
        ],
    }


def pattern_from_dict(d: dict) -> Pattern:
    if "belt_width" not in d or "objects" not in d:
        raise PatternError("pattern document needs belt_width and objects")
    ids = set()
    objs = []
    for od in d["objects"]:
        _check_object(od)
        if od["id"] in ids:
            raise PatternError(f"duplicate object id {od['id']}")
        ids.add(od["id"])
        objs.append(
            PatternObject(
                id=int(od["id"]),
                x=float(od["x"]),
                y=float(od["y"]),
                area_cm2=float(od["area_cm2"]),
                p_detection=float(od["p_detection"]),
                p_grasp=float(od["p_grasp"]),
            )
        )
    return Pattern(belt_width=float(d["belt_width"]), objects=tuple(objs))


def save_pattern(pattern: Pattern, path: str | Path) -> None:
    Path(path).write_text(json.dumps(pattern_to_dict(pattern), indent=2) + "\n")


def load_pattern(path: str | Path) -> Pattern:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise PatternError(f"malformed pattern file {path}: {exc}") from exc
    return pattern_from_dict(doc)


def spec_to_dict(spec: PatternSpec) -> dict:
    return {
        "kind": spec.kind,
        "r": spec.min_radius_r,
        "s": spec.spacing_s,
        "length": spec.region_length,
        "width": spec.belt_width,
        "seed": spec.seed,
        "jitter": spec.grid_jitter,
        "attributes": {
            "area_cm2": list(spec.attributes.area_cm2),
            "p_detection": list(spec.attributes.p_detection),
            "p_grasp": list(spec.attributes.p_grasp),
        },
    }


def spec_from_dict(d: dict) -> PatternSpec:
    attrs = AttributeRanges()
    if "attributes" in d:
        ad = d["attributes"]
        attrs = AttributeRanges(
            area_cm2=tuple(ad.get("area_cm2", attrs.area_cm2)),
            p_detection=tuple(ad.get("p_detection", attrs.p_detection)),
            p_grasp=tuple(ad.get("p_grasp", attrs.p_grasp)),
        )
    spec = PatternSpec(
        kind=d["kind"],
        region_length=float(d["length"]),
        belt_width=float(d["width"]),
        min_radius_r=float(d["r"]) if d.get("r") is not None else None,
        spacing_s=float(d["s"]) if d.get("s") is not None else None,
        attributes=attrs,
        seed=int(d.get("seed", 0)),
        grid_jitter=float(d.get("jitter", 0.0)),
    )
    spec.validate()
    return spec


def with_seed(spec: PatternSpec, seed: int) -> PatternSpec:
    return replace(spec, seed=seed)
