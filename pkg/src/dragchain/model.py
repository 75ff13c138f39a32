"""Core value types: geometry, objects, scenes, trajectories, drags.

All types are immutable after construction and safe to share between
threads. Coordinates follow the image convention: origin at the top-left
corner, x growing rightward, y growing downward, units are raw pixels.
Time is discrete at one frame per trajectory point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Sequence

from .errors import InvalidArgument, ParseError


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True, slots=True)
class Point2:
    """A 2D point in image pixel coordinates."""

    x: float
    y: float

    def is_finite(self) -> bool:
        return _finite(self.x, self.y)

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_list(self) -> list[float]:
        return [self.x, self.y]


@dataclass(frozen=True, slots=True)
class BBox:
    """Axis-aligned box, corners (x1, y1) top-left and (x2, y2) bottom-right.

    Construction does not validate; breaches surface through validate_scene
    so malformed inputs can be reported as data rather than exceptions.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def is_valid(self) -> bool:
        return _finite(self.x1, self.y1, self.x2, self.y2) and self.x1 < self.x2 and self.y1 < self.y2

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def center(self) -> Point2:
        return Point2((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def contains(self, p: Point2) -> bool:
        return self.x1 <= p.x <= self.x2 and self.y1 <= p.y <= self.y2

    def corners(self) -> tuple[Point2, Point2, Point2, Point2]:
        return (
            Point2(self.x1, self.y1),
            Point2(self.x2, self.y1),
            Point2(self.x1, self.y2),
            Point2(self.x2, self.y2),
        )

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]


def bbox_gap(a: BBox, b: BBox) -> float:
    """Shortest distance between two boxes; 0 when they touch or overlap."""
    dx = max(a.x1, b.x1) - min(a.x2, b.x2)
    dy = max(a.y1, b.y1) - min(a.y2, b.y2)
    return math.hypot(max(0.0, dx), max(0.0, dy))


@dataclass(frozen=True, slots=True)
class Mask:
    """Binary mask as run-length-encoded foreground spans over row-major pixels.

    ``runs`` is a flat tuple (start, length, start, length, ...) of
    non-overlapping spans sorted by start, each within [0, width*height).
    An empty run list is a valid "no mask" placeholder.
    """

    width: int
    height: int
    runs: tuple[int, ...] = ()

    def run_problems(self) -> list[str]:
        problems: list[str] = []
        if self.width <= 0 or self.height <= 0:
            problems.append("mask dimensions must be positive")
            return problems
        if len(self.runs) % 2 != 0:
            problems.append("runs must be (start, length) pairs")
            return problems
        total = self.width * self.height
        prev_end = -1
        for i in range(0, len(self.runs), 2):
            start, length = self.runs[i], self.runs[i + 1]
            if length <= 0:
                problems.append(f"run at {start} has non-positive length")
            if start <= prev_end:
                problems.append("runs must be sorted and non-overlapping")
            if start < 0 or start + length > total:
                problems.append(f"run [{start},{start + length}) out of range")
            prev_end = start + length - 1
        return problems

    def __bool__(self) -> bool:
        return bool(self.runs)

    def pixel_count(self) -> int:
        return sum(self.runs[i + 1] for i in range(0, len(self.runs), 2))

    def contains(self, p: Point2) -> bool:
        """True when the pixel under ``p`` belongs to a foreground run."""
        xi, yi = int(p.x), int(p.y)
        if not (0 <= xi < self.width and 0 <= yi < self.height):
            return False
        idx = yi * self.width + xi
        for i in range(0, len(self.runs), 2):
            start, length = self.runs[i], self.runs[i + 1]
            if start <= idx < start + length:
                return True
            if start > idx:
                break
        return False

    def overlap(self, other: "Mask") -> int:
        """Number of foreground pixels shared with ``other`` (same dims assumed)."""
        count = 0
        i = j = 0
        a, b = self.runs, other.runs
        while i < len(a) and j < len(b):
            a0, a1 = a[i], a[i] + a[i + 1]
            b0, b1 = b[j], b[j] + b[j + 1]
            lo, hi = max(a0, b0), min(a1, b1)
            if hi > lo:
                count += hi - lo
            if a1 <= b1:
                i += 2
            else:
                j += 2
        return count

    def tight_bbox(self) -> BBox | None:
        """Smallest box covering all foreground pixels, None for an empty mask."""
        if not self.runs:
            return None
        min_x, min_y = self.width, self.height
        max_x = max_y = -1
        for i in range(0, len(self.runs), 2):
            start, length = self.runs[i], self.runs[i + 1]
            end = start + length - 1
            y0, y1 = start // self.width, end // self.width
            min_y = min(min_y, y0)
            max_y = max(max_y, y1)
            if y0 == y1:
                min_x = min(min_x, start % self.width)
                max_x = max(max_x, end % self.width)
            else:
                min_x, max_x = 0, self.width - 1
        return BBox(float(min_x), float(min_y), float(max_x + 1), float(max_y + 1))

    @staticmethod
    def from_bbox(bbox: BBox, width: int, height: int) -> "Mask":
        """Rectangular mask covering the integer pixels inside ``bbox``."""
        x1 = max(0, int(math.floor(bbox.x1)))
        y1 = max(0, int(math.floor(bbox.y1)))
        x2 = min(width, int(math.ceil(bbox.x2)))
        y2 = min(height, int(math.ceil(bbox.y2)))
        runs: list[int] = []
        for y in range(y1, y2):
            if x2 > x1:
                runs.extend((y * width + x1, x2 - x1))
        return Mask(width, height, tuple(runs))


@dataclass(frozen=True, slots=True)
class SceneObject:
    """One object in the scene. ``mass`` defaults to bbox area in pixels^2."""

    id: str
    category: str
    bbox: BBox
    mask: Mask | None = None
    mass: float = 0.0
    mobile: bool = True

    def __post_init__(self) -> None:
        if self.mass <= 0.0:
            object.__setattr__(self, "mass", self.bbox.area)

    def center(self) -> Point2:
        return self.bbox.center()

    def radius(self) -> float:
        """Circle proxy radius: half of the smaller bbox side."""
        return min(self.bbox.width, self.bbox.height) / 2.0


@dataclass(frozen=True, slots=True)
class LineSegment:
    a: Point2
    b: Point2

    def length(self) -> float:
        return self.a.distance_to(self.b)

    def is_degenerate(self) -> bool:
        return self.a.x == self.b.x and self.a.y == self.b.y


@dataclass(frozen=True, slots=True)
class StaticGeometry:
    """Fixed scene context: mirror lines, lever pivots, ground, play area."""

    mirrors: tuple[LineSegment, ...] = ()
    pivots: tuple[Point2, ...] = ()
    ground: float | None = None
    walls: BBox | None = None

    @property
    def empty(self) -> bool:
        return not self.mirrors and not self.pivots and self.ground is None


@dataclass(frozen=True, slots=True)
class Scene:
    width: int
    height: int
    objects: tuple[SceneObject, ...] = ()
    statics: StaticGeometry = field(default_factory=StaticGeometry)
    gravity: tuple[float, float] = (0.0, 0.0)

    def object_by_id(self, object_id: str) -> SceneObject | None:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        return None

    def contains(self, p: Point2) -> bool:
        return 0 <= p.x <= self.width and 0 <= p.y <= self.height


@dataclass(frozen=True, slots=True)
class Trajectory:
    """Per-frame positions of one object; frame index is the list position."""

    object_id: str
    points: tuple[Point2, ...]

    def __post_init__(self) -> None:
        if len(self.points) < 1:
            raise InvalidArgument("trajectory needs at least one point")

    def __len__(self) -> int:
        return len(self.points)

    @staticmethod
    def of(object_id: str, coords: Iterable[Sequence[float]]) -> "Trajectory":
        return Trajectory(object_id, tuple(Point2(float(x), float(y)) for x, y in coords))


@dataclass(frozen=True, slots=True)
class DragInput:
    """User-authored path for the controlled object, starting at ``start``."""

    start: Point2
    points: Trajectory

    def __post_init__(self) -> None:
        first = self.points.points[0]
        if first.x != self.start.x or first.y != self.start.y:
            raise InvalidArgument("drag start must equal the first trajectory point")


class InteractionType(Enum):
    COLLISION_CHAIN = "CollisionChain"
    GRAVITY_FORCE = "GravityForce"
    LEVER_MIRROR = "LeverMirror"


@dataclass(frozen=True, slots=True)
class Violation:
    """A single invariant breach; violations are data, not exceptions."""

    rule: str
    object_id: str | None = None
    frame: int | None = None
    message: str = ""

    def as_dict(self) -> dict[str, Any]:
        return {
            "rule": self.rule,
            "object_id": self.object_id,
            "frame": self.frame,
            "message": self.message,
        }


def validate_scene(scene: Scene) -> list[Violation]:
    """Check every type invariant of the scene, one violation per breach."""
    out: list[Violation] = []
    if scene.width <= 0 or scene.height <= 0:
        out.append(Violation("scene-dims", message=f"{scene.width}x{scene.height}"))
    seen: set[str] = set()
    for obj in scene.objects:
        if obj.id in seen:
            out.append(Violation("id-unique", obj.id, message=f"duplicate object id {obj.id!r}"))
        seen.add(obj.id)
        b = obj.bbox
        if not b.is_valid():
            out.append(Violation("bbox-degenerate", obj.id, message=f"bbox {b.as_list()}"))
        elif not (0 <= b.x1 and b.x2 <= scene.width and 0 <= b.y1 and b.y2 <= scene.height):
            out.append(
                Violation(
                    "bbox-in-bounds",
                    obj.id,
                    message=f"bbox {b.as_list()} escapes {scene.width}x{scene.height}",
                )
            )
        if obj.mass <= 0:
            out.append(Violation("mass-positive", obj.id))
        if obj.mask is not None:
            if obj.mask.width != scene.width or obj.mask.height != scene.height:
                out.append(Violation("mask-dims", obj.id, message="mask dimensions differ from scene"))
            for problem in obj.mask.run_problems():
                out.append(Violation("mask-runs", obj.id, message=problem))
    for idx, mirror in enumerate(scene.statics.mirrors):
        if mirror.is_degenerate():
            out.append(Violation("mirror-degenerate", message=f"mirror {idx} has zero length"))
    if scene.statics.ground is not None and not (0 <= scene.statics.ground <= scene.height):
        out.append(
            Violation("ground-range", message=f"ground {scene.statics.ground} outside [0,{scene.height}]")
        )
    if not _finite(*scene.gravity):
        out.append(Violation("gravity-finite"))
    return out


def resample_trajectory(t: Trajectory, n: int) -> Trajectory:
    """Resample to exactly ``n`` points by linear interpolation over frame index.

    Endpoints are preserved exactly for n >= 2, and n == len(t) returns the
    input unchanged, which makes resampling idempotent at a fixed n.
    """
    if n < 1:
        raise InvalidArgument(f"cannot resample to {n} points")
    pts = t.points
    count = len(pts)
    if n == count:
        return Trajectory(t.object_id, pts)
    if count == 1:
        return Trajectory(t.object_id, (pts[0],) * n)
    if n == 1:
        return Trajectory(t.object_id, (pts[0],))
    out: list[Point2] = []
    for i in range(n):
        if i == n - 1:
            out.append(pts[-1])
            continue
        u = i * (count - 1) / (n - 1)
        j = min(int(math.floor(u)), count - 2)
        f = u - j
        if f == 0.0:
            out.append(pts[j])
        else:
            a, b = pts[j], pts[j + 1]
            out.append(Point2(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)))
    return Trajectory(t.object_id, tuple(out))


# --- JSON (de)serialization --------------------------------------------------
#
# Canonical scene JSON:
#   {"width":int,"height":int,"gravity":[gx,gy],
#    "objects":[{"id","category","bbox":[x1,y1,x2,y2],"mass","mobile","mask":{"rle":[...]}?}],
#    "statics":{"mirrors":[[[x,y],[x,y]],...],"pivots":[[x,y],...],"ground":num?}}
# Trajectory JSON: {"object_id":str,"points":[[x,y],...]}


def canonical_dumps(payload: Any) -> str:
    """Key-sorted, whitespace-free JSON used for all on-disk artifacts."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _num(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected number in {where}, got {value!r}")
    return float(value)


def mask_to_json(mask: Mask) -> dict[str, Any]:
    return {"rle": list(mask.runs)}


def mask_from_json(payload: dict[str, Any], width: int, height: int) -> Mask:
    rle = payload.get("rle", [])
    if not isinstance(rle, list):
        raise ParseError("mask rle must be a list")
    return Mask(width, height, tuple(int(v) for v in rle))


def scene_to_json(scene: Scene) -> dict[str, Any]:
    objects = []
    for obj in scene.objects:
        entry: dict[str, Any] = {
            "id": obj.id,
            "category": obj.category,
            "bbox": obj.bbox.as_list(),
            "mass": obj.mass,
            "mobile": obj.mobile,
        }
        if obj.mask is not None:
            entry["mask"] = mask_to_json(obj.mask)
        objects.append(entry)
    statics: dict[str, Any] = {
        "mirrors": [[seg.a.as_list(), seg.b.as_list()] for seg in scene.statics.mirrors],
        "pivots": [p.as_list() for p in scene.statics.pivots],
    }
    if scene.statics.ground is not None:
        statics["ground"] = scene.statics.ground
    if scene.statics.walls is not None:
        statics["walls"] = scene.statics.walls.as_list()
    return {
        "width": scene.width,
        "height": scene.height,
        "gravity": [scene.gravity[0], scene.gravity[1]],
        "objects": objects,
        "statics": statics,
    }


def scene_from_json(payload: dict[str, Any]) -> Scene:
    try:
        width = int(payload["width"])
        height = int(payload["height"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"scene JSON missing integer width/height: {exc}") from None
    gravity_raw = payload.get("gravity", [0.0, 0.0])
    gravity = (_num(gravity_raw[0], "gravity"), _num(gravity_raw[1], "gravity"))
    objects: list[SceneObject] = []
    for entry in payload.get("objects", []):
        try:
            bbox_vals = [_num(v, "bbox") for v in entry["bbox"]]
            bbox = BBox(*bbox_vals)
            mask = None
            if "mask" in entry and entry["mask"] is not None:
                mask = mask_from_json(entry["mask"], width, height)
            objects.append(
                SceneObject(
                    id=str(entry["id"]),
                    category=str(entry.get("category", "object")),
                    bbox=bbox,
                    mask=mask,
                    mass=float(entry.get("mass", 0.0)),
                    mobile=bool(entry.get("mobile", True)),
                )
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ParseError(f"malformed scene object entry: {exc}") from None
        except InvalidArgument as exc:
            raise ParseError(f"invalid scene object: {exc}") from None
    statics_raw = payload.get("statics", {})
    try:
        mirrors = tuple(
            LineSegment(Point2(_num(m[0][0], "mirror"), _num(m[0][1], "mirror")),
                        Point2(_num(m[1][0], "mirror"), _num(m[1][1], "mirror")))
            for m in statics_raw.get("mirrors", [])
        )
        pivots = tuple(Point2(_num(p[0], "pivot"), _num(p[1], "pivot")) for p in statics_raw.get("pivots", []))
        ground = statics_raw.get("ground")
        ground_val = None if ground is None else _num(ground, "ground")
        walls = None
        if statics_raw.get("walls") is not None:
            walls = BBox(*[_num(v, "walls") for v in statics_raw["walls"]])
    except (TypeError, IndexError, InvalidArgument) as exc:
        raise ParseError(f"malformed statics: {exc}") from None
    return Scene(
        width=width,
        height=height,
        objects=tuple(objects),
        statics=StaticGeometry(mirrors=mirrors, pivots=pivots, ground=ground_val, walls=walls),
        gravity=gravity,
    )


def trajectory_to_json(t: Trajectory) -> dict[str, Any]:
    return {"object_id": t.object_id, "points": [p.as_list() for p in t.points]}


def trajectory_from_json(payload: dict[str, Any]) -> Trajectory:
    try:
        points = tuple(Point2(_num(p[0], "point"), _num(p[1], "point")) for p in payload["points"])
        if not points:
            raise ParseError("trajectory has no points")
        if any(not p.is_finite() for p in points):
            raise ParseError("trajectory points must be finite")
        return Trajectory(str(payload["object_id"]), points)
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"malformed trajectory JSON: {exc}") from None
    except InvalidArgument as exc:
        raise ParseError(str(exc)) from None


def drag_to_json(drag: DragInput) -> dict[str, Any]:
    return {"start": drag.start.as_list(), "points": [p.as_list() for p in drag.points.points]}


def drag_from_json(payload: dict[str, Any], object_id: str = "controlled") -> DragInput:
    try:
        pts = tuple(Point2(_num(p[0], "drag point"), _num(p[1], "drag point")) for p in payload["points"])
        start_raw = payload.get("start", payload["points"][0])
        start = Point2(_num(start_raw[0], "drag start"), _num(start_raw[1], "drag start"))
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"malformed drag JSON: {exc}") from None
    if not pts:
        raise ParseError("drag has no points")
    if any(not p.is_finite() for p in pts) or not start.is_finite():
        raise ParseError("drag points must be finite")
    try:
        return DragInput(start, Trajectory(str(payload.get("object_id", object_id)), pts))
    except InvalidArgument as exc:
        raise ParseError(str(exc)) from None
