"""Object perception behind a pluggable backend.

The heavy perception stack (point-prompted segmentation, open-set
detection) is externalized: the fixture backend replays precomputed
detections and masks from a JSON file so every downstream run is
deterministic, while the remote backend speaks a small HTTP protocol to
whatever model server provides the real thing.

Fixture file schema::

    {"image_ref": str, "width": int, "height": int,
     "masks": [{"id": str, "rle": [start, len, ...]}],
     "detections": [{"bbox": [x1,y1,x2,y2], "category": str,
                     "confidence": num?, "mask_id": str?}]}

Remote protocol::

    POST {url}/segment  {"image_ref": str, "start": [x, y]}
        -> {"width": int, "height": int, "mask_rle": [...]}
    POST {url}/perceive {"image_ref": str, "prompt": str, "controlled_mask_rle": [...]}
        -> {"width": int, "height": int,
            "detections": [{"bbox": [...], "category": str,
                            "confidence": num?, "mask_rle": [...]?}]}

Timeouts and non-2xx responses map to backend-unavailable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import httpx

from .errors import BackendUnavailable, FixtureSchemaInvalid, InvalidArgument, NotFound
from .model import BBox, Mask, Point2, SceneObject

DEFAULT_PROMPT = "List every distinct object with a tight bounding box and category label."


@dataclass(frozen=True, slots=True)
class Detection:
    bbox: BBox
    category: str
    confidence: float = 1.0
    mask_key: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidArgument(f"confidence {self.confidence} outside [0,1]")


@dataclass(frozen=True, slots=True)
class ObjectInventory:
    """Perception output: the controlled object plus everything else."""

    controlled: SceneObject
    others: tuple[SceneObject, ...]

    def all_objects(self) -> tuple[SceneObject, ...]:
        return (self.controlled, *self.others)


@dataclass(frozen=True)
class _RawDetection:
    bbox: BBox
    category: str
    confidence: float
    mask: Mask | None
    mask_key: str | None = None


class FixtureBackend:
    """Pure-function backend over a precomputed perception fixture file."""

    kind = "fixture"

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.exists():
            raise NotFound(f"perception fixture {self.path} does not exist")
        try:
            raw = json.loads(self.path.read_text())
        except json.JSONDecodeError as exc:
            raise FixtureSchemaInvalid(f"fixture {self.path} is not valid JSON: {exc}") from None
        try:
            self.image_ref: str = str(raw["image_ref"])
            self.width: int = int(raw["width"])
            self.height: int = int(raw["height"])
            self._masks: dict[str, Mask] = {}
            for m in raw.get("masks", []):
                mask = Mask(self.width, self.height, tuple(int(v) for v in m["rle"]))
                problems = mask.run_problems()
                if problems:
                    raise FixtureSchemaInvalid(f"fixture {self.path}: mask {m['id']!r}: {problems[0]}")
                self._masks[str(m["id"])] = mask
            self._detections: list[_RawDetection] = []
            for d in raw.get("detections", []):
                bbox = BBox(*[float(v) for v in d["bbox"]])
                confidence = float(d.get("confidence", 1.0))
                if not 0.0 <= confidence <= 1.0:
                    raise FixtureSchemaInvalid(
                        f"fixture {self.path}: confidence {confidence} outside [0,1]"
                    )
                mask_id = d.get("mask_id")
                mask = self._masks[mask_id] if mask_id is not None else None
                self._detections.append(
                    _RawDetection(
                        bbox=bbox,
                        category=str(d["category"]),
                        confidence=confidence,
                        mask=mask,
                        mask_key=mask_id,
                    )
                )
        except (KeyError, TypeError, ValueError, InvalidArgument) as exc:
            raise FixtureSchemaInvalid(f"fixture {self.path}: {exc}") from None

    def bounds(self, image_ref: str) -> tuple[int, int]:
        return self.width, self.height

    def segment(self, image_ref: str, start: Point2) -> Mask:
        candidates = [
            (mask_id, mask) for mask_id, mask in sorted(self._masks.items()) if mask.contains(start)
        ]
        if not candidates:
            raise NotFound(f"no object mask covers ({start.x}, {start.y}) in {self.path.name}")
        return candidates[0][1]

    def detect(self, image_ref: str, controlled_mask: Mask) -> list[_RawDetection]:
        if not self._detections:
            raise FixtureSchemaInvalid(f"fixture {self.path} lists no detections")
        return list(self._detections)


class RemoteBackend:
    """HTTP backend; defines the wire contract without any bundled model."""

    kind = "remote"

    def __init__(self, url: str, prompt: str = DEFAULT_PROMPT, timeout: float = 10.0):
        if not url.startswith(("http://", "https://")):
            raise InvalidArgument(f"remote backend URL {url!r} is not http(s)")
        self.url = url.rstrip("/")
        self.prompt = prompt
        self.timeout = timeout
        self.image_ref: str | None = None
        # idempotent per-image cache; concurrent writes race benignly
        self._bounds: dict[str, tuple[int, int]] = {}

    def _post(self, endpoint: str, payload: dict[str, Any]) -> dict[str, Any]:
        try:
            resp = httpx.post(f"{self.url}{endpoint}", json=payload, timeout=self.timeout)
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"POST {endpoint}: {exc}") from None
        if resp.status_code < 200 or resp.status_code >= 300:
            raise BackendUnavailable(f"POST {endpoint} returned {resp.status_code}")
        return resp.json()

    def bounds(self, image_ref: str) -> tuple[int, int]:
        # Bounds come back with every response; segment() is the first call
        # in the pipeline so a cheap probe keeps the precondition checkable.
        if image_ref not in self._bounds:
            data = self._post("/segment", {"image_ref": image_ref, "start": [0, 0]})
            self._bounds[image_ref] = (int(data["width"]), int(data["height"]))
        return self._bounds[image_ref]

    def segment(self, image_ref: str, start: Point2) -> Mask:
        data = self._post("/segment", {"image_ref": image_ref, "start": [start.x, start.y]})
        try:
            width, height = int(data["width"]), int(data["height"])
            mask = Mask(width, height, tuple(int(v) for v in data["mask_rle"]))
            problems = mask.run_problems()
            if problems:
                raise BackendUnavailable(f"malformed /segment mask: {problems[0]}")
        except (KeyError, TypeError, InvalidArgument) as exc:
            raise BackendUnavailable(f"malformed /segment response: {exc}") from None
        self._bounds[image_ref] = (width, height)
        if not mask.runs:
            raise NotFound(f"remote found no object at ({start.x}, {start.y})")
        return mask

    def detect(self, image_ref: str, controlled_mask: Mask) -> list[_RawDetection]:
        data = self._post(
            "/perceive",
            {
                "image_ref": image_ref,
                "prompt": self.prompt,
                "controlled_mask_rle": list(controlled_mask.runs),
            },
        )
        try:
            width = int(data["width"])
            height = int(data["height"])
            out = []
            for d in data["detections"]:
                mask = None
                if d.get("mask_rle") is not None:
                    mask = Mask(width, height, tuple(int(v) for v in d["mask_rle"]))
                out.append(
                    _RawDetection(
                        bbox=BBox(*[float(v) for v in d["bbox"]]),
                        category=str(d["category"]),
                        confidence=float(d.get("confidence", 1.0)),
                        mask=mask,
                    )
                )
        except (KeyError, TypeError, ValueError, InvalidArgument) as exc:
            raise BackendUnavailable(f"malformed /perceive response: {exc}") from None
        if not out:
            raise BackendUnavailable("remote returned no detections")
        return out


PerceptionBackend = FixtureBackend | RemoteBackend


def make_backend(spec: str) -> PerceptionBackend:
    """Build a backend from a ``fixture:<path>`` or ``remote:<url>`` spec string."""
    kind, _, rest = spec.partition(":")
    if kind == "fixture" and rest:
        return FixtureBackend(rest)
    if kind == "remote" and rest:
        return RemoteBackend(rest)
    raise InvalidArgument(f"backend spec {spec!r} must be fixture:<path> or remote:<url>")


def segment_controlled(backend: PerceptionBackend, image_ref: str, start: Point2) -> Mask:
    """Mask of the object under the drag start point."""
    width, height = backend.bounds(image_ref)
    if not (0 <= start.x < width and 0 <= start.y < height):
        raise InvalidArgument(f"start ({start.x}, {start.y}) outside image {width}x{height}")
    return backend.segment(image_ref, start)


def detect_objects(backend: PerceptionBackend, image_ref: str, controlled_mask: Mask) -> list[Detection]:
    """All detections, sorted by descending confidence, ties by bbox x1 then y1."""
    raw = backend.detect(image_ref, controlled_mask)
    raw.sort(key=lambda d: (-d.confidence, d.bbox.x1, d.bbox.y1))
    return [Detection(d.bbox, d.category, d.confidence, d.mask_key) for d in raw]


def refine_detections(
    backend: PerceptionBackend,
    image_ref: str,
    detections: list[Detection],
    controlled_mask: Mask,
) -> ObjectInventory:
    """Turn detections into scene objects with refined boxes and masks.

    The refined bbox is the tight box of each detection's mask, clipped to
    the image; detections without a mask get a rectangular one synthesized
    from their bbox. The controlled object is the one whose mask overlaps
    the point-prompted mask the most, ties broken by larger mask.
    """
    if not detections:
        raise InvalidArgument("refine_detections needs at least one detection")
    width, height = backend.bounds(image_ref)
    raw_pool = list(backend.detect(image_ref, controlled_mask))

    def take_raw(det: Detection) -> _RawDetection | None:
        for i, r in enumerate(raw_pool):
            if det.mask_key is not None and r.mask_key == det.mask_key:
                return raw_pool.pop(i)
            if (
                det.mask_key is None
                and r.bbox == det.bbox
                and r.category == det.category
                and r.confidence == det.confidence
            ):
                return raw_pool.pop(i)
        return None

    objects: list[SceneObject] = []
    for rank, det in enumerate(detections):
        matched = take_raw(det)
        mask = matched.mask if matched is not None else None
        if mask is None or not mask.runs:
            mask = Mask.from_bbox(_clip_bbox(det.bbox, width, height), width, height)
        tight = mask.tight_bbox()
        refined = tight if tight is not None else _clip_bbox(det.bbox, width, height)
        objects.append(
            SceneObject(
                id=f"{det.category}_{rank}",
                category=det.category,
                bbox=_clip_bbox(refined, width, height),
                mask=mask,
            )
        )
    scored = sorted(
        objects,
        key=lambda o: (-(o.mask.overlap(controlled_mask) if o.mask else 0), -(o.mask.pixel_count() if o.mask else 0)),
    )
    controlled = scored[0]
    others = tuple(o for o in objects if o.id != controlled.id)
    return ObjectInventory(controlled=controlled, others=others)


def _clip_bbox(bbox: BBox, width: int, height: int) -> BBox:
    x1 = min(max(bbox.x1, 0.0), width - 1.0)
    y1 = min(max(bbox.y1, 0.0), height - 1.0)
    x2 = max(min(bbox.x2, float(width)), x1 + 1e-9)
    y2 = max(min(bbox.y2, float(height)), y1 + 1e-9)
    return BBox(x1, y1, x2, y2)


def perceive(backend: PerceptionBackend, image_ref: str, start: Point2) -> ObjectInventory:
    """Full perception chain: segment the controlled object, detect, refine."""
    controlled_mask = segment_controlled(backend, image_ref, start)
    detections = detect_objects(backend, image_ref, controlled_mask)
    return refine_detections(backend, image_ref, detections, controlled_mask)
