"""Reader, validator, and statistics engine for the video-object-interaction
annotation layout, plus deterministic trajectory derivation from boxes.

On-disk layout::

    root/index.json                      {"videos": [{"id","subset","category","path"}]}
    root/<subset>/<video_id>/anno.json   {"frame_count": int, "controlled_id": str,
                                          "boxes": {"<frame>": {"<object_id>": [x1,y1,x2,y2]}},
                                          "trajectories": [{"object_id", "points"}]}

All coordinates are raw pixels. A stored trajectory's point k refers to
frame ``first_annotated_frame(object) + k``; gaps of up to two frames are
bridged by linear interpolation when deriving trajectories from boxes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .errors import InvalidArgument, NotFound, ParseError
from .model import (
    BBox,
    InteractionType,
    Point2,
    Trajectory,
    Violation,
    canonical_dumps,
    trajectory_from_json,
    trajectory_to_json,
)

BOX_DILATION = 2.0  # px slack when checking trajectory points against boxes
MAX_INTERP_GAP = 2  # frames bridged by interpolation; longer gaps split the track

# (subset, category, videos, boxes, trajectories) rows of the full dataset
# shape this harness emulates; fixture generation reproduces these counts.
FULL_LAYOUT: tuple[tuple[str, str, int, int, int], ...] = (
    ("CollisionChain", "Billiard", 16, 2160, 198),
    ("CollisionChain", "NewtonCradle", 7, 300, 79),
    ("CollisionChain", "Traffic", 10, 180, 90),
    ("GravityForce", "Basketball", 6, 1080, 34),
    ("GravityForce", "FootBall", 7, 960, 76),
    ("LeverMirror", "Seesaw", 15, 840, 145),
    ("LeverMirror", "Mirror", 11, 1800, 89),
)

MINI_LAYOUT: tuple[tuple[str, str, int, int, int], ...] = (
    ("CollisionChain", "Billiard", 1, 18, 3),
    ("GravityForce", "FootBall", 1, 10, 2),
    ("LeverMirror", "Mirror", 1, 12, 2),
)


@dataclass(frozen=True, slots=True)
class VoiVideo:
    id: str
    subset: InteractionType
    category: str
    frame_count: int
    boxes: dict[int, dict[str, BBox]]
    trajectories: tuple[Trajectory, ...]
    controlled_id: str
    path: str

    def box_count(self) -> int:
        return sum(len(per_frame) for per_frame in self.boxes.values())

    def object_frames(self, object_id: str) -> list[int]:
        return sorted(f for f, per_frame in self.boxes.items() if object_id in per_frame)


@dataclass(frozen=True, slots=True)
class CategoryStats:
    subset: InteractionType
    category: str
    videos: int
    boxes: int
    trajectories: int

    def as_dict(self) -> dict[str, Any]:
        return {
            "subset": self.subset.value,
            "category": self.category,
            "videos": self.videos,
            "boxes": self.boxes,
            "trajectories": self.trajectories,
        }


@dataclass(frozen=True, slots=True)
class VoiIndex:
    root: Path
    videos: tuple[VoiVideo, ...]
    violations: tuple[Violation, ...] = ()

    def per_category(self) -> list[CategoryStats]:
        order: list[tuple[InteractionType, str]] = []
        acc: dict[tuple[InteractionType, str], list[int]] = {}
        for video in self.videos:
            key = (video.subset, video.category)
            if key not in acc:
                order.append(key)
                acc[key] = [0, 0, 0]
            acc[key][0] += 1
            acc[key][1] += video.box_count()
            acc[key][2] += len(video.trajectories)
        subset_rank = {t: i for i, t in enumerate(InteractionType)}
        appearance = {key: i for i, key in enumerate(order)}
        order.sort(key=lambda key: (subset_rank[key[0]], appearance[key]))
        return [
            CategoryStats(subset, category, *acc[(subset, category)])
            for subset, category in order
        ]

    def totals(self) -> tuple[int, int, int]:
        rows = self.per_category()
        return (
            sum(r.videos for r in rows),
            sum(r.boxes for r in rows),
            sum(r.trajectories for r in rows),
        )


def _parse_anno(path: Path, video_id: str, subset: InteractionType, category: str, rel: str) -> VoiVideo:
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", source=str(path), offset=exc.pos) from None
    try:
        frame_count = int(raw["frame_count"])
        controlled_id = str(raw.get("controlled_id", ""))
        boxes: dict[int, dict[str, BBox]] = {}
        for frame_key, per_frame in raw.get("boxes", {}).items():
            frame = int(frame_key)
            boxes[frame] = {
                str(oid): BBox(*[float(v) for v in vals]) for oid, vals in per_frame.items()
            }
        trajectories = tuple(trajectory_from_json(t) for t in raw.get("trajectories", []))
    except (KeyError, TypeError, ValueError, InvalidArgument) as exc:
        raise ParseError(f"{path}: {exc}", source=str(path)) from None
    return VoiVideo(
        id=video_id,
        subset=subset,
        category=category,
        frame_count=frame_count,
        boxes=boxes,
        trajectories=trajectories,
        controlled_id=controlled_id,
        path=rel,
    )


def _video_invariants(video: VoiVideo) -> list[Violation]:
    out: list[Violation] = []
    known = {oid for per_frame in video.boxes.values() for oid in per_frame}
    for t in video.trajectories:
        if len(t.points) > video.frame_count:
            out.append(
                Violation("traj-length", t.object_id, message=f"{video.id}: {len(t.points)} > {video.frame_count}")
            )
        if t.object_id not in known:
            out.append(Violation("traj-unknown-object", t.object_id, message=video.id))
    return out


def load_index(root: str | Path) -> VoiIndex:
    """Load and cross-check an annotation tree; invariant breaches are
    collected on the index, only unreadable files raise."""
    root = Path(root)
    index_path = root / "index.json"
    if not index_path.exists():
        raise NotFound(f"{index_path} does not exist")
    try:
        raw = json.loads(index_path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{index_path}: {exc.msg}", source=str(index_path), offset=exc.pos) from None
    videos: list[VoiVideo] = []
    violations: list[Violation] = []
    for entry in raw.get("videos", []):
        try:
            video_id = str(entry["id"])
            subset = InteractionType(entry["subset"])
            category = str(entry["category"])
            rel = str(entry["path"])
        except (KeyError, ValueError) as exc:
            violations.append(Violation("index-entry-invalid", message=str(exc)))
            continue
        anno_path = root / rel
        if not anno_path.exists():
            violations.append(Violation("anno-missing", video_id, message=rel))
            continue
        video = _parse_anno(anno_path, video_id, subset, category, rel)
        videos.append(video)
        violations.extend(_video_invariants(video))
    return VoiIndex(root=root, videos=tuple(videos), violations=tuple(violations))


def derive_center_trajectory(
    video: VoiVideo, object_id: str
) -> tuple[Trajectory, list[Trajectory]]:
    """Per-frame bbox centers for one object.

    Gaps of up to two missing frames are filled by linear interpolation;
    a longer gap splits the track: the first segment is returned and the
    remaining segments are reported alongside it.
    """
    frames = video.object_frames(object_id)
    if not frames:
        raise NotFound(f"object {object_id!r} has no boxes in video {video.id!r}")
    segments: list[list[Point2]] = [[]]
    prev_frame: int | None = None
    prev_center: Point2 | None = None
    for frame in frames:
        center = video.boxes[frame][object_id].center()
        if prev_frame is not None:
            gap = frame - prev_frame - 1
            if gap > MAX_INTERP_GAP:
                segments.append([])
            elif gap > 0:
                assert prev_center is not None
                for step in range(1, gap + 1):
                    f = step / (gap + 1)
                    segments[-1].append(
                        Point2(
                            prev_center.x + f * (center.x - prev_center.x),
                            prev_center.y + f * (center.y - prev_center.y),
                        )
                    )
        segments[-1].append(center)
        prev_frame, prev_center = frame, center
    first, *rest = segments
    return (
        Trajectory(object_id, tuple(first)),
        [Trajectory(object_id, tuple(seg)) for seg in rest if seg],
    )


def verify_annotations(video: VoiVideo) -> list[Violation]:
    """Check each stored trajectory point against its frame's box, dilated."""
    out: list[Violation] = []
    for t in video.trajectories:
        frames = video.object_frames(t.object_id)
        if not frames:
            out.append(Violation("traj-unknown-object", t.object_id, message=video.id))
            continue
        first = frames[0]
        for k, point in enumerate(t.points):
            frame = first + k
            box = video.boxes.get(frame, {}).get(t.object_id)
            if box is None:
                continue
            if not (
                box.x1 - BOX_DILATION <= point.x <= box.x2 + BOX_DILATION
                and box.y1 - BOX_DILATION <= point.y <= box.y2 + BOX_DILATION
            ):
                out.append(
                    Violation(
                        "traj-outside-box",
                        t.object_id,
                        frame,
                        f"{video.id}: point ({point.x}, {point.y}) outside {box.as_list()}",
                    )
                )
    return out


def stats(index: VoiIndex) -> dict[str, Any]:
    """Recounted per-category table plus totals, in stable row order."""
    rows = index.per_category()
    videos, boxes, trajectories = index.totals()
    return {
        "rows": [r.as_dict() for r in rows],
        "totals": {"videos": videos, "boxes": boxes, "trajectories": trajectories},
    }


def _video_to_anno_json(video: VoiVideo) -> dict[str, Any]:
    return {
        "frame_count": video.frame_count,
        "controlled_id": video.controlled_id,
        "boxes": {
            str(frame): {oid: box.as_list() for oid, box in sorted(per_frame.items())}
            for frame, per_frame in sorted(video.boxes.items())
        },
        "trajectories": [trajectory_to_json(t) for t in video.trajectories],
    }


def write_index(index: VoiIndex, root: str | Path | None = None) -> list[Path]:
    """Write the canonical (key-sorted) index and annotation files."""
    dest = Path(root) if root is not None else index.root
    dest.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    index_payload = {
        "videos": [
            {"id": v.id, "subset": v.subset.value, "category": v.category, "path": v.path}
            for v in index.videos
        ]
    }
    index_path = dest / "index.json"
    index_path.write_text(canonical_dumps(index_payload) + "\n")
    written.append(index_path)
    for video in index.videos:
        anno_path = dest / video.path
        anno_path.parent.mkdir(parents=True, exist_ok=True)
        anno_path.write_text(canonical_dumps(_video_to_anno_json(video)) + "\n")
        written.append(anno_path)
    return written


# --- fixture generation --------------------------------------------------------


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def build_fixture_index(
    root: str | Path, layout: Iterable[tuple[str, str, int, int, int]] = MINI_LAYOUT
) -> VoiIndex:
    """Construct a synthetic annotation tree matching the given per-category
    (videos, boxes, trajectories) cardinalities exactly.

    Boxes are laid out on a deterministic grid and each trajectory is the
    derived center track of its object, so the result always verifies clean.
    """
    videos: list[VoiVideo] = []
    for subset_name, category, n_videos, n_boxes, n_trajs in layout:
        subset = InteractionType(subset_name)
        if not (n_boxes >= n_trajs >= n_videos >= 1):
            raise InvalidArgument(
                f"{category}: need boxes >= trajectories >= videos >= 1, "
                f"got {n_boxes}/{n_trajs}/{n_videos}"
            )
        per_video_boxes = _split(n_boxes, n_videos)
        per_video_trajs = _split(n_trajs, n_videos)
        for vi in range(n_videos):
            video_id = f"{category.lower()}_{vi:03d}"
            trajs_here = per_video_trajs[vi]
            boxes_here = per_video_boxes[vi]
            per_object = _split(boxes_here, trajs_here)
            boxes: dict[int, dict[str, BBox]] = {}
            object_ids = [f"{category.lower()}_{vi:03d}_obj{j}" for j in range(trajs_here)]
            for j, oid in enumerate(object_ids):
                x1 = 4.0 + 40.0 * j
                for k in range(per_object[j]):
                    y1 = 4.0 + 3.0 * k
                    boxes.setdefault(k, {})[oid] = BBox(x1, y1, x1 + 20.0, y1 + 20.0)
            frame_count = max(per_object)
            video = VoiVideo(
                id=video_id,
                subset=subset,
                category=category,
                frame_count=frame_count,
                boxes=boxes,
                trajectories=(),
                controlled_id=object_ids[0],
                path=f"{subset.value}/{video_id}/anno.json",
            )
            trajectories = tuple(
                derive_center_trajectory(video, oid)[0] for oid in object_ids
            )
            videos.append(
                VoiVideo(
                    id=video.id,
                    subset=video.subset,
                    category=video.category,
                    frame_count=video.frame_count,
                    boxes=video.boxes,
                    trajectories=trajectories,
                    controlled_id=video.controlled_id,
                    path=video.path,
                )
            )
    index = VoiIndex(root=Path(root), videos=tuple(videos))
    write_index(index)
    return index
