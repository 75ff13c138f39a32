#!/usr/bin/env python3
"""Regenerate the deterministic fixtures bundled under tests/fixtures/."""

from __future__ import annotations

import shutil
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dragchain.dataset import MINI_LAYOUT, build_fixture_index
from dragchain.model import BBox, Mask, canonical_dumps

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

BALLS = [
    # (id, cx, cy); radius 10 circles approximated by square masks
    ("cue", 100, 180),
    ("red_a", 140, 180),
    ("red_b", 165, 180),
    ("red_c", 190, 180),
    ("nine", 300, 120),
]


def rect_rle(bbox: BBox, width: int, height: int) -> list[int]:
    return list(Mask.from_bbox(bbox, width, height).runs)


def make_perception_fixture() -> None:
    width, height = 640, 360
    masks = []
    detections = []
    for name, cx, cy in BALLS:
        bbox = BBox(cx - 10, cy - 10, cx + 10, cy + 10)
        masks.append({"id": f"mask_{name}", "rle": rect_rle(bbox, width, height)})
        detections.append(
            {
                "bbox": bbox.as_list(),
                "category": "ball",
                "confidence": 1.0,
                "mask_id": f"mask_{name}",
            }
        )
    payload = {
        "image_ref": "billiard_table.png",
        "width": width,
        "height": height,
        "masks": masks,
        "detections": detections,
    }
    (FIXTURES / "perception_billiard.json").write_text(canonical_dumps(payload) + "\n")


def make_scene_and_drag() -> None:
    scene = {
        "width": 640,
        "height": 360,
        "gravity": [0.0, 0.0],
        "objects": [
            {"id": "cue", "category": "ball", "bbox": [90.0, 170.0, 110.0, 190.0], "mass": 400.0, "mobile": True},
            {"id": "red_a", "category": "ball", "bbox": [130.0, 170.0, 150.0, 190.0], "mass": 400.0, "mobile": True},
        ],
        "statics": {"mirrors": [], "pivots": []},
    }
    (FIXTURES / "scene_billiard.json").write_text(canonical_dumps(scene) + "\n")
    drag = {
        "start": [100.0, 180.0],
        "points": [[100.0, 180.0], [110.0, 180.0], [120.0, 180.0], [120.0, 180.0]],
    }
    (FIXTURES / "drag_billiard.json").write_text(canonical_dumps(drag) + "\n")
    # A drag that plows through the target: backward validation cannot pass.
    drag_bad = {
        "start": [100.0, 180.0],
        "points": [[100.0, 180.0], [140.0, 180.0], [180.0, 180.0], [220.0, 180.0]],
    }
    (FIXTURES / "drag_billiard_unreachable.json").write_text(canonical_dumps(drag_bad) + "\n")


def make_mini_voi() -> None:
    root = FIXTURES / "mini_voi"
    if root.exists():
        shutil.rmtree(root)
    build_fixture_index(root, MINI_LAYOUT)


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    make_perception_fixture()
    make_scene_and_drag()
    make_mini_voi()
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
