import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dragchain.errors import InvalidArgument, ParseError
from dragchain.model import (
    BBox,
    Mask,
    Point2,
    Scene,
    SceneObject,
    Trajectory,
    bbox_gap,
    canonical_dumps,
    drag_from_json,
    resample_trajectory,
    scene_from_json,
    scene_to_json,
    trajectory_from_json,
    trajectory_to_json,
    validate_scene,
)

finite_coord = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
points = st.builds(Point2, finite_coord, finite_coord)
trajectories = st.builds(
    lambda pts: Trajectory("obj", tuple(pts)), st.lists(points, min_size=1, max_size=20)
)


# --- resample -----------------------------------------------------------------


def test_resample_midpoint():
    t = Trajectory.of("a", [(0, 0), (10, 0)])
    out = resample_trajectory(t, 3)
    assert [(p.x, p.y) for p in out.points] == [(0, 0), (5, 0), (10, 0)]


def test_resample_identity_when_length_matches():
    t = Trajectory.of("a", [(0, 0), (3, 7), (9, 1)])
    assert resample_trajectory(t, 3) == t


def test_resample_linear_interp_oracle():
    # independently derived by linear interpolation over frame index
    t = Trajectory.of("a", [(0, 0), (0, 4), (0, 8)])
    out = resample_trajectory(t, 5)
    assert [(p.x, p.y) for p in out.points] == [(0, 0), (0, 2), (0, 4), (0, 6), (0, 8)]


def test_resample_rejects_zero_frames():
    with pytest.raises(InvalidArgument):
        resample_trajectory(Trajectory.of("a", [(0, 0)]), 0)


def test_resample_single_point_repeats():
    out = resample_trajectory(Trajectory.of("a", [(2, 3)]), 4)
    assert [(p.x, p.y) for p in out.points] == [(2, 3)] * 4


@given(trajectories, st.integers(min_value=1, max_value=40))
def test_resample_length_and_idempotence(t, n):
    once = resample_trajectory(t, n)
    assert len(once.points) == n
    assert resample_trajectory(once, n) == once


@given(trajectories, st.integers(min_value=2, max_value=40))
def test_resample_preserves_endpoints_exactly(t, n):
    out = resample_trajectory(t, n)
    assert out.points[0] == t.points[0]
    assert out.points[-1] == t.points[-1]


# --- validate_scene -----------------------------------------------------------


def test_validate_clean_scene(billiard_scene):
    assert validate_scene(billiard_scene) == []


def test_validate_degenerate_bbox():
    scene = Scene(100, 100, objects=(SceneObject("a", "x", BBox(5, 5, 5, 30)),))
    rules = {v.rule for v in validate_scene(scene)}
    assert "bbox-degenerate" in rules


def test_validate_duplicate_ids():
    scene = Scene(
        100,
        100,
        objects=(
            SceneObject("a", "x", BBox(1, 1, 10, 10)),
            SceneObject("a", "x", BBox(20, 20, 30, 30)),
        ),
    )
    assert [v.rule for v in validate_scene(scene)] == ["id-unique"]


def test_validate_bbox_out_of_bounds():
    scene = Scene(100, 100, objects=(SceneObject("a", "x", BBox(90, 90, 120, 120)),))
    assert {v.rule for v in validate_scene(scene)} == {"bbox-in-bounds"}


def test_validate_ground_range():
    scene = scene_from_json(
        {"width": 100, "height": 100, "objects": [], "statics": {"ground": 150}}
    )
    assert {v.rule for v in validate_scene(scene)} == {"ground-range"}


# --- geometry helpers ----------------------------------------------------------


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (BBox(0, 0, 10, 10), BBox(10, 0, 20, 10), 0.0),  # touching
        (BBox(0, 0, 10, 10), BBox(13, 0, 20, 10), 3.0),  # 3px apart in x
        (BBox(0, 0, 10, 10), BBox(13, 14, 20, 20), 5.0),  # 3-4-5 diagonal
        (BBox(0, 0, 10, 10), BBox(2, 2, 8, 8), 0.0),  # contained
    ],
)
def test_bbox_gap(a, b, expected):
    assert bbox_gap(a, b) == pytest.approx(expected, abs=1e-12)


def test_mask_contains_and_tight_bbox():
    m = Mask.from_bbox(BBox(5, 5, 45, 45), 50, 50)
    assert m.contains(Point2(5, 5))
    assert m.contains(Point2(44, 44))
    assert not m.contains(Point2(45, 45))
    assert not m.contains(Point2(0, 0))
    assert m.tight_bbox() == BBox(5, 5, 45, 45)


def _pixels(mask: Mask) -> set[int]:
    out = set()
    for i in range(0, len(mask.runs), 2):
        out.update(range(mask.runs[i], mask.runs[i] + mask.runs[i + 1]))
    return out


@given(
    st.sets(st.integers(min_value=0, max_value=99), max_size=40),
    st.sets(st.integers(min_value=0, max_value=99), max_size=40),
)
def test_mask_overlap_matches_pixel_set_oracle(a_px, b_px):
    def encode(pixels):
        runs = []
        for idx in sorted(pixels):
            if runs and runs[-2] + runs[-1] == idx:
                runs[-1] += 1
            else:
                runs.extend((idx, 1))
        return Mask(10, 10, tuple(runs))

    assert encode(a_px).overlap(encode(b_px)) == len(a_px & b_px)


# --- JSON ----------------------------------------------------------------------


def test_scene_json_roundtrip(billiard_scene):
    payload = scene_to_json(billiard_scene)
    again = scene_from_json(json.loads(canonical_dumps(payload)))
    assert again == billiard_scene


def test_trajectory_json_roundtrip():
    t = Trajectory.of("a", [(0.5, 1.25), (3, 4)])
    assert trajectory_from_json(trajectory_to_json(t)) == t


def test_drag_start_must_match_first_point():
    with pytest.raises(ParseError):
        drag_from_json({"start": [0, 0], "points": [[1, 1], [2, 2]]})


@pytest.mark.parametrize(
    "payload",
    [
        {"points": []},
        {"points": [[1]]},
        {"points": [["x", 2]]},
        {},
    ],
)
def test_trajectory_json_malformed(payload):
    payload = {"object_id": "a", **payload}
    with pytest.raises(ParseError):
        trajectory_from_json(payload)


def test_canonical_dumps_is_key_sorted():
    assert canonical_dumps({"b": 1, "a": 2}) == '{"a":2,"b":1}'
