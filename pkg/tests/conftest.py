from pathlib import Path

import pytest

from dragchain.model import BBox, DragInput, Point2, Scene, SceneObject, Trajectory

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def billiard_scene() -> Scene:
    """Cue ball and one target ball, 20px apart edge to edge, no statics."""
    return Scene(
        width=640,
        height=360,
        objects=(
            SceneObject("cue", "ball", BBox(90, 170, 110, 190)),
            SceneObject("red_a", "ball", BBox(130, 170, 150, 190)),
        ),
    )


@pytest.fixture
def billiard_drag() -> DragInput:
    """Drag the cue up to exact contact with the target, then hold."""
    return DragInput(
        Point2(100, 180),
        Trajectory.of("drag", [(100, 180), (110, 180), (120, 180), (120, 180)]),
    )


def make_drag(coords) -> DragInput:
    pts = list(coords)
    return DragInput(Point2(*pts[0]), Trajectory.of("drag", pts))
