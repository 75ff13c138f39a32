#!/usr/bin/env python3
"""Run the reasoning pipeline over the three canonical interaction scenarios
and print a compact report: winner provenance, validation outcome, and the
motion-consistency score against kernel-generated ground truth.

Usage: python scripts/run_scenarios.py [--seed N] [--frames N]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dragchain.metrics import EvalPair, moc
from dragchain.model import (
    BBox,
    DragInput,
    LineSegment,
    Point2,
    Scene,
    SceneObject,
    StaticGeometry,
    Trajectory,
)
from dragchain.physics import BodyState, ballistic, collide
from dragchain.pipeline import PipelineConfig, run_pipeline


def collision_scenario(frames: int):
    scene = Scene(
        640,
        360,
        objects=(
            SceneObject("cue", "ball", BBox(90, 170, 110, 190)),
            SceneObject("target", "ball", BBox(130, 170, 150, 190)),
        ),
    )
    approach = [(100.0 + 2 * k, 180.0) for k in range(11)]
    pts = approach + [approach[-1]] * (frames - len(approach))
    drag = DragInput(Point2(*pts[0]), Trajectory.of("drag", pts))
    struck = collide(
        BodyState("cue", Point2(120, 180), (2.0, 0.0), 10.0, 400.0),
        BodyState("target", Point2(140, 180), (0.0, 0.0), 10.0, 400.0),
        1.0,
    )[1]
    target = [(140.0, 180.0)] * 11 + [
        (140.0 + struck.velocity[0] * j, 180.0) for j in range(1, frames - 10)
    ]
    return scene, drag, [Trajectory.of("cue", pts), Trajectory.of("target", target)]


def gravity_scenario(frames: int):
    scene = Scene(
        640,
        360,
        objects=(
            SceneObject("foot", "foot", BBox(90, 250, 110, 270)),
            SceneObject("ball", "ball", BBox(130, 250, 150, 270)),
        ),
        gravity=(0.0, 0.5),
    )
    pts = [(100.0 + 4 * k, 260.0 - k) for k in range(frames)]
    drag = DragInput(Point2(*pts[0]), Trajectory.of("drag", pts))
    flight = ballistic(Point2(140, 260), (4.0, -1.0), (0.0, 0.5), (0.0, 0.0), frames - 6)
    ball = [(140.0, 260.0)] * 6 + [(p.x, p.y) for p in flight.points]
    return scene, drag, [Trajectory.of("foot", pts), Trajectory.of("ball", ball)]


def mirror_scenario(frames: int):
    scene = Scene(
        640,
        400,
        objects=(
            SceneObject("dog", "dog", BBox(100, 150, 140, 200)),
            SceneObject("dog_img", "dog", BBox(460, 150, 500, 200)),
        ),
        statics=StaticGeometry(mirrors=(LineSegment(Point2(300, 0), Point2(300, 400)),)),
    )
    pts = [(120.0 + 2 * k, 175.0 + k) for k in range(frames)]
    drag = DragInput(Point2(*pts[0]), Trajectory.of("drag", pts))
    image = [(600.0 - x, y) for x, y in pts]
    return scene, drag, [Trajectory.of("dog", pts), Trajectory.of("dog_img", image)]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--frames", type=int, default=14)
    args = parser.parse_args()
    cfg = PipelineConfig(rng_seed=args.seed, frame_count=args.frames)

    scenarios = {
        "collision-chain": collision_scenario,
        "gravity-force": gravity_scenario,
        "lever-mirror": mirror_scenario,
    }
    print(f"{'scenario':<16} {'passed':<7} {'iters':<6} {'backward(px)':<13} {'MOC vs truth':<13}")
    for name, build in scenarios.items():
        scene, drag, truth = build(args.frames)
        result = run_pipeline(scene, drag, cfg=cfg)
        pair = EvalPair(
            tuple(result.trajectories),
            tuple(truth),
            tuple((t.object_id, t.object_id) for t in truth),
        )
        score = moc([pair]).value
        print(
            f"{name:<16} {str(result.report.passed):<7} "
            f"{result.report.iterations_used:<6} "
            f"{result.report.backward_error:<13.6f} {score:<13.3e}"
        )


if __name__ == "__main__":
    main()
