"""Acceptance suite: one test per release criterion, each printing a
single [PASS]/[FAIL] line. Tolerances are pinned here and nowhere else.

The reference kernels generate synthetic ground truth by hand in these
tests (plain loops plus direct kernel calls), never by invoking the
pipeline stages under test.
"""

import json
import math
import random
import time
from contextlib import contextmanager

import pytest
from fastapi.testclient import TestClient

from dragchain.cli import main as cli_main
from dragchain.dataset import FULL_LAYOUT, MINI_LAYOUT, build_fixture_index, load_index, stats, verify_annotations
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
    canonical_dumps,
)
from dragchain.physics import BodyState, ballistic, collide, lever_rotate, mirror_reflect, propagate_chain
from dragchain.pipeline import PipelineConfig, run_pipeline, stage5_validate
from dragchain.server import create_app

MOC_ORACLE_TOL = 1e-9
CONSERVATION_TOL = 1e-9
CRADLE_REST_TOL = 1e-6
INVOLUTION_TOL = 1e-9
LEVER_RADIUS_TOL = 1e-9
SELF_CONSISTENCY_TOL = 1e-6
MOC_ORACLE_BUDGET_S = 5.0
SELF_CONSISTENCY_BUDGET_S = 30.0


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


# --- metrics ------------------------------------------------------------------------


def test_moc_oracle_equivalence():
    with criterion("MOC oracle equivalence (200 randomized instances, |delta| <= 1e-9)"):
        start = time.monotonic()
        for instance in range(200):
            rng = random.Random(10_000 + instance)
            pairs = []
            oracle_sum, oracle_terms = 0.0, 0
            for _ in range(rng.randint(1, 5)):
                frames = rng.randint(1, 10)
                pred, gt = [], []
                for obj in range(rng.randint(1, 5)):
                    p_pts = [(rng.uniform(0, 640), rng.uniform(0, 360)) for _ in range(frames)]
                    g_pts = [(rng.uniform(0, 640), rng.uniform(0, 360)) for _ in range(frames)]
                    pred.append(Trajectory.of(f"o{obj}", p_pts))
                    gt.append(Trajectory.of(f"o{obj}", g_pts))
                    for (px, py), (gx, gy) in zip(p_pts, g_pts):
                        oracle_sum += math.sqrt((px - gx) ** 2 + (py - gy) ** 2)
                        oracle_terms += 1
                pairs.append(
                    EvalPair(
                        tuple(pred),
                        tuple(gt),
                        tuple((t.object_id, t.object_id) for t in gt),
                    )
                )
            got = moc(pairs)
            assert abs(got.value - oracle_sum / oracle_terms) <= MOC_ORACLE_TOL
            assert got.n_terms == oracle_terms
        assert time.monotonic() - start < MOC_ORACLE_BUDGET_S


def test_moc_analytic_cases():
    with criterion("MOC analytic cases (3-4-5 => 5.0, identity => 0.0, exactly)"):
        pythagoras = EvalPair(
            (Trajectory.of("a", [(3, 4)]),),
            (Trajectory.of("a", [(0, 0)]),),
            (("a", "a"),),
        )
        assert moc([pythagoras]).value == 5.0
        same = (Trajectory.of("a", [(1, 2), (3, 4), (5, 6)]),)
        identity = EvalPair(same, same, (("a", "a"),))
        assert moc([identity]).value == 0.0


# --- physics kernels -------------------------------------------------------------------


def test_collision_conservation():
    with criterion("Collision conservation (1000 randomized impulses)"):
        rng = random.Random(42)
        for trial in range(1000):
            e = 1.0 if trial % 2 == 0 else rng.random()
            angle = rng.uniform(0, 2 * math.pi)
            ra, rb = rng.uniform(0.5, 6), rng.uniform(0.5, 6)
            ma, mb = rng.uniform(0.1, 50), rng.uniform(0.1, 50)
            a = BodyState("a", Point2(0, 0), (rng.uniform(-9, 9), rng.uniform(-9, 9)), ra, ma)
            b = BodyState(
                "b",
                Point2((ra + rb) * math.cos(angle), (ra + rb) * math.sin(angle)),
                (rng.uniform(-9, 9), rng.uniform(-9, 9)),
                rb,
                mb,
            )
            a2, b2 = collide(a, b, e)
            p0 = (ma * a.velocity[0] + mb * b.velocity[0], ma * a.velocity[1] + mb * b.velocity[1])
            p1 = (ma * a2.velocity[0] + mb * b2.velocity[0], ma * a2.velocity[1] + mb * b2.velocity[1])
            scale = max(1.0, abs(p0[0]), abs(p0[1]))
            assert abs(p1[0] - p0[0]) / scale <= CONSERVATION_TOL
            assert abs(p1[1] - p0[1]) / scale <= CONSERVATION_TOL
            ke = lambda s, m: 0.5 * m * (s.velocity[0] ** 2 + s.velocity[1] ** 2)
            e0, e1 = ke(a, ma) + ke(b, mb), ke(a2, ma) + ke(b2, mb)
            if e == 1.0:
                assert abs(e1 - e0) / max(1.0, e0) <= CONSERVATION_TOL
            else:
                assert e1 <= e0 * (1 + CONSERVATION_TOL) + 1e-12


def test_newtons_cradle():
    with criterion("Newton's cradle (5 equal balls, single outgoing ball)"):
        speed = 7.25
        chain = [BodyState(f"b{i}", Point2(2.0 * i, 0), (0.0, 0.0), 1.0, 1.0) for i in range(5)]
        out = propagate_chain(chain, (speed, 0.0), 1.0)
        outgoing = [o for o in out if math.hypot(*o.velocity) > CRADLE_REST_TOL]
        assert len(outgoing) == 1
        assert outgoing[0].object_id == "b4"
        assert abs(outgoing[0].velocity[0] - speed) <= CRADLE_REST_TOL
        for o in out[:-1]:
            assert math.hypot(*o.velocity) <= CRADLE_REST_TOL


def test_mirror_involution_bulk():
    with criterion("Mirror involution (1000 random trajectories, <= 1e-9 per coordinate)"):
        rng = random.Random(7)
        for _ in range(1000):
            ax, ay = rng.uniform(-100, 100), rng.uniform(-100, 100)
            theta = rng.uniform(0, 2 * math.pi)
            length = rng.uniform(1, 200)
            mirror = LineSegment(
                Point2(ax, ay), Point2(ax + length * math.cos(theta), ay + length * math.sin(theta))
            )
            t = Trajectory.of(
                "x", [(rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)) for _ in range(rng.randint(1, 14))]
            )
            twice = mirror_reflect(mirror, mirror_reflect(mirror, t))
            for p, q in zip(twice.points, t.points):
                assert abs(p.x - q.x) <= INVOLUTION_TOL
                assert abs(p.y - q.y) <= INVOLUTION_TOL


def test_lever_radius_and_ballistic_identity():
    with criterion("Lever radius preservation (1000 rotations) + exact ballistic second difference"):
        rng = random.Random(11)
        for _ in range(1000):
            pivot = Point2(rng.uniform(-500, 500), rng.uniform(-500, 500))
            p = Point2(rng.uniform(-500, 500), rng.uniform(-500, 500))
            dtheta = rng.uniform(-2 * math.pi, 2 * math.pi)
            before = p.distance_to(pivot)
            after = lever_rotate(pivot, p, dtheta).distance_to(pivot)
            assert abs(after - before) <= LEVER_RADIUS_TOL * max(1.0, before)
        # dyadic inputs keep double arithmetic exact, so the identity is bitwise
        start, v0 = Point2(12.5, -3.25), (1.5, -2.25)
        gravity, extra = (0.25, 0.5), (-0.75, 0.125)
        t = ballistic(start, v0, gravity, extra, 16)
        for k in range(1, 15):
            sdx = t.points[k + 1].x - 2 * t.points[k].x + t.points[k - 1].x
            sdy = t.points[k + 1].y - 2 * t.points[k].y + t.points[k - 1].y
            assert (sdx, sdy) == (gravity[0] + extra[0], gravity[1] + extra[1])


# --- pipeline self-consistency --------------------------------------------------------


def _moc_between(result_trajectories, truth):
    pred = tuple(result_trajectories)
    gt = tuple(truth)
    matching = tuple((t.object_id, t.object_id) for t in gt)
    return moc([EvalPair(pred, gt, matching)]).value


def _collision_case():
    scene = Scene(
        640,
        360,
        objects=(
            SceneObject("cue", "ball", BBox(90, 170, 110, 190)),
            SceneObject("target", "ball", BBox(130, 170, 150, 190)),
        ),
    )
    pts = [(100.0 + 2 * k, 180.0) for k in range(11)] + [(120.0, 180.0)] * 3
    drag = DragInput(Point2(*pts[0]), Trajectory.of("drag", pts))
    # ground truth by hand: cue follows the drag and stops at contact (frame
    # 10); the target takes the collide() impulse and departs at 2 px/frame.
    cue_truth = Trajectory.of("cue", pts)
    struck = collide(
        BodyState("cue", Point2(120, 180), (2.0, 0.0), 10.0, 400.0),
        BodyState("target", Point2(140, 180), (0.0, 0.0), 10.0, 400.0),
        1.0,
    )[1]
    target_pts = [(140.0, 180.0)] * 11 + [
        (140.0 + struck.velocity[0] * j, 180.0 + struck.velocity[1] * j) for j in (1, 2, 3)
    ]
    truth = [cue_truth, Trajectory.of("target", target_pts)]
    return scene, drag, truth, (0.0, 1.0)  # perturb along +y


def _gravity_case():
    scene = Scene(
        640,
        360,
        objects=(
            SceneObject("foot", "foot", BBox(90, 250, 110, 270)),
            SceneObject("ball", "ball", BBox(130, 250, 150, 270)),
        ),
        gravity=(0.0, 0.5),
    )
    pts = [(100.0 + 4 * k, 260.0 - k) for k in range(14)]
    drag = DragInput(Point2(*pts[0]), Trajectory.of("drag", pts))
    # contact at frame 6 (first frame within 20 px); the ball is kicked with
    # the drag's final-segment velocity and flies a closed-form arc.
    flight = ballistic(Point2(140, 260), (4.0, -1.0), (0.0, 0.5), (0.0, 0.0), 8, "ball")
    ball_pts = [(140.0, 260.0)] * 6 + [(p.x, p.y) for p in flight.points]
    truth = [Trajectory.of("foot", pts), Trajectory.of("ball", ball_pts)]
    return scene, drag, truth, (0.0, 1.0)


def _mirror_case():
    mirror = LineSegment(Point2(300, 0), Point2(300, 400))
    scene = Scene(
        640,
        400,
        objects=(
            SceneObject("dog", "dog", BBox(100, 150, 140, 200)),
            SceneObject("dog_img", "dog", BBox(460, 150, 500, 200)),
        ),
        statics=StaticGeometry(mirrors=(mirror,)),
    )
    pts = [(120.0 + 2 * k, 175.0 + k) for k in range(14)]
    drag = DragInput(Point2(*pts[0]), Trajectory.of("drag", pts))
    image_pts = [(600.0 - x, y) for x, y in pts]
    truth = [Trajectory.of("dog", pts), Trajectory.of("dog_img", image_pts)]
    return scene, drag, truth, (1.0, 0.0)


def _shift_drag(drag, delta, direction):
    pts = [(p.x + delta * direction[0], p.y + delta * direction[1]) for p in drag.points.points]
    return DragInput(Point2(*pts[0]), Trajectory.of(drag.points.object_id, pts))


def test_pipeline_self_consistency():
    with criterion("Pipeline self-consistency (3 interaction types, MOC <= 1e-6, monotone under drag shift)"):
        start = time.monotonic()
        for name, case in (
            ("collision", _collision_case),
            ("gravity", _gravity_case),
            ("mirror", _mirror_case),
        ):
            scene, drag, truth, direction = case()
            result = run_pipeline(scene, drag)
            value = _moc_between(result.trajectories, truth)
            assert value <= SELF_CONSISTENCY_TOL, f"{name}: MOC {value}"
            previous = value
            for delta in (2.0, 5.0, 10.0):
                shifted = run_pipeline(scene, _shift_drag(drag, delta, direction))
                shifted_moc = _moc_between(shifted.trajectories, truth)
                assert shifted_moc > previous, (
                    f"{name}: MOC not strictly increasing at delta={delta}"
                )
                previous = shifted_moc
        assert time.monotonic() - start < SELF_CONSISTENCY_BUDGET_S


def test_pipeline_determinism():
    with criterion("Determinism (byte-identical serialized output)"):
        scene, drag, _, _ = _collision_case()
        cfg = PipelineConfig(rng_seed=33, candidates_per_iteration=7)
        one = canonical_dumps(run_pipeline(scene, drag, cfg=cfg).as_dict())
        two = canonical_dumps(run_pipeline(scene, drag, cfg=cfg).as_dict())
        assert one == two


def test_backward_validation_behavior():
    with criterion("Backward validation (identity passes at 0; 10 px offset fails and re-iterates)"):
        from dragchain.pipeline import (
            CandidateBundle,
            inventory_from_scene,
            stage1_understand,
            stage2_relations,
        )

        scene = Scene(640, 360, objects=(SceneObject("cue", "ball", BBox(90, 170, 110, 190)),))
        pts = [(100.0 + 2 * k, 180.0) for k in range(14)]
        drag = DragInput(Point2(100, 180), Trajectory.of("cue", pts))
        inv = inventory_from_scene(scene, drag.start)
        u = stage1_understand(inv, scene)
        g = stage2_relations(u, inv, scene)
        cfg = PipelineConfig(backward_tolerance=2.0)
        identity = CandidateBundle((Trajectory.of("cue", pts),), 0.0, 0)
        report = stage5_validate(identity, drag, u, g, scene, cfg)
        assert report.passed and report.backward_error == 0.0
        offset = CandidateBundle(
            (Trajectory.of("cue", [(x + 10.0, y) for x, y in pts]),), 0.0, 0
        )
        report = stage5_validate(offset, drag, u, g, scene, cfg)
        assert not report.passed and report.backward_error == pytest.approx(10.0)

        # an unrealizable drag forces failed validation every iteration
        blocked = Scene(
            640,
            360,
            objects=(
                SceneObject("cue", "ball", BBox(90, 170, 110, 190)),
                SceneObject("wall_ball", "ball", BBox(130, 170, 150, 190)),
            ),
        )
        plow = DragInput(
            Point2(100, 180), Trajectory.of("drag", [(100.0 + 30 * k, 180.0) for k in range(5)])
        )
        cfg = PipelineConfig(max_iterations=3)
        res = run_pipeline(blocked, plow, cfg=cfg)
        assert not res.report.passed
        assert res.report.backward_error > cfg.backward_tolerance
        assert res.trace.iterations > 1, "failed validation must trigger re-iteration"
        assert res.report.iterations_used <= cfg.max_iterations


# --- dataset harness --------------------------------------------------------------------


def test_voi_harness(tmp_path, fixtures_dir):
    with criterion("Annotation harness (mini fixture clean; full-shape totals 72/7320/711)"):
        index = load_index(fixtures_dir / "mini_voi")
        assert len(index.videos) == 3
        assert index.violations == ()
        for video in index.videos:
            assert verify_annotations(video) == []
        table = stats(index)
        assert table["rows"] == [
            {"subset": s, "category": c, "videos": v, "boxes": b, "trajectories": t}
            for s, c, v, b, t in MINI_LAYOUT
        ]
        full = build_fixture_index(tmp_path / "full_voi", FULL_LAYOUT)
        reloaded = load_index(tmp_path / "full_voi")
        assert reloaded.totals() == (72, 7320, 711)
        full_table = stats(reloaded)
        assert full_table["totals"] == {"videos": 72, "boxes": 7320, "trajectories": 711}
        assert [r["videos"] for r in full_table["rows"]] == [16, 7, 10, 6, 7, 15, 11]


# --- interface parity ---------------------------------------------------------------------


def test_cli_http_parity(capsys, fixtures_dir):
    with criterion("CLI and HTTP produce identical result JSON"):
        scene_path = fixtures_dir / "scene_billiard.json"
        drag_path = fixtures_dir / "drag_billiard.json"
        code = cli_main(["reason", str(scene_path), str(drag_path)])
        cli_out = capsys.readouterr().out.strip()
        assert code == 0

        client = TestClient(create_app())
        session = client.post("/sessions", json=json.loads(scene_path.read_text()))
        session_id = session.json()["session_id"]
        resp = client.post(
            f"/sessions/{session_id}/drag", json=json.loads(drag_path.read_text())
        )
        assert resp.status_code == 200
        assert resp.content.decode() == cli_out
