"""Five-stage motion reasoning state machine.

Stages: (1) classify the scene and pick the rule set, (2) extract a typed
relation graph from object geometry, (3) generate K candidate trajectory
bundles by dispatching to the physics kernels, (4) rank candidates by a
physical-plausibility score, (5) validate the winner forward (scene
rules) and backward (drag reconstruction), re-entering stage 3 with fresh
impulse perturbations until validation passes or iterations run out.

Every stage is a pure function of its declared inputs; a full run is
deterministic given (scene, drag, fixture backend, config seed).
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

from .errors import InvalidArgument, InvalidDrag
from .model import (
    DragInput,
    InteractionType,
    Mask,
    Point2,
    Scene,
    SceneObject,
    Trajectory,
    Violation,
    bbox_gap,
    resample_trajectory,
    trajectory_to_json,
    validate_scene,
)
from .perception import ObjectInventory, PerceptionBackend, perceive
from .physics import (
    BodyState,
    ballistic,
    collide,
    detect_collisions,
    lever_rotate,
    mirror_reflect,
    reflect_point,
    velocity_into_frame,
)

log = logging.getLogger("dragchain.pipeline")

IMPULSE_MULTIPLIERS = (1.0, 0.9, 1.1, 0.8, 1.2)
DEFAULT_GRAVITY_MAGNITUDE = 0.5  # px/frame^2, downward, for gravity scenes without one
TRAFFIC_RESTITUTION = 0.6
TRAFFIC_LABELS = frozenset({"traffic", "car", "vehicle", "truck", "bus"})
PENETRATION_LIMIT = 1.0  # px tolerated before a forward violation
MIRROR_ASYMMETRY_LIMIT = 1.0  # px per frame
MOMENTUM_RELATIVE_LIMIT = 1e-6
GROUND_REST_EPS = 1e-6


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    candidates_per_iteration: int = 5  # K
    max_iterations: int = 3
    backward_tolerance: float = 2.0  # tau, pixels
    frame_count: int = 14
    rng_seed: int = 0
    w_penetration: float = 1.0
    w_bounds: float = 1.0
    w_momentum: float = 1.0
    w_smoothness: float = 1.0
    restitution: float | None = None  # None -> per-scene default

    def __post_init__(self) -> None:
        if self.candidates_per_iteration < 1:
            raise InvalidArgument("need at least one candidate per iteration")
        if self.max_iterations < 1:
            raise InvalidArgument("need at least one iteration")
        if self.backward_tolerance <= 0:
            raise InvalidArgument("backward tolerance must be positive")
        if self.frame_count < 2:
            raise InvalidArgument("need at least two frames")


@dataclass(frozen=True, slots=True)
class SceneUnderstanding:
    scene_label: str
    interaction_type: InteractionType
    gravity_active: bool
    rule_set: tuple[str, ...]

    def as_dict(self) -> dict[str, Any]:
        return {
            "scene_label": self.scene_label,
            "interaction_type": self.interaction_type.value,
            "gravity_active": self.gravity_active,
            "rule_set": list(self.rule_set),
        }


class EdgeType(Enum):
    CONTACT = "Contact"
    ADJACENT = "Adjacent"
    SUPPORTS = "Supports"
    MIRROR_PAIR = "MirrorPair"
    LEVER_COUPLED = "LeverCoupled"


@dataclass(frozen=True, slots=True)
class RelationEdge:
    """Typed edge with ordered endpoints.

    Supports(a, b) means a bears b. MirrorPair/LeverCoupled carry the index
    of the mirror/pivot in the scene statics they refer to.
    """

    type: EdgeType
    a: str
    b: str
    ref: int | None = None

    def as_dict(self) -> dict[str, Any]:
        return {"type": self.type.value, "a": self.a, "b": self.b, "ref": self.ref}


@dataclass(frozen=True, slots=True)
class RelationGraph:
    nodes: tuple[str, ...]
    edges: tuple[RelationEdge, ...]

    def edges_of(self, edge_type: EdgeType, node: str | None = None) -> list[RelationEdge]:
        out = [e for e in self.edges if e.type is edge_type]
        if node is not None:
            out = [e for e in out if node in (e.a, e.b)]
        return out

    def as_dict(self) -> dict[str, Any]:
        return {"nodes": list(self.nodes), "edges": [e.as_dict() for e in self.edges]}


@dataclass(frozen=True, slots=True)
class CandidateBundle:
    """One hypothesis: a trajectory per mobile object, all the same length."""

    trajectories: tuple[Trajectory, ...]
    score: float
    provenance: int

    def trajectory_of(self, object_id: str) -> Trajectory | None:
        for t in self.trajectories:
            if t.object_id == object_id:
                return t
        return None

    def as_dict(self) -> dict[str, Any]:
        return {
            "provenance": self.provenance,
            "score": self.score,
            "trajectories": [trajectory_to_json(t) for t in self.trajectories],
        }


@dataclass(frozen=True, slots=True)
class CandidateSet:
    bundles: tuple[CandidateBundle, ...]

    def __post_init__(self) -> None:
        if not self.bundles:
            raise InvalidArgument("candidate set cannot be empty")


@dataclass(frozen=True, slots=True)
class ValidationReport:
    forward_violations: tuple[Violation, ...]
    backward_error: float
    passed: bool
    iterations_used: int

    def as_dict(self) -> dict[str, Any]:
        return {
            "forward_violations": [v.as_dict() for v in self.forward_violations],
            "backward_error": self.backward_error,
            "passed": self.passed,
            "iterations_used": self.iterations_used,
        }


@dataclass(slots=True)
class StageTrace:
    """Inspection record: one entry per executed stage, in execution order."""

    stages: list[dict[str, Any]] = field(default_factory=list)
    iterations: int = 0

    def add(self, name: str, summary: dict[str, Any], output: Any) -> None:
        self.stages.append({"name": name, "summary": summary, "output": output})

    def as_dict(self) -> dict[str, Any]:
        return {"stages": self.stages, "iterations": self.iterations}


@dataclass(frozen=True, slots=True)
class PipelineResult:
    trajectories: tuple[Trajectory, ...]
    report: ValidationReport
    trace: StageTrace
    inventory: ObjectInventory | None = None

    def as_dict(self) -> dict[str, Any]:
        # wire schema carries trajectories/report/trace only
        return {
            "trajectories": [trajectory_to_json(t) for t in self.trajectories],
            "report": self.report.as_dict(),
            "trace": self.trace.as_dict(),
        }


# --- shared helpers ----------------------------------------------------------


def classify_scene(scene: Scene) -> InteractionType:
    """Deterministic rule table: mirrors/pivots, then gravity/ground, else collision."""
    if scene.statics.mirrors or scene.statics.pivots:
        return InteractionType.LEVER_MIRROR
    if scene.gravity != (0.0, 0.0) or scene.statics.ground is not None:
        return InteractionType.GRAVITY_FORCE
    return InteractionType.COLLISION_CHAIN


def effective_gravity(scene: Scene, interaction: InteractionType) -> tuple[float, float]:
    if scene.gravity != (0.0, 0.0):
        return scene.gravity
    if interaction is InteractionType.GRAVITY_FORCE:
        return (0.0, DEFAULT_GRAVITY_MAGNITUDE)
    return (0.0, 0.0)


def impulse_multipliers(seed: int, count: int) -> list[float]:
    """First the fixed schedule, then seeded draws for any further candidates."""
    values = list(IMPULSE_MULTIPLIERS[:count])
    if count > len(IMPULSE_MULTIPLIERS):
        rng = random.Random(seed)
        while len(values) < count:
            values.append(round(0.5 + rng.random(), 6))
    return values


def _body_of(obj: SceneObject, center: Point2 | None = None) -> BodyState:
    return BodyState(
        object_id=obj.id,
        center=center if center is not None else obj.center(),
        velocity=(0.0, 0.0),
        radius=obj.radius(),
        mass=obj.mass,
    )


def _drag_end_velocity(points: tuple[Point2, ...]) -> tuple[float, float]:
    if len(points) < 2:
        return (0.0, 0.0)
    return (points[-1].x - points[-2].x, points[-1].y - points[-2].y)


# --- stage 1: scene and object understanding ---------------------------------


def stage1_understand(inventory: ObjectInventory, scene: Scene) -> SceneUnderstanding:
    objects = inventory.all_objects()
    if not objects:
        raise InvalidArgument("inventory is empty")
    counts: dict[str, int] = {}
    for obj in objects:
        counts[obj.category] = counts.get(obj.category, 0) + 1
    scene_label = min(counts, key=lambda c: (-counts[c], c))
    interaction = classify_scene(scene)
    rules = ["bounds", "penetration"]
    if interaction is InteractionType.COLLISION_CHAIN:
        rules.append("momentum")
    elif interaction is InteractionType.GRAVITY_FORCE:
        rules.append("ballistic-gravity")
    else:
        if scene.statics.mirrors:
            rules.append("mirror-symmetry")
        if scene.statics.pivots:
            rules.append("lever-coupling")
    gravity_active = interaction is InteractionType.GRAVITY_FORCE or scene.gravity != (0.0, 0.0)
    return SceneUnderstanding(
        scene_label=scene_label,
        interaction_type=interaction,
        gravity_active=gravity_active,
        rule_set=tuple(rules),
    )


# --- stage 2: object relationships --------------------------------------------

CONTACT_GAP = 2.0  # px
SUPPORT_GAP = 2.0  # px
MIRROR_CORNER_TOL = 10.0  # px per corner
LEVER_ARM_RATIO = 1.5


def _mirror_pair_index(a: SceneObject, b: SceneObject, scene: Scene) -> int | None:
    if a.category != b.category:
        return None
    for idx, mirror in enumerate(scene.statics.mirrors):
        reflected = [reflect_point(mirror, c) for c in a.bbox.corners()]
        xs = [p.x for p in reflected]
        ys = [p.y for p in reflected]
        cand = (
            Point2(min(xs), min(ys)),
            Point2(max(xs), min(ys)),
            Point2(min(xs), max(ys)),
            Point2(max(xs), max(ys)),
        )
        if all(c.distance_to(t) <= MIRROR_CORNER_TOL for c, t in zip(cand, b.bbox.corners())):
            return idx
    return None


def _lever_pivot_index(a: SceneObject, b: SceneObject, scene: Scene) -> int | None:
    ca, cb = a.center(), b.center()
    for idx, pivot in enumerate(scene.statics.pivots):
        va = (ca.x - pivot.x, ca.y - pivot.y)
        vb = (cb.x - pivot.x, cb.y - pivot.y)
        da, db = math.hypot(*va), math.hypot(*vb)
        if da == 0.0 or db == 0.0:
            continue
        opposite = va[0] * vb[0] + va[1] * vb[1] < 0.0
        if opposite and max(da, db) <= LEVER_ARM_RATIO * min(da, db):
            return idx
    return None


def stage2_relations(u: SceneUnderstanding, inventory: ObjectInventory, scene: Scene) -> RelationGraph:
    objects = sorted(inventory.all_objects(), key=lambda o: o.id)
    edges: list[RelationEdge] = []
    for i, a in enumerate(objects):
        for b in objects[i + 1 :]:
            gap = bbox_gap(a.bbox, b.bbox)
            mean_width = (a.bbox.width + b.bbox.width) / 2.0
            if gap <= CONTACT_GAP:
                edges.append(RelationEdge(EdgeType.CONTACT, a.id, b.id))
            if gap <= 0.5 * mean_width:
                edges.append(RelationEdge(EdgeType.ADJACENT, a.id, b.id))
            x_overlap = min(a.bbox.x2, b.bbox.x2) - max(a.bbox.x1, b.bbox.x1)
            if x_overlap > 0.0:
                if abs(a.bbox.y1 - b.bbox.y2) <= SUPPORT_GAP:
                    edges.append(RelationEdge(EdgeType.SUPPORTS, a.id, b.id))
                if abs(b.bbox.y1 - a.bbox.y2) <= SUPPORT_GAP:
                    edges.append(RelationEdge(EdgeType.SUPPORTS, b.id, a.id))
            mirror_idx = _mirror_pair_index(a, b, scene)
            if mirror_idx is not None:
                edges.append(RelationEdge(EdgeType.MIRROR_PAIR, a.id, b.id, mirror_idx))
            pivot_idx = _lever_pivot_index(a, b, scene)
            if pivot_idx is not None:
                edges.append(RelationEdge(EdgeType.LEVER_COUPLED, a.id, b.id, pivot_idx))
    edges.sort(key=lambda e: (e.type.value, e.a, e.b, -1 if e.ref is None else e.ref))
    return RelationGraph(nodes=tuple(o.id for o in objects), edges=tuple(edges))


# --- stage 3: interaction trajectory reasoning --------------------------------


def _scene_restitution(u: SceneUnderstanding, cfg: PipelineConfig) -> float:
    if cfg.restitution is not None:
        return cfg.restitution
    if u.scene_label.lower() in TRAFFIC_LABELS:
        return TRAFFIC_RESTITUTION
    return 1.0


def _simulate_collision_chain(
    controlled: SceneObject,
    others: list[SceneObject],
    controlled_points: tuple[Point2, ...],
    restitution: float,
    multiplier: float,
) -> dict[str, list[Point2]]:
    """Frame-stepped impulse simulation with instantaneous same-frame cascades.

    The controlled body follows the drag until its first impulse, then moves
    freely like everything else. The velocity delta of the struck side of
    each impulse is scaled by the candidate multiplier; the striker keeps
    the exact kernel response, so only transferred impulses are perturbed.
    """
    n = len(controlled_points)
    ids = [controlled.id] + [o.id for o in others]
    radius = {controlled.id: controlled.radius(), **{o.id: o.radius() for o in others}}
    mass = {controlled.id: controlled.mass, **{o.id: o.mass for o in others}}
    pos: dict[str, Point2] = {controlled.id: controlled_points[0]}
    vel: dict[str, tuple[float, float]] = {controlled.id: (0.0, 0.0)}
    dragged = {controlled.id}
    for o in others:
        pos[o.id] = o.center()
        vel[o.id] = (0.0, 0.0)
    paths: dict[str, list[Point2]] = {i: [] for i in ids}
    pair_order = [(a, b) for i, a in enumerate(sorted(ids)) for b in sorted(ids)[i + 1 :]]

    def frame_velocity(body_id: str, k: int) -> tuple[float, float]:
        # Velocity INTO frame k (forward diff at k=0), matching the collision
        # detector's approach test: impulses resolve with arrival velocities.
        if body_id in dragged:
            p = pos[body_id]
            if k >= 1:
                prev = controlled_points[k - 1]
                return (p.x - prev.x, p.y - prev.y)
            if n > 1:
                nxt = controlled_points[1]
                return (nxt.x - p.x, nxt.y - p.y)
            return (0.0, 0.0)
        return vel[body_id]

    for k in range(n):
        for body_id in ids:
            paths[body_id].append(pos[body_id])
        for _ in range(8 * len(ids) * len(ids) + 8):
            resolved_any = False
            for a_id, b_id in pair_order:
                pa, pb = pos[a_id], pos[b_id]
                dist = pa.distance_to(pb)
                if dist == 0.0 or dist > radius[a_id] + radius[b_id] + 1e-6:
                    continue
                va, vb = frame_velocity(a_id, k), frame_velocity(b_id, k)
                nx, ny = (pb.x - pa.x) / dist, (pb.y - pa.y) / dist
                rel_vn = (vb[0] - va[0]) * nx + (vb[1] - va[1]) * ny
                if rel_vn >= 0.0:
                    continue
                body_a = BodyState(a_id, pa, va, radius[a_id], mass[a_id])
                body_b = BodyState(b_id, pb, vb, radius[b_id], mass[b_id])
                out_a, out_b = collide(body_a, body_b, restitution)
                struck = _struck_side(a_id, b_id, va, vb, (nx, ny), dragged)
                for body_id, before, after in ((a_id, va, out_a.velocity), (b_id, vb, out_b.velocity)):
                    scale = multiplier if body_id == struck else 1.0
                    vel[body_id] = (
                        before[0] + scale * (after[0] - before[0]),
                        before[1] + scale * (after[1] - before[1]),
                    )
                    dragged.discard(body_id)
                resolved_any = True
            if not resolved_any:
                break
        for body_id in ids:
            if body_id in dragged:
                if k + 1 < n:
                    pos[body_id] = controlled_points[k + 1]
            else:
                v = vel[body_id]
                p = pos[body_id]
                pos[body_id] = Point2(p.x + v[0], p.y + v[1])
    return paths


def _struck_side(
    a_id: str,
    b_id: str,
    va: tuple[float, float],
    vb: tuple[float, float],
    normal: tuple[float, float],
    dragged: set[str],
) -> str:
    """The body being run into: the drag-driven body always strikes."""
    if a_id in dragged:
        return b_id
    if b_id in dragged:
        return a_id
    approach_a = va[0] * normal[0] + va[1] * normal[1]  # a moving toward b
    approach_b = -(vb[0] * normal[0] + vb[1] * normal[1])  # b moving toward a
    if approach_a > approach_b:
        return b_id
    if approach_b > approach_a:
        return a_id
    return max(a_id, b_id)


def _ground_clamped_flight(
    start: Point2,
    v0: tuple[float, float],
    gravity: tuple[float, float],
    n: int,
    radius: float,
    ground: float | None,
) -> list[Point2]:
    """Ballistic points that freeze at the first resting ground contact."""
    points = list(ballistic(start, v0, gravity, (0.0, 0.0), n).points)
    if ground is None:
        return points
    for j, p in enumerate(points):
        if j > 0 and p.y + radius >= ground:
            rest = Point2(p.x, ground - radius)
            return points[:j] + [rest] * (n - j)
    return points


def _simulate_gravity_force(
    controlled: SceneObject,
    others: list[SceneObject],
    controlled_points: tuple[Point2, ...],
    gravity: tuple[float, float],
    ground: float | None,
    multiplier: float,
) -> dict[str, list[Point2]]:
    """Controlled object follows the drag; each object it first contacts gets an
    impulse along the drag's final-segment velocity and flies ballistically."""
    n = len(controlled_points)
    kick = _drag_end_velocity(controlled_points)
    kick = (kick[0] * multiplier, kick[1] * multiplier)
    paths: dict[str, list[Point2]] = {controlled.id: list(controlled_points)}
    bodies = [(_body_of(controlled, controlled_points[0]), Trajectory(controlled.id, controlled_points))]
    static_paths: dict[str, tuple[Point2, ...]] = {}
    for o in others:
        const = (o.center(),) * n
        static_paths[o.id] = const
        bodies.append((_body_of(o), Trajectory(o.id, const)))
    events = detect_collisions(bodies)
    kicked: set[str] = set()
    for event in events:
        if controlled.id not in event.pair:
            continue
        other_id = event.pair[0] if event.pair[1] == controlled.id else event.pair[1]
        if other_id in kicked:
            continue
        kicked.add(other_id)
        obj = next(o for o in others if o.id == other_id)
        start = static_paths[other_id][0]
        flight = _ground_clamped_flight(start, kick, gravity, n - event.frame, obj.radius(), ground)
        paths[other_id] = list(static_paths[other_id][: event.frame]) + flight
    for o in others:
        if o.id not in paths:
            paths[o.id] = list(static_paths[o.id])
    return paths


def _angular_sweep(points: tuple[Point2, ...], pivot: Point2) -> list[float]:
    """Cumulative rotation of each point about the pivot, unwrapped per step."""
    sweep = [0.0]
    prev = math.atan2(points[0].y - pivot.y, points[0].x - pivot.x)
    total = 0.0
    for p in points[1:]:
        theta = math.atan2(p.y - pivot.y, p.x - pivot.x)
        delta = theta - prev
        while delta <= -math.pi:
            delta += 2 * math.pi
        while delta > math.pi:
            delta -= 2 * math.pi
        total += delta
        sweep.append(total)
        prev = theta
    return sweep


def _simulate_lever_mirror(
    g: RelationGraph,
    controlled: SceneObject,
    others: list[SceneObject],
    controlled_points: tuple[Point2, ...],
    scene: Scene,
) -> dict[str, list[Point2]]:
    """Kinematic couplings: mirror partners get the exact reflection of the
    controlled path; lever partners ride the same rigid rotation about the
    pivot, which moves the far arm opposite to the controlled arm.
    No impulse is involved, so candidates are identical across multipliers."""
    paths: dict[str, list[Point2]] = {controlled.id: list(controlled_points)}
    mirror_partner: dict[str, int] = {}
    for edge in g.edges_of(EdgeType.MIRROR_PAIR, controlled.id):
        other = edge.b if edge.a == controlled.id else edge.a
        mirror_partner.setdefault(other, edge.ref if edge.ref is not None else 0)
    lever_partner: dict[str, int] = {}
    for edge in g.edges_of(EdgeType.LEVER_COUPLED, controlled.id):
        other = edge.b if edge.a == controlled.id else edge.a
        lever_partner.setdefault(other, edge.ref if edge.ref is not None else 0)
    for o in others:
        if o.id in mirror_partner:
            mirror = scene.statics.mirrors[mirror_partner[o.id]]
            reflected = mirror_reflect(mirror, Trajectory(o.id, controlled_points))
            paths[o.id] = list(reflected.points)
        elif o.id in lever_partner:
            pivot = scene.statics.pivots[lever_partner[o.id]]
            sweep = _angular_sweep(controlled_points, pivot)
            center = o.center()
            paths[o.id] = [lever_rotate(pivot, center, theta) for theta in sweep]
        else:
            paths[o.id] = [o.center()] * len(controlled_points)
    return paths


def stage3_interactions(
    g: RelationGraph,
    u: SceneUnderstanding,
    drag: DragInput,
    inventory: ObjectInventory,
    scene: Scene,
    cfg: PipelineConfig,
    *,
    multipliers: list[float] | None = None,
    provenance_start: int = 0,
) -> CandidateSet:
    controlled = inventory.controlled
    if not controlled.bbox.contains(drag.start):
        raise InvalidDrag(
            f"drag starts at ({drag.start.x}, {drag.start.y}) outside the controlled "
            f"object {controlled.id!r} bbox {controlled.bbox.as_list()}"
        )
    if multipliers is None:
        multipliers = impulse_multipliers(cfg.rng_seed, cfg.candidates_per_iteration)
    controlled_traj = resample_trajectory(
        Trajectory(controlled.id, drag.points.points), cfg.frame_count
    )
    mobile_others = [o for o in inventory.others if o.mobile]
    restitution = _scene_restitution(u, cfg)
    gravity = effective_gravity(scene, u.interaction_type)
    bundles: list[CandidateBundle] = []
    for offset, multiplier in enumerate(multipliers):
        if u.interaction_type is InteractionType.COLLISION_CHAIN:
            paths = _simulate_collision_chain(
                controlled, mobile_others, controlled_traj.points, restitution, multiplier
            )
        elif u.interaction_type is InteractionType.GRAVITY_FORCE:
            paths = _simulate_gravity_force(
                controlled,
                mobile_others,
                controlled_traj.points,
                gravity,
                scene.statics.ground,
                multiplier,
            )
        else:
            paths = _simulate_lever_mirror(
                g, controlled, mobile_others, controlled_traj.points, scene
            )
        trajectories = tuple(
            Trajectory(object_id, tuple(points))
            for object_id, points in sorted(paths.items())
        )
        bundles.append(
            CandidateBundle(
                trajectories=trajectories,
                score=0.0,
                provenance=provenance_start + offset,
            )
        )
    return CandidateSet(tuple(bundles))


# --- stage 4: candidate scoring and ranking -----------------------------------


@dataclass(frozen=True, slots=True)
class ScoreComponents:
    penetration: float
    bounds: float
    momentum: float
    smoothness: float
    penetration_hits: tuple[tuple[int, str, str, float], ...]
    bounds_hits: tuple[tuple[int, str, float], ...]
    momentum_hits: tuple[tuple[int, str, str, float, float], ...]

    def weighted(self, cfg: PipelineConfig) -> float:
        return (
            cfg.w_penetration * self.penetration
            + cfg.w_bounds * self.bounds
            + cfg.w_momentum * self.momentum
            + cfg.w_smoothness * self.smoothness
        )


def _bundle_bodies(bundle: CandidateBundle, scene: Scene) -> dict[str, SceneObject]:
    objects: dict[str, SceneObject] = {}
    for t in bundle.trajectories:
        obj = scene.object_by_id(t.object_id)
        if obj is None:
            raise InvalidArgument(f"bundle references unknown object {t.object_id!r}")
        objects[t.object_id] = obj
    return objects


def _resting_on_ground(p: Point2, radius: float, ground: float | None) -> bool:
    return ground is not None and p.y + radius >= ground - GROUND_REST_EPS


def _touching_component(
    trajs: dict[str, tuple[Point2, ...]],
    objects: dict[str, SceneObject],
    ids: list[str],
    frame: int,
    seed_pair: tuple[str, str],
) -> frozenset[str]:
    """All bodies transitively in contact with the seed pair at ``frame``."""
    comp = set(seed_pair)
    changed = True
    while changed:
        changed = False
        for oid in ids:
            if oid in comp:
                continue
            for member in tuple(comp):
                dist = trajs[oid][frame].distance_to(trajs[member][frame])
                if dist <= objects[oid].radius() + objects[member].radius() + 1e-6:
                    comp.add(oid)
                    changed = True
                    break
    return frozenset(comp)


def compute_score_components(
    bundle: CandidateBundle, scene: Scene, cfg: PipelineConfig
) -> ScoreComponents:
    """Recompute every score ingredient from the trajectories alone.

    Collision/kick frames are recovered with the collision detector, so the
    scoring needs no record of how the bundle was generated. The frame of a
    detected event is exempt from penetration (discrete-time contact always
    shows instantaneous overlap) and from second-difference smoothness for
    the bodies involved; so are frames resting on the ground line.
    """
    objects = _bundle_bodies(bundle, scene)
    trajs = {t.object_id: t.points for t in bundle.trajectories}
    interaction = classify_scene(scene)
    gravity = effective_gravity(scene, interaction)
    ground = scene.statics.ground
    bodies = [
        (_body_of(objects[oid], pts[0]), Trajectory(oid, pts)) for oid, pts in trajs.items()
    ]
    events = detect_collisions(bodies)
    ids = sorted(trajs)
    n = len(next(iter(trajs.values()))) if trajs else 0

    # An impulse resolved at frame f travels instantaneously through every
    # body touching the event pair at f (chain transfers leave intermediate
    # bodies motionless), so exemptions and momentum bookkeeping work on the
    # whole touching component, not just the detected pair.
    event_frames: dict[str, set[int]] = {oid: set() for oid in trajs}
    exempt_pairs: set[tuple[int, str, str]] = set()
    components: dict[tuple[int, frozenset[str]], tuple[str, str]] = {}
    for e in events:
        comp = _touching_component(trajs, objects, ids, e.frame, e.pair)
        components.setdefault((e.frame, comp), e.pair)
        members = sorted(comp)
        for oid in members:
            event_frames[oid].add(e.frame)
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                exempt_pairs.add((e.frame, a, b))

    # Overlap is charged only while the pair keeps approaching: a resolved
    # contact can carry a constant residual overlap from the discrete step
    # that produced it, and that artifact must not differentiate candidates.
    penetration = 0.0
    pen_hits: list[tuple[int, str, str, float]] = []
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            ra, rb = objects[a].radius(), objects[b].radius()
            for k in range(n):
                if (k, a, b) in exempt_pairs:
                    continue
                pa, pb = trajs[a][k], trajs[b][k]
                dist = pa.distance_to(pb)
                depth = ra + rb - dist
                if depth <= 0.0:
                    continue
                if dist > 0.0:
                    va = velocity_into_frame(trajs[a], k)
                    vb = velocity_into_frame(trajs[b], k)
                    rel_vn = (
                        (vb[0] - va[0]) * (pb.x - pa.x) + (vb[1] - va[1]) * (pb.y - pa.y)
                    ) / dist
                    if rel_vn >= -1e-9:
                        continue
                penetration += depth
                pen_hits.append((k, a, b, depth))

    bounds = 0.0
    bounds_hits: list[tuple[int, str, float]] = []
    for oid in ids:
        for k, p in enumerate(trajs[oid]):
            dx = max(0.0, -p.x, p.x - scene.width)
            dy = max(0.0, -p.y, p.y - scene.height)
            excursion = math.hypot(dx, dy)
            if excursion > 0.0:
                bounds += excursion
                bounds_hits.append((k, oid, excursion))

    momentum = 0.0
    momentum_hits: list[tuple[int, str, str, float, float]] = []
    if interaction is InteractionType.COLLISION_CHAIN:
        for (frame, comp), pair in sorted(components.items(), key=lambda kv: (kv[0][0], kv[1])):
            if frame < 1 or frame + 1 >= n:
                continue
            before = [0.0, 0.0]
            after = [0.0, 0.0]
            in_norm = 0.0
            for oid in sorted(comp):
                m = objects[oid].mass
                pts = trajs[oid]
                vin = (pts[frame].x - pts[frame - 1].x, pts[frame].y - pts[frame - 1].y)
                vout = (pts[frame + 1].x - pts[frame].x, pts[frame + 1].y - pts[frame].y)
                before[0] += m * vin[0]
                before[1] += m * vin[1]
                after[0] += m * vout[0]
                after[1] += m * vout[1]
                in_norm += m * math.hypot(*vin)
            residual = math.hypot(after[0] - before[0], after[1] - before[1])
            relative = residual / max(in_norm, 1e-12)
            if residual > 0.0:
                momentum += residual
                momentum_hits.append((frame, pair[0], pair[1], residual, relative))

    smoothness = 0.0
    for oid in ids:
        pts = trajs[oid]
        r = objects[oid].radius()
        for k in range(1, len(pts) - 1):
            if k in event_frames[oid]:
                continue
            if any(_resting_on_ground(pts[j], r, ground) for j in (k - 1, k, k + 1)):
                continue
            sdx = pts[k + 1].x - 2 * pts[k].x + pts[k - 1].x
            sdy = pts[k + 1].y - 2 * pts[k].y + pts[k - 1].y
            raw = math.hypot(sdx, sdy)
            vs_gravity = math.hypot(sdx - gravity[0], sdy - gravity[1])
            smoothness += min(raw, vs_gravity)

    return ScoreComponents(
        penetration=penetration,
        bounds=bounds,
        momentum=momentum,
        smoothness=smoothness,
        penetration_hits=tuple(pen_hits),
        bounds_hits=tuple(bounds_hits),
        momentum_hits=tuple(momentum_hits),
    )


def score_bundle(bundle: CandidateBundle, scene: Scene, cfg: PipelineConfig) -> float:
    return compute_score_components(bundle, scene, cfg).weighted(cfg)


def stage4_rank(cs: CandidateSet, scene: Scene, cfg: PipelineConfig) -> CandidateBundle:
    """Argmin of the weighted score; ties go to the lowest provenance index."""
    best: CandidateBundle | None = None
    best_key: tuple[float, int] | None = None
    for bundle in cs.bundles:
        key = (score_bundle(bundle, scene, cfg), bundle.provenance)
        if best_key is None or key < best_key:
            best, best_key = bundle, key
    assert best is not None and best_key is not None
    return replace(best, score=best_key[0])


# --- stage 5: forward and backward validation ----------------------------------


def stage5_validate(
    best: CandidateBundle,
    drag: DragInput,
    u: SceneUnderstanding,
    g: RelationGraph,
    scene: Scene,
    cfg: PipelineConfig,
    *,
    iterations_used: int = 1,
) -> ValidationReport:
    comps = compute_score_components(best, scene, cfg)
    violations: list[Violation] = []
    for frame, a, b, depth in comps.penetration_hits:
        if depth > PENETRATION_LIMIT:
            violations.append(
                Violation("penetration", f"{a}&{b}", frame, f"overlap depth {depth:.3f}px")
            )
    for frame, oid, excursion in comps.bounds_hits:
        violations.append(Violation("bounds", oid, frame, f"{excursion:.3f}px outside scene"))
    if "momentum" in u.rule_set:
        for frame, a, b, residual, relative in comps.momentum_hits:
            if relative > MOMENTUM_RELATIVE_LIMIT:
                violations.append(
                    Violation("momentum", f"{a}&{b}", frame, f"relative residual {relative:.3g}")
                )
    controlled_id = drag.points.object_id
    for edge in g.edges_of(EdgeType.MIRROR_PAIR):
        ta, tb = best.trajectory_of(edge.a), best.trajectory_of(edge.b)
        if ta is None or tb is None:
            continue
        mirror = scene.statics.mirrors[edge.ref if edge.ref is not None else 0]
        reflected = mirror_reflect(mirror, ta)
        for k, (pr, pb) in enumerate(zip(reflected.points, tb.points)):
            gap = pr.distance_to(pb)
            if gap > MIRROR_ASYMMETRY_LIMIT:
                violations.append(
                    Violation("mirror-asymmetry", edge.b, k, f"reflection gap {gap:.3f}px")
                )

    controlled_traj = best.trajectory_of(controlled_id)
    if controlled_traj is None:
        raise InvalidArgument(f"bundle lacks the controlled object {controlled_id!r}")
    reconstructed = resample_trajectory(controlled_traj, len(drag.points.points))
    backward_error = sum(
        p.distance_to(q) for p, q in zip(reconstructed.points, drag.points.points)
    ) / len(drag.points.points)
    passed = not violations and backward_error <= cfg.backward_tolerance
    return ValidationReport(
        forward_violations=tuple(violations),
        backward_error=backward_error,
        passed=passed,
        iterations_used=iterations_used,
    )


# --- full pipeline -------------------------------------------------------------


def inventory_from_scene(scene: Scene, start: Point2) -> ObjectInventory:
    """Resolve the controlled object directly from scene annotations.

    The controlled object is the smallest mobile object whose bbox contains
    the drag start (ties by id); everything else becomes "others".
    """
    containing = [o for o in scene.objects if o.bbox.contains(start) and o.mobile]
    if not containing:
        raise InvalidDrag(f"drag start ({start.x}, {start.y}) hits no mobile object")
    controlled = min(containing, key=lambda o: (o.bbox.area, o.id))
    if controlled.mask is None:
        controlled = replace(
            controlled, mask=Mask.from_bbox(controlled.bbox, scene.width, scene.height)
        )
    others = tuple(o for o in scene.objects if o.id != controlled.id)
    return ObjectInventory(controlled=controlled, others=others)


def run_pipeline(
    scene: Scene,
    drag: DragInput,
    backend: PerceptionBackend | None = None,
    cfg: PipelineConfig | None = None,
    image_ref: str | None = None,
) -> PipelineResult:
    """Execute stages 1-5, re-entering stage 3 until validation passes.

    Exhausting the iteration budget is not an error: the best-effort bundle
    (lowest backward error, then score) is returned with passed=False.
    """
    cfg = cfg or PipelineConfig()
    problems = validate_scene(scene)
    if problems:
        raise InvalidArgument(
            "scene is invalid: " + "; ".join(f"{v.rule}({v.object_id})" for v in problems)
        )
    if not scene.contains(drag.start):
        raise InvalidDrag(f"drag start ({drag.start.x}, {drag.start.y}) outside the scene")

    if backend is not None:
        ref = image_ref if image_ref is not None else getattr(backend, "image_ref", None)
        if ref is None:
            raise InvalidArgument("remote backends need an explicit image_ref")
        inventory = perceive(backend, ref, drag.start)
        working_scene = replace(scene, objects=inventory.all_objects())
    else:
        inventory = inventory_from_scene(scene, drag.start)
        working_scene = scene
    bound_drag = DragInput(drag.start, Trajectory(inventory.controlled.id, drag.points.points))

    trace = StageTrace()
    u = stage1_understand(inventory, working_scene)
    trace.add(
        "S1",
        {"objects": len(inventory.all_objects()), "controlled": inventory.controlled.id},
        u.as_dict(),
    )
    g = stage2_relations(u, inventory, working_scene)
    trace.add("S2", {"nodes": len(g.nodes), "edges": len(g.edges)}, g.as_dict())

    stream_len = cfg.candidates_per_iteration * cfg.max_iterations
    stream = impulse_multipliers(cfg.rng_seed, stream_len)
    attempts: list[tuple[CandidateBundle, ValidationReport]] = []
    for iteration in range(1, cfg.max_iterations + 1):
        lo = (iteration - 1) * cfg.candidates_per_iteration
        multipliers = stream[lo : lo + cfg.candidates_per_iteration]
        cs = stage3_interactions(
            g, u, bound_drag, inventory, working_scene, cfg,
            multipliers=multipliers, provenance_start=lo,
        )
        trace.add(
            "S3",
            {"iteration": iteration, "candidates": len(cs.bundles), "multipliers": multipliers},
            [b.as_dict() for b in cs.bundles],
        )
        best = stage4_rank(cs, working_scene, cfg)
        trace.add(
            "S4",
            {
                "iteration": iteration,
                "selected_provenance": best.provenance,
                "scores": [score_bundle(b, working_scene, cfg) for b in cs.bundles],
            },
            best.as_dict(),
        )
        report = stage5_validate(
            best, bound_drag, u, g, working_scene, cfg, iterations_used=iteration
        )
        trace.add(
            "S5",
            {"iteration": iteration, "passed": report.passed, "backward_error": report.backward_error},
            report.as_dict(),
        )
        attempts.append((best, report))
        log.debug(
            "iteration %d: provenance=%d score=%.6g backward=%.6g passed=%s",
            iteration, best.provenance, best.score, report.backward_error, report.passed,
        )
        if report.passed:
            break

    trace.iterations = len(attempts)
    if attempts[-1][1].passed:
        chosen, chosen_report = attempts[-1]
    else:
        chosen, chosen_report = min(
            attempts, key=lambda br: (br[1].backward_error, br[0].score, br[0].provenance)
        )
    final_report = replace(chosen_report, iterations_used=len(attempts))
    return PipelineResult(
        trajectories=chosen.trajectories, report=final_report, trace=trace, inventory=inventory
    )
