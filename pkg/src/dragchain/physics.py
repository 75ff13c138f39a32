"""Deterministic motion kernels for the three interaction classes.

Collision response uses the standard impulse model on circle proxies:
only the normal velocity component changes, positions are untouched.
Ballistic motion is closed-form (no integrator drift), mirror reflection
and lever rotation are exact rigid transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DegenerateContact, InvalidArgument, InvalidChain
from .model import LineSegment, Point2, Trajectory

CONTACT_EPS = 1e-6
CHAIN_COLLINEAR_TOL = 1e-3


@dataclass(frozen=True, slots=True)
class BodyState:
    """Circle proxy for one object: center, per-frame velocity, radius, mass."""

    object_id: str
    center: Point2
    velocity: tuple[float, float]
    radius: float
    mass: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise InvalidArgument(f"body {self.object_id!r} needs positive radius")
        if self.mass <= 0:
            raise InvalidArgument(f"body {self.object_id!r} needs positive mass")
        if not all(math.isfinite(v) for v in (*self.velocity, self.center.x, self.center.y)):
            raise InvalidArgument(f"body {self.object_id!r} has non-finite state")


@dataclass(frozen=True, slots=True)
class CollisionEvent:
    """First approaching contact between a pair, normal points first -> second."""

    frame: int
    pair: tuple[str, str]
    normal: tuple[float, float]


def collide(a: BodyState, b: BodyState, restitution: float) -> tuple[BodyState, BodyState]:
    """Resolve one contact impulse between two touching bodies.

    Momentum is conserved exactly; kinetic energy is conserved iff
    restitution is 1 and never increases otherwise. Separating pairs are
    returned unchanged (no impulse to apply).
    """
    dx = b.center.x - a.center.x
    dy = b.center.y - a.center.y
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        raise DegenerateContact(f"bodies {a.object_id!r}/{b.object_id!r} share a center")
    nx, ny = dx / dist, dy / dist
    rel_vn = (b.velocity[0] - a.velocity[0]) * nx + (b.velocity[1] - a.velocity[1]) * ny
    if rel_vn >= 0.0:
        return a, b
    j = -(1.0 + restitution) * rel_vn / (1.0 / a.mass + 1.0 / b.mass)
    va = (a.velocity[0] - j * nx / a.mass, a.velocity[1] - j * ny / a.mass)
    vb = (b.velocity[0] + j * nx / b.mass, b.velocity[1] + j * ny / b.mass)
    return replace(a, velocity=va), replace(b, velocity=vb)


def propagate_chain(
    chain: list[BodyState], incoming_velocity: tuple[float, float], restitution: float
) -> list[BodyState]:
    """Resolve a touching collinear chain hit at its head.

    The head takes ``incoming_velocity`` and pairwise impulses are applied
    front-to-back repeatedly until no touching pair still approaches.
    Total momentum is preserved for any restitution.
    """
    if len(chain) < 2:
        raise InvalidArgument("chain needs at least two bodies")
    _check_collinear(chain)
    bodies = [replace(chain[0], velocity=incoming_velocity), *chain[1:]]
    # Each sweep transfers momentum strictly toward the tail; the bound is
    # generous insurance against pathological restitution/mass mixes.
    for _ in range(64 * len(bodies) * len(bodies)):
        settled = True
        for i in range(len(bodies) - 1):
            a, b = bodies[i], bodies[i + 1]
            if a.center.distance_to(b.center) > a.radius + b.radius + CONTACT_EPS:
                continue
            a2, b2 = collide(a, b, restitution)
            if a2 is not a or b2 is not b:
                bodies[i], bodies[i + 1] = a2, b2
                settled = False
        if settled:
            return bodies
    return bodies


def _check_collinear(chain: list[BodyState]) -> None:
    head, tail = chain[0].center, chain[-1].center
    ex, ey = tail.x - head.x, tail.y - head.y
    norm = math.hypot(ex, ey)
    if norm == 0.0:
        raise InvalidChain("chain endpoints coincide")
    for body in chain[1:-1]:
        px, py = body.center.x - head.x, body.center.y - head.y
        deviation = abs(px * ey - py * ex) / norm
        if deviation > CHAIN_COLLINEAR_TOL:
            raise InvalidChain(
                f"body {body.object_id!r} deviates {deviation:.4g}px from the chain line"
            )


def ballistic(
    start: Point2,
    v0: tuple[float, float],
    gravity: tuple[float, float],
    extra_force_accel: tuple[float, float],
    n: int,
    object_id: str = "body",
) -> Trajectory:
    """Closed-form constant-acceleration path: p(k) = p0 + v0*k + (g+extra)*k^2/2."""
    if n < 1:
        raise InvalidArgument("ballistic needs at least one frame")
    ax = gravity[0] + extra_force_accel[0]
    ay = gravity[1] + extra_force_accel[1]
    points = []
    for k in range(n):
        points.append(
            Point2(
                start.x + v0[0] * k + 0.5 * ax * k * k,
                start.y + v0[1] * k + 0.5 * ay * k * k,
            )
        )
    return Trajectory(object_id, tuple(points))


def lever_rotate(pivot: Point2, p: Point2, dtheta: float) -> Point2:
    """Rigid rotation of ``p`` about ``pivot``; positive is clockwise on screen."""
    c, s = math.cos(dtheta), math.sin(dtheta)
    dx, dy = p.x - pivot.x, p.y - pivot.y
    return Point2(pivot.x + dx * c - dy * s, pivot.y + dx * s + dy * c)


def reflect_point(mirror: LineSegment, p: Point2) -> Point2:
    """Reflect ``p`` about the infinite line through the mirror segment."""
    ax, ay = mirror.a.x, mirror.a.y
    dx, dy = mirror.b.x - ax, mirror.b.y - ay
    norm_sq = dx * dx + dy * dy
    vx, vy = p.x - ax, p.y - ay
    t = (vx * dx + vy * dy) / norm_sq
    return Point2(ax + 2.0 * t * dx - vx, ay + 2.0 * t * dy - vy)


def mirror_reflect(mirror: LineSegment, t: Trajectory) -> Trajectory:
    """Reflect every trajectory point; applying twice returns the original."""
    if mirror.is_degenerate():
        raise InvalidArgument("zero-length mirror")
    return Trajectory(t.object_id, tuple(reflect_point(mirror, p) for p in t.points))


def velocity_into_frame(points: tuple[Point2, ...], k: int) -> tuple[float, float]:
    """Per-frame velocity into frame k (backward diff; forward diff at k=0)."""
    if len(points) == 1:
        return (0.0, 0.0)
    if k == 0:
        return (points[1].x - points[0].x, points[1].y - points[0].y)
    return (points[k].x - points[k - 1].x, points[k].y - points[k - 1].y)


def detect_collisions(bodies: list[tuple[BodyState, Trajectory]]) -> list[CollisionEvent]:
    """Per-frame sweep for first approaching contacts.

    One event is emitted per pair per contact episode, at the first frame
    of the episode where the pair is both touching (center distance within
    the radius sum) and approaching along the contact normal. Events are
    sorted by frame, then by the lexicographic id pair.
    """
    if not bodies:
        return []
    frame_count = len(bodies[0][1].points)
    for _, traj in bodies:
        if len(traj.points) != frame_count:
            raise InvalidArgument("all trajectories must share one frame count")
    events: list[CollisionEvent] = []
    for i in range(len(bodies)):
        for j in range(i + 1, len(bodies)):
            (sa, ta), (sb, tb) = bodies[i], bodies[j]
            first, second = sorted(
                ((sa, ta), (sb, tb)), key=lambda item: item[0].object_id
            )
            fired = False
            for k in range(frame_count):
                pa, pb = first[1].points[k], second[1].points[k]
                dx, dy = pb.x - pa.x, pb.y - pa.y
                dist = math.hypot(dx, dy)
                touching = dist <= first[0].radius + second[0].radius
                if not touching:
                    fired = False
                    continue
                if fired or dist == 0.0:
                    continue
                va = velocity_into_frame(first[1].points, k)
                vb = velocity_into_frame(second[1].points, k)
                rel_vn = (vb[0] - va[0]) * dx / dist + (vb[1] - va[1]) * dy / dist
                if rel_vn < 0.0:
                    events.append(
                        CollisionEvent(
                            frame=k,
                            pair=(first[0].object_id, second[0].object_id),
                            normal=(dx / dist, dy / dist),
                        )
                    )
                    fired = True
    events.sort(key=lambda e: (e.frame, e.pair))
    return events
