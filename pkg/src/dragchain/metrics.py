"""Motion-consistency metrics over matched predicted/ground-truth tracks.

The headline score is the mean Euclidean distance between predicted and
real object positions over all matched objects, frames, and videos, in
raw pixels. The controlled-object-only variant restricts the same formula
to a single track. Track correspondence is explicit: identity matching
when the id sets coincide, otherwise a minimum-cost assignment on
first-frame distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidArgument, NotFound, UndefinedMetric
from .model import Trajectory, resample_trajectory

MatchMode = Literal["auto", "id", "spatial"]


@dataclass(frozen=True, slots=True)
class EvalPair:
    """One video's tracks plus the pred-id -> gt-id correspondence."""

    predicted: tuple[Trajectory, ...]
    ground_truth: tuple[Trajectory, ...]
    matching: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        pred_ids = [p for p, _ in self.matching]
        gt_ids = [g for _, g in self.matching]
        if len(set(pred_ids)) != len(pred_ids) or len(set(gt_ids)) != len(gt_ids):
            raise InvalidArgument("matching must be injective on both sides")

    def unmatched(self) -> tuple[list[str], list[str]]:
        matched_pred = {p for p, _ in self.matching}
        matched_gt = {g for _, g in self.matching}
        return (
            sorted(t.object_id for t in self.predicted if t.object_id not in matched_pred),
            sorted(t.object_id for t in self.ground_truth if t.object_id not in matched_gt),
        )


@dataclass(frozen=True, slots=True)
class MetricResult:
    value: float
    n_terms: int
    per_object: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return {"value": self.value, "n_terms": self.n_terms, "per_object": dict(self.per_object)}


def match_objects(
    predicted: list[Trajectory],
    ground_truth: list[Trajectory],
    mode: MatchMode = "auto",
) -> list[tuple[str, str]]:
    """Pair predicted tracks with ground-truth tracks.

    "id" requires coinciding id sets, "spatial" always runs the optimal
    assignment on first-frame point distance, "auto" uses identity matching
    when the id sets coincide and falls back to spatial otherwise. Surplus
    tracks on the larger side stay unmatched.
    """
    if not predicted or not ground_truth:
        raise InvalidArgument("both track lists must be non-empty")
    pred_ids = sorted(t.object_id for t in predicted)
    gt_ids = sorted(t.object_id for t in ground_truth)
    same_ids = pred_ids == gt_ids
    if mode == "id" and not same_ids:
        raise InvalidArgument("id matching requires identical id sets on both sides")
    if same_ids and mode != "spatial":
        return [(i, i) for i in pred_ids]
    preds = sorted(predicted, key=lambda t: t.object_id)
    gts = sorted(ground_truth, key=lambda t: t.object_id)
    cost = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, q in enumerate(gts):
            cost[i, j] = p.points[0].distance_to(q.points[0])
    rows, cols = linear_sum_assignment(cost)
    return sorted((preds[i].object_id, gts[j].object_id) for i, j in zip(rows, cols))


def _pair_distances(pair: EvalPair) -> dict[str, list[float]]:
    pred_by_id = {t.object_id: t for t in pair.predicted}
    gt_by_id = {t.object_id: t for t in pair.ground_truth}
    out: dict[str, list[float]] = {}
    for pred_id, gt_id in pair.matching:
        if pred_id not in pred_by_id or gt_id not in gt_by_id:
            raise InvalidArgument(f"matching references missing track {pred_id!r}/{gt_id!r}")
        gt = gt_by_id[gt_id]
        pred = resample_trajectory(pred_by_id[pred_id], len(gt.points))
        out[gt_id] = [p.distance_to(q) for p, q in zip(pred.points, gt.points)]
    return out


def moc(pairs: list[EvalPair]) -> MetricResult:
    """Mean per-point distance over all matched objects, frames, and videos."""
    total = 0.0
    n_terms = 0
    per_object: dict[str, list[float]] = {}
    for pair in pairs:
        for gt_id, distances in _pair_distances(pair).items():
            total += sum(distances)
            n_terms += len(distances)
            per_object.setdefault(gt_id, []).extend(distances)
    if n_terms == 0:
        raise UndefinedMetric("no matched points to score")
    return MetricResult(
        value=total / n_terms,
        n_terms=n_terms,
        per_object={k: sum(v) / len(v) for k, v in sorted(per_object.items())},
    )


def objmc(pair: EvalPair) -> MetricResult:
    """Same distance restricted to the single controlled track."""
    if len(pair.matching) != 1:
        raise NotFound(f"controlled-object pair must match exactly one track, got {len(pair.matching)}")
    return moc([pair])


def restrict_to_controlled(pair: EvalPair, controlled_gt_id: str) -> EvalPair:
    """Narrow an EvalPair down to the controlled object's matched track."""
    matching = tuple((p, g) for p, g in pair.matching if g == controlled_gt_id)
    if not matching:
        raise NotFound(f"controlled track {controlled_gt_id!r} is not matched")
    pred_id = matching[0][0]
    return EvalPair(
        predicted=tuple(t for t in pair.predicted if t.object_id == pred_id),
        ground_truth=tuple(t for t in pair.ground_truth if t.object_id == controlled_gt_id),
        matching=matching,
    )


def evaluate(
    videos: dict[str, tuple[list[Trajectory], list[Trajectory], str | None]],
    mode: MatchMode = "auto",
) -> dict[str, Any]:
    """Score a set of videos: id -> (predicted, ground truth, controlled gt id).

    Returns the canonical metrics payload with overall and per-video values
    plus every unmatched surplus track.
    """
    if not videos:
        raise InvalidArgument("no videos to evaluate")
    pairs: list[EvalPair] = []
    controlled_pairs: list[EvalPair] = []
    per_video: list[dict[str, Any]] = []
    unmatched: list[dict[str, Any]] = []
    for video_id in sorted(videos):
        predicted, ground_truth, controlled_id = videos[video_id]
        matching = match_objects(predicted, ground_truth, mode)
        pair = EvalPair(tuple(predicted), tuple(ground_truth), tuple(matching))
        pairs.append(pair)
        video_moc = moc([pair])
        entry: dict[str, Any] = {
            "video_id": video_id,
            "moc": video_moc.value,
            "n_terms": video_moc.n_terms,
            "per_object": video_moc.per_object,
        }
        if controlled_id is not None:
            controlled_pair = restrict_to_controlled(pair, controlled_id)
            controlled_pairs.append(controlled_pair)
            entry["objmc"] = objmc(controlled_pair).value
        per_video.append(entry)
        missing_pred, missing_gt = pair.unmatched()
        for track_id in missing_pred:
            unmatched.append({"video_id": video_id, "side": "predicted", "object_id": track_id})
        for track_id in missing_gt:
            unmatched.append({"video_id": video_id, "side": "ground_truth", "object_id": track_id})
    overall = moc(pairs)
    overall_objmc = moc(controlled_pairs).value if controlled_pairs else None
    return {
        "moc": overall.value,
        "objmc": overall_objmc,
        "n_terms": overall.n_terms,
        "per_video": per_video,
        "unmatched": unmatched,
    }
