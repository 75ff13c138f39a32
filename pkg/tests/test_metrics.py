import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dragchain.errors import InvalidArgument, NotFound, UndefinedMetric
from dragchain.metrics import (
    EvalPair,
    evaluate,
    match_objects,
    moc,
    objmc,
    restrict_to_controlled,
)
from dragchain.model import Trajectory


def traj(object_id, coords):
    return Trajectory.of(object_id, coords)


def identity_pair(tracks_pred, tracks_gt):
    matching = tuple((t.object_id, t.object_id) for t in tracks_gt)
    return EvalPair(tuple(tracks_pred), tuple(tracks_gt), matching)


# --- match_objects ---------------------------------------------------------------


def test_match_identity_when_ids_coincide():
    pred = [traj("a", [(0, 0)]), traj("b", [(5, 5)])]
    gt = [traj("b", [(50, 50)]), traj("a", [(9, 9)])]
    assert match_objects(pred, gt) == [("a", "a"), ("b", "b")]


def test_match_spatial_cross_assignment():
    pred = [traj("p0", [(0, 0)]), traj("p1", [(100, 0)])]
    gt = [traj("g0", [(99, 1)]), traj("g1", [(1, 1)])]
    got = match_objects(pred, gt)
    # brute-force oracle over both permutations
    def cost(pairs):
        pred_by = {t.object_id: t for t in pred}
        gt_by = {t.object_id: t for t in gt}
        return sum(
            pred_by[p].points[0].distance_to(gt_by[g].points[0]) for p, g in pairs
        )

    best = min(
        ([("p0", "g0"), ("p1", "g1")], [("p0", "g1"), ("p1", "g0")]),
        key=cost,
    )
    assert sorted(got) == sorted(best) == [("p0", "g1"), ("p1", "g0")]


def test_match_surplus_tracks_reported():
    pred = [traj(f"p{i}", [(i * 10, 0)]) for i in range(3)]
    gt = [traj(f"g{i}", [(i * 10, 1)]) for i in range(2)]
    matching = match_objects(pred, gt)
    assert len(matching) == 2
    pair = EvalPair(tuple(pred), tuple(gt), tuple(matching))
    unmatched_pred, unmatched_gt = pair.unmatched()
    assert len(unmatched_pred) == 1 and unmatched_gt == []


def test_match_empty_side_rejected():
    with pytest.raises(InvalidArgument):
        match_objects([], [traj("a", [(0, 0)])])


def test_match_id_mode_requires_same_ids():
    with pytest.raises(InvalidArgument):
        match_objects([traj("a", [(0, 0)])], [traj("b", [(0, 0)])], mode="id")


@given(
    st.lists(
        st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=1, max_size=5
    )
)
def test_match_spatial_matches_bruteforce(points):
    pred = [traj(f"p{i}", [p]) for i, p in enumerate(points)]
    gt = [traj(f"g{i}", [(x + 1, y)]) for i, (x, y) in enumerate(reversed(points))]
    got = match_objects(pred, gt, mode="spatial")
    pred_by = {t.object_id: t for t in pred}
    gt_by = {t.object_id: t for t in gt}

    def total(pairs):
        return sum(pred_by[p].points[0].distance_to(gt_by[g].points[0]) for p, g in pairs)

    best = min(
        (
            list(zip([t.object_id for t in pred], perm))
            for perm in itertools.permutations([t.object_id for t in gt])
        ),
        key=total,
    )
    assert total(got) == pytest.approx(total(best), abs=1e-9)


# --- moc ---------------------------------------------------------------------------


def test_moc_three_four_five():
    pair = identity_pair([traj("a", [(3, 4)])], [traj("a", [(0, 0)])])
    result = moc([pair])
    assert result.value == 5.0
    assert result.n_terms == 1


def test_moc_identity_zero():
    tracks = [traj("a", [(1, 2), (3, 4)]), traj("b", [(5, 6), (7, 8)])]
    pair = identity_pair(tracks, tracks)
    result = moc([pair])
    assert result.value == 0.0
    assert result.n_terms == 4


def test_moc_mean_over_all_terms():
    # two objects x two frames with point distances {1, 1, 2, 2}
    pred = [traj("a", [(1, 0), (1, 0)]), traj("b", [(0, 2), (0, 2)])]
    gt = [traj("a", [(0, 0), (0, 0)]), traj("b", [(0, 0), (0, 0)])]
    result = moc([identity_pair(pred, gt)])
    assert result.value == pytest.approx(1.5)
    assert result.n_terms == 4
    assert result.per_object == {"a": 1.0, "b": 2.0}


def test_moc_resamples_prediction_to_gt_length():
    pred = [traj("a", [(0, 0), (10, 0)])]
    gt = [traj("a", [(0, 0), (5, 0), (10, 0)])]
    result = moc([identity_pair(pred, gt)])
    assert result.value == 0.0
    assert result.n_terms == 3


def test_moc_no_matches_is_undefined():
    pair = EvalPair((traj("a", [(0, 0)]),), (traj("b", [(0, 0)]),), ())
    with pytest.raises(UndefinedMetric):
        moc([pair])


@given(st.floats(-1000, 1000), st.floats(-1000, 1000))
def test_moc_joint_translation_invariance(dx, dy):
    base_pred = [traj("a", [(0, 0), (3, 1)]), traj("b", [(5, 5), (6, 6)])]
    base_gt = [traj("a", [(1, 0), (2, 2)]), traj("b", [(5, 7), (8, 6)])]

    def shift(tracks):
        return [
            traj(t.object_id, [(p.x + dx, p.y + dy) for p in t.points]) for t in tracks
        ]

    v0 = moc([identity_pair(base_pred, base_gt)]).value
    v1 = moc([identity_pair(shift(base_pred), shift(base_gt))]).value
    assert v1 == pytest.approx(v0, abs=1e-9 * max(1.0, abs(dx), abs(dy)))


@given(st.floats(0.01, 100))
def test_moc_scales_linearly(s):
    base_pred = [traj("a", [(0, 0), (3, 1)])]
    base_gt = [traj("a", [(1, 0), (2, 2)])]

    def scale(tracks):
        return [
            traj(t.object_id, [(p.x * s, p.y * s) for p in t.points]) for t in tracks
        ]

    v0 = moc([identity_pair(base_pred, base_gt)]).value
    v1 = moc([identity_pair(scale(base_pred), scale(base_gt))]).value
    assert v1 == pytest.approx(v0 * s, rel=1e-9)


def test_moc_union_is_n_weighted_mean():
    pair_a = identity_pair([traj("a", [(1, 0), (1, 0)])], [traj("a", [(0, 0), (0, 0)])])
    pair_b = identity_pair([traj("b", [(0, 5)])], [traj("b", [(0, 0)])])
    ra, rb = moc([pair_a]), moc([pair_b])
    union = moc([pair_a, pair_b])
    expected = (ra.value * ra.n_terms + rb.value * rb.n_terms) / (ra.n_terms + rb.n_terms)
    assert union.value == pytest.approx(expected, rel=1e-12)
    assert union.n_terms == ra.n_terms + rb.n_terms


# --- objmc ---------------------------------------------------------------------------


def test_objmc_identity_zero():
    pair = identity_pair([traj("c", [(1, 1)])], [traj("c", [(1, 1)])])
    assert objmc(pair).value == 0.0


def test_objmc_constant_offset():
    pred = [traj("c", [(0, 7), (1, 7), (2, 7)])]
    gt = [traj("c", [(0, 0), (1, 0), (2, 0)])]
    assert objmc(identity_pair(pred, gt)).value == pytest.approx(7.0)


def test_objmc_mean_of_distances():
    pred = [traj("c", [(3, 0), (0, 4), (5, 0)])]
    gt = [traj("c", [(0, 0), (0, 0), (0, 0)])]
    assert objmc(identity_pair(pred, gt)).value == pytest.approx(4.0)


def test_objmc_requires_single_track():
    pred = [traj("a", [(0, 0)]), traj("b", [(0, 0)])]
    pair = identity_pair(pred, pred)
    with pytest.raises(NotFound):
        objmc(pair)


def test_restrict_to_controlled_missing():
    pair = identity_pair([traj("a", [(0, 0)])], [traj("a", [(0, 0)])])
    with pytest.raises(NotFound):
        restrict_to_controlled(pair, "zz")


# --- evaluate -------------------------------------------------------------------------


def test_evaluate_payload_shape():
    videos = {
        "v1": (
            [traj("a", [(3, 4)]), traj("x", [(1000, 1000)])],
            [traj("a", [(0, 0)])],
            "a",
        ),
        "v0": ([traj("b", [(1, 0)])], [traj("b", [(0, 0)])], None),
    }
    out = evaluate(videos)
    assert set(out) == {"moc", "objmc", "n_terms", "per_video", "unmatched"}
    assert [v["video_id"] for v in out["per_video"]] == ["v0", "v1"]
    assert out["n_terms"] == 2
    assert out["moc"] == pytest.approx(3.0)  # distances {1, 5}
    assert out["objmc"] == pytest.approx(5.0)
    assert out["unmatched"] == [
        {"video_id": "v1", "side": "predicted", "object_id": "x"}
    ]
