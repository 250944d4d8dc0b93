import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import clarke_grid
from ppglucose.clinical import (
    ZONES,
    clarke_boundaries,
    clarke_summary,
    clarke_zone,
    clinical_acceptability,
    evaluate,
)
from ppglucose.errors import DomainError, RangeError

glucose = st.floats(0, 600, allow_nan=False)


@pytest.mark.parametrize(
    "ref, pred, zone",
    [
        (100, 100, "A"),
        (50, 50, "A"),
        (60, 200, "E"),
        (100, 119, "A"),
        (100, 121, "B"),
        (50, 100, "D"),
        (300, 100, "D"),
        (100, 250, "C"),
        (170, 40, "C"),
        (250, 30, "E"),
    ],
)
def test_zone_examples(ref, pred, zone):
    assert clarke_zone(ref, pred) == zone


@pytest.mark.parametrize("ref, pred", [(-1, 100), (100, -0.5), (601, 100), (100, 700)])
def test_zone_range_error(ref, pred):
    with pytest.raises(RangeError):
        clarke_zone(ref, pred)


def test_boundaries_go_to_benign_side():
    assert clarke_zone(100, 120) == "A"  # exactly 20 %
    assert clarke_zone(100, 80) == "A"
    assert clarke_zone(70, 180) == "B"  # edge of the upper-left D box
    assert clarke_zone(180, 70) == "B"  # edge of the lower-right E box
    assert clarke_zone(240, 100) == "B"  # left edge of the right D box


def test_integer_grid_matches_oracle():
    R, P = np.meshgrid(np.arange(401), np.arange(401), indexing="ij")
    expected, masks = clarke_grid(R, P)
    # the oracle's regions are disjoint and cover the grid
    assert np.array_equal(sum(m.astype(int) for m in masks.values()), np.ones_like(R))
    got = np.array([[clarke_zone(r, p) for p in range(401)] for r in range(401)])
    mismatch = np.argwhere(got != expected)
    assert mismatch.size == 0, f"first mismatches: {mismatch[:5].tolist()}"


@settings(max_examples=300, deadline=None)
@given(glucose)
def test_diagonal_is_zone_a(x):
    assert clarke_zone(x, x) == "A"
    assert clinical_acceptability(x, x)


@settings(max_examples=300, deadline=None)
@given(glucose, glucose)
def test_zone_a_above_70_is_within_20_percent(r, p):
    if r >= 70 and clarke_zone(r, p) == "A":
        assert abs(p - r) <= 0.2 * r + 1e-9


@pytest.mark.parametrize(
    "ref, pred, ok",
    [(70, 84, True), (100, 121, False), (100, 120, True), (60, 75, True), (60, 76, False), (75, 90, True), (75, 91, False)],
)
def test_acceptability(ref, pred, ok):
    assert clinical_acceptability(ref, pred) is ok


def test_acceptability_range():
    with pytest.raises(RangeError):
        clinical_acceptability(100, 601)


def test_summary_diagonal():
    s = clarke_summary([(x, x) for x in (40, 90, 150, 300)])
    assert s.percentages["A"] == 100.0 and s.n == 4


def test_summary_single_pair():
    s = clarke_summary([(60, 200)])
    assert s.counts["E"] == 1 and s.percentages["E"] == 100.0


def test_summary_hand_placed_fixture():
    pairs = [(100, 100), (100, 130), (60, 200), (300, 100), (100, 250), (170, 40), (50, 60), (200, 150), (250, 30), (90, 110)]
    s = clarke_summary(pairs)
    zones, _ = clarke_grid(np.array([r for r, _ in pairs]), np.array([p for _, p in pairs]))
    for z in ZONES:
        assert s.counts[z] == int(np.sum(zones == z))
        assert s.percentages[z] == 100.0 * np.sum(zones == z) / len(pairs)
    assert sum(s.counts.values()) == 10
    assert sum(s.percentages.values()) == pytest.approx(100.0, abs=1e-9)


def test_summary_empty():
    with pytest.raises(DomainError):
        clarke_summary([])


def test_evaluate_perfect_predictions():
    ref = np.array([80.0, 120.0, 200.0, 310.0])
    report = evaluate(ref.copy(), ref)
    assert report.sep == 0 and report.rmsep == 0
    assert report.zone_percentages["A"] == 100.0
    assert report.clinically_acceptable_fraction == 1.0
    d = report.to_dict()
    for key in ("sep", "rmsep", "zone_percentages", "clinically_acceptable_fraction", "n"):
        assert key in d


def test_evaluate_clips_wild_predictions_for_zoning():
    report = evaluate(np.array([-20.0, 700.0]), np.array([100.0, 100.0]))
    assert report.n == 2
    assert report.rmsep > 300  # metrics keep the raw values


def test_boundaries_are_segments():
    segs = clarke_boundaries(400)
    assert segs and all(len(seg) == 2 and len(seg[1]) == 2 for seg in segs)
    for _, ((x0, y0), (x1, y1)) in segs:
        assert 0 <= min(x0, x1) and max(x0, x1) <= 400 and max(y0, y1) <= 400
