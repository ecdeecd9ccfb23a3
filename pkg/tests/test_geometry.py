import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from circuit_factory import oracle_counts, random_circuit, raycast_interior
from perciso._constants import C0, C0_SCAN_MAX_VOL
from perciso.geometry import (Circuit, Marks, PolyCurve, cells_inside, circuit_from_json, circuit_to_json,
                              close_path, concatenate, discrete_iso_check, hausdorff, iso_radius,
                              polygonal_approx, rectangle_circuit, scan_c0, simplify_to_simple,
                              square_circuit, strict_interior_count, vol, weighted_interior_count,
                              winding_hull)


def test_unit_square_volume():
    c = rectangle_circuit(0, 1, 0, 1)
    assert (c.length, c.area, c.interior_points, vol(c)) == (4, 1, 0, 4)


def test_two_by_two_square_volume():
    c = square_circuit(1)
    assert (c.length, c.area, c.interior_points, vol(c)) == (8, 4, 1, 9)


def test_clockwise_input_reversed():
    c = Circuit.from_points([(0, 0), (0, 1), (1, 1), (1, 0), (0, 0)])
    assert c.twice_area == 2


@pytest.mark.parametrize("pts", [
    [(0, 0), (1, 0), (1, 1)],                              # too short
    [(0, 0), (2, 0), (2, 1), (0, 1)],                      # non-unit step
    [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0), (0, -1)],     # repeated vertex
])
def test_invalid_circuits_rejected(pts):
    with pytest.raises(ValueError):
        Circuit(tuple(pts))


def test_vol_rejects_non_circuit():
    with pytest.raises(TypeError):
        vol([(0, 0), (1, 0), (1, 1), (0, 1)])


def test_random_circuits_match_oracles():
    rng = random.Random(7)
    mrng = np.random.default_rng(7)
    for _ in range(300):
        c = random_circuit(rng)
        marks_arr = mrng.random((80, 80)) < 0.6
        marks = Marks(marks_arr, -40, -40)
        V, M = oracle_counts(c, marks.at)
        assert vol(c) == V
        assert weighted_interior_count(c, marks) == M
        assert c.interior_points == raycast_interior(c)


def test_full_and_empty_marks():
    c = rectangle_circuit(-2, 3, -1, 4)
    assert weighted_interior_count(c, Marks.full(-5, 5, -5, 5)) == vol(c)
    assert weighted_interior_count(c, Marks(np.zeros((11, 11), bool), -5, -5)) == 0
    assert strict_interior_count(c, Marks.full(-5, 5, -5, 5)) == c.interior_points


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32))
def test_pick_identity_and_volume_area_gap(seed):
    c = random_circuit(random.Random(seed))
    I = raycast_interior(c)
    assert c.twice_area == 2 * I + c.length - 2
    assert abs(vol(c) - c.area) <= c.length
    assert len(cells_inside(c)) == c.area


def test_circuit_json_roundtrip():
    c = square_circuit(2, (1, -1))
    assert circuit_from_json(circuit_to_json(c)) == c


# ---------------------------------------------------------------- isoperimetry

def test_iso_check_rectangle_side_condition():
    chk = discrete_iso_check(rectangle_circuit(0, 2, 0, 3), 0.5)
    assert chk.holds_4eps is None
    assert chk.holds_c0 and chk.c0_used == C0


def test_large_squares_reach_4_minus_eps():
    eps = 0.5
    R = iso_radius(eps)
    for k in range(1, 101):
        c = rectangle_circuit(0, k, 0, k)
        chk = discrete_iso_check(c, eps)
        if vol(c) > R and c.length ** 3 <= vol(c) ** 2:
            assert chk.holds_4eps
    # ratio tends to 4 from below
    assert 4 * 100 / 101 < 4


def test_c0_scan_value():
    c0, g, v = scan_c0(12)
    assert (c0, g, v) == (2.0, 4, 4)
    assert C0 == 2.0 and C0_SCAN_MAX_VOL == 24


def test_c0_holds_for_random_circuits():
    rng = random.Random(3)
    for _ in range(500):
        c = random_circuit(rng)
        assert c.length >= C0 * math.sqrt(vol(c)) - 1e-12
        assert discrete_iso_check(c, 1.0).holds_c0


def test_iso_radius_range():
    with pytest.raises(ValueError):
        iso_radius(4.0)


# ---------------------------------------------------------------- polygonal approximation

def test_large_r_gives_start_and_end():
    curve = PolyCurve(np.array([(0, 0), (3, 1), (5, -2)], float))
    out = polygonal_approx(curve, 100)
    assert out.points.tolist() == [[0, 0], [5, -2]]


def test_square_breakpoints():
    out = polygonal_approx(rectangle_circuit(0, 4, 0, 4), 2)
    assert out.points.tolist() == [[0, 0], [2, 0], [4, 2], [2, 4], [0, 2], [0, 0]]


def test_nonpositive_r_rejected():
    with pytest.raises(ValueError):
        polygonal_approx(square_circuit(1), 0)


def random_polygon(rng, k=None):
    k = k or int(rng.integers(3, 13))
    ang = np.sort(rng.uniform(0, 2 * np.pi, k))
    rad = rng.uniform(1, 10, k)
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], -1)
    if rng.random() < 0.3:
        pts = rng.uniform(-8, 8, (k, 2))
    return PolyCurve(pts, True)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([0.3, 0.5, 1.0, 2.0]))
def test_polygonal_approx_properties(seed, r):
    curve = random_polygon(np.random.default_rng(seed))
    out = polygonal_approx(curve, r)
    assert out.length() <= curve.length() + 1e-9
    steps = np.max(np.abs(np.diff(out.points, axis=0)), axis=1)
    assert np.allclose(steps[:-1], r)
    assert steps[-1] <= r + 1e-9


# ---------------------------------------------------------------- winding hull

def test_unit_square_center_in_hull():
    h = winding_hull(rectangle_circuit(0, 1, 0, 1).as_curve())
    assert h.winding((0.5, 0.5)) == 1 and h.contains(np.array([0.5, 0.5]))
    assert not h.contains(np.array([3.0, 3.0]))
    assert h.area == 1


def test_figure_eight_both_lobes():
    eight = PolyCurve(np.array([(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (1, 2), (1, 1), (0, 1)], float), True)
    h = winding_hull(eight)
    assert h.winding((0.5, 0.5)) % 2 == 1 and h.winding((1.5, 1.5)) % 2 == 1
    assert h.area == 2


def test_hull_contains_trace():
    curve = random_polygon(np.random.default_rng(1), 9)
    h = winding_hull(curve)
    assert h.contains(curve.sample(0.25)).all()


# ---------------------------------------------------------------- Hausdorff

def test_hausdorff_identity_and_translate():
    seg = PolyCurve(np.array([(0, 0), (10, 0)], float))
    up = PolyCurve(np.array([(0, 3), (10, 3)], float))
    assert hausdorff(seg, seg) == 0
    assert hausdorff(seg, up) == pytest.approx(3)


def test_hausdorff_empty_rejected():
    with pytest.raises(ValueError):
        hausdorff(np.zeros((0, 2)), np.zeros((1, 2)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_hausdorff_symmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(-5, 5, (20, 2)), rng.uniform(-5, 5, (15, 2))
    assert hausdorff(a, b) == hausdorff(b, a)
    assert hausdorff(a, a) == 0


def test_hull_approximation_within_r():
    rng = np.random.default_rng(5)
    for _ in range(30):
        curve = random_polygon(rng)
        for r in (0.5, 1.0, 2.0):
            d = hausdorff(winding_hull(curve), winding_hull(polygonal_approx(curve, r)))
            assert d <= r + 0.25


# ---------------------------------------------------------------- simplification

def test_simple_curve_unchanged():
    c = rectangle_circuit(0, 3, 0, 2).as_curve()
    assert simplify_to_simple(c, 0.1) is c


def test_figure_eight_rewired():
    eight = PolyCurve(np.array([(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (1, 2), (1, 1), (0, 1)], float), True)
    out = simplify_to_simple(eight, 0.05)
    from shapely.geometry import Polygon
    assert Polygon(out.points).is_valid
    assert abs(Polygon(out.points).area - 2) < 0.05
    assert out.length() <= eight.length() + 0.05


def test_back_and_forth_becomes_tiny_square():
    seg = PolyCurve(np.array([(0, 0), (3, 0)], float), True)
    out = simplify_to_simple(seg, 0.01)
    from shapely.geometry import Polygon
    assert Polygon(out.points).area < 0.01


# ---------------------------------------------------------------- concatenation

def test_plain_concatenation():
    assert concatenate([(0, 0), (1, 0)], [(1, 0), (1, 1)]) == [(0, 0), (1, 0), (1, 1)]


def test_trimmed_at_first_meeting():
    gamma = [(0, 0), (1, 0), (2, 0), (3, 0), (3, 1), (2, 1)]
    gamma_prime = [(2, 1), (2, 2), (1, 2), (1, 1), (1, 0), (0, -1)]
    # gamma meets gamma_prime first at its vertex (1, 0), the 5th vertex of gamma_prime
    assert concatenate(gamma, gamma_prime) == [(0, 0), (1, 0), (0, -1)]


def test_gamma_inside_gamma_prime_gives_suffix():
    gamma = [(1, 0), (2, 0)]
    gamma_prime = [(2, 0), (1, 0), (0, 0)]
    assert concatenate(gamma, gamma_prime) == [(1, 0), (0, 0)]


def test_endpoint_mismatch_rejected():
    with pytest.raises(ValueError):
        concatenate([(0, 0), (1, 0)], [(2, 0), (3, 0)])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_concatenation_simple(seed):
    rng = random.Random(seed)

    def walk(start, k):
        p = [start]
        seen = {start}
        for _ in range(k):
            opts = [(p[-1][0] + dx, p[-1][1] + dy) for dx, dy in ((1, 0), (0, 1), (-1, 0), (0, -1))]
            opts = [q for q in opts if q not in seen]
            if not opts:
                break
            q = rng.choice(opts)
            seen.add(q)
            p.append(q)
        return p

    a = walk((0, 0), 15)
    b = walk(a[-1], 15)
    out = concatenate(a, b)
    assert len(set(out)) == len(out)
    assert out[0] == a[0] and out[-1] == b[-1]


def test_close_path_builds_circuit():
    path = [(0, 0), (1, 0), (1, 1)]
    back = [(1, 1), (0, 1), (0, 0)]
    c = close_path(path, back)
    assert vol(c) == 4
