import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from circuit_factory import oracle_phi
from perciso.geometry import circuit_from_cells, rectangle_circuit, square_circuit, vol, weighted_interior_count
from perciso.isosolver import (SolverConfig, brute_force_interior_ratio, brute_force_phi, certificate_lower_bound,
                               certificate_terms, check_witness, default_cap, giant_marks, local_search_improve,
                               parametric_ratio_test, parametric_threshold, phi, wulff_guided_circuit)
from perciso.percolation import GridSpec, all_open, from_open_edges, label_clusters, sample_configuration
from perciso.wulff import NormModel, wulff_shape

SQRT8 = 2 * math.sqrt(2)


def largest_mask(config):
    lab = label_clusters(config)
    return lab.labels == lab.largest()


# ---------------------------------------------------------------- exact search

def test_default_cap_floors():
    assert default_cap(2) == 12 and default_cap(1) == 4


def test_all_open_b2_optimum_is_two_by_three():
    r = brute_force_phi(all_open(2), 12)
    assert r.upper_bound == r.lower_bound == pytest.approx(10 / 12)
    assert r.witness.length == 10 and vol(r.witness) == 12
    assert oracle_phi(all_open(2), np.ones((5, 5), bool), 12) == pytest.approx(10 / 12)


def test_all_open_b1_unit_square():
    r = brute_force_phi(all_open(1), 4)
    assert r.upper_bound == 1.0 and r.witness.length == 4


def test_tree_config_is_infinite():
    path = [((x, 0), (x + 1, 0)) for x in range(-2, 2)] + [((0, y), (0, y + 1)) for y in range(-2, 2)]
    r = brute_force_phi(from_open_edges(2, path), 12)
    assert r.upper_bound == math.inf and r.witness is None
    assert brute_force_interior_ratio(from_open_edges(2, path)) == (math.inf, None)


def test_bruteforce_limited_to_small_boxes():
    with pytest.raises(ValueError):
        brute_force_phi(all_open(5))
    with pytest.raises(ValueError):
        SolverConfig(strategy="exhaustive")


@pytest.mark.parametrize("n,p,seed", [(2, 0.7, 1), (2, 0.6, 2), (3, 0.7, 3), (3, 0.65, 4)])
def test_brute_force_matches_dfs_oracle(n, p, seed):
    for k in range(4):
        c = sample_configuration(GridSpec(n, p, seed), k)
        mask = largest_mask(c)
        try:
            exact = brute_force_phi(c).upper_bound
        except ValueError:
            continue
        assert exact == pytest.approx(oracle_phi(c, mask, default_cap(n)), abs=1e-12)
        assert brute_force_interior_ratio(c, mask)[0] == pytest.approx(oracle_phi(c, mask, strict=True), abs=1e-12)


# ---------------------------------------------------------------- certificates

def test_half_box_certificate_tends_to_two_sqrt_two():
    eps = 0.05
    val = certificate_lower_bound(10**5, default_cap(10**5), eps)
    assert SQRT8 - eps / math.sqrt(2) - 1e-3 <= val <= SQRT8


def test_c0_form_at_cap_zeta_n_squared():
    n, zeta = 1000, 0.3
    assert certificate_terms(n, int(zeta * n * n))["c0"] == pytest.approx(2 / math.sqrt(zeta), rel=1e-6)


def test_certificate_small_cap_rejected():
    with pytest.raises(ValueError):
        certificate_terms(2, 3)


def test_certificate_below_brute_force():
    lb = certificate_lower_bound(2, 12) / 2
    for k in range(100):
        c = sample_configuration(GridSpec(2, 0.5 + 0.4 * (k % 5) / 4, 11), k)
        try:
            r = brute_force_phi(c, 12)
        except ValueError:
            continue
        assert lb <= r.upper_bound


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 60), st.integers(1, 60))
def test_certificate_floor_on_rectangles(w, h):
    # every circuit satisfies n |g| / vol >= certificate, whatever its giant count
    c = rectangle_circuit(0, w, 0, h)
    n = (max(w, h) + 1) // 2
    cap = max(vol(c), default_cap(n))
    assert n * c.length / vol(c) >= certificate_lower_bound(n, cap) - 1e-12


# ---------------------------------------------------------------- parametric test

def test_parametric_extremes():
    c = all_open(3)
    mask = np.ones((7, 7), bool)
    assert parametric_ratio_test(c, 1000.0, mask)
    assert not parametric_ratio_test(c, 0.5, mask)
    with pytest.raises(ValueError):
        parametric_ratio_test(c, 0.0, mask)


def test_parametric_threshold_matches_enumeration():
    for k in range(6):
        c = sample_configuration(GridSpec(3, 0.65, 21), k)
        mask = largest_mask(c)
        t_star, w = parametric_threshold(c, mask)
        want = oracle_phi(c, mask, strict=True)
        if want == math.inf:
            assert t_star == math.inf
        else:
            assert abs(t_star - want) <= 1e-6 * want


# ---------------------------------------------------------------- local search

def test_zero_budget_is_identity():
    c = square_circuit(1)
    assert local_search_improve(all_open(3), c, 0) is c


def test_optimal_circuit_unchanged():
    c = brute_force_phi(all_open(2), 12).witness
    assert local_search_improve(all_open(2), c, 50, cap=12) is c


def test_dented_rectangle_recovered():
    dent = circuit_from_cells({(a, b) for a in range(-1, 1) for b in range(-1, 2)} - {(0, 1)})
    assert (dent.length, vol(dent)) == (10, 11)
    out = local_search_improve(all_open(2), dent, 50, cap=12)
    assert out.length / vol(out) == pytest.approx(10 / 12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32))
def test_local_search_never_worsens(seed):
    c = sample_configuration(GridSpec(12, 0.8, seed), 0)
    mask = largest_mask(c)
    marks = giant_marks(12, mask)
    start = square_circuit(4)
    if not check_witness(c, start, mask, default_cap(12)):
        return
    out = local_search_improve(c, start, 100, mask=mask)
    assert check_witness(c, out, mask, default_cap(12))
    assert out.length / weighted_interior_count(out, marks) <= start.length / weighted_interior_count(start, marks)


# ---------------------------------------------------------------- Wulff-guided circuits

def test_guided_circuit_on_full_grid():
    n = 40
    g = wulff_guided_circuit(all_open(n), wulff_shape(NormModel.l1(), 8), 0.1, NormModel.l1())
    assert g is not None
    assert n * g.ratio == pytest.approx(SQRT8, rel=0.15)
    assert g.within_distance and g.within_length


def test_guided_eps_range():
    with pytest.raises(ValueError):
        wulff_guided_circuit(all_open(8), wulff_shape(NormModel.l1(), 8), 0.25, NormModel.l1())
    with pytest.raises(ValueError):
        SolverConfig(eps=(0.3,))


def test_guided_requires_giant():
    with pytest.raises(ValueError):
        wulff_guided_circuit(from_open_edges(8, []), wulff_shape(NormModel.l1(), 8), 0.1, NormModel.l1())


# ---------------------------------------------------------------- phi

def test_small_boxes_dispatch_to_exact():
    r = phi(all_open(2))
    assert r.method == ("bruteforce",) and r.lower_bound == r.upper_bound


def test_full_grid_phi_near_two_sqrt_two():
    r = phi(all_open(64))
    assert 64 * r.upper_bound == pytest.approx(SQRT8, rel=0.05)


def test_event_failure_is_flagged():
    r = phi(from_open_edges(8, []))
    assert r.event_failed and math.isnan(r.upper_bound)


def test_small_boxes_upper_bound_dominates_exact():
    for k in range(20):
        c = sample_configuration(GridSpec(3, 0.5 + 0.3 * (k % 4) / 3, 31), k)
        try:
            exact = brute_force_phi(c).upper_bound
        except ValueError:
            continue
        r = phi(c, SolverConfig(strategy="candidates", require_event=False))
        if r.witness is not None:
            assert r.upper_bound >= exact - 1e-12


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_witness_invariants(seed):
    n = 24
    c = sample_configuration(GridSpec(n, 0.75, seed), 0)
    r = phi(c, SolverConfig(strategy="parametric"))
    if r.event_failed:
        pytest.skip("uniqueness event failed")
    lab = label_clusters(c)
    mask = lab.labels == lab.largest()
    assert check_witness(c, r.witness, mask, r.cap)
    assert r.witness.length / weighted_interior_count(r.witness, giant_marks(n, mask)) == r.upper_bound
    assert r.lower_bound <= r.upper_bound
    assert n * r.witness.length / vol(r.witness) >= certificate_lower_bound(n, r.cap) * (1 - 1e-12)
    data = r.to_json()
    assert {"n", "p", "seed", "lb", "ub", "method", "witness", "vol", "interior_count"} <= set(data)

