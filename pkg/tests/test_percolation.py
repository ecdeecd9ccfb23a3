import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perciso.percolation import (GridSpec, Rect, all_open, check_uniq_event, crossing_check,
                                 domino_cover, domino_union_covers, estimate_theta, force_edges,
                                 from_open_edges, label_clusters, load_configuration, sample_configuration,
                                 save_configuration, small_cluster_bound, strongly_crossing_check)


def all_closed(n):
    return from_open_edges(n, [])


def open_edges(config):
    n = config.n
    out = []
    for i, j in zip(*np.nonzero(config.horizontal)):
        out.append(((i - n, j - n), (i - n + 1, j - n)))
    for i, j in zip(*np.nonzero(config.vertical)):
        out.append(((i - n, j - n), (i - n, j - n + 1)))
    return out


def flood_components(config):
    """Independent oracle: adjacency lists plus BFS."""
    n = config.n
    adj = {(x, y): [] for x in range(-n, n + 1) for y in range(-n, n + 1)}
    for a, b in open_edges(config):
        adj[a].append(b)
        adj[b].append(a)
    comp = {}
    for s in adj:
        if s in comp:
            continue
        comp[s] = s
        q = deque([s])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if w not in comp:
                    comp[w] = s
                    q.append(w)
    return comp


# ---------------------------------------------------------------- sampling

def test_p_one_opens_everything():
    c = sample_configuration(GridSpec(5, 1.0), 3)
    assert c.horizontal.all() and c.vertical.all()


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
def test_invalid_p_rejected(p):
    with pytest.raises(ValueError):
        GridSpec(4, p)


def test_invalid_n_rejected():
    with pytest.raises(ValueError):
        GridSpec(0, 0.5)


def test_same_seed_and_index_reproduce():
    spec = GridSpec(12, 0.6, 77)
    a, b = sample_configuration(spec, 7), sample_configuration(spec, 7)
    assert a.same_states(b)
    assert not a.same_states(sample_configuration(spec, 8))


def test_edge_states_shared_between_boxes():
    small = sample_configuration(GridSpec(4, 0.6, 5), 2)
    big = sample_configuration(GridSpec(9, 0.6, 5), 2)
    for e in open_edges(small):
        assert big.is_open(e)


def test_open_fraction_near_p():
    c = sample_configuration(GridSpec(60, 0.7, 1), 0)
    frac = c.open_count() / (2 * 120 * 121)
    assert abs(frac - 0.7) < 0.01


def test_grid_spec_json_roundtrip():
    spec = GridSpec(7, 0.65, 99)
    assert GridSpec.from_json(spec.to_json()) == spec
    assert GridSpec.from_json('{"n": 3, "p": 0.8, "seed": 2}') == GridSpec(3, 0.8, 2)


# ---------------------------------------------------------------- forcing

def test_forced_closed_reads_closed():
    c = all_open(3)
    e = ((0, 0), (1, 0))
    f = force_edges(c, [e], False)
    assert not f.is_open(e)
    assert ((e[0], e[1]), False) in f.forced_edges


def test_force_nothing_is_identity():
    c = sample_configuration(GridSpec(6, 0.6, 3), 1)
    assert force_edges(c, [], True).same_states(c)


def test_force_outside_box_rejected():
    with pytest.raises(ValueError):
        force_edges(all_open(2), [((2, 0), (3, 0))], False)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.lists(st.tuples(st.integers(-4, 3), st.integers(-4, 4), st.booleans()),
                                       max_size=20), st.booleans())
def test_plant_changes_only_listed_edges(seed, picks, state):
    n = 4
    c = sample_configuration(GridSpec(n, 0.6, seed), 0)
    edges = [((x, y), (x + 1, y)) if horiz else ((y, x), (y, x + 1)) for x, y, horiz in picks]
    f = force_edges(c, edges, state)
    listed = {tuple(sorted(e)) for e in edges}
    for e in open_edges(all_open(n)):
        if e in listed:
            assert f.is_open(e) == state
        else:
            assert f.is_open(e) == c.is_open(e)


def test_plant_keeps_other_states_of_resample():
    spec = GridSpec(10, 0.75, 4)
    forced = [((x, 0), (x + 1, 0)) for x in range(-10, 10)]
    a = sample_configuration(spec, 2, [(e, True) for e in forced])
    b = sample_configuration(spec, 2)
    assert force_edges(b, forced, True).same_states(a)


# ---------------------------------------------------------------- clusters

def test_all_open_single_cluster():
    lab = label_clusters(all_open(1))
    assert lab.count == 1 and lab.sizes[0] == 9


def test_all_closed_singletons():
    lab = label_clusters(all_closed(1))
    assert lab.count == 9 and (lab.sizes == 1).all()


def test_hand_configuration_sizes():
    # 5x5 box (n=2): an L-shaped cluster of 4 and a vertical pair
    edges = [((-2, -2), (-1, -2)), ((-1, -2), (0, -2)), ((0, -2), (0, -1)), ((2, 1), (2, 2))]
    lab = label_clusters(from_open_edges(2, edges))
    assert sorted(lab.sizes.tolist(), reverse=True)[:3] == [4, 2, 1]
    assert lab.count == 25 - 3 - 1
    big = lab.label_of(-2, -2)
    assert lab.diameters[big] == 3


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.floats(0.2, 0.9), st.integers(0, 2**32))
def test_labels_match_flood_fill(n, p, seed):
    c = sample_configuration(GridSpec(n, p, seed), 0)
    lab = label_clusters(c)
    comp = flood_components(c)
    assert lab.sizes.sum() == (2 * n + 1) ** 2
    pts = list(comp)
    rep = {}
    for q in pts:
        key = lab.label_of(*q)
        rep.setdefault(key, comp[q])
        assert rep[key] == comp[q]
    assert len(rep) == len(set(comp.values()))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(-5, 4), st.integers(-5, 5), st.booleans())
def test_opening_an_edge_never_shrinks_largest(seed, x, y, horiz):
    c = sample_configuration(GridSpec(5, 0.5, seed), 0)
    e = ((x, y), (x + 1, y)) if horiz else ((y, x), (y, x + 1))
    before = label_clusters(c).sizes.max()
    after = label_clusters(force_edges(c, [e], True)).sizes.max()
    assert after >= before


def test_uniq_event_all_open():
    rep = check_uniq_event(label_clusters(all_open(6)), 0.5)
    assert rep.uniq_event_holds and rep.giant_size == 169 and rep.theta_n_global == 1.0


def test_uniq_event_fails_all_closed():
    rep = check_uniq_event(label_clusters(all_closed(6)), 0.1)
    assert not rep.uniq_event_holds and rep.giant_label is None


def test_small_cluster_bound_natural_log_ceiling():
    assert small_cluster_bound(128) == math.ceil(math.log(128) ** 5)
    assert small_cluster_bound(1) == 0


def test_kappa_range_checked():
    with pytest.raises(ValueError):
        check_uniq_event(label_clusters(all_open(2)), 1.0)


def test_uniq_event_frequent_at_p075():
    spec = GridSpec(64, 0.75, 11)
    from perciso.percolation import uniq_report
    hits = sum(uniq_report(sample_configuration(spec, k))[1].uniq_event_holds for k in range(60))
    assert hits >= 58


def test_theta_p_one_exact():
    assert estimate_theta(1.0, 8, 5) == (1.0, 0.0)


def test_theta_subcritical_small():
    theta, _ = estimate_theta(0.4, 64, 40, seed=2)
    assert theta < 0.25


def test_theta_supercritical_stable():
    a, sa = estimate_theta(0.75, 32, 200, seed=3)
    b, sb = estimate_theta(0.75, 64, 200, seed=4)
    assert abs(a - b) < 2 * math.hypot(sa, sb) + 0.02


# ---------------------------------------------------------------- crossings

def test_all_open_rectangle_crosses():
    rc = crossing_check(all_open(4), Rect(-3, 3, -2, 2))
    assert rc.flags.sum() == 1 and rc.flag_at(0, 0)


def test_all_closed_has_no_crossing():
    assert not crossing_check(all_closed(4), Rect(-3, 3, -2, 2)).any()


def test_single_line_does_not_cross():
    line = [((x, 0), (x + 1, 0)) for x in range(-3, 3)]
    assert not crossing_check(from_open_edges(4, line), Rect(-3, 3, -2, 2)).any()


def test_degenerate_rectangle_rejected():
    with pytest.raises(ValueError):
        crossing_check(all_open(3), Rect(0, 0, -1, 1))


ANNULUS = [Rect(-8, 8, -8, -5), Rect(-8, 8, 5, 8), Rect(-8, -5, -8, 8), Rect(5, 8, -8, 8)]


def test_all_open_annulus_strongly_crossing():
    rc = strongly_crossing_check(all_open(8), ANNULUS, 3)
    assert rc.flags.sum() == 1 and rc.flag_at(8, 8)


def test_all_closed_annulus_none():
    assert not strongly_crossing_check(all_closed(8), ANNULUS, 3).any()


def test_missed_interval_is_not_strongly_crossing():
    # open all edges of the bottom rectangle except those touching the middle of its lower side
    r = Rect(-6, 6, -6, -3)
    cfg = all_open(8)
    cut = []
    for x in range(-2, 3):
        cut += [((x, -6), (x, -5))]
        cut += [((x, -6), (x + 1, -6)), ((x - 1, -6), (x, -6))]
    cfg = force_edges(cfg, cut, False)
    rc = strongly_crossing_check(cfg, [r], 4)
    assert not rc.flag_at(0, -4)
    # a direct scan of the lower side shows the run of 5 vertices the giant misses
    side = [rc.labels[x + 8, -6 + 8] == rc.labels[8, -4 + 8] for x in range(-6, 7)]
    assert side.count(False) == 5
    assert strongly_crossing_check(cfg, [r], 6).flag_at(0, -4)


def test_disconnected_overlap_rejected():
    with pytest.raises(ValueError):
        strongly_crossing_check(all_open(8), [Rect(-8, -5, -8, -5), Rect(5, 8, 5, 8)], 2)


# ---------------------------------------------------------------- dominos

def test_domino_strip_count():
    m = 3
    ds = domino_cover([Rect(0, 4 * m, 0, m)], m)
    assert domino_union_covers([Rect(0, 4 * m, 0, m)], ds)
    assert sum(d.aligned for d in ds) == 3
    assert all(d.aligned for d in ds)


def test_small_region_still_covered():
    region = [Rect(0, 2, 0, 1)]
    ds = domino_cover(region, 5)
    assert domino_union_covers(region, ds) and not ds[0].aligned


def test_square_of_side_m():
    region = [Rect(1, 4, 1, 4)]
    ds = domino_cover(region, 3)
    assert domino_union_covers(region, ds) and all(not d.aligned for d in ds)


def test_empty_region_rejected():
    with pytest.raises(ValueError):
        domino_cover([], 2)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(-10, 10), st.integers(0, 12), st.integers(-10, 10), st.integers(0, 12)),
                min_size=1, max_size=3), st.integers(1, 4))
def test_dominos_cover_every_vertex(rects, m):
    region = [Rect(x, x + w, y, y + h) for x, w, y, h in rects]
    ds = domino_cover(region, m)
    assert domino_union_covers(region, ds)
    for d in ds:
        assert {d.rect.width, d.rect.height} == {m, 2 * m}


# ---------------------------------------------------------------- persistence

def test_configuration_file_roundtrip(tmp_path):
    c = sample_configuration(GridSpec(9, 0.62, 123), 4)
    path = tmp_path / "c.bin"
    save_configuration(c, path)
    data = path.read_bytes()
    assert data[:4] == b"PERC"
    back = load_configuration(path)
    assert back.same_states(c) and back.spec == c.spec and back.sample_index == 4


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(ValueError):
        load_configuration(path)
