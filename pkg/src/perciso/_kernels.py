"""Compiled lattice kernels.

Grid convention shared by every kernel: a box of side ``L`` indexed ``[i, j]``
with ``i`` the x-index and ``j`` the y-index; ``h[i, j]`` is the edge
``(i, j)-(i+1, j)`` and ``v[i, j]`` the edge ``(i, j)-(i, j+1)``.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# neighbour order E, N, W, S
_DI = np.array([1, 0, -1, 0], dtype=np.int64)
_DJ = np.array([0, 1, 0, -1], dtype=np.int64)


@njit(cache=True)
def _open_step(h, v, i, j, d):
    if d == 0:
        return i < h.shape[0] and h[i, j]
    if d == 1:
        return j < v.shape[1] and v[i, j]
    if d == 2:
        return i > 0 and h[i - 1, j]
    return j > 0 and v[i, j - 1]


@njit(cache=True)
def bfs(h, v, si, sj, ti, tj):
    """Breadth-first search from (si, sj).

    Returns ``(dist, parent)`` as flat arrays; ``dist`` is -1 where unreached.
    When ``ti >= 0`` the search stops once (ti, tj) is labelled.
    """
    L = h.shape[1]
    size = L * L
    dist = np.full(size, -1, dtype=np.int64)
    parent = np.full(size, -1, dtype=np.int64)
    queue = np.empty(size, dtype=np.int64)
    s = si * L + sj
    t = ti * L + tj if ti >= 0 else -1
    dist[s] = 0
    queue[0] = s
    head = 0
    tail = 1
    if s == t:
        return dist, parent
    while head < tail:
        u = queue[head]
        head += 1
        i = u // L
        j = u - i * L
        for d in range(4):
            if not _open_step(h, v, i, j, d):
                continue
            w = (i + _DI[d]) * L + (j + _DJ[d])
            if dist[w] >= 0:
                continue
            dist[w] = dist[u] + 1
            parent[w] = u
            if w == t:
                return dist, parent
            queue[tail] = w
            tail += 1
    return dist, parent


# north-east cell inside a ccw circuit, by (incoming, outgoing) direction
NE_INSIDE = np.array([[1, 0, 0, 1],
                      [1, 0, 0, 0],
                      [0, 0, 0, 0],
                      [1, 0, 1, 1]], dtype=np.int64)


@njit(cache=True)
def _path_less(a, na, b, nb):
    m = min(na, nb)
    for k in range(m):
        if a[k] != b[k]:
            return a[k] < b[k]
    return na < nb


@njit(cache=True)
def _reaches(h, v, mask, on, w, s, stamp, queue, mark):
    """Whether s can be reached from w through vertices >= s that are off the path."""
    L = h.shape[1]
    stamp[w] = mark
    queue[0] = w
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        ui = u // L
        uj = u - ui * L
        for d in range(4):
            if not _open_step(h, v, ui, uj, d):
                continue
            x = (ui + _DI[d]) * L + (uj + _DJ[d])
            if x == s:
                return True
            if x < s or on[x] or stamp[x] == mark:
                continue
            stamp[x] = mark
            queue[tail] = x
            tail += 1
    return False


@njit(cache=True)
def best_cycle(h, v, mask, prefix, strict, cap):
    """Exhaustive search over simple ccw cycles of the open subgraph on ``mask``.

    Minimises length / count, where count is the number of masked points of
    the closed region (``strict`` false, with vol <= cap) or of its strict
    interior (``strict`` true, uncapped, count > 0).  Each cycle is visited once,
    from its smallest vertex id.  Ties go to the lexicographically smallest
    vertex sequence.  Returns (length, count, path, cycles_seen).
    """
    L = h.shape[1]
    size = L * L
    max_len = size if strict else min(cap, size)
    on = np.zeros(size, dtype=np.bool_)
    path = np.empty(size + 1, dtype=np.int64)
    dirs = np.empty(size + 1, dtype=np.int64)
    nxt = np.empty(size + 1, dtype=np.int64)
    jsum = np.zeros(size + 1, dtype=np.int64)
    asum = np.zeros(size + 1, dtype=np.int64)
    best = np.empty(size + 1, dtype=np.int64)
    best_len = 0
    best_cnt = 0
    seen = 0
    stamp = np.zeros(size, dtype=np.int64)
    queue = np.empty(size, dtype=np.int64)
    mark = 1
    for s in range(size):
        si = s // L
        sj = s - si * L
        if not mask[si, sj]:
            continue
        path[0] = s
        on[s] = True
        nxt[0] = 0
        depth = 1
        while depth > 0:
            k = depth - 1
            u = path[k]
            ui = u // L
            uj = u - ui * L
            d = nxt[k]
            if d == 4:
                on[u] = False
                depth -= 1
                continue
            nxt[k] = d + 1
            if not _open_step(h, v, ui, uj, d):
                continue
            wi = ui + _DI[d]
            wj = uj + _DJ[d]
            w = wi * L + wj
            step_j = 0
            if d == 1:
                step_j = prefix[ui, uj]
            elif d == 3:
                step_j = -prefix[ui, wj]
            step_a = ui * wj - wi * uj
            if w == s:
                if depth < 4:
                    continue
                a2 = asum[k] + step_a
                if a2 <= 0:
                    continue
                seen += 1
                dirs[depth] = d
                jt = jsum[k] + step_j
                corr = 0
                bnd = 0
                for q in range(depth):
                    x = path[q]
                    xi = x // L
                    xj = x - xi * L
                    if mask[xi, xj]:
                        d_in = dirs[q] if q > 0 else d
                        d_out = dirs[q + 1]
                        corr += NE_INSIDE[d_in, d_out]
                        bnd += 1
                if strict:
                    cnt = jt - corr
                    if cnt <= 0:
                        continue
                else:
                    if (a2 + depth) // 2 + 1 > cap:
                        continue
                    cnt = jt + bnd - corr
                better = best_cnt == 0 or depth * best_cnt < best_len * cnt
                if not better and depth * best_cnt == best_len * cnt:
                    better = _path_less(path, depth, best, best_len)
                if better:
                    best_len = depth
                    best_cnt = cnt
                    for q in range(depth):
                        best[q] = path[q]
                continue
            if w < s or on[w] or depth >= max_len:
                continue
            si_ = s // L
            if abs(wi - si_) + abs(wj - (s - si_ * L)) > max_len - depth:
                continue
            mark += 1
            if not _reaches(h, v, mask, on, w, s, stamp, queue, mark):
                continue
            path[depth] = w
            dirs[depth] = d
            jsum[depth] = jsum[k] + step_j
            asum[depth] = asum[k] + step_a
            nxt[depth] = 0
            on[w] = True
            depth += 1
    return best_len, best_cnt, best[:best_len].copy(), seen


@njit(cache=True)
def negative_cycle(h, v, mask, wprefix, wvert, bvert, base):
    """Bellman-Ford on directed edges with turn-aware weights.

    State ``4 * u + d`` is the open edge leaving vertex ``u`` in direction
    ``d``.  Entering state (w, d2) from an edge arriving at w in direction d1
    costs ``base - a(w, d2) + wvert[w] * NE_INSIDE[d1, d2] + bvert[w]`` where
    ``a`` is the Green-sum term of the vertex weights (``wprefix`` holds their
    row prefix sums); immediate reversals are not allowed.  Along a simple ccw
    circuit the total is base |g| + sum of bvert on g - sum of weights strictly
    inside.  Returns the state cycle of a negative cycle, or an empty array.
    """
    L = h.shape[1]
    size = L * L
    N = 4 * size
    valid = np.zeros(N, dtype=np.bool_)
    wnode = np.zeros(N, dtype=np.float64)
    for u in range(size):
        ui = u // L
        uj = u - ui * L
        if not mask[ui, uj]:
            continue
        for d in range(4):
            if _open_step(h, v, ui, uj, d):
                valid[4 * u + d] = True
                a = 0.0
                if d == 1:
                    a = wprefix[ui, uj]
                elif d == 3:
                    a = -wprefix[ui, uj - 1]
                wnode[4 * u + d] = base - a
    dist = np.zeros(N, dtype=np.float64)
    parent = np.full(N, -1, dtype=np.int64)
    color = np.zeros(N, dtype=np.int64)
    count = 0
    for x in range(N):
        if valid[x]:
            count += 1
    for it in range(count + 1):
        changed = False
        for x in range(N):
            if not valid[x]:
                continue
            u = x // 4
            d1 = x - 4 * u
            ui = u // L
            uj = u - ui * L
            w = (ui + _DI[d1]) * L + (uj + _DJ[d1])
            wi = w // L
            wj = w - wi * L
            m = wvert[wi, wj]
            extra = bvert[wi, wj]
            for d2 in range(4):
                if d2 == (d1 + 2) % 4:
                    continue
                y = 4 * w + d2
                if not valid[y]:
                    continue
                c = dist[x] + wnode[y] + m * NE_INSIDE[d1, d2] + extra
                if c < dist[y] - 1e-12:
                    dist[y] = c
                    parent[y] = x
                    changed = True
        if not changed:
            return np.empty(0, dtype=np.int64)
        # look for a cycle in the parent graph
        color[:] = 0
        for x0 in range(N):
            if color[x0] != 0:
                continue
            x = x0
            while x >= 0 and color[x] == 0:
                color[x] = x0 + 1
                x = parent[x]
            if x >= 0 and color[x] == x0 + 1:
                cyc = [x]
                y = parent[x]
                while y != x:
                    cyc.append(y)
                    y = parent[y]
                out = np.empty(len(cyc), dtype=np.int64)
                for k in range(len(cyc)):
                    out[k] = cyc[len(cyc) - 1 - k]
                return out
            # mark the explored chain as finished
            y = x0
            while y >= 0 and color[y] == x0 + 1:
                color[y] = -1
                y = parent[y]
    return np.empty(0, dtype=np.int64)


@njit(cache=True)
def rect_density_scan(P, coords, n, delta, theta, inner):
    """Extreme giant densities over grid rectangles passing the diameter and ratio filters.

    ``P`` is the 2D prefix sum of the giant mask.  Returns
    (s_plus, rect_plus, s_minus, rect_minus, evaluated); s_minus only counts
    rectangles inside B(inner).
    """
    G = coords.shape[0]
    s_plus = -np.inf
    s_minus = -np.inf
    rp = np.zeros(4, np.int64)
    rm = np.zeros(4, np.int64)
    evaluated = 0
    for a in range(G):
        x0 = coords[a]
        for b in range(a + 1, G):
            x1 = coords[b]
            w = x1 - x0
            for c in range(G):
                y0 = coords[c]
                for d in range(c + 1, G):
                    y1 = coords[d]
                    h = y1 - y0
                    if w + h < delta * n:
                        continue
                    size = (w + 1) * (h + 1)
                    if n * 2 * (w + h) * delta > size:
                        continue
                    evaluated += 1
                    i0, i1, j0, j1 = x0 + n, x1 + n + 1, y0 + n, y1 + n + 1
                    cnt = P[i1, j1] - P[i0, j1] - P[i1, j0] + P[i0, j0]
                    dens = cnt / size
                    if dens - theta > s_plus:
                        s_plus = dens - theta
                        rp[0], rp[1], rp[2], rp[3] = x0, x1, y0, y1
                    if (max(-x0, x1, -y0, y1) <= inner) and theta - dens > s_minus:
                        s_minus = theta - dens
                        rm[0], rm[1], rm[2], rm[3] = x0, x1, y0, y1
    return s_plus, rp, s_minus, rm, evaluated
