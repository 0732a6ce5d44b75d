"""Hot kernels: boundary-matrix column reduction, union-find pairing, LAP.

Each kernel has a plain-Python definition (suffix _py) that is wrapped by the
optional numba JIT. The pure versions stay importable so small-instance tests
can pin down that both paths compute the same thing. Everything works on flat
int64/float64 arrays; no dicts, no objects, so the JIT can compile them.
"""

import numpy as np

from ._accel import jit


def _reduce_fixed_py(face_pos, col_pos, skip, npos):
    """Reduces a fixed-width boundary matrix over GF(2).

    Columns arrive in filtration order. face_pos[j] holds the (sorted
    ascending) filtration positions of column j's faces; col_pos[j] is the
    filtration position of the column's own cell; skip[j] marks columns
    cleared by the next-higher dimension's pairing.

    Returns (pair_rows, pair_cols, creator): pivot row position and column
    position per pair, plus a creator flag per column (True when the column
    reduced to zero).
    """
    m, w = face_pos.shape
    owner = np.full(npos, -1, dtype=np.int64)
    # reduced columns live concatenated in buf, located by col_start/col_len
    buf = np.empty(max(4 * m, 64), dtype=np.int64)
    buf_len = 0
    col_start = np.zeros(m, dtype=np.int64)
    col_len = np.zeros(m, dtype=np.int64)
    cap = 64
    cur = np.empty(cap, dtype=np.int64)
    tmp = np.empty(cap, dtype=np.int64)
    pair_rows = np.empty(m, dtype=np.int64)
    pair_cols = np.empty(m, dtype=np.int64)
    npairs = 0
    creator = np.zeros(m, dtype=np.bool_)
    for j in range(m):
        if skip[j]:
            continue
        clen = w
        for t in range(w):
            cur[t] = face_pos[j, t]
        while clen > 0:
            low = cur[clen - 1]
            o = owner[low]
            if o == -1:
                break
            os_ = col_start[o]
            ol = col_len[o]
            need = clen + ol
            if need > cap:
                while cap < need:
                    cap *= 2
                ncur = np.empty(cap, dtype=np.int64)
                ncur[:clen] = cur[:clen]
                cur = ncur
                tmp = np.empty(cap, dtype=np.int64)
            # symmetric difference of two sorted position lists
            a = 0
            b = 0
            k = 0
            while a < clen and b < ol:
                x = cur[a]
                y = buf[os_ + b]
                if x < y:
                    tmp[k] = x
                    k += 1
                    a += 1
                elif y < x:
                    tmp[k] = y
                    k += 1
                    b += 1
                else:
                    a += 1
                    b += 1
            while a < clen:
                tmp[k] = cur[a]
                k += 1
                a += 1
            while b < ol:
                tmp[k] = buf[os_ + b]
                k += 1
                b += 1
            swap = cur
            cur = tmp
            tmp = swap
            clen = k
        if clen == 0:
            creator[j] = True
        else:
            low = cur[clen - 1]
            owner[low] = j
            if buf_len + clen > buf.size:
                newsize = buf.size * 2
                while newsize < buf_len + clen:
                    newsize *= 2
                nbuf = np.empty(newsize, dtype=np.int64)
                nbuf[:buf_len] = buf[:buf_len]
                buf = nbuf
            col_start[j] = buf_len
            col_len[j] = clen
            buf[buf_len : buf_len + clen] = cur[:clen]
            buf_len += clen
            pair_rows[npairs] = low
            pair_cols[npairs] = col_pos[j]
            npairs += 1
    return pair_rows[:npairs].copy(), pair_cols[:npairs].copy(), creator


def _union_find_pairs_py(eu, ev, epos, nv):
    """Pairs vertices with edges by the elder rule.

    eu/ev hold endpoint vertex ranks (filtration positions among vertices)
    per edge, edges already in filtration order; epos holds the edges' global
    filtration positions. The elder of a component is its smallest vertex
    rank; a merge kills the younger elder. This reproduces exactly the pairs
    matrix reduction would produce for the vertex-edge boundary (the pairing
    of a filtration is unique).

    Returns (pair_young, pair_edge, creator, essential): young vertex rank
    and edge position per pair, a creator flag per edge (True when the edge
    closed a cycle), and the sorted ranks of surviving component elders.
    """
    ne = eu.shape[0]
    parent = np.arange(nv, dtype=np.int64)
    elder = np.arange(nv, dtype=np.int64)
    pair_young = np.empty(ne, dtype=np.int64)
    pair_edge = np.empty(ne, dtype=np.int64)
    npairs = 0
    creator = np.zeros(ne, dtype=np.bool_)
    for e in range(ne):
        x = eu[e]
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        ra = x
        x = ev[e]
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        rb = x
        if ra == rb:
            creator[e] = True
            continue
        ea = elder[ra]
        eb = elder[rb]
        if ea > eb:
            young = ea
            old = eb
        else:
            young = eb
            old = ea
        pair_young[npairs] = young
        pair_edge[npairs] = epos[e]
        npairs += 1
        parent[ra] = rb
        elder[rb] = old
    ness = 0
    ess = np.empty(nv, dtype=np.int64)
    for v in range(nv):
        if parent[v] == v:
            ess[ness] = elder[v]
            ness += 1
    out = np.sort(ess[:ness])
    return pair_young[:npairs].copy(), pair_edge[:npairs].copy(), creator, out


def _lap_jv_py(cost):
    """Solves the square linear assignment problem exactly.

    Jonker-Volgenant style shortest augmenting paths with potentials, 1-based
    internal indexing. Deterministic: columns are scanned in ascending order,
    so ties resolve to the smallest scanned index. Returns row_to_col.
    """
    n = cost.shape[0]
    INF = np.inf
    u = np.zeros(n + 1, dtype=np.float64)
    v = np.zeros(n + 1, dtype=np.float64)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    minv = np.empty(n + 1, dtype=np.float64)
    used = np.empty(n + 1, dtype=np.bool_)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(n + 1):
            minv[j] = INF
            used[j] = False
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = np.full(n, -1, dtype=np.int64)
    for j in range(1, n + 1):
        if p[j] != 0:
            row_to_col[p[j] - 1] = j - 1
    return row_to_col


reduce_fixed = jit(_reduce_fixed_py)
union_find_pairs = jit(_union_find_pairs_py)
lap_jv = jit(_lap_jv_py)
