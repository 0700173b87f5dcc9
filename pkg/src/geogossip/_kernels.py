"""Compiled inner loops for the gossip engine.

Every kernel draws from a caller-supplied buffer of U[0, 1) doubles in the
same order as the pure-Python rounds in ``engine`` draw from their generator,
so both paths produce identical trajectories for the same stream.

Status codes: 0 ok, 1 buffer exhausted (the unfinished round is rolled back),
2 query cap exceeded, 3 isolated source node.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

OK, EXHAUSTED, CAP_EXCEEDED, ISOLATED = 0, 1, 2, 3


@njit(cache=True)
def _dist(pos, is_cycle, s, tx, ty):
    if is_cycle:
        d = abs(pos[s, 0] - tx)
        return min(d, TWO_PI - d)
    dx = pos[s, 0] - tx
    dy = pos[s, 1] - ty
    return dx * dx + dy * dy


@njit(cache=True)
def route_end(indptr, indices, pos, is_cycle, src, tx, ty):
    """Greedy route from ``src``; returns (terminal node, hops)."""
    cur = src
    cur_d = _dist(pos, is_cycle, cur, tx, ty)
    hops = 0
    while True:
        best = -1
        best_d = cur_d
        for k in range(indptr[cur], indptr[cur + 1]):
            nb = indices[k]
            d = _dist(pos, is_cycle, nb, tx, ty)
            if d < best_d:
                best = nb
                best_d = d
        if best < 0:
            return cur, hops
        cur = best
        cur_d = best_d
        hops += 1


@njit(cache=True)
def route_batch(indptr, indices, pos, is_cycle, sources, targets):
    m = sources.shape[0]
    ends = np.empty(m, dtype=np.int64)
    hops = np.empty(m, dtype=np.int64)
    for i in range(m):
        ends[i], hops[i] = route_end(
            indptr, indices, pos, is_cycle, sources[i], targets[i, 0], targets[i, 1]
        )
    return ends, hops


@njit(cache=True)
def _standard_step(x, indptr, indices, u01, p):
    n = x.shape[0]
    if p + 2 > u01.shape[0]:
        return EXHAUSTED, p, -1, 0, 0
    u = int(u01[p] * n)
    if u >= n:
        u = n - 1
    deg = indptr[u + 1] - indptr[u]
    if deg == 0:
        return ISOLATED, p, -1, 0, 0
    j = int(u01[p + 1] * deg)
    if j >= deg:
        j = deg - 1
    w = indices[indptr[u] + j]
    m = 0.5 * (x[u] + x[w])
    x[u] = m
    x[w] = m
    return OK, p + 2, w, 1, 1


@njit(cache=True)
def _geographic_step(x, indptr, indices, pos, is_cycle, accept, cap, u01, p):
    # One uniform for the source, then per attempt one (cycle) or two
    # (planar) for the target and, unless the route ends at the source, one
    # for the accept decision. On any early return p is the round start.
    n = x.shape[0]
    size = u01.shape[0]
    need = 1 if is_cycle else 2
    start = p
    if p >= size:
        return EXHAUSTED, start, -1, 0, 0
    u = int(u01[p] * n)
    if u >= n:
        u = n - 1
    p += 1
    queries = 0
    redraws = 0
    hops_sum = 0
    while True:
        if p + need + 1 > size:
            return EXHAUSTED, start, -1, 0, 0
        if is_cycle:
            tx = TWO_PI * u01[p]
            ty = 0.0
        else:
            tx = u01[p]
            ty = u01[p + 1]
        p += need
        v, hops = route_end(indptr, indices, pos, is_cycle, u, tx, ty)
        if v == u:
            redraws += 1
            if redraws >= cap:
                return CAP_EXCEEDED, start, -1, 0, 0
            continue
        queries += 1
        hops_sum += hops
        ok = u01[p] < accept[v]
        p += 1
        if ok:
            break
        if queries >= cap:
            return CAP_EXCEEDED, start, -1, 0, 0
    m = 0.5 * (x[u] + x[v])
    x[u] = m
    x[v] = m
    return OK, p, v, hops_sum, queries


@njit(cache=True)
def gossip_run(
    geographic, x, x_ave, x0_norm, target,
    indptr, indices, pos, is_cycle, accept, cap,
    u01, p, tick, tick_limit, max_ticks, stride,
    counters, ck_tick, ck_err, ck_tx, ck_mq,
    rec_hops, rec_q, rec_partner,
):
    """Run rounds from ``tick`` up to ``tick_limit``, checkpointing the error
    at multiples of ``stride`` and at ``max_ticks``.

    ``counters`` holds [transmissions, total_hops, total_queries, max_queries]
    and is updated in place. Per-round records are written when the record
    arrays are non-empty (index ``k`` = k-th round of this call).

    Returns (status, p, tick, checkpoints written, converged).
    """
    n_ck = 0
    cap_ck = ck_tick.shape[0]
    recording = rec_hops.shape[0] > 0
    k = 0
    while tick < tick_limit:
        if geographic:
            status, p, v, h, q = _geographic_step(
                x, indptr, indices, pos, is_cycle, accept, cap, u01, p
            )
        else:
            status, p, v, h, q = _standard_step(x, indptr, indices, u01, p)
        if status != OK:
            return status, p, tick, n_ck, False
        tick += 1
        counters[0] += 2 * h
        counters[1] += h
        counters[2] += q
        if q > counters[3]:
            counters[3] = q
        if recording:
            rec_hops[k] = h
            rec_q[k] = q
            rec_partner[k] = v
        k += 1
        if tick % stride == 0 or tick == max_ticks:
            acc = 0.0
            for i in range(x.shape[0]):
                d = x[i] - x_ave
                acc += d * d
            err = math.sqrt(acc) / x0_norm
            ck_tick[n_ck] = tick
            ck_err[n_ck] = err
            ck_tx[n_ck] = counters[0]
            ck_mq[n_ck] = counters[3]
            n_ck += 1
            if err < target:
                return OK, p, tick, n_ck, True
            if n_ck == cap_ck:
                return OK, p, tick, n_ck, False
    return OK, p, tick, n_ck, False
