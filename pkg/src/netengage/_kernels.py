"""Compiled inner loops. Each mirrors a pure-Python path elsewhere in the
package operation for operation, so both can be replayed on the same random
stream and compared exactly.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def p_join(u1, u0, T):
    """Probability of choosing action 1 under log-linear learning (max-shifted)."""
    if u1 >= u0:
        w = math.exp(-(u1 - u0) / T)
        return 1.0 / (1.0 + w)
    w = math.exp(-(u0 - u1) / T)
    return w / (1.0 + w)


@njit(cache=True)
def npg_pay(c, d, k, alpha):
    if c >= k:
        return alpha
    if d == 0:
        return -float(k)
    return (c - k) / d


@njit(cache=True)
def nsg_pay(acc, pool, r, alpha):
    if acc >= r:
        return alpha
    return (acc - r) / pool


@njit(cache=True)
def _window_overlap(lo, hi, ws):
    lo = max(lo, ws)
    return hi - lo + 1 if hi >= lo else 0


@njit(cache=True)
def npg_gain(i, indptr, indices, sigma, npart, k, alpha):
    cur = sigma[i]
    tot = 0.0
    for p in range(indptr[i], indptr[i + 1]):
        j = indices[p]
        if sigma[j]:
            cj = npart[j] + (1 - cur)
            dj = indptr[j + 1] - indptr[j]
            tot += npg_pay(cj, dj, k, alpha) - npg_pay(cj - 1, dj, k, alpha)
    return tot


@njit(cache=True)
def npg_chain(indptr, indices, k, alpha, mcu, T, sigma, npart, players, uniforms,
              t0, ws, since, on_time, counts, pots, scal, visits):
    """Advance an NPG chain over one chunk of revision opportunities.

    ``scal`` holds [potential, n_participating, profile_index] and is updated
    in place; ``counts``/``pots`` receive per-iteration records when non-empty.
    """
    pot = scal[0]
    n_on = int(scal[1])
    idx = int(scal[2])
    record = counts.size > 0
    track = visits.size > 0
    for s in range(players.size):
        t = t0 + s + 1
        i = players[s]
        d = indptr[i + 1] - indptr[i]
        u1 = npg_pay(npart[i], d, k, alpha)
        gain = 0.0
        if mcu:
            gain = npg_gain(i, indptr, indices, sigma, npart, k, alpha)
            p = p_join(u1 + gain, 0.0, T)
        else:
            p = p_join(u1, 0.0, T)
        a = 1 if uniforms[s] < p else 0
        if a != sigma[i]:
            if not mcu:
                gain = npg_gain(i, indptr, indices, sigma, npart, k, alpha)
            dphi = u1 + gain
            if a == 1:
                pot += dphi
                n_on += 1
                for q in range(indptr[i], indptr[i + 1]):
                    npart[indices[q]] += 1
            else:
                pot -= dphi
                n_on -= 1
                on_time[i] += _window_overlap(since[i], t - 1, ws)
                for q in range(indptr[i], indptr[i + 1]):
                    npart[indices[q]] -= 1
            since[i] = t
            sigma[i] = a
            if track:
                idx ^= 1 << i
        if record:
            counts[s] = n_on
            pots[s] = pot
        if track:
            visits[idx] += 1
    scal[0] = pot
    scal[1] = n_on
    scal[2] = idx


@njit(cache=True)
def nsg_gain(i, indptr, indices, sigma, lab, own, nbcnt, acc, pool, r, alpha):
    cur = sigma[i]
    tot = 0.0
    for p in range(indptr[i], indptr[i + 1]):
        j = indices[p]
        if sigma[j]:
            if cur:
                with_i = acc[j]
                miss = 0
                for q in range(lab.shape[1]):
                    res = lab[i, q]
                    if nbcnt[j, res] == 1 and not own[j, res]:
                        miss += 1
                without_i = with_i - miss
            else:
                without_i = acc[j]
                extra = 0
                for q in range(lab.shape[1]):
                    res = lab[i, q]
                    if nbcnt[j, res] == 0 and not own[j, res]:
                        extra += 1
                with_i = without_i + extra
            tot += nsg_pay(with_i, pool[j], r, alpha) - nsg_pay(without_i, pool[j], r, alpha)
    return tot


@njit(cache=True)
def nsg_chain(indptr, indices, lab, own, nbcnt, acc, pool, r, alpha, mcu, T, sigma,
              players, uniforms, t0, ws, since, on_time, counts, pots, scal, visits):
    pot = scal[0]
    n_on = int(scal[1])
    idx = int(scal[2])
    record = counts.size > 0
    track = visits.size > 0
    for s in range(players.size):
        t = t0 + s + 1
        i = players[s]
        u1 = nsg_pay(acc[i], pool[i], r, alpha)
        gain = 0.0
        if mcu:
            gain = nsg_gain(i, indptr, indices, sigma, lab, own, nbcnt, acc, pool, r, alpha)
            p = p_join(u1 + gain, 0.0, T)
        else:
            p = p_join(u1, 0.0, T)
        a = 1 if uniforms[s] < p else 0
        if a != sigma[i]:
            if not mcu:
                gain = nsg_gain(i, indptr, indices, sigma, lab, own, nbcnt, acc, pool, r, alpha)
            dphi = u1 + gain
            if a == 1:
                pot += dphi
                n_on += 1
            else:
                pot -= dphi
                n_on -= 1
                on_time[i] += _window_overlap(since[i], t - 1, ws)
            for q in range(indptr[i], indptr[i + 1]):
                j = indices[q]
                for c in range(lab.shape[1]):
                    res = lab[i, c]
                    if a == 1:
                        nbcnt[j, res] += 1
                        if nbcnt[j, res] == 1 and not own[j, res]:
                            acc[j] += 1
                    else:
                        nbcnt[j, res] -= 1
                        if nbcnt[j, res] == 0 and not own[j, res]:
                            acc[j] -= 1
            since[i] = t
            sigma[i] = a
            if track:
                idx ^= 1 << i
        if record:
            counts[s] = n_on
            pots[s] = pot
        if track:
            visits[idx] += 1
    scal[0] = pot
    scal[1] = n_on
    scal[2] = idx


@njit(cache=True)
def anchored_kcore_size(indptr, indices, k, anchored):
    """Size of the k-core when players flagged in ``anchored`` are never removed."""
    n = indptr.size - 1
    deg = np.empty(n, dtype=np.int64)
    alive = np.ones(n, dtype=np.uint8)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for v in range(n):
        deg[v] = indptr[v + 1] - indptr[v]
        if deg[v] < k and not anchored[v]:
            alive[v] = 0
            stack[top] = v
            top += 1
    removed = top
    while top > 0:
        top -= 1
        v = stack[top]
        for q in range(indptr[v], indptr[v + 1]):
            u = indices[q]
            if alive[u]:
                deg[u] -= 1
                if deg[u] < k and not anchored[u]:
                    alive[u] = 0
                    stack[top] = u
                    top += 1
                    removed += 1
    return n - removed


@njit(cache=True)
def anchored_rscore_size(indptr, indices, lab, r, anchored):
    n = indptr.size - 1
    nres = r
    cnt = np.zeros((n, nres), dtype=np.int64)
    avail = np.zeros(n, dtype=np.int64)
    for v in range(n):
        for c in range(lab.shape[1]):
            cnt[v, lab[v, c]] += 1
        for q in range(indptr[v], indptr[v + 1]):
            u = indices[q]
            for c in range(lab.shape[1]):
                cnt[v, lab[u, c]] += 1
        for x in range(nres):
            if cnt[v, x] > 0:
                avail[v] += 1
    alive = np.ones(n, dtype=np.uint8)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for v in range(n):
        if avail[v] < r and not anchored[v]:
            alive[v] = 0
            stack[top] = v
            top += 1
    removed = top
    while top > 0:
        top -= 1
        v = stack[top]
        for q in range(indptr[v], indptr[v + 1]):
            u = indices[q]
            if alive[u]:
                for c in range(lab.shape[1]):
                    x = lab[v, c]
                    cnt[u, x] -= 1
                    if cnt[u, x] == 0:
                        avail[u] -= 1
                if avail[u] < r and not anchored[u]:
                    alive[u] = 0
                    stack[top] = u
                    top += 1
                    removed += 1
    return n - removed
