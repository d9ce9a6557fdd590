"""Compiled inner loops for the hot paths.

Distances are accumulated dimension by dimension in index order and then
square-rooted, the same sequence of operations numpy performs for the
row-wise helpers in ``geometry``, so results agree bit for bit.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def ledger_prune_count(lo, hi, los, his, weight, n, bound, skip):
    """Sum of weight[i] over rows i < n (i != skip) with MaxDist(box, row) < bound."""
    d = lo.shape[0]
    total = 0
    for i in range(n):
        w = weight[i]
        if w == 0 or i == skip:
            continue
        acc = 0.0
        for j in range(d):
            a = abs(his[i, j] - lo[j])
            b = abs(hi[j] - los[i, j])
            f = a if a > b else b
            acc += f * f
        if np.sqrt(acc) < bound:
            total += w
    return total


@njit(cache=True)
def space_covers(lo, hi, side, smid, alive, src, n, mask_sources):
    d = lo.shape[0]
    for i in range(n):
        if not alive[i]:
            continue
        ok = True
        strict = False
        for j in range(d):
            s = side[i, j]
            if s > 0:
                t = lo[j] - smid[i, j]
            elif s < 0:
                t = -hi[j] - smid[i, j]
            else:
                t = 0.0
            if t < 0:
                ok = False
                break
            if t > 0:
                strict = True
        if not (ok and strict):
            continue
        if mask_sources:
            inside = True
            for j in range(d):
                if src[i, j] < lo[j] or src[i, j] > hi[j]:
                    inside = False
                    break
            if inside:
                continue
        return True
    return False


@njit(cache=True)
def space_insert_check(smid, code, alive, n, new_smid, new_code):
    """Returns True when the new region is already contained in a live one;
    otherwise retires live regions it contains."""
    d = new_smid.shape[0]
    for i in range(n):
        if alive[i] and code[i] == new_code:
            le = True
            for j in range(d):
                if smid[i, j] > new_smid[j]:
                    le = False
                    break
            if le:
                return True
    for i in range(n):
        if alive[i] and code[i] == new_code:
            ge = True
            for j in range(d):
                if smid[i, j] < new_smid[j]:
                    ge = False
                    break
            if ge:
                alive[i] = False
    return False


@njit(cache=True)
def flat_range_count(start, size, child, count, elo, ehi, center, radius, strict,
                     limit, minus, visited):
    """Aggregate ball count over the flattened tree (root is node 0).

    Returns (count - minus, number of nodes visited); visited node ids are
    written to ``visited`` in visiting order. ``limit`` < 0 means no limit.
    """
    d = center.shape[0]
    stack = np.empty(start.shape[0], dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    nv = 0
    total = 0
    while top > 0:
        top -= 1
        node = stack[top]
        visited[nv] = node
        nv += 1
        s0 = start[node]
        s1 = s0 + size[node]
        pending = 0
        for e in range(s0, s1):
            far = 0.0
            near = 0.0
            for j in range(d):
                a = abs(center[j] - elo[e, j])
                b = abs(ehi[e, j] - center[j])
                f = a if a > b else b
                far += f * f
                g = elo[e, j] - center[j]
                h = center[j] - ehi[e, j]
                m = g if g > h else h
                if m < 0.0:
                    m = 0.0
                near += m * m
            far = np.sqrt(far)
            near = np.sqrt(near)
            full = far < radius if strict else far <= radius
            if full:
                total += count[e]
                continue
            ch = child[e]
            if ch < 0:
                continue
            part = near < radius if strict else near <= radius
            if part:
                pending += 1
        if limit >= 0 and total - minus >= limit:
            return total - minus, nv
        if pending:
            # push in reverse slot order so children are visited in slot order
            for e in range(s1 - 1, s0 - 1, -1):
                ch = child[e]
                if ch < 0:
                    continue
                far = 0.0
                near = 0.0
                for j in range(d):
                    a = abs(center[j] - elo[e, j])
                    b = abs(ehi[e, j] - center[j])
                    f = a if a > b else b
                    far += f * f
                    g = elo[e, j] - center[j]
                    h = center[j] - ehi[e, j]
                    m = g if g > h else h
                    if m < 0.0:
                        m = 0.0
                    near += m * m
                far = np.sqrt(far)
                near = np.sqrt(near)
                full = far < radius if strict else far <= radius
                part = near < radius if strict else near <= radius
                if part and not full:
                    stack[top] = ch
                    top += 1
    return total - minus, nv


def warm_up() -> None:
    """Compile (or load from cache) every kernel so later calls are not timed
    with the one-off start-up cost."""
    lo, hi = np.zeros(2), np.ones(2)
    rows = np.zeros((1, 2))
    ledger_prune_count(lo, hi, rows, rows, np.ones(1, dtype=np.int64), 1, 1.0, -1)
    space_covers(lo, hi, rows, rows, np.ones(1, dtype=np.bool_), rows, 1, False)
    frozen = lo.copy()
    frozen.setflags(write=False)  # entry boxes sliced from index nodes are read-only
    space_covers(frozen, frozen, rows, rows, np.ones(1, dtype=np.bool_), rows, 1, False)
    space_insert_check(rows, np.zeros(1, dtype=np.int64), np.ones(1, dtype=np.bool_), 1, lo, 0)
    idx = np.zeros(1, dtype=np.int64)
    flat_range_count(idx, np.ones(1, dtype=np.int64), -np.ones(1, dtype=np.int64),
                     np.ones(1, dtype=np.int64), rows, rows, lo, 1.0, False, -1, 0, idx.copy())
