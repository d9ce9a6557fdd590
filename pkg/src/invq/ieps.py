"""Inverse epsilon-range query."""
from __future__ import annotations

from itertools import combinations
from typing import Optional

import numpy as np

from .geometry import QuerySet, Rect, dist_to, mindist_to_queries
from .rtree import AccessMeter, AggRTree, iter_window


def ieps_fast_validate(Q: QuerySet, eps: float) -> bool:
    """False when two query balls cannot overlap, i.e. the answer is empty."""
    for i, j in combinations(range(len(Q)), 2):
        if float(dist_to(Q.coords[i][None], Q.coords[j])[0]) > 2 * eps:
            return False
    return True


def ieps_filter_rect(Q: QuerySet, eps: float) -> Rect:
    """Intersection of the boxes bounding each query's eps-ball (may be empty)."""
    return Rect((Q.coords - eps).max(axis=0), (Q.coords + eps).min(axis=0))


def ieps_query(t: AggRTree, Q: QuerySet, eps: float, meter: AccessMeter,
               stats: Optional[dict] = None, trace: Optional[list] = None) -> set[int]:
    """Ids of stored points within ``eps`` (inclusive) of every query point.

    The tree is searched with the filter rectangle; an entry is opened only if
    its MinDist to every query point is at most ``eps``. Rejected entries are
    appended to ``trace`` when one is given.
    """
    if stats is not None:
        stats.setdefault("validated_empty", False)
        stats.setdefault("candidates", 0)
        stats.setdefault("refinement_checks", 0)
    if not ieps_fast_validate(Q, eps):
        if stats is not None:
            stats["validated_empty"] = True
        return set()
    window = ieps_filter_rect(Q, eps)
    if window.is_empty:
        return set()
    qs = Q.coords

    def close_to_all(lo, hi):
        return np.all(mindist_to_queries(lo, hi, qs) <= eps, axis=1)

    on_reject = trace.append if trace is not None else None
    candidates = list(iter_window(t, window, meter, close_to_all, on_reject))
    out = set()
    for pid, c in candidates:
        if np.all(dist_to(qs, c) <= eps):
            out.add(pid)
    if stats is not None:
        stats["candidates"] += len(candidates)
        stats["refinement_checks"] += len(candidates)
    return out

