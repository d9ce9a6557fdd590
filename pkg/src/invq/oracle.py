"""Brute-force ground truth by exhaustive scan.

Nothing here touches the index or the pruning code. Membership conventions:
closed eps-balls, strict-rank kNN without the object itself, strict dynamic
dominance over the dataset without the object itself.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .framework import KNN, DynamicSkyline, EpsRange, InverseQuerySpec, Predicate
from .geometry import Point, dist_to


def _arrays(points: Sequence[Point]) -> tuple[np.ndarray, np.ndarray, list[Point]]:
    pts = list(points)
    coords = np.array([p.coords for p in pts], dtype=float)
    ids = np.array([p.id for p in pts], dtype=np.int64)
    return coords, ids, pts


def _others(coords: np.ndarray, ids: np.ndarray, r: Point) -> np.ndarray:
    """Mask of dataset rows that are not the object ``r`` itself."""
    return ~((ids == r.id) & np.all(coords == r.array(), axis=1))


def brute_membership(points: Sequence[Point], r: Point, q: Point, predicate: Predicate) -> bool:
    """Is ``q`` in the forward query result of ``r`` over ``points``?"""
    coords, ids, _ = _arrays(points)
    others = _others(coords, ids, r)
    ra, qa = r.array(), q.array()
    if isinstance(predicate, EpsRange):
        return bool(dist_to(qa[None], ra)[0] <= predicate.eps)
    if isinstance(predicate, KNN):
        dq = dist_to(qa[None], ra)[0]
        closer = dist_to(coords, ra) < dq
        return int(np.sum(closer & others)) < predicate.k
    if isinstance(predicate, DynamicSkyline):
        if q == r:
            return False
        span = np.abs(qa - ra)
        dp = np.abs(coords - ra)
        dom = np.all(dp <= span, axis=1) & np.any(dp < span, axis=1) & others
        return not bool(dom.any())
    raise TypeError(f"unknown predicate {predicate!r}")


def brute_inverse(points: Sequence[Point], spec: InverseQuerySpec,
                  candidates: Optional[Sequence[Point]] = None, block: int = 256) -> set[int]:
    """Exact inverse-query answer as a set of ids.

    ``candidates`` defaults to ``points`` (the monochromatic case). Candidates
    are scanned in blocks of ``block`` against every stored point at once.
    """
    coords, ids, pts = _arrays(points)
    cands = pts if candidates is None else list(candidates)
    pred = spec.predicate
    qs = spec.Q.coords
    if not isinstance(pred, (EpsRange, KNN, DynamicSkyline)):
        raise TypeError(f"unknown predicate {pred!r}")
    if isinstance(pred, KNN) and len(spec.Q) > pred.k:
        # more query objects than neighbour slots: the answer is defined empty
        return set()
    if isinstance(pred, DynamicSkyline):
        members = set(spec.Q.members)
        cands = [r for r in cands if r not in members]
    if not cands:
        return set()
    c_coords, c_ids, _ = _arrays(cands)
    # diff[i, j] = candidate j - query i
    dq = np.sqrt(((c_coords[None] - qs[:, None]) ** 2).sum(axis=-1))
    if isinstance(pred, EpsRange):
        keep = np.all(dq <= pred.eps, axis=0)
        return {int(i) for i in c_ids[keep]}
    out = set()
    for s in range(0, len(c_ids), block):
        cc, ci = c_coords[s:s + block], c_ids[s:s + block]
        # others[j, p]: stored point p is not candidate j itself
        others = ~((ids[None] == ci[:, None]) & np.all(coords[None] == cc[:, None], axis=2))
        ok = np.ones(len(ci), dtype=bool)
        if isinstance(pred, KNN):
            d_all = np.sqrt(((coords[None] - cc[:, None]) ** 2).sum(axis=-1))
            for row in dq[:, s:s + block]:
                closer = np.sum((d_all < row[:, None]) & others, axis=1)
                ok &= closer < pred.k
        else:
            dp = np.abs(coords[None] - cc[:, None])
            for q in qs:
                span = np.abs(q - cc)[:, None]
                dom = np.all(dp <= span, axis=2) & np.any(dp < span, axis=2) & others
                ok &= ~dom.any(axis=1)
        out.update(int(i) for i in ci[ok])
    return out
