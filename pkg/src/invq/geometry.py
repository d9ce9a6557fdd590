"""Points, boxes, distance bounds, hulls and dominance tests.

Everything here works on plain numpy arrays underneath; ``Point`` and ``Rect``
are thin immutable wrappers so query code can pass geometry around without
caring whether it came from a dataset, the index, or the command line.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.optimize import linprog

HULL_TOL = 1e-9


@dataclass(frozen=True)
class Point:
    id: int
    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if not coords:
            raise ValueError("a point needs at least one coordinate")
        if not all(np.isfinite(coords)):
            raise ValueError(f"non-finite coordinate in point {self.id}: {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


PointLike = Union[Point, Sequence[float], np.ndarray]


def as_array(p: PointLike) -> np.ndarray:
    if isinstance(p, Point):
        return p.array()
    return np.asarray(p, dtype=float)


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")


# Every distance in the package goes through these two helpers so the index,
# the query modules and the oracle round identically.
def dist_to(points: np.ndarray, p: np.ndarray) -> np.ndarray:
    diff = points - p
    return np.sqrt((diff * diff).sum(axis=-1))


def norm_rows(diff: np.ndarray) -> np.ndarray:
    return np.sqrt((diff * diff).sum(axis=-1))


def mindist(lo: np.ndarray, hi: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Distance from ``p`` to the nearest point of each box (rows of lo/hi)."""
    gap = np.maximum(np.maximum(lo - p, p - hi), 0.0)
    return norm_rows(gap)


def maxdist(lo: np.ndarray, hi: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Distance from ``p`` to the farthest corner of each box."""
    far = np.maximum(np.abs(p - lo), np.abs(hi - p))
    return norm_rows(far)


def maxdist_boxes(lo: np.ndarray, hi: np.ndarray, los: np.ndarray, his: np.ndarray) -> np.ndarray:
    """Largest distance between any point of box (lo, hi) and any point of each box in (los, his)."""
    far = np.maximum(np.abs(his - lo), np.abs(hi - los))
    return norm_rows(far)


def mindist_to_queries(lo: np.ndarray, hi: np.ndarray, qs: np.ndarray) -> np.ndarray:
    """Matrix of MinDist between boxes (n, d) and query points (m, d) -> (n, m)."""
    gap = np.maximum(np.maximum(lo[:, None, :] - qs[None], qs[None] - hi[:, None, :]), 0.0)
    return norm_rows(gap)


def maxdist_to_queries(lo: np.ndarray, hi: np.ndarray, qs: np.ndarray) -> np.ndarray:
    far = np.maximum(np.abs(qs[None] - lo[:, None, :]), np.abs(hi[:, None, :] - qs[None]))
    return norm_rows(far)


class Rect:
    """Closed axis-aligned box; bounds may be infinite. Empty when any lo > hi."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        lo = np.array(lo, dtype=float).reshape(-1)
        hi = np.array(hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("rect corners must be non-empty and of equal dimension")
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise ValueError("rect bounds may not be NaN")
        lo.setflags(write=False)
        hi.setflags(write=False)
        self.lo = lo
        self.hi = hi

    @classmethod
    def empty(cls, d: int) -> "Rect":
        return cls(np.full(d, np.inf), np.full(d, -np.inf))

    @classmethod
    def of_point(cls, p: PointLike) -> "Rect":
        a = as_array(p)
        return cls(a, a)

    @classmethod
    def bounding(cls, pts: Iterable[PointLike]) -> "Rect":
        arr = np.array([as_array(p) for p in pts], dtype=float)
        if arr.size == 0:
            raise ValueError("cannot bound an empty point set")
        return cls(arr.min(axis=0), arr.max(axis=0))

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def is_empty(self) -> bool:
        return bool(np.any(self.lo > self.hi))

    @property
    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def contains_point(self, p: PointLike) -> bool:
        a = as_array(p)
        _check_dims(self.lo, a)
        return bool(np.all(self.lo <= a) and np.all(a <= self.hi))

    def contains_rect(self, other: "Rect") -> bool:
        if other.is_empty:
            return True
        return bool(np.all(self.lo <= other.lo) and np.all(other.hi <= self.hi))

    def intersects(self, other: "Rect") -> bool:
        if self.is_empty or other.is_empty:
            return False
        return bool(np.all(self.lo <= other.hi) and np.all(other.lo <= self.hi))

    def intersection(self, other: "Rect") -> "Rect":
        _check_dims(self.lo, other.lo)
        return Rect(np.maximum(self.lo, other.lo), np.minimum(self.hi, other.hi))

    def corners(self) -> np.ndarray:
        d = self.dim
        bits = (np.arange(2 ** d)[:, None] >> np.arange(d)) & 1
        return np.where(bits == 1, self.hi, self.lo)

    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, Rect):
            return NotImplemented
        if self.dim != other.dim:
            return False
        if self.is_empty and other.is_empty:
            return True
        return bool(np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi))

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes()))

    def __repr__(self) -> str:
        if self.is_empty:
            return f"Rect.empty({self.dim})"
        parts = ", ".join(f"[{a:g}, {b:g}]" for a, b in zip(self.lo, self.hi))
        return f"Rect({parts})"


def distance(a: PointLike, b: PointLike) -> float:
    x, y = as_array(a), as_array(b)
    _check_dims(x, y)
    return float(norm_rows(x - y))


def rect_point_bounds(r: Rect, p: PointLike) -> tuple[float, float]:
    """(MinDist, MaxDist) between box ``r`` and point ``p``."""
    if r.is_empty:
        raise ValueError("distance bounds are undefined for an empty rect")
    a = as_array(p)
    _check_dims(r.lo, a)
    lo, hi = r.lo[None], r.hi[None]
    return float(mindist(lo, hi, a)[0]), float(maxdist(lo, hi, a)[0])


def rect_rect_maxdist(a: Rect, b: Rect) -> float:
    return float(maxdist_boxes(a.lo, a.hi, b.lo[None], b.hi[None])[0])


# -- query sets ---------------------------------------------------------------


class QuerySet:
    """The query objects Q, with their bounding box and (in 2D) hull cached."""

    def __init__(self, members: Sequence[Point]):
        members = list(members)
        if not members:
            raise ValueError("a query set needs at least one point")
        d = members[0].dim
        if any(m.dim != d for m in members):
            raise ValueError("query points must share one dimensionality")
        self.members: list[Point] = members
        self.coords = np.array([m.coords for m in members], dtype=float)
        self.ids = np.array([m.id for m in members], dtype=np.int64)
        self.mbr = Rect(self.coords.min(axis=0), self.coords.max(axis=0))

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __repr__(self) -> str:
        return f"QuerySet({self.members!r})"

    @cached_property
    def id_set(self) -> frozenset[int]:
        return frozenset(int(i) for i in self.ids)

    @cached_property
    def hull_vertices(self) -> np.ndarray:
        """Counter-clockwise hull vertices (2D only)."""
        if self.dim != 2:
            raise ValueError("hull vertices are only cached for 2D query sets")
        return convex_hull_2d(self.coords)

    @cached_property
    def hull_vertex_indices(self) -> list[int]:
        verts = self.hull_vertices
        out = []
        for v in verts:
            hit = np.flatnonzero(np.all(self.coords == v, axis=1))
            out.extend(int(i) for i in hit)
        return sorted(set(out))


def farthest_query(o: Union[PointLike, Rect], Q: QuerySet) -> tuple[Point, float]:
    """The member of Q farthest from ``o`` (ties to the lowest id).

    For a box this is the member maximising MinDist, which lower-bounds the
    farthest-query distance of every point inside the box.
    """
    if isinstance(o, Rect):
        if o.is_empty:
            raise ValueError("empty rect")
        dists = mindist_to_queries(o.lo[None], o.hi[None], Q.coords)[0]
    else:
        a = as_array(o)
        _check_dims(a, Q.coords)
        dists = dist_to(Q.coords, a)
    best = dists.max()
    tied = np.flatnonzero(dists == best)
    idx = min(tied, key=lambda i: Q.ids[i])
    return Q.members[idx], float(best)


def entry_dominance(e: Rect, e2: Rect, Q: QuerySet) -> bool:
    """True only if every point of ``e2`` is strictly closer to every point of
    ``e`` than that point's farthest query object.

    Conservative: MaxDist(e, e2) < max_q MinDist(e, q).
    """
    bound = mindist_to_queries(e.lo[None], e.hi[None], Q.coords)[0].max()
    return rect_rect_maxdist(e, e2) < bound


# -- convex hulls ---------------------------------------------------------------


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain. Collinear points are dropped; degenerate
    inputs give one or two vertices."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float))))
    if len(pts) <= 2:
        return np.array(pts, dtype=float)
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) == 1:
        hull = [pts[0], pts[-1]]
    return np.array(hull, dtype=float)


def _in_polygon(p: np.ndarray, verts: np.ndarray) -> bool:
    n = len(verts)
    if n == 1:
        return bool(np.all(verts[0] == p))
    if n == 2:
        a, b = verts
        if _cross(a, b, p) != 0:
            return False
        return bool(np.all(np.minimum(a, b) <= p) and np.all(p <= np.maximum(a, b)))
    for i in range(n):
        if _cross(verts[i], verts[(i + 1) % n], p) < 0:
            return False
    return True


def _in_hull_lp(p: np.ndarray, qs: np.ndarray) -> bool:
    m = len(qs)
    a_eq = np.vstack([qs.T, np.ones((1, m))])
    b_eq = np.concatenate([p, [1.0]])
    res = linprog(
        np.zeros(m),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        return False
    lam = np.clip(res.x, 0.0, None)
    return bool(np.max(np.abs(a_eq @ lam - b_eq)) <= HULL_TOL)


def point_in_hull(p: PointLike, Q: QuerySet) -> bool:
    """Membership in the closed convex hull of Q (boundary counts as inside)."""
    a = as_array(p)
    _check_dims(a, Q.coords)
    if not Q.mbr.contains_point(a):
        return False
    if Q.dim == 1:
        return True
    if Q.dim == 2:
        return _in_polygon(a, Q.hull_vertices)
    return _in_hull_lp(a, Q.coords)


def rect_in_hull(r: Rect, Q: QuerySet) -> bool:
    if r.is_empty or not r.is_bounded:
        return False
    if not Q.mbr.contains_rect(r):
        return False
    corners = np.unique(r.corners(), axis=0)
    return all(point_in_hull(c, Q) for c in corners)


# -- dynamic dominance -----------------------------------------------------------


def pruning_region(q: PointLike, o: PointLike) -> Rect:
    """Closed box of viewpoints from which ``o`` is at least as close as ``q``
    in every dimension. Dimensions where q and o agree span the whole line."""
    qa, oa = as_array(q), as_array(o)
    _check_dims(qa, oa)
    mid = (qa + oa) / 2.0
    lo = np.where(qa < oa, mid, -np.inf)
    hi = np.where(qa > oa, mid, np.inf)
    return Rect(lo, hi)


def dynamic_dominates(a: PointLike, b: PointLike, c: PointLike) -> bool:
    """Does ``a`` dominate ``b`` with respect to the viewpoint ``c``?"""
    x, y, z = as_array(a), as_array(b), as_array(c)
    _check_dims(x, y)
    _check_dims(x, z)
    da, db = np.abs(x - z), np.abs(y - z)
    return bool(np.all(da <= db) and np.any(da < db))
