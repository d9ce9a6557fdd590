"""Inverse dynamic-skyline query.

A point c is a result when every query object survives in the dynamic skyline
of c, computed over the dataset without c. Filtering relies on pruning regions:
the box of viewpoints from which some object o dominates a query q. Any
candidate lying wholly inside such a box (strictly on the dominating side in at
least one dimension) cannot be a result. Regions come from ordered query pairs
and from every object met during the traversal. In 2D, a few extra rules based
on the bounding box of Q cut away space outside that box early.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .geometry import Point, QuerySet, Rect, as_array, maxdist_to_queries
from ._kernels import space_covers, space_insert_check
from .rtree import AccessMeter, AggRTree, Entry, Node, iter_window

BoxLike = Union[Point, Rect, np.ndarray]


def _bounds(x: BoxLike) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(x, Rect):
        return x.lo, x.hi
    a = as_array(x)
    return a, a


def idsq_fast_validate(Q: QuerySet) -> bool:
    """False when some query has another query in every closed orthant around it.

    A query sitting on an orthant boundary counts for every orthant it touches;
    queries at the very same location are ignored.
    """
    qs = Q.coords
    d = Q.dim
    if len(Q) < 2 ** d + 1:
        return True
    signs = np.array(list(product((-1.0, 1.0), repeat=d)))
    for i in range(len(Q)):
        diff = np.delete(qs, i, axis=0) - qs[i]
        diff = diff[np.any(diff != 0, axis=1)]
        if len(diff) < len(signs):
            continue
        occupied = np.all(signs[:, None, :] * diff[None] >= 0, axis=2).any(axis=1)
        if occupied.all():
            return False
    return True


class PruneSpace:
    """Growing set of pruning regions, each stored as (side, mid, source).

    ``side`` is +1 where the region is [mid, +inf), -1 for (-inf, mid] and 0 for
    the whole line. A box is pruned by a region if it lies inside it and is
    strictly beyond ``mid`` in at least one dimension, which is what strict
    dominance needs. Regions are never merged, but a region contained in
    another one with the same side pattern adds nothing and is dropped, so
    only a Pareto front of signed midpoints is kept per pattern.
    """

    def __init__(self, d: int, capacity: int = 64, drop_redundant: bool = True):
        self.d = d
        self.side = np.zeros((capacity, d))
        self.smid = np.zeros((capacity, d))
        self.src = np.zeros((capacity, d))
        self.code = np.zeros(capacity, dtype=np.int64)
        self.alive = np.zeros(capacity, dtype=bool)
        self.size = 0
        self.drop_redundant = drop_redundant
        self._weights = 3 ** np.arange(d)

    def __len__(self) -> int:
        return int(self.alive[: self.size].sum())

    @property
    def mid(self) -> np.ndarray:
        live = self.alive[: self.size]
        return (self.side[: self.size] * self.smid[: self.size])[live]

    def add(self, q: np.ndarray, o: np.ndarray) -> bool:
        """Add PR_q(o), the viewpoints from which ``o`` dominates ``q``."""
        side = np.sign(o - q)
        if not side.any():
            return False
        smid = side * (q + o) / 2.0
        code = int((side + 1).astype(np.int64) @ self._weights)
        n = self.size
        if self.drop_redundant and n:
            if space_insert_check(self.smid, self.code, self.alive, n, smid, code):
                return False
        if n == len(self.side):
            self._grow()
            n = self.size
        self.side[n] = side
        self.smid[n] = smid
        self.src[n] = o
        self.code[n] = code
        self.alive[n] = True
        self.size = n + 1
        return True

    def _grow(self) -> None:
        live = np.flatnonzero(self.alive[: self.size])
        cap = max(64, 2 * len(live) + 16)
        for name in ("side", "smid", "src"):
            arr = np.zeros((cap, self.d))
            arr[: len(live)] = getattr(self, name)[live]
            setattr(self, name, arr)
        code = np.zeros(cap, dtype=np.int64)
        code[: len(live)] = self.code[live]
        self.code = code
        self.alive = np.zeros(cap, dtype=bool)
        self.alive[: len(live)] = True
        self.size = len(live)

    def add_object(self, o: np.ndarray, Q: QuerySet) -> None:
        for q in Q.coords:
            self.add(q, o)

    def covers(self, lo: np.ndarray, hi: np.ndarray, mask_sources: bool = False) -> bool:
        if self.size == 0:
            return False
        return bool(space_covers(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float),
                                 self.side, self.smid, self.alive, self.src, self.size,
                                 bool(mask_sources)))


def pair_space(Q: QuerySet) -> PruneSpace:
    """Regions PR_{q_i}(q_j) for every ordered pair of query objects."""
    space = PruneSpace(Q.dim, max(4, len(Q) * len(Q)))
    for i, j in product(range(len(Q)), repeat=2):
        if i != j:
            space.add(Q.coords[i], Q.coords[j])
    return space


def pair_prune(space: PruneSpace, x: BoxLike) -> bool:
    """Whether ``x`` (a point or the whole of a box) lies in some region."""
    lo, hi = _bounds(x)
    return space.covers(lo, hi)


def dynamic_skyline(points: Iterable[Point], c: Point) -> set[Point]:
    """Points not dynamically dominated w.r.t. ``c`` by another point.

    ``c`` itself is left out of the set.
    """
    pts = [p for p in points if p != c]
    if not pts:
        return set()
    arr = np.abs(np.array([p.coords for p in pts]) - as_array(c))
    out = set()
    for i, p in enumerate(pts):
        le = np.all(arr <= arr[i], axis=1)
        lt = np.any(arr < arr[i], axis=1)
        if not np.any(le & lt):
            out.add(p)
    return out


def idsq_refine(t: AggRTree, c: Point, Q: QuerySet, meter: AccessMeter) -> bool:
    """Accept ``c`` iff no stored object other than ``c`` dominates any q w.r.t. ``c``.

    Only objects inside the reflection window MBR(q, 2c - q) can dominate q,
    so one window scan per query suffices; the scan stops at the first
    dominating object.
    """
    ca = c.array()
    for q, qa in zip(Q.members, Q.coords):
        if q == c:
            return False
        span = np.abs(qa - ca)
        window = Rect(ca - span, ca + span)
        for pid, p in iter_window(t, window, meter):
            if pid == c.id and np.array_equal(p, ca):
                continue
            dp = np.abs(p - ca)
            if np.all(dp <= span) and np.any(dp < span):
                return False
    return True


# -- 2D accelerators --------------------------------------------------------------


@dataclass
class QBoxContext:
    """Bounding box of Q plus the band objects seen so far (2D only).

    ``bands`` maps (dim, +1/-1) to the nearest object beyond the box in that
    dimension whose other coordinate lies within the box.
    """

    qbox: Rect
    center: np.ndarray
    corners: list[tuple[float, float]] = field(default_factory=list)
    edge_points: list[tuple[int, int, float]] = field(default_factory=list)
    bands: dict = field(default_factory=dict)
    active: bool = True

    @classmethod
    def build(cls, Q: QuerySet) -> "QBoxContext":
        if Q.dim != 2:
            raise ValueError("the bounding-box accelerators are 2D only")
        box = Q.mbr
        ctx = cls(box, box.center())
        lo, hi = box.lo, box.hi
        ctx.active = len(Q) >= 2 and bool(np.all(hi > lo))
        if not ctx.active:
            return ctx
        for q in Q.coords:
            on = [(q[i] == lo[i]) or (q[i] == hi[i]) for i in range(2)]
            if on[0] and on[1]:
                sx = 1.0 if q[0] == hi[0] else -1.0
                sy = 1.0 if q[1] == hi[1] else -1.0
                ctx.corners.append((sx, sy))
            else:
                for i in range(2):
                    if on[i]:
                        ctx.edge_points.append((i, 1 if q[i] == hi[i] else -1, float(q[i])))
        return ctx

    def observe(self, o: np.ndarray) -> None:
        """Offer a database object as a band object."""
        if not self.active:
            return
        lo, hi = self.qbox.lo, self.qbox.hi
        for i in range(2):
            j = 1 - i
            if not (lo[i] <= o[i] <= hi[i]):
                continue
            if o[j] > hi[j]:
                key, better = (j, 1), lambda a, b: a[j] < b[j]
            elif o[j] < lo[j]:
                key, better = (j, -1), lambda a, b: a[j] > b[j]
            else:
                continue
            cur = self.bands.get(key)
            if cur is None or better(o, cur):
                self.bands[key] = np.array(o, dtype=float)


def qbox_prune_2d(x: BoxLike, ctx: QBoxContext) -> bool:
    """Whether ``x`` lies wholly in a region cut away by the bounding box of Q.

    Corners prune two strips outside the box on their side, non-corner edge
    queries prune the open half-plane beyond their edge, and band objects prune
    everything beyond the bisector between them and the box edge (the band
    object itself excepted).
    """
    if not ctx.active:
        return False
    lo, hi = _bounds(x)
    blo, bhi, cen = ctx.qbox.lo, ctx.qbox.hi, ctx.center
    for sx, sy in ctx.corners:
        qx = bhi[0] if sx > 0 else blo[0]
        qy = bhi[1] if sy > 0 else blo[1]
        # strip beyond the corner in x, on the corner's half in y
        if _beyond(lo, hi, 0, sx, qx) and _beyond(lo, hi, 1, sy, cen[1]):
            return True
        if _beyond(lo, hi, 1, sy, qy) and _beyond(lo, hi, 0, sx, cen[0]):
            return True
    for i, s, v in ctx.edge_points:
        if _beyond(lo, hi, i, s, v):
            return True
    for (j, s), o in ctx.bands.items():
        edge = bhi[j] if s > 0 else blo[j]
        if _beyond(lo, hi, j, s, (o[j] + edge) / 2.0):
            if not (np.all(lo <= o) and np.all(o <= hi)):
                return True
    return False


def _beyond(lo: np.ndarray, hi: np.ndarray, i: int, s: float, v: float) -> bool:
    """Box strictly past ``v`` in dimension ``i`` on side ``s``."""
    return bool(lo[i] > v) if s > 0 else bool(hi[i] < v)


def region_unique_candidate(points: Sequence[Point], q1: Point, q2: Point) -> Optional[Point]:
    """The only point of a free quadrant of MBR(q1, q2) that can be a result.

    Within the quadrant the survivor must be extreme (away from the centre) in
    both coordinates at once; if no single point is, or two points tie, none
    survives.
    """
    pts = list(points)
    if not pts:
        return None
    if len(pts) == 1:
        return pts[0]
    center = (q1.array() + q2.array()) / 2.0
    arr = np.array([p.coords for p in pts])
    signs = np.where(arr.mean(axis=0) >= center, 1.0, -1.0)
    signed = arr * signs
    best = signed.max(axis=0)
    top = np.all(signed == best, axis=1)
    if top.sum() != 1:
        return None
    return pts[int(np.flatnonzero(top)[0])]


# -- query engine -----------------------------------------------------------------


CAND, PRUNER = 1, 2


def idsq_query(t: AggRTree, Q: QuerySet, meter: AccessMeter,
               data: Optional[AggRTree] = None, accelerate: Optional[bool] = None,
               refine_meter: Optional[AccessMeter] = None,
               stats: Optional[dict] = None, trace: Optional[list] = None) -> set[int]:
    """Ids of points of ``t`` (minus Q) that keep every query in their dynamic skyline.

    With ``data`` the query is bi-chromatic: candidates come from ``t``, the
    objects that build pruning regions and decide refinement from ``data``.
    ``accelerate`` switches the 2D bounding-box rules (default: on in 2D).
    """
    if stats is not None:
        stats.setdefault("validated_empty", False)
        stats.setdefault("candidates", 0)
        stats.setdefault("refinement_checks", 0)
    if not idsq_fast_validate(Q):
        if stats is not None:
            stats["validated_empty"] = True
        return set()
    candidates = idsq_filter(t, Q, meter, data=data, accelerate=accelerate, trace=trace)
    source = data if data is not None else t
    rmeter = refine_meter if refine_meter is not None else meter
    out = set()
    for pid in candidates:
        if idsq_refine(source, t.point(pid), Q, rmeter):
            out.add(pid)
    if stats is not None:
        stats["candidates"] += len(candidates)
        stats["refinement_checks"] += len(candidates)
    return out


def idsq_filter(t: AggRTree, Q: QuerySet, meter: AccessMeter,
                data: Optional[AggRTree] = None, accelerate: Optional[bool] = None,
                trace: Optional[list] = None) -> list[int]:
    """Candidate ids left after query and object based pruning."""
    bichromatic = data is not None
    if accelerate is None:
        accelerate = Q.dim == 2
    ctx = QBoxContext.build(Q) if accelerate and Q.dim == 2 else None
    space = pair_space(Q)
    qs = Q.coords
    members = set(Q.members)

    heap: list = []

    def push(node: Node, role: int) -> None:
        meter.read(node)
        keys = maxdist_to_queries(node.lo, node.hi, qs).min(axis=1)
        for i in range(node.size):
            heapq.heappush(heap, (float(keys[i]), role, node.id, i, node))

    pending = 0
    if bichromatic:
        push(t.root, CAND)
        push(data.root, PRUNER)
        pending = t.root.size
    else:
        push(t.root, CAND | PRUNER)
        pending = t.root.size

    candidates: list[int] = []
    while heap and pending > 0:
        _, role, _, slot, node = heapq.heappop(heap)
        if role & CAND:
            pending -= 1
        lo, hi = node.lo[slot], node.hi[slot]
        is_point = node.is_leaf
        pid = int(node.pids[slot]) if is_point else None

        is_query = is_point and pid in Q.id_set and Point(pid, tuple(lo)) in members
        if is_query and role & CAND:
            # a query object is never in its own skyline
            pruned = True
        else:
            mask = bichromatic and bool(role & CAND)
            pruned = ((ctx is not None and _ctx_prune(ctx, lo, hi, mask))
                      or space.covers(lo, hi, mask_sources=mask))

        if pruned:
            if trace is not None and role & CAND:
                trace.append(Entry(node, slot, lo, hi, int(node.counts[slot])))
        elif is_point:
            if role & CAND:
                candidates.append(pid)
        else:
            push(node.children[slot], role)
            if role & CAND:
                pending += node.children[slot].size

        if is_point and role & PRUNER and not is_query:
            # pair regions already cover what query objects can prune
            space.add_object(lo, Q)
            if ctx is not None:
                ctx.observe(lo)
    return candidates


def _ctx_prune(ctx: QBoxContext, lo: np.ndarray, hi: np.ndarray, mask: bool) -> bool:
    if not mask:
        return qbox_prune_2d(Rect(lo, hi), ctx)
    # band objects from the other dataset might be this very candidate
    saved = ctx.bands
    ctx.bands = {k: o for k, o in saved.items()
                 if not (np.all(lo <= o) and np.all(o <= hi))}
    try:
        return qbox_prune_2d(Rect(lo, hi), ctx)
    finally:
        ctx.bands = saved


def single_query_candidates(t: AggRTree, q: Point, meter: AccessMeter) -> list[int]:
    """Filter step for a lone query object: candidates for its reverse skyline."""
    return idsq_filter(t, QuerySet([q]), meter, accelerate=False)
