"""Inverse k-nearest-neighbour query over an aggregate R-tree.

kNN membership uses strict ranks: q is among the kNN of o when fewer than k
other points are strictly closer to o than q. The filter walks the tree
best-first by the largest MinDist to any query point and prunes an entry once
it can prove that, for every point inside it, at least k other points are
strictly closer than its farthest query point. The proof combines

* the other query points (all closer than the farthest one),
* stored points known to lie in the convex hull of Q (closer by the hull
  argument, provided they do not coincide with a query location), and
* aggregate counts of live entries that are entirely closer (prune count).

Each source is counted at most once; see ``PruneLedger`` and ``HullCounter``.
"""
from __future__ import annotations

import heapq
from typing import Optional

import numpy as np

from .geometry import (
    Point,
    QuerySet,
    Rect,
    dist_to,
    maxdist_to_queries,
    mindist_to_queries,
    point_in_hull,
    rect_in_hull,
)
from ._kernels import ledger_prune_count
from .rtree import AccessMeter, AggRTree, Entry, Node, range_count

CANDIDATE, PRUNED, QUEUED, GONE = 1, 2, 3, 0


def iknn_fast_validate(Q: QuerySet, k: int) -> bool:
    if k < 1:
        raise ValueError("k must be at least 1")
    return len(Q) <= k


def prune_threshold(k: int, q_count: int, hull_count: int, inside_hull: bool) -> int:
    """Largest prune count an entry may have and still hold results.

    Entries outside the hull tolerate k - |H| - |Q| closer objects, entries
    that may contain a hull or query object one more.
    """
    kp = k - hull_count - q_count
    return kp + 1 if inside_hull else kp


class PruneLedger:
    """Live entries split into candidates, pruned entries and queued entries.

    Each slot keeps the entry's box, its state, and the number of its points
    that may be counted as closer objects (its aggregate count minus any query
    locations inside the box; zero once the hull counter owns the points).
    """

    def __init__(self, d: int, capacity: int = 256):
        self.d = d
        self.lo = np.empty((capacity, d))
        self.hi = np.empty((capacity, d))
        self.weight = np.zeros(capacity, dtype=np.int64)
        self.state = np.zeros(capacity, dtype=np.int8)
        self.size = 0

    def add(self, lo: np.ndarray, hi: np.ndarray, weight: np.ndarray, state: int = QUEUED) -> np.ndarray:
        m = len(weight)
        need = self.size + m
        if need > len(self.weight):
            cap = max(need, 2 * len(self.weight))
            for name in ("lo", "hi"):
                arr = np.empty((cap, self.d))
                arr[: self.size] = getattr(self, name)[: self.size]
                setattr(self, name, arr)
            for name in ("weight", "state"):
                old = getattr(self, name)
                arr = np.zeros(cap, dtype=old.dtype)
                arr[: self.size] = old[: self.size]
                setattr(self, name, arr)
        sl = slice(self.size, need)
        self.lo[sl] = lo
        self.hi[sl] = hi
        self.weight[sl] = weight
        self.state[sl] = state
        self.size = need
        return np.arange(sl.start, sl.stop)

    def members(self, state: int) -> np.ndarray:
        return np.flatnonzero(self.state[: self.size] == state)

    def prune_count(self, lo: np.ndarray, hi: np.ndarray, bound: float, skip: int = -1) -> int:
        """Sum of weights of live entries whose MaxDist to (lo, hi) is below ``bound``.

        Expanded entries carry weight zero, so the scan needs no state mask.
        """
        return int(ledger_prune_count(lo, hi, self.lo, self.hi, self.weight,
                                      self.size, float(bound), int(skip)))

    def retire(self, uid: int) -> None:
        """Mark an expanded inner entry; its children now stand for it."""
        self.state[uid] = GONE
        self.weight[uid] = 0


def prune_count(e: Entry | Rect, Q: QuerySet, ledger: PruneLedger, skip: int = -1) -> int:
    """Lower bound on the objects closer to every point of ``e`` than its farthest query."""
    lo, hi = e.lo, e.hi
    bound = float(mindist_to_queries(lo[None], hi[None], Q.coords)[0].max())
    return ledger.prune_count(lo, hi, bound, skip)


class HullCounter:
    """Running lower bound on |H|, the non-query objects inside hull(Q).

    Only points that provably lie in the hull and are away from every query
    location are counted, so each counted point is strictly closer to any
    object than that object's farthest query point.
    """

    def __init__(self, Q: QuerySet):
        self.Q = Q
        self.count = 0

    def _touches_query(self, lo: np.ndarray, hi: np.ndarray) -> bool:
        qs = self.Q.coords
        return bool(np.any(np.all((lo <= qs) & (qs <= hi), axis=1)))

    def covers(self, lo: np.ndarray, hi: np.ndarray, pid: Optional[int] = None) -> bool:
        box = self.Q.mbr
        if np.any(lo < box.lo) or np.any(hi > box.hi):
            return False
        if pid is not None and pid in self.Q.id_set:
            return False
        if self._touches_query(lo, hi):
            return False
        if np.array_equal(lo, hi):
            return point_in_hull(lo, self.Q)
        return rect_in_hull(Rect(lo, hi), self.Q)

    def offer(self, lo: np.ndarray, hi: np.ndarray, count: int, pid: Optional[int] = None) -> bool:
        if self.covers(lo, hi, pid):
            self.count += count
            return True
        return False


def _queries_inside(lo: np.ndarray, hi: np.ndarray, qs: np.ndarray) -> np.ndarray:
    """Number of query locations in each box (rows of lo/hi)."""
    inside = np.all((lo[:, None, :] <= qs[None]) & (qs[None] <= hi[:, None, :]), axis=2)
    return inside.sum(axis=1)


class _Walk:
    """Shared state of one filter pass."""

    CAND, PRUNER = 1, 2

    def __init__(self, Q: QuerySet, k: int, bichromatic: bool):
        self.Q = Q
        self.k = k
        self.bichromatic = bichromatic
        self.ledger = PruneLedger(Q.dim)
        self.hull = HullCounter(Q)
        self.heap: list = []
        # per-slot bookkeeping
        self.node: list[Node] = []
        self.slot: list[int] = []
        self.role: list[int] = []
        self.in_h: list[bool] = []
        self.qin: list[int] = []
        self.cand_queued = 0

    def push(self, node: Node, role: int, in_h: bool, meter: AccessMeter) -> None:
        meter.read(node)
        qs = self.Q.coords
        qin = _queries_inside(node.lo, node.hi, qs)
        weight = node.counts - qin
        if not role & self.PRUNER or in_h:
            weight = np.zeros_like(weight)
        keys = mindist_to_queries(node.lo, node.hi, qs).max(axis=1)
        uids = self.ledger.add(node.lo, node.hi, weight)
        for i, uid in enumerate(uids):
            self.node.append(node)
            self.slot.append(i)
            self.role.append(role)
            self.in_h.append(in_h)
            self.qin.append(int(qin[i]))
            heapq.heappush(self.heap, (float(keys[i]), role != self.PRUNER, node.id, i, int(uid)))
        if role & self.CAND:
            self.cand_queued += len(uids)


def iknn_query(t: AggRTree, Q: QuerySet, k: int, meter: AccessMeter,
               data: Optional[AggRTree] = None, refine_meter: Optional[AccessMeter] = None,
               stats: Optional[dict] = None, trace: Optional[list] = None) -> set[int]:
    """Ids of points of ``t`` that have every member of Q among their k nearest
    neighbours.

    With ``data`` given the query is bi-chromatic: candidates come from ``t``
    while neighbours (and therefore all pruning evidence) come from ``data``.
    Pruned entries are appended to ``trace`` as ``Entry`` objects.
    """
    if stats is not None:
        for key in ("candidates", "refinement_checks"):
            stats.setdefault(key, 0)
        stats.setdefault("validated_empty", False)
    if not iknn_fast_validate(Q, k):
        if stats is not None:
            stats["validated_empty"] = True
        return set()
    bichromatic = data is not None
    source = data if bichromatic else t
    w = _Walk(Q, k, bichromatic)
    if bichromatic:
        w.push(t.root, _Walk.CAND, False, meter)
        w.push(data.root, _Walk.PRUNER, False, meter)
    else:
        w.push(t.root, _Walk.CAND | _Walk.PRUNER, False, meter)

    qs = Q.coords
    candidates: list[int] = []
    ledger = w.ledger
    while w.heap and w.cand_queued > 0:
        _, _, _, _, uid = heapq.heappop(w.heap)
        node, slot, role = w.node[uid], w.slot[uid], w.role[uid]
        if role & _Walk.CAND:
            w.cand_queued -= 1
        lo, hi = ledger.lo[uid], ledger.hi[uid]
        is_point = node.is_leaf
        pid = int(node.pids[slot]) if is_point else None

        bound = float(mindist_to_queries(lo[None], hi[None], qs)[0].max())
        if is_point:
            # exact count of other query objects strictly closer than the farthest
            closer = int(np.sum(dist_to(qs, lo) < bound))
            if bound > 0 and _is_query_object(pid, lo, Q):
                closer -= 1
            kp = prune_threshold(k, closer + 1, w.hull.count, bichromatic or w.in_h[uid])
        else:
            # queries strictly closer to every point of the entry
            closer = int(np.sum(maxdist_to_queries(lo[None], hi[None], qs)[0] < bound))
            inside = bichromatic or w.in_h[uid] or w.qin[uid] > 0
            kp = prune_threshold(k, closer + 1, w.hull.count, inside)

        if kp < 0:
            pruned = True
        else:
            pruned = ledger.prune_count(lo, hi, bound, skip=uid) > kp

        if pruned:
            ledger.state[uid] = PRUNED
            if trace is not None and role & _Walk.CAND:
                trace.append(Entry(node, slot, node.lo[slot], node.hi[slot], int(node.counts[slot])))
        elif is_point:
            ledger.state[uid] = CANDIDATE
            if role & _Walk.CAND:
                candidates.append(pid)
        else:
            ledger.retire(uid)
            w.push(node.children[slot], role, w.in_h[uid], meter)

        if role & _Walk.PRUNER and not w.in_h[uid]:
            count = int(node.counts[slot])
            if w.hull.offer(lo, hi, count, pid):
                w.in_h[uid] = True
                ledger.weight[uid] = 0
                if not pruned and not is_point:
                    # children were pushed before the hull claimed them
                    _claim_children(w, node.children[slot])

    if stats is not None:
        stats["candidates"] += len(candidates)
        stats["hull_count"] = w.hull.count
    out = set()
    rmeter = refine_meter if refine_meter is not None else meter
    for pid in candidates:
        c = t.coords_of(pid)
        dq = dist_to(qs, c)
        radius = float(dq.max())
        excl = pid if (not bichromatic or source.same_object(t.point(pid))) else None
        closer = range_count(source, c, radius, "strict", exclude=excl, meter=rmeter, limit=k)
        if stats is not None:
            stats["refinement_checks"] += 1
        if closer < k:
            out.add(pid)
    return out


def _claim_children(w: _Walk, child: Node) -> None:
    n = child.size
    start = len(w.node) - n
    for uid in range(start, len(w.node)):
        w.in_h[uid] = True
        w.ledger.weight[uid] = 0


def _is_query_object(pid: int, coords: np.ndarray, Q: QuerySet) -> bool:
    """Objects are identified by id and location, in either index."""
    return pid in Q.id_set and Point(pid, tuple(coords)) in Q.members
