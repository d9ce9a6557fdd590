"""Aggregate R-tree with simulated page accesses.

The tree is packed once with Sort-Tile-Recursive and never modified. Every
entry carries the number of points below it so range counts can stop at
subtrees that lie completely inside the query ball.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Optional, Union

import numpy as np

from ._kernels import flat_range_count
from .geometry import Point, Rect, as_array, dist_to, mindist

EntryFilter = Callable[[np.ndarray, np.ndarray], np.ndarray]

COORD_BYTES = 8
REF_BYTES = 8
COUNT_BYTES = 8
MIN_FANOUT = 4


def fanout_for(page_size: int, d: int) -> int:
    per_entry = 2 * d * COORD_BYTES + REF_BYTES + COUNT_BYTES
    return max(MIN_FANOUT, page_size // per_entry)


class AccessMeter:
    """Counts node reads for one query.

    With ``buffered`` set, a node that was already read during this query is
    served from an unbounded memo and costs nothing.
    """

    def __init__(self, buffered: bool = False):
        self.node_reads = 0
        self.buffered = buffered
        self._seen: set[int] = set()

    def read(self, node: "Node") -> None:
        if self.buffered:
            if node.id in self._seen:
                return
            self._seen.add(node.id)
        self.node_reads += 1

    def read_ids(self, ids) -> None:
        if not self.buffered:
            self.node_reads += len(ids)
            return
        for i in ids:
            i = int(i)
            if i not in self._seen:
                self._seen.add(i)
                self.node_reads += 1

    def reset(self) -> None:
        self.node_reads = 0
        self._seen.clear()

    def __repr__(self) -> str:
        return f"AccessMeter(node_reads={self.node_reads}, buffered={self.buffered})"


@dataclass(eq=False)
class Node:
    id: int
    level: int
    lo: np.ndarray
    hi: np.ndarray
    counts: np.ndarray
    children: Optional[list["Node"]] = None
    pids: Optional[np.ndarray] = None

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    @property
    def size(self) -> int:
        return len(self.counts)

    @property
    def mbr(self) -> Rect:
        return Rect(self.lo.min(axis=0), self.hi.max(axis=0))


@dataclass(frozen=True, eq=False)
class Entry:
    """One slot of a node: a child subtree or a single point."""

    node: Node
    slot: int
    lo: np.ndarray = field(repr=False)
    hi: np.ndarray = field(repr=False)
    count: int = 1

    @property
    def is_point(self) -> bool:
        return self.node.is_leaf

    @property
    def kind(self) -> str:
        return "point" if self.is_point else "inner"

    @property
    def child(self) -> Optional[Node]:
        return None if self.is_point else self.node.children[self.slot]

    @property
    def pid(self) -> Optional[int]:
        return int(self.node.pids[self.slot]) if self.is_point else None

    @property
    def mbr(self) -> Rect:
        return Rect(self.lo, self.hi)


def _entries(node: Node) -> list[Entry]:
    return [
        Entry(node, i, node.lo[i], node.hi[i], int(node.counts[i]))
        for i in range(node.size)
    ]


@dataclass(frozen=True)
class FlatTree:
    """The tree as flat arrays indexed by node id, for compiled traversals."""

    start: np.ndarray
    size: np.ndarray
    child: np.ndarray
    count: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def of(cls, t: "AggRTree") -> "FlatTree":
        nodes = sorted(t.nodes(), key=lambda nd: nd.id)
        sizes = np.array([nd.size for nd in nodes], dtype=np.int64)
        start = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        child = np.concatenate([
            np.full(nd.size, -1, dtype=np.int64) if nd.is_leaf
            else np.array([c.id for c in nd.children], dtype=np.int64)
            for nd in nodes])
        return cls(start, sizes, child,
                   np.concatenate([nd.counts for nd in nodes]).astype(np.int64),
                   np.ascontiguousarray(np.vstack([nd.lo for nd in nodes])),
                   np.ascontiguousarray(np.vstack([nd.hi for nd in nodes])))


class AggRTree:
    def __init__(self, root: Node, fanout: int, coords: np.ndarray, ids: np.ndarray):
        self.root = root
        self.fanout = fanout
        self.coords = coords
        self.ids = ids
        self.dim = coords.shape[1]
        self.total = len(ids)
        self._row = {int(i): r for r, i in enumerate(ids)}
        self.node_count = sum(1 for _ in self.nodes())
        self.height = root.level + 1

    def __len__(self) -> int:
        return self.total

    @cached_property
    def flat(self) -> "FlatTree":
        return FlatTree.of(self)

    def __repr__(self) -> str:
        return (f"AggRTree(n={self.total}, d={self.dim}, fanout={self.fanout}, "
                f"nodes={self.node_count}, height={self.height})")

    def nodes(self) -> Iterator[Node]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.extend(reversed(node.children))

    def leaves(self) -> Iterator[Node]:
        return (n for n in self.nodes() if n.is_leaf)

    def has(self, pid: int) -> bool:
        return int(pid) in self._row

    def coords_of(self, pid: int) -> np.ndarray:
        return self.coords[self._row[int(pid)]]

    def point(self, pid: int) -> Point:
        return Point(int(pid), tuple(self.coords_of(pid)))

    def points(self) -> list[Point]:
        return [Point(int(i), tuple(c)) for i, c in zip(self.ids, self.coords)]

    def same_object(self, p: Point) -> bool:
        """Whether ``p`` is stored here (same id and same coordinates)."""
        row = self._row.get(p.id)
        return row is not None and tuple(self.coords[row]) == p.coords

    def read(self, node: Node, meter: AccessMeter) -> list[Entry]:
        meter.read(node)
        return _entries(node)

    def root_entries(self, meter: AccessMeter) -> list[Entry]:
        return self.read(self.root, meter)

    def subtree_ids(self, node_or_entry: Union[Node, Entry]) -> np.ndarray:
        if isinstance(node_or_entry, Entry):
            if node_or_entry.is_point:
                return np.array([node_or_entry.pid], dtype=np.int64)
            node = node_or_entry.child
        else:
            node = node_or_entry
        out = []
        stack = [node]
        while stack:
            n = stack.pop()
            if n.is_leaf:
                out.append(n.pids)
            else:
                stack.extend(n.children)
        return np.concatenate(out) if out else np.empty(0, dtype=np.int64)


# -- bulk loading -----------------------------------------------------------------


def _as_arrays(points) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(points, "coords") and hasattr(points, "ids") and not isinstance(points, Point):
        coords = np.asarray(points.coords, dtype=float)
        ids = np.asarray(points.ids, dtype=np.int64)
        return coords, ids
    pts = list(points)
    if not pts:
        raise ValueError("cannot bulk load an empty point set")
    d = pts[0].dim
    if any(p.dim != d for p in pts):
        raise ValueError("all points must share one dimensionality")
    coords = np.array([p.coords for p in pts], dtype=float)
    ids = np.array([p.id for p in pts], dtype=np.int64)
    return coords, ids


def _str_groups(centers: np.ndarray, fanout: int) -> list[np.ndarray]:
    """Sort-Tile-Recursive partition of ``centers`` into ceil(n/fanout) groups."""
    n, d = centers.shape
    n_groups = max(1, math.ceil(n / fanout))
    groups: list[np.ndarray] = []

    def split(idx: np.ndarray, dim: int, g: int) -> None:
        if g == 1:
            groups.append(idx)
            return
        order = idx[np.argsort(centers[idx, dim], kind="stable")]
        if dim == d - 1:
            bounds = (np.arange(g + 1) * len(order)) // g
            groups.extend(order[bounds[i]:bounds[i + 1]] for i in range(g))
            return
        slices = min(g, math.ceil(g ** (1.0 / (d - dim)) - 1e-9))
        per = [g // slices + (1 if i < g % slices else 0) for i in range(slices)]
        cum = np.concatenate([[0], np.cumsum(per)])
        bounds = (cum * len(order)) // g
        for i in range(slices):
            split(order[bounds[i]:bounds[i + 1]], dim + 1, per[i])

    split(np.arange(n), 0, n_groups)
    return _fix_underfull(groups, fanout)


def _fix_underfull(groups: list[np.ndarray], fanout: int) -> list[np.ndarray]:
    if len(groups) < 2:
        return groups
    need = math.ceil(fanout / 2)
    out = list(groups)
    i = 0
    while i < len(out):
        if len(out[i]) >= need or len(out) < 2:
            i += 1
            continue
        j = i + 1 if i + 1 < len(out) else i - 1
        a, b = min(i, j), max(i, j)
        merged = np.concatenate([out[a], out[b]])
        if len(merged) <= fanout:
            out[a:b + 1] = [merged]
        else:
            half = len(merged) // 2
            out[a:b + 1] = [merged[:half], merged[half:]]
        i = max(0, a - 1)
    return out


def bulk_load(points, page_size: int = 1024) -> AggRTree:
    """Pack ``points`` (Points, or any object with ``coords``/``ids`` arrays)."""
    coords, ids = _as_arrays(points)
    if coords.ndim != 2 or coords.shape[0] == 0:
        raise ValueError("cannot bulk load an empty point set")
    n, d = coords.shape
    if d == 0:
        raise ValueError("points must have at least one dimension")
    if len(np.unique(ids)) != n:
        raise ValueError("point ids must be unique")
    fanout = fanout_for(page_size, d)

    level_nodes: list[Node] = []
    for grp in _str_groups(coords, fanout):
        c = coords[grp]
        level_nodes.append(Node(-1, 0, c.copy(), c.copy(),
                                np.ones(len(grp), dtype=np.int64), None, ids[grp].copy()))
    level = 0
    while len(level_nodes) > 1:
        level += 1
        lo = np.array([nd.lo.min(axis=0) for nd in level_nodes])
        hi = np.array([nd.hi.max(axis=0) for nd in level_nodes])
        cnt = np.array([nd.counts.sum() for nd in level_nodes], dtype=np.int64)
        parents = []
        for grp in _str_groups((lo + hi) / 2.0, fanout):
            parents.append(Node(-1, level, lo[grp], hi[grp], cnt[grp],
                                [level_nodes[i] for i in grp]))
        level_nodes = parents
    root = level_nodes[0]

    # ids follow depth-first creation order
    next_id = 0
    stack = [root]
    while stack:
        node = stack.pop()
        node.id = next_id
        next_id += 1
        if not node.is_leaf:
            stack.extend(reversed(node.children))
    for node in _walk(root):
        for arr in (node.lo, node.hi, node.counts):
            arr.setflags(write=False)
    return AggRTree(root, fanout, coords, ids)


def _walk(root: Node) -> Iterator[Node]:
    stack = [root]
    while stack:
        n = stack.pop()
        yield n
        if not n.is_leaf:
            stack.extend(n.children)


# -- access paths -----------------------------------------------------------------


def iter_window(t: AggRTree, w: Rect, meter: AccessMeter,
                entry_filter: Optional[EntryFilter] = None,
                on_reject: Optional[Callable[[Entry], None]] = None,
                ) -> Iterator[tuple[int, np.ndarray]]:
    """Lazily yield (id, coords) of points inside the closed window.

    Abandoning the generator early leaves the remaining nodes unread.
    ``on_reject`` sees every entry of a visited node that was not followed.
    """
    if w.is_empty:
        return
    if w.dim != t.dim:
        raise ValueError(f"window has dimension {w.dim}, tree has {t.dim}")
    stack = [t.root]
    while stack:
        node = stack.pop()
        meter.read(node)
        mask = np.all(node.lo <= w.hi, axis=1) & np.all(w.lo <= node.hi, axis=1)
        if entry_filter is not None and mask.any():
            mask &= entry_filter(node.lo, node.hi)
        hits = np.flatnonzero(mask)
        if on_reject is not None:
            for i in np.flatnonzero(~mask):
                on_reject(Entry(node, int(i), node.lo[i], node.hi[i], int(node.counts[i])))
        if node.is_leaf:
            for i in hits:
                yield int(node.pids[i]), node.lo[i]
        else:
            stack.extend(node.children[i] for i in reversed(hits))


def window_query(t: AggRTree, w: Rect, meter: AccessMeter,
                 entry_filter: Optional[EntryFilter] = None) -> list[Point]:
    """Points in the closed window whose entries pass ``entry_filter`` at every level.

    ``entry_filter`` takes the (m, d) lower and upper corners of a node's
    entries and returns a boolean mask.
    """
    return [Point(pid, tuple(c)) for pid, c in iter_window(t, w, meter, entry_filter)]


def range_count(t: AggRTree, center, radius: float, mode: str = "closed",
                exclude: Optional[int] = None, meter: Optional[AccessMeter] = None,
                limit: Optional[int] = None) -> int:
    """Number of points within ``radius`` of ``center``.

    ``mode`` is "closed" (d <= r) or "strict" (d < r). A point id given as
    ``exclude`` is left out of the count. With ``limit`` the traversal stops as
    soon as the running count (after exclusion) reaches it; the return value is
    then only guaranteed to be >= limit.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if mode not in ("closed", "strict"):
        raise ValueError(f"unknown mode {mode!r}")
    meter = meter if meter is not None else AccessMeter()
    c = as_array(center)
    if c.size != t.dim:
        raise ValueError(f"center has dimension {c.size}, tree has {t.dim}")
    strict = mode == "strict"

    minus = 0
    if exclude is not None and t.has(exclude):
        de = float(dist_to(t.coords_of(exclude)[None], c)[0])
        if (de < radius) if strict else (de <= radius):
            minus = 1

    f = t.flat
    visited = np.empty(len(f.start), dtype=np.int64)
    total, nv = flat_range_count(f.start, f.size, f.child, f.count, f.lo, f.hi,
                                 np.ascontiguousarray(c, dtype=float), float(radius), strict,
                                 -1 if limit is None else int(limit), minus, visited)
    meter.read_ids(visited[:nv])
    return int(total)


def knn_distance(t: AggRTree, center, k: int, exclude: Optional[int] = None,
                 meter: Optional[AccessMeter] = None) -> float:
    """Distance to the k-th nearest stored point (``inf`` if fewer exist)."""
    meter = meter if meter is not None else AccessMeter()
    c = as_array(center)
    heap: list = [(0.0, 0, t.root.id, t.root)]
    found = 0
    tick = 1
    while heap:
        key, kind, _, item = heapq.heappop(heap)
        if kind == 1:
            found += 1
            if found == k:
                return key
            continue
        node = item
        meter.read(node)
        if node.is_leaf:
            dd = dist_to(node.lo, c)
            for i in range(node.size):
                if exclude is not None and int(node.pids[i]) == exclude:
                    continue
                heapq.heappush(heap, (float(dd[i]), 1, tick, None))
                tick += 1
        else:
            near = mindist(node.lo, node.hi, c)
            for i in range(node.size):
                heapq.heappush(heap, (float(near[i]), 0, node.children[i].id, node.children[i]))
    return math.inf


def best_first(t: AggRTree, key: Callable[[Entry], float],
               meter: AccessMeter) -> Iterator[Entry]:
    """Emit entries in ascending ``key`` order, expanding inner entries as they
    are emitted. Ties go to (key, node id, slot)."""
    heap: list = []
    for e in t.root_entries(meter):
        heapq.heappush(heap, (key(e), e.node.id, e.slot, e))
    while heap:
        _, _, _, e = heapq.heappop(heap)
        yield e
        if not e.is_point:
            for ch in t.read(e.child, meter):
                heapq.heappush(heap, (key(ch), ch.node.id, ch.slot, ch))


def audit_aggregates(t: AggRTree) -> bool:
    """Every inner entry's count equals the sum of its child's counts and its
    box covers the child's entries."""
    for node in t.nodes():
        if node.is_leaf:
            if not np.all(node.counts == 1) or not np.array_equal(node.lo, node.hi):
                return False
            continue
        for i, ch in enumerate(node.children):
            if node.counts[i] != ch.counts.sum():
                return False
            if np.any(ch.lo < node.lo[i]) or np.any(ch.hi > node.hi[i]):
                return False
    return int(t.root.counts.sum()) == t.total
