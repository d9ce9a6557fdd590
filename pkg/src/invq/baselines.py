"""Baselines: per-query reverse queries (Naive) and single-query filter (SQF).

Both answer exactly the same question as the multi-query filter; they only
differ in how many nodes they read doing it.
"""
from __future__ import annotations

import random
import time
from typing import Optional

from .framework import KNN, DynamicSkyline, EpsRange, InverseQuerySpec, Predicate, QueryReport, check_spec
from .geometry import Point, QuerySet, Rect, dist_to, mindist
from .idsq import idsq_query, idsq_refine
from .ieps import ieps_query
from .iknn import iknn_query
from .rtree import AccessMeter, AggRTree, iter_window, knn_distance


def reverse_query(t: AggRTree, q: Point, predicate: Predicate, meter: AccessMeter,
                  data: Optional[AggRTree] = None, include_self: bool = False) -> set[int]:
    """Ids of points o of ``t`` with q in P(o).

    For eps-range this is the forward range query around q. kNN and dynamic
    skyline run the respective engines with Q = {q}, which reduces them to a
    plain reverse query: candidate bounding by counts (kNN) or by the regions
    other objects carve around q (skyline), then exact verification.
    ``data`` supplies neighbours for the bichromatic case.

    As usual for reverse nearest neighbours, q is not reported as its own
    reverse kNN unless ``include_self`` is set. The inverse-query baselines
    set it, since under the rank definition q is among its own k nearest.
    """
    single = QuerySet([q])
    if isinstance(predicate, EpsRange):
        return ieps_query(t, single, predicate.eps, meter)
    if isinstance(predicate, KNN):
        res = iknn_query(t, single, predicate.k, meter, data=data)
        if not include_self and t.same_object(q):
            res.discard(q.id)
        return res
    if isinstance(predicate, DynamicSkyline):
        return idsq_query(t, single, meter, data=data, accelerate=False)
    raise TypeError(f"unknown predicate {predicate!r}")


def _trees(spec: InverseQuerySpec, data: AggRTree, aux: Optional[AggRTree]):
    check_spec(spec, data, aux)
    if spec.bichromatic:
        return aux, data
    return data, None


def _pivots(spec: InverseQuerySpec) -> list[Point]:
    """Query objects to run reverse queries for; none when the inverse kNN
    answer is empty by definition (more query objects than k)."""
    if isinstance(spec.predicate, KNN) and len(spec.Q) > spec.predicate.k:
        return []
    return list(spec.Q)


def naive_inverse(data: AggRTree, spec: InverseQuerySpec, meter: Optional[AccessMeter] = None,
                  aux: Optional[AggRTree] = None) -> QueryReport:
    """Intersect the reverse queries of every q in Q, stopping once empty."""
    cand_tree, other = _trees(spec, data, aux)
    meter = meter if meter is not None else AccessMeter()
    start = time.perf_counter()
    result: Optional[set[int]] = None
    done = 0
    for q in _pivots(spec):
        r = reverse_query(cand_tree, q, spec.predicate, meter, data=other, include_self=True)
        result = r if result is None else result & r
        done += 1
        if not result:
            break
    return QueryReport(frozenset(result or ()), meter.node_reads, time.perf_counter() - start,
                       candidates=0, refinement_checks=0, extra={"reverse_queries": done})


def forward_contains(source: AggRTree, c: Point, Q: QuerySet, predicate: Predicate,
                     meter: AccessMeter) -> bool:
    """Run the forward query of ``c`` on ``source`` and check it holds all of Q."""
    ca = c.array()
    self_id = c.id if source.same_object(c) else None
    if isinstance(predicate, EpsRange):
        eps = predicate.eps
        window = Rect(ca - eps, ca + eps)

        def in_ball(lo, hi):
            return mindist(lo, hi, ca) <= eps

        found = {pid for pid, p in iter_window(source, window, meter, in_ball)
                 if dist_to(p[None], ca)[0] <= eps}
        return all(int(q.id) in found for q in Q)
    if isinstance(predicate, KNN):
        dk = knn_distance(source, ca, predicate.k, exclude=self_id, meter=meter)
        return bool(dist_to(Q.coords, ca).max() <= dk)
    if isinstance(predicate, DynamicSkyline):
        return idsq_refine(source, c, Q, meter)
    raise TypeError(f"unknown predicate {predicate!r}")


def sqf_inverse(data: AggRTree, spec: InverseQuerySpec, meter: Optional[AccessMeter] = None,
                seed: int = 0, aux: Optional[AggRTree] = None) -> QueryReport:
    """Reverse query of one randomly chosen q, then per-candidate verification.

    Verification reads go through a per-query buffer, so a node touched by
    several forward queries is paid for once.
    """
    cand_tree, other = _trees(spec, data, aux)
    source = other if other is not None else cand_tree
    meter = meter if meter is not None else AccessMeter()
    start = time.perf_counter()
    pivot = random.Random(seed).choice(spec.Q.members)
    candidates = reverse_query(cand_tree, pivot, spec.predicate, meter, data=other,
                               include_self=True) \
        if _pivots(spec) else set()
    buffered = AccessMeter(buffered=True)
    out = set()
    for pid in sorted(candidates):
        if forward_contains(source, cand_tree.point(pid), spec.Q, spec.predicate, buffered):
            out.add(pid)
    meter.node_reads += buffered.node_reads
    return QueryReport(frozenset(out), meter.node_reads, time.perf_counter() - start,
                       candidates=len(candidates), refinement_checks=len(candidates),
                       extra={"pivot": pivot.id})
