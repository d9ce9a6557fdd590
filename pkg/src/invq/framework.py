"""Query specifications, reports and the multi-query-filter entry point."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Union

from .geometry import QuerySet
from .idsq import idsq_query
from .ieps import ieps_query
from .iknn import iknn_query
from .rtree import AccessMeter, AggRTree


@dataclass(frozen=True)
class EpsRange:
    eps: float
    name = "ieps"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    @property
    def param(self) -> float:
        return self.eps


@dataclass(frozen=True)
class KNN:
    k: int
    name = "iknn"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")

    @property
    def param(self) -> int:
        return self.k


@dataclass(frozen=True)
class DynamicSkyline:
    name = "idsq"

    @property
    def param(self) -> None:
        return None


Predicate = Union[EpsRange, KNN, DynamicSkyline]


@dataclass(frozen=True)
class InverseQuerySpec:
    predicate: Predicate
    Q: QuerySet
    bichromatic: bool = False

    @property
    def dim(self) -> int:
        return self.Q.dim


@dataclass
class QueryReport:
    results: frozenset[int]
    node_reads: int
    wall_time: float
    validated_empty: bool = False
    candidates: int = 0
    refinement_checks: int = 0
    extra: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.results)


def check_spec(spec: InverseQuerySpec, data: AggRTree, aux: Optional[AggRTree]) -> None:
    if spec.dim != data.dim:
        raise ValueError(f"query dimension {spec.dim} does not match the index ({data.dim})")
    if spec.bichromatic:
        if aux is None:
            raise ValueError("bichromatic queries need a candidate index")
        if aux.dim != data.dim:
            raise ValueError("candidate index dimension differs from the data index")
    else:
        missing = [q.id for q in spec.Q if not data.same_object(q)]
        if missing:
            raise ValueError(f"query objects not in the dataset: {missing[:5]}")


def run_inverse_query(spec: InverseQuerySpec, data: AggRTree, aux: Optional[AggRTree] = None,
                      meter: Optional[AccessMeter] = None, trace: Optional[list] = None,
                      **options) -> QueryReport:
    """Evaluate ``spec`` with the multi-query filter pipeline.

    In bichromatic mode candidates are drawn from ``aux`` while ``data``
    supplies the objects that prune and verify them.
    """
    check_spec(spec, data, aux)
    meter = meter if meter is not None else AccessMeter()
    stats: dict = {}
    cand_tree = aux if spec.bichromatic else data
    other = data if spec.bichromatic else None
    pred = spec.predicate
    start = time.perf_counter()
    if isinstance(pred, EpsRange):
        res = ieps_query(cand_tree, spec.Q, pred.eps, meter, stats=stats, trace=trace)
    elif isinstance(pred, KNN):
        res = iknn_query(cand_tree, spec.Q, pred.k, meter, data=other,
                         stats=stats, trace=trace, **options)
    elif isinstance(pred, DynamicSkyline):
        res = idsq_query(cand_tree, spec.Q, meter, data=other,
                         stats=stats, trace=trace, **options)
    else:
        raise TypeError(f"unknown predicate {pred!r}")
    elapsed = time.perf_counter() - start
    known = ("validated_empty", "candidates", "refinement_checks")
    return QueryReport(
        results=frozenset(int(r) for r in res),
        node_reads=meter.node_reads,
        wall_time=elapsed,
        validated_empty=bool(stats.get("validated_empty", False)),
        candidates=int(stats.get("candidates", 0)),
        refinement_checks=int(stats.get("refinement_checks", 0)),
        extra={k: v for k, v in stats.items() if k not in known},
    )
