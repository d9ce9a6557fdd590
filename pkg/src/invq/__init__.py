"""Inverse spatial queries (eps-range, kNN, dynamic skyline) on an aggregate R-tree."""
from .framework import KNN, DynamicSkyline, EpsRange, InverseQuerySpec, QueryReport, run_inverse_query
from .geometry import Point, QuerySet, Rect
from .rtree import AccessMeter, AggRTree, bulk_load

__all__ = [
    "AccessMeter", "AggRTree", "DynamicSkyline", "EpsRange", "InverseQuerySpec", "KNN",
    "Point", "QueryReport", "QuerySet", "Rect", "bulk_load", "run_inverse_query",
]
