import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from invq.framework import DynamicSkyline, InverseQuerySpec
from invq.geometry import Point, QuerySet, Rect
from invq.idsq import (
    PruneSpace,
    QBoxContext,
    dynamic_skyline,
    idsq_fast_validate,
    idsq_query,
    idsq_refine,
    pair_prune,
    pair_space,
    qbox_prune_2d,
    region_unique_candidate,
)
from invq.oracle import brute_inverse, brute_membership
from invq.rtree import AccessMeter, bulk_load
from invq.workbench import Dataset, gen_clustered, gen_query_set, gen_uniform

from conftest import plane, queries

SKY = DynamicSkyline()


def qs(*pts):
    return QuerySet([Point(i, p) for i, p in enumerate(pts)])


def test_fast_validate():
    five = qs((.5, .5), (.4, .4), (.6, .4), (.4, .6), (.6, .6))
    assert not idsq_fast_validate(five)
    assert idsq_fast_validate(qs((.4, .4), (.6, .6)))
    assert idsq_fast_validate(qs((.1, .9)))


def test_fast_validate_empty_answer_confirmed():
    pts = [(.5, .5), (.4, .4), (.6, .4), (.4, .6), (.6, .6), (.1, .1), (.9, .2), (.5, .95)]
    ds = plane(pts)
    spec = InverseQuerySpec(SKY, queries(ds, range(5)))
    assert brute_inverse(ds.points(), spec) == set()


def test_pair_prune():
    space = pair_space(qs((0, 0), (2, 2)))
    assert pair_prune(space, (3, 3))
    assert not pair_prune(space, (3, 0))
    assert pair_prune(space, Rect((2, 2), (3, 3)))


def test_pair_prune_leaves_boundary_of_region():
    # at the midpoint line both queries are equally close in that dimension
    space = pair_space(qs((0, 0), (2, 2)))
    assert not pair_prune(space, (1, 1))


def test_redundant_regions_are_dropped():
    space = PruneSpace(2)
    assert space.add(np.zeros(2), np.array([2.0, 2.0]))
    assert not space.add(np.zeros(2), np.array([4.0, 4.0]))  # inside [1,inf)^2
    assert len(space) == 1
    assert space.add(np.zeros(2), np.array([1.0, 1.0]))  # contains the first
    assert len(space) == 1


def test_dynamic_skyline():
    pts = [Point(0, (1, 0)), Point(1, (0, 1)), Point(2, (3, 3))]
    assert dynamic_skyline(pts, Point(9, (0, 0))) == {pts[0], pts[1]}
    assert dynamic_skyline(pts[:1], Point(9, (0, 0))) == {pts[0]}
    dup = [Point(0, (1, 1)), Point(1, (1, 1))]
    assert dynamic_skyline(dup, Point(9, (0, 0))) == set(dup)


def test_refine_examples():
    ds = plane([(0, 0), (1, 0), (0, 1), (3, 3), (0.5, 0)])
    t = bulk_load(ds)
    Q = queries(ds, [1, 2])
    assert not idsq_refine(t, ds.points()[0], Q, AccessMeter())

    ds = plane([(0, 0), (1, 0), (0, 1), (3, 3)])
    t = bulk_load(ds)
    Q = queries(ds, [1, 2])
    pts = ds.points()
    assert idsq_refine(t, pts[0], Q, AccessMeter())
    assert idsq_refine(t, pts[3], Q, AccessMeter())
    assert not idsq_refine(t, pts[1], Q, AccessMeter())
    assert not idsq_refine(t, pts[2], Q, AccessMeter())


def test_refine_with_only_queries_and_candidate():
    # the two queries are incomparable as seen from c, so both windows are empty
    ds = plane([(0.2, 0.6), (0.6, 0.2), (0.5, 0.5)])
    assert idsq_refine(bulk_load(ds), ds.points()[2], queries(ds, [0, 1]), AccessMeter())


def _ctx(*qpts):
    return QBoxContext.build(qs(*qpts))


def _oracle_nonresult(Q_pts, x, others=(), trials=50, seed=0):
    """x never keeps every q in its dynamic skyline, whatever else is around."""
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        extra = [tuple(p) for p in rng.uniform(-2, 3, (5, 2))]
        pts = [Point(i, p) for i, p in enumerate(list(Q_pts) + list(others) + extra + [x])]
        r = pts[-1]
        Q = pts[: len(Q_pts)]
        if all(brute_membership(pts, r, q, SKY) for q in Q):
            return False
    return True


def test_condition_corner():
    qpts = [(0, 0), (1, 0), (0, 1), (1, 1)]
    ctx = _ctx(*qpts)
    assert qbox_prune_2d((2, 0.2), ctx)
    assert _oracle_nonresult(qpts, (2, 0.2))


def test_condition_edge():
    qpts = [(0.3, 0), (0, 1), (1, 0.5)]
    ctx = _ctx(*qpts)
    assert qbox_prune_2d((0.5, -1), ctx)
    assert _oracle_nonresult(qpts, (0.5, -1))


def test_condition_band_object():
    qpts = [(0, 0), (1, 1)]
    ctx = _ctx(*qpts)
    ctx.observe(np.array([0.5, 1.4]))
    assert qbox_prune_2d((0.5, 1.3), ctx)
    assert not qbox_prune_2d((0.5, 1.4), ctx)  # the band object itself
    assert not qbox_prune_2d((0.5, 1.1), ctx)
    assert _oracle_nonresult(qpts, (0.5, 1.3), others=[(0.5, 1.4)])


def test_context_inactive_for_single_query_or_flat_box():
    assert not QBoxContext.build(qs((0.5, 0.5))).active
    assert not QBoxContext.build(qs((0, 0.5), (1, 0.5))).active


def test_region_unique_candidate():
    q1, q2 = Point(0, (0, 0)), Point(1, (3, 3))
    a, b = Point(2, (5, 5)), Point(3, (4, 4))
    assert region_unique_candidate([a, b], q1, q2) == a
    assert region_unique_candidate([Point(2, (5, 4)), Point(3, (4, 5))], q1, q2) is None
    assert region_unique_candidate([b], q1, q2) == b


def test_query_examples():
    ds = plane([(0, 0), (1, 0), (0, 1), (3, 3)])
    t = bulk_load(ds)
    assert idsq_query(t, queries(ds, [1, 2]), AccessMeter()) == {0, 3}
    five = plane([(.5, .5), (.4, .4), (.6, .4), (.4, .6), (.6, .6), (.1, .1)])
    m = AccessMeter()
    assert idsq_query(bulk_load(five), queries(five, range(5)), m) == set()
    assert m.node_reads == 0
    only = plane([(0.2, 0.3), (0.6, 0.1)])
    assert idsq_query(bulk_load(only), queries(only, [0, 1]), AccessMeter()) == set()


@settings(max_examples=40)
@given(st.integers(0, 10**6), st.integers(1, 4), st.sampled_from([2, 3]), st.booleans(),
       st.booleans())
def test_matches_oracle(seed, m, d, grid, accelerate):
    ds = gen_uniform(300, d, seed)
    if grid:
        ds = Dataset.from_coords(np.round(ds.coords * 6) / 6)
    Q = gen_query_set(ds, m, 0.05, seed)
    got = idsq_query(bulk_load(ds, 256), Q, AccessMeter(), accelerate=accelerate and d == 2)
    assert got == brute_inverse(ds.points(), InverseQuerySpec(SKY, Q))


@settings(max_examples=15)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_bichromatic_matches_oracle(seed, m):
    data = gen_clustered(300, 2, seed)
    cand = Dataset(gen_uniform(300, 2, seed + 1).coords, np.arange(500, 800))
    Q = gen_query_set(data, m, 0.02, seed)
    got = idsq_query(bulk_load(cand, 256), Q, AccessMeter(), data=bulk_load(data, 256))
    want = brute_inverse(data.points(), InverseQuerySpec(SKY, Q, bichromatic=True),
                         candidates=cand.points())
    assert got == want


def test_trace_entries_hold_no_results():
    ds = gen_uniform(3000, 2, 2)
    t = bulk_load(ds, 256)
    Q = gen_query_set(ds, 3, 0.01, 2)
    trace = []
    got = idsq_query(t, Q, AccessMeter(), trace=trace)
    assert trace
    for e in trace:
        assert not set(t.subtree_ids(e).tolist()) & got
