import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from invq.framework import KNN, DynamicSkyline, EpsRange, InverseQuerySpec
from invq.geometry import Point, QuerySet
from invq.oracle import brute_inverse, brute_membership
from invq.workbench import Dataset

from conftest import line, plane, queries


def test_eps_boundary_is_inclusive():
    pts = [Point(0, (0, 0)), Point(1, (0, 0.25))]
    assert brute_membership(pts, pts[0], pts[1], EpsRange(0.25))


def test_knn_rank():
    pts = line([0, 1, 2, 3, 10]).points()
    assert not brute_membership(pts, pts[4], pts[1], KNN(2))
    assert brute_membership(pts, pts[4], pts[3], KNN(2))


def test_skyline_dominated():
    pts = plane([(0, 0), (1, 0), (0.5, 0)]).points()
    assert not brute_membership(pts, pts[0], pts[1], DynamicSkyline())
    assert brute_membership(pts, pts[0], pts[2], DynamicSkyline())


def test_skyline_never_contains_self():
    pts = plane([(0, 0), (1, 0)]).points()
    assert not brute_membership(pts, pts[0], pts[0], DynamicSkyline())


def test_filter_one_failures_are_empty():
    ds = line([0, 1, 2, 3, 10])
    assert brute_inverse(ds.points(), InverseQuerySpec(KNN(2), queries(ds, [0, 1, 2]))) == set()
    far = plane([(0, 0), (5, 0)])
    assert brute_inverse(far.points(), InverseQuerySpec(EpsRange(2), queries(far, [0, 1]))) == set()


def test_single_point():
    ds = plane([(0.3, 0.3)])
    Q = queries(ds, [0])
    assert brute_inverse(ds.points(), InverseQuerySpec(EpsRange(1e-9), Q)) == {0}
    assert brute_inverse(ds.points(), InverseQuerySpec(DynamicSkyline(), Q)) == set()


def test_knn_line_instance():
    ds = line([0, 1, 2, 3, 10])
    assert brute_inverse(ds.points(), InverseQuerySpec(KNN(2), queries(ds, [1, 2]))) == {0, 1, 2, 3}


def test_bichromatic_candidates():
    data = plane([(0, 0), (1, 0)])
    cands = [Point(10, (0.5, 0)), Point(11, (3, 0))]
    spec = InverseQuerySpec(EpsRange(0.6), QuerySet(data.points()), bichromatic=True)
    assert brute_inverse(data.points(), spec, candidates=cands) == {10}


@settings(max_examples=60)
@given(st.integers(0, 10**6), st.sampled_from(["ieps", "iknn", "idsq"]), st.integers(1, 4),
       st.booleans())
def test_inverse_is_conjunction_of_memberships(seed, name, m, bichromatic):
    rng = np.random.default_rng(seed)
    ds = Dataset.from_coords(np.round(rng.random((40, 2)) * 5) / 5)  # ties and duplicates
    pts = ds.points()
    Q = QuerySet([pts[i] for i in rng.choice(40, m, replace=False)])
    pred = {"ieps": EpsRange(0.3), "iknn": KNN(int(rng.integers(m, 8))), "idsq": DynamicSkyline()}[name]
    cands = pts
    if bichromatic:
        cands = [Point(100 + i, tuple(c)) for i, c in enumerate(np.round(rng.random((15, 2)) * 5) / 5)]
    want = {r.id for r in cands if all(brute_membership(pts, r, q, pred) for q in Q)}
    assert brute_inverse(pts, InverseQuerySpec(pred, Q, bichromatic), candidates=cands) == want
    assert brute_inverse(pts, InverseQuerySpec(pred, Q, bichromatic), candidates=cands, block=7) == want
