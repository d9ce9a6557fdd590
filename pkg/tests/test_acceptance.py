"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""
import time

import numpy as np
import pytest

from invq.baselines import naive_inverse, sqf_inverse
from invq.framework import KNN, DynamicSkyline, EpsRange, InverseQuerySpec, run_inverse_query
from invq.geometry import Point, QuerySet, Rect
from invq.iknn import PruneLedger, prune_count, prune_threshold
from invq.oracle import brute_inverse
from invq.rtree import bulk_load
from invq.workbench import (
    ExperimentConfig,
    extent_side,
    gen_clustered,
    gen_query_set,
    gen_uniform,
    run_experiment,
)

import suites

PREDICATES = ("ieps", "iknn", "idsq")


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
        return ok
    return emit


def _instance_plan(i, pred_name):
    gen = gen_uniform if i % 2 == 0 else gen_clustered
    d = 2 if (i // 2) % 2 == 0 else 3
    choice = (i // 4) % 2
    m = (2, 4)[(i // 8) % 2] if pred_name == "idsq" else (2, 5)[(i // 8) % 2]
    pred = {"ieps": EpsRange((0.05, 0.1)[choice]),
            "iknn": KNN((5, 20)[choice]),
            "idsq": DynamicSkyline()}[pred_name]
    return gen, d, pred, m


@pytest.fixture(scope="module")
def oracle_runs():
    """100 instances per predicate: n=2000, extent 0.01, mixed data and parameters."""
    start = time.perf_counter()
    checked = 0.0  # oracle + MQF only; baselines are timed by criterion 2
    cache = {}
    runs = {p: [] for p in PREDICATES}
    for name in PREDICATES:
        for i in range(100):
            gen, d, pred, m = _instance_plan(i, name)
            key = (gen.__name__, d, i)
            if key not in cache:
                ds = gen(2000, d, 1000 + i)
                cache[key] = (ds, bulk_load(ds), ds.points())
            ds, tree, pts = cache[key]
            Q = gen_query_set(ds, m, 0.01, seed=5000 + i)
            spec = InverseQuerySpec(pred, Q)
            t0 = time.perf_counter()
            oracle = brute_inverse(pts, spec)
            mqf = set(run_inverse_query(spec, tree).results)
            checked += time.perf_counter() - t0
            runs[name].append({
                "label": f"{name} {gen.__name__} d={d} param={pred.param} |Q|={m}",
                "oracle": oracle,
                "mqf": mqf,
                "naive": set(naive_inverse(tree, spec).results),
                "sqf": set(sqf_inverse(tree, spec, seed=i).results),
            })
    return runs, checked, time.perf_counter() - start


def test_criterion_1_oracle_equivalence(oracle_runs, report):
    runs, elapsed, _ = oracle_runs
    parts, ok = [], elapsed < 300
    for name in PREDICATES:
        bad = [r["label"] for r in runs[name] if r["mqf"] != r["oracle"]]
        nonempty = sum(bool(r["oracle"]) for r in runs[name])
        parts.append(f"{name} {len(runs[name]) - len(bad)}/{len(runs[name])} "
                     f"({nonempty} nonempty)")
        ok &= not bad and len(runs[name]) == 100
    assert report(1, ok, "; ".join(parts) + f"; oracle+MQF {elapsed:.0f}s (limit 300s)")


def test_criterion_2_algorithm_agreement(oracle_runs, report):
    runs, _, total = oracle_runs
    parts, ok = [], True
    for name in PREDICATES:
        bad = [r["label"] for r in runs[name] if not r["naive"] == r["sqf"] == r["mqf"]]
        parts.append(f"{name} {len(runs[name]) - len(bad)}/{len(runs[name])}")
        ok &= not bad
    assert report(2, ok, "naive == sqf == mqf: " + "; ".join(parts)
                  + f"; all algorithms {total:.0f}s")


def test_criterion_3_worked_examples(report):
    outside = prune_threshold(10, 7, 4, False)
    inside = prune_threshold(10, 7, 4, True)
    # an entry e next to e' (5 points) with one far query: all of e' is closer
    ledger = PruneLedger(2)
    ledger.add(np.array([[1.5, 0.0]]), np.array([[2.0, 0.0]]), np.array([5]))
    counter = prune_count(Rect((0, 0), (1, 0)), QuerySet([Point(0, (10, 0))]), ledger)
    kp = prune_threshold(10, 4, 2, False)
    ok = outside == -1 and inside == 0 and counter == 5 and kp == 4 and counter > kp
    assert report(3, ok, f"k'={outside} outside, {inside} inside; prune_counter {counter} "
                         f"> k'={kp} => prune")


def test_criterion_4_property_suites(report):
    results = {
        "single-query-reduction": suites.single_query_reduction_suite(1000, seed=1),
        "farthest-on-hull": suites.farthest_on_hull_suite(1000, seed=2),
        "hull-points-closer": suites.hull_points_closer_suite(1000, seed=3),
        "orthant-emptiness": suites.orthant_emptiness_suite(1000, seed=4),
        "pruning-region": suites.pruning_region_suite(1000, seed=5),
    }
    ok = all(t >= 1000 and b == 0 for t, b in results.values())
    detail = "; ".join(f"{k} {b} violations/{t}" for k, (t, b) in results.items())
    assert report(4, ok, detail)


def test_criterion_5_fast_validation(report):
    cases = []
    ds = gen_uniform(3000, 2, 7)
    pts = ds.points()
    tree = bulk_load(ds)
    # eps pair gap above 2 eps
    far = QuerySet([pts[int(np.argmin(ds.coords.sum(1)))], pts[int(np.argmax(ds.coords.sum(1)))]])
    cases.append(("eps gap", InverseQuerySpec(EpsRange(0.1), far), tree))
    # more queries than k
    cases.append(("|Q|>k", InverseQuerySpec(KNN(3), gen_query_set(ds, 4, 0.01, 1)), tree))
    # another query in every quadrant of the centre query
    grid = np.array([[.5, .5], [.4, .4], [.6, .4], [.4, .6], [.6, .6]])
    stacked = np.vstack([grid, ds.coords])
    lds = [Point(i, tuple(c)) for i, c in enumerate(stacked)]
    cases.append(("orthants", InverseQuerySpec(DynamicSkyline(), QuerySet(lds[:5])),
                  bulk_load(lds)))
    parts, ok = [], True
    for label, spec, t in cases:
        rep = run_inverse_query(spec, t)
        good = rep.node_reads == 0 and not rep.results and rep.validated_empty
        ok &= good
        parts.append(f"{label}: reads={rep.node_reads} results={len(rep.results)}")
    assert report(5, ok, "; ".join(parts))


def test_criterion_6_directional_performance(report):
    start = time.perf_counter()
    ds = gen_uniform(50_000, 3, 0)
    tree = bulk_load(ds, 1024)
    means, ok = {}, True
    for name in PREDICATES:
        cfg = ExperimentConfig(source="uniform", n=50_000, d=3, predicate=name, queries=100)
        rows = {r.algorithm: r.mean_node_reads for r in run_experiment(cfg, tree=tree, ds=ds)}
        means[name] = rows
        ok &= rows["mqf"] < rows["sqf"] < rows["naive"]
    ratio = means["ieps"]["mqf"] / means["ieps"]["sqf"]
    elapsed = time.perf_counter() - start
    ok &= ratio <= 0.8 and elapsed < 900
    detail = "; ".join(f"{n} mqf={m['mqf']:.1f} sqf={m['sqf']:.1f} naive={m['naive']:.1f}"
                       for n, m in means.items())
    assert report(6, ok, f"{detail}; eps mqf/sqf={ratio:.2f}; {elapsed:.0f}s (limit 900s)")


def test_criterion_7_extent_formula(report):
    side = extent_side(0.0004, 3)
    ds = gen_uniform(20_000, 3, 3)
    spans = [np.ptp(gen_query_set(ds, 10, 0.0004, s).coords, axis=0).max() for s in range(20)]
    ok = abs(side - 0.073) <= 0.001 and max(spans) <= side
    assert report(7, ok, f"side={side:.4f}; widest sampled query set {max(spans):.4f}")


def test_criterion_8_pruned_entry_audit(report):
    parts, ok = [], True
    for name in PREDICATES:
        audited = hits = 0
        for i in range(20):
            gen, d, pred, m = _instance_plan(i, name)
            ds = gen(600, d, 7000 + i)
            tree = bulk_load(ds, 256)
            spec = InverseQuerySpec(pred, gen_query_set(ds, m, 0.02, seed=i))
            want = brute_inverse(ds.points(), spec)
            trace = []
            run_inverse_query(spec, tree, trace=trace)
            for e in trace:
                audited += 1
                hits += bool(set(tree.subtree_ids(e).tolist()) & want)
        ok &= hits == 0 and audited > 0
        parts.append(f"{name} {hits} bad of {audited} pruned entries")
    assert report(8, ok, "; ".join(parts))
