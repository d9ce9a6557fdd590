#!/usr/bin/env python3
"""Mean node reads of MQF, SQF and Naive on uniform 3D data for all predicates.

Uses the default parameters (eps 0.06, k 100, |Q| 10 or 4 for the skyline,
extent 0.0004, 1 KiB pages) with a reduced dataset and query count.
"""
import argparse
import time

from invq.rtree import bulk_load
from invq.workbench import ExperimentConfig, gen_uniform, run_experiment


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=50_000)
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()

    ds = gen_uniform(a.n, 3, a.seed)
    tree = bulk_load(ds, 1024)
    print(f"{'predicate':10} {'mqf':>10} {'sqf':>10} {'naive':>10} {'mqf/sqf':>8} {'secs':>6}")
    for name in ("ieps", "iknn", "idsq"):
        start = time.perf_counter()
        cfg = ExperimentConfig(n=a.n, d=3, predicate=name, queries=a.queries, seed=a.seed)
        reads = {r.algorithm: r.mean_node_reads for r in run_experiment(cfg, tree=tree, ds=ds)}
        print(f"{name:10} {reads['mqf']:10.1f} {reads['sqf']:10.1f} {reads['naive']:10.1f} "
              f"{reads['mqf'] / reads['sqf']:8.2f} {time.perf_counter() - start:6.0f}")


if __name__ == "__main__":
    main()
