#!/usr/bin/env python3
"""Run one experiment configuration and print the CSV rows.

    python3 scripts/run_benchmark.py --predicate iknn --n 50000 --queries 100 --out knn.csv
"""
import argparse
import sys
from dataclasses import fields

from invq.workbench import ExperimentConfig, run_experiment, write_csv


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value file; flags below override it")
    p.add_argument("--predicate", choices=("ieps", "iknn", "idsq"))
    p.add_argument("--source", help="uniform, clustered or a point file")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--params", help="comma separated eps or k sweep")
    p.add_argument("--qcounts", help="comma separated |Q| sweep")
    p.add_argument("--extent", type=float)
    p.add_argument("--queries", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    a = p.parse_args(argv)

    kw = {}
    if a.config:
        base = ExperimentConfig.from_file(a.config)
        kw = {f.name: getattr(base, f.name) for f in fields(ExperimentConfig)}
    if a.predicate and a.predicate != kw.get("predicate"):
        # sweeps chosen for another predicate do not carry over
        kw.pop("params", None)
        kw.pop("qcounts", None)
    for key in ("predicate", "source", "n", "d", "extent", "queries", "seed"):
        if getattr(a, key) is not None:
            kw[key] = getattr(a, key)
    if a.params:
        kw["params"] = tuple(float(v) if "." in v else int(v) for v in a.params.split(","))
    if a.qcounts:
        kw["qcounts"] = tuple(int(v) for v in a.qcounts.split(","))
    cfg = ExperimentConfig(**kw)
    rows = run_experiment(cfg, out=a.out)
    write_csv(rows, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
