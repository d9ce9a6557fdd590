"""Command line: gen-data, ingest, query, bench, verify."""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .baselines import naive_inverse, sqf_inverse
from .framework import InverseQuerySpec, QueryReport, run_inverse_query
from .rtree import bulk_load
from .workbench import (
    ExperimentConfig,
    gen_clustered,
    gen_uniform,
    ingest_points,
    make_predicate,
    read_points,
    resolve_queries,
    run_experiment,
    run_verification,
    write_points,
)

EXIT_INVALID = 2


class SpecError(ValueError):
    pass


def parse_coords(text: str) -> list[tuple[float, ...]]:
    """"x1,y1;x2,y2;..." -> list of coordinate tuples."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            out.append(tuple(float(v) for v in chunk.split(",")))
        except ValueError:
            raise SpecError(f"bad coordinate {chunk!r}") from None
    if not out:
        raise SpecError("no query coordinates given")
    if len({len(c) for c in out}) != 1:
        raise SpecError("query coordinates differ in dimension")
    return out


def _cmd_gen_data(a) -> int:
    if a.n < 1 or a.d < 1:
        raise SpecError("--n and --d must be positive")
    ds = gen_uniform(a.n, a.d, a.seed) if a.dist == "uniform" else \
        gen_clustered(a.n, a.d, a.seed, a.clusters, a.spread)
    write_points(ds, a.out)
    print(f"wrote {len(ds)} points to {a.out}")
    return 0


def _cmd_ingest(a) -> int:
    with_ids = {"auto": None, "yes": True, "no": False}[a.ids]
    ds = ingest_points(a.inp, with_ids=with_ids)
    write_points(ds, a.out)
    print(f"wrote {len(ds)} normalized points to {a.out}")
    return 0


def _cmd_query(a) -> int:
    ds = read_points(a.data)
    tree = bulk_load(ds, a.page_size)
    qtext = open(a.q_file, encoding="utf-8").read().replace("\n", ";") if a.q_file else a.q
    if not qtext:
        raise SpecError("give --q or --q-file")
    Q = resolve_queries(ds, parse_coords(qtext))
    if a.type == "ieps":
        if a.eps is None:
            raise SpecError("--eps is required for ieps")
        param = a.eps
    elif a.type == "iknn":
        if a.k is None:
            raise SpecError("--k is required for iknn")
        param = a.k
    else:
        param = None
    pred = make_predicate(a.type, param)
    aux = None
    if a.bichromatic:
        aux = bulk_load(read_points(a.bichromatic), a.page_size)
    spec = InverseQuerySpec(pred, Q, bichromatic=aux is not None)
    if a.algo == "mqf":
        rep = run_inverse_query(spec, tree, aux=aux)
    elif a.algo == "sqf":
        rep = sqf_inverse(tree, spec, seed=a.seed, aux=aux)
    else:
        rep = naive_inverse(tree, spec, aux=aux)
    _print_report(rep)
    return 0


def _print_report(rep: QueryReport) -> None:
    ids = sorted(rep.results)
    print("results:", " ".join(str(i) for i in ids) if ids else "(none)")
    print(f"count: {len(ids)}")
    print(f"node reads: {rep.node_reads}")
    print(f"time: {rep.wall_time * 1000:.3f} ms")
    if rep.validated_empty:
        print("fast-validation: empty")


def _cmd_bench(a) -> int:
    cfg = ExperimentConfig.from_file(a.config)
    rows = run_experiment(cfg, out=a.out)
    print(f"wrote {len(rows)} rows to {a.out}")
    return 0


def _cmd_verify(a) -> int:
    failures = run_verification(a.n, a.d, a.trials, a.seed)
    for f in failures:
        print(f"MISMATCH trial {f.trial} {f.predicate}: {f.message}")
        print("minimal instance:")
        for i, c in zip(f.instance.ids, f.instance.coords):
            print(f"  {int(i)} " + " ".join(repr(float(x)) for x in c))
        print("  queries:", sorted(f.query_ids))
    total = a.trials * 3
    print(f"{total - len(failures)}/{total} checks agree with the oracle")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invq", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic point file")
    g.add_argument("--dist", choices=("uniform", "clustered"), default="uniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--clusters", type=int, default=5)
    g.add_argument("--spread", type=float, default=0.02)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen_data)

    i = sub.add_parser("ingest", help="parse and normalize a point file")
    i.add_argument("--in", dest="inp", required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--ids", choices=("auto", "yes", "no"), default="auto",
                   help="whether the first column holds ids")
    i.set_defaults(func=_cmd_ingest)

    q = sub.add_parser("query", help="run one inverse query")
    q.add_argument("--data", required=True)
    q.add_argument("--type", choices=("ieps", "iknn", "idsq"), required=True)
    q.add_argument("--eps", type=float)
    q.add_argument("--k", type=int)
    q.add_argument("--q", help='query coordinates "x1,y1;x2,y2;..."')
    q.add_argument("--q-file", help="query coordinates, one per line (wins over --q)")
    q.add_argument("--algo", choices=("mqf", "sqf", "naive"), default="mqf")
    q.add_argument("--bichromatic", metavar="CAND_FILE",
                   help="candidate point file; results are drawn from it")
    q.add_argument("--page-size", type=int, default=1024)
    q.add_argument("--seed", type=int, default=0, help="pivot choice for sqf")
    q.set_defaults(func=_cmd_query)

    b = sub.add_parser("bench", help="run an experiment config")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=_cmd_bench)

    v = sub.add_parser("verify", help="randomized oracle equality for all algorithms")
    v.add_argument("--n", type=int, default=500)
    v.add_argument("--d", type=int, default=2)
    v.add_argument("--trials", type=int, default=50)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=_cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
