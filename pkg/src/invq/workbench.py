"""Datasets, query-set sampling and benchmark orchestration."""
from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .baselines import naive_inverse, sqf_inverse
from .framework import KNN, DynamicSkyline, EpsRange, InverseQuerySpec, Predicate, run_inverse_query
from .geometry import Point, QuerySet
from .oracle import brute_inverse
from ._kernels import warm_up
from .rtree import AggRTree, bulk_load


@dataclass(frozen=True)
class Dataset:
    coords: np.ndarray
    ids: np.ndarray

    def __post_init__(self):
        if self.coords.ndim != 2 or len(self.coords) != len(self.ids):
            raise ValueError("coords must be (n, d) with one id per row")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def points(self) -> list[Point]:
        return [Point(int(i), tuple(c)) for i, c in zip(self.ids, self.coords)]

    @classmethod
    def from_coords(cls, coords) -> "Dataset":
        coords = np.asarray(coords, dtype=float)
        return cls(coords, np.arange(len(coords), dtype=np.int64))


def gen_uniform(n: int, d: int, seed: int) -> Dataset:
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(seed)
    return Dataset.from_coords(rng.random((n, d)))


def gen_clustered(n: int, d: int, seed: int, clusters: int = 5, spread: float = 0.02) -> Dataset:
    """Equal-size Gaussian blobs around uniform centres, normalized to [0,1]^d."""
    if n < 1 or d < 1 or clusters < 1:
        raise ValueError("n, d and clusters must be positive")
    rng = np.random.default_rng(seed)
    centers = rng.random((clusters, d))
    sizes = [n // clusters + (1 if i < n % clusters else 0) for i in range(clusters)]
    blobs = [c + rng.normal(0.0, spread, (s, d)) for c, s in zip(centers, sizes)]
    return normalize(Dataset.from_coords(np.vstack(blobs)))


def normalize(ds: Dataset) -> Dataset:
    """Min-max scale every dimension onto [0, 1]; constant dimensions become 0."""
    lo = ds.coords.min(axis=0)
    span = ds.coords.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (ds.coords - lo) / safe, 0.0)
    return Dataset(np.clip(scaled, 0.0, 1.0), ds.ids.copy())


def ingest_points(path, with_ids: Optional[bool] = None) -> Dataset:
    """Read whitespace-separated points ("id x y ..." or "x y ..."), then normalize.

    Blank lines and lines starting with '#' are skipped. Ids are detected when
    every line has at least three fields and the first field is always an
    integer; ``with_ids`` overrides the guess. Duplicate ids are renumbered.
    """
    rows: list[tuple[int, list[str]]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            rows.append((lineno, text.split()))
    if not rows:
        raise ValueError(f"{path}: no points")
    if with_ids is None:
        with_ids = all(len(tok) >= 3 and _is_int(tok[0]) for _, tok in rows)
    width = len(rows[0][1])
    coords, ids = [], []
    for lineno, tok in rows:
        if len(tok) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(tok)}")
        vals = tok[1:] if with_ids else tok
        if not vals:
            raise ValueError(f"{path}:{lineno}: no coordinates")
        try:
            c = [float(v) for v in vals]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number in {' '.join(tok)!r}") from None
        if not all(np.isfinite(c)):
            raise ValueError(f"{path}:{lineno}: non-finite coordinate")
        coords.append(c)
        if with_ids:
            if not _is_int(tok[0]):
                raise ValueError(f"{path}:{lineno}: bad id {tok[0]!r}")
            ids.append(int(tok[0]))
    arr = np.array(coords, dtype=float)
    if not with_ids or len(set(ids)) != len(ids):
        ids = list(range(len(arr)))
    return normalize(Dataset(arr, np.array(ids, dtype=np.int64)))


def _is_int(tok: str) -> bool:
    try:
        int(tok)
        return True
    except ValueError:
        return False


def write_points(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, c in zip(ds.ids, ds.coords):
            fh.write(" ".join([str(int(i))] + [repr(float(x)) for x in c]) + "\n")


def extent_side(extent: float, d: int) -> float:
    return float(extent) ** (1.0 / d)


def gen_query_set(ds: Dataset, m: int, extent: float, seed: int,
                  max_tries: int = 1000) -> QuerySet:
    """Sample m dataset points inside a random cube covering ``extent`` of the space.

    The cube (side extent^(1/d)) is placed around a random anchor point and
    kept inside the unit cube; if it holds fewer than m points a new anchor is
    drawn.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if not 0 < extent <= 1:
        raise ValueError("extent must lie in (0, 1]")
    n, d = ds.coords.shape
    if m > n:
        raise ValueError(f"cannot sample {m} query points from {n}")
    rng = np.random.default_rng(seed)
    side = extent_side(extent, d)
    for _ in range(max_tries):
        anchor = ds.coords[rng.integers(n)]
        lo = np.clip(anchor - rng.random(d) * side, 0.0, max(0.0, 1.0 - side))
        hi = lo + side
        inside = np.flatnonzero(np.all((ds.coords >= lo) & (ds.coords <= hi), axis=1))
        if len(inside) >= m:
            pick = np.sort(rng.choice(inside, m, replace=False))
            return QuerySet([Point(int(ds.ids[i]), tuple(ds.coords[i])) for i in pick])
    raise ValueError(f"no cube of extent {extent} holds {m} points after {max_tries} tries")


# -- point files and oracle checks -------------------------------------------------


def read_points(path) -> Dataset:
    """Read a file in the ``write_points`` format ("id x y ...") as is, without rescaling."""
    ids, coords = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            tok = text.split()
            try:
                ids.append(int(tok[0]))
                coords.append([float(v) for v in tok[1:]])
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: expected 'id x y ...'") from None
    if not coords or len({len(c) for c in coords}) != 1 or not coords[0]:
        raise ValueError(f"{path}: no points or ragged rows")
    return Dataset(np.array(coords, dtype=float), np.array(ids, dtype=np.int64))


def resolve_queries(ds: Dataset, coords: list[tuple[float, ...]]) -> QuerySet:
    """Match each query coordinate to a stored point (the query objects belong to D)."""
    members = []
    for c in coords:
        if len(c) != ds.dim:
            raise ValueError(f"query {c} has dimension {len(c)}, data has {ds.dim}")
        hit = np.flatnonzero(np.all(ds.coords == np.array(c), axis=1))
        if len(hit) == 0:
            raise ValueError(f"query {c} is not a stored point")
        i = int(hit[0])
        members.append(Point(int(ds.ids[i]), tuple(ds.coords[i])))
    return QuerySet(members)


def random_instance(rng: np.random.Generator, n: int, d: int) -> Dataset:
    """Uniform points; about a third of instances snap to a coarse grid."""
    coords = rng.random((n, d))
    if rng.random() < 0.3:
        coords = np.round(coords * 8) / 8  # coincident points and exact ties
    return Dataset.from_coords(coords)


def verify_instance(ds: Dataset, Q: QuerySet, pred, seed: int = 0) -> Optional[str]:
    """None when all algorithms agree with the oracle, else a description."""
    tree = bulk_load(ds, 256)
    spec = InverseQuerySpec(pred, Q)
    want = brute_inverse(ds.points(), spec)
    got = {
        "mqf": run_inverse_query(spec, tree).results,
        "sqf": sqf_inverse(tree, spec, seed=seed).results,
        "naive": naive_inverse(tree, spec).results,
    }
    bad = {k: v for k, v in got.items() if set(v) != want}
    if not bad:
        return None
    parts = [f"oracle={sorted(want)}"] + [f"{k}={sorted(v)}" for k, v in bad.items()]
    return "; ".join(parts)


def shrink_instance(ds: Dataset, Q: QuerySet, pred) -> Dataset:
    """Drop non-query points one at a time while the mismatch persists."""
    qids = Q.id_set
    keep = list(range(len(ds)))
    changed = True
    while changed:
        changed = False
        for i in list(keep):
            if int(ds.ids[i]) in qids:
                continue
            trial = [j for j in keep if j != i]
            sub = Dataset(ds.coords[trial], ds.ids[trial])
            if verify_instance(sub, Q, pred) is not None:
                keep = trial
                changed = True
    return Dataset(ds.coords[keep], ds.ids[keep])



@dataclass(frozen=True)
class Mismatch:
    trial: int
    predicate: Predicate
    message: str
    instance: Dataset
    query_ids: frozenset


def run_verification(n: int, d: int, trials: int, seed: int) -> list[Mismatch]:
    """Random instances for all three predicates; every disagreement with the
    oracle is reported on a shrunken instance."""
    rng = np.random.default_rng(seed)
    out = []
    for trial in range(trials):
        ds = random_instance(rng, n, d)
        for name, param in (("ieps", float(rng.choice([0.05, 0.1, 0.2]))),
                            ("iknn", int(rng.choice([1, 3, 5, 20]))),
                            ("idsq", None)):
            m = int(rng.integers(1, 5 if name == "idsq" else 6))
            extent = min(1.0, max(0.01 if d > 1 else 0.1, 4.0 * m / n))
            Q = gen_query_set(ds, m, extent, seed=int(rng.integers(1 << 31)))
            pred = make_predicate(name, param)
            msg = verify_instance(ds, Q, pred, seed=trial)
            if msg is not None:
                out.append(Mismatch(trial, pred, msg, shrink_instance(ds, Q, pred), Q.id_set))
    return out


# -- experiments -------------------------------------------------------------------


ALGORITHMS = ("mqf", "sqf", "naive")


@dataclass
class ExperimentConfig:
    source: str = "uniform"  # uniform | clustered | path to a point file
    n: int = 100_000
    d: int = 3
    predicate: str = "ieps"  # ieps | iknn | idsq
    params: tuple = ()       # sweep of eps or k; empty uses the default
    qcounts: tuple = ()      # sweep of |Q|; empty uses the default
    extent: float = 0.0004
    page_size: int = 1024
    queries: int = 1000
    seed: int = 0
    algorithms: tuple = ALGORITHMS
    clusters: int = 5
    spread: float = 0.02
    record_time: bool = True  # False writes 0 for wall time so the CSV is reproducible

    def __post_init__(self):
        if self.predicate not in ("ieps", "iknn", "idsq"):
            raise ValueError(f"unknown predicate {self.predicate!r}")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}")
        if not self.params:
            self.params = {"ieps": (0.06,), "iknn": (100,), "idsq": (None,)}[self.predicate]
        if not self.qcounts:
            self.qcounts = (4,) if self.predicate == "idsq" else (10,)
        self.params = tuple(self.params)
        self.qcounts = tuple(int(q) for q in self.qcounts)
        self.algorithms = tuple(self.algorithms)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        """Flat ``key = value`` file; lists are comma separated, '#' starts a comment."""
        kinds = {f.name: f.type for f in fields(cls)}
        values: dict = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in text.split("=", 1))
            if key not in kinds:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _parse_value(key, val)
        return cls(**values)


def _parse_value(key: str, val: str):
    if key in ("source", "predicate"):
        return val
    if key in ("n", "d", "page_size", "queries", "seed", "clusters"):
        return int(val)
    if key in ("extent", "spread"):
        return float(val)
    if key == "record_time":
        if val.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"record_time must be a boolean, got {val!r}")
        return val.lower() in ("true", "1", "yes")
    items = [v.strip() for v in val.split(",") if v.strip()]
    if key == "algorithms":
        return tuple(items)
    if key == "qcounts":
        return tuple(int(v) for v in items)
    return tuple(float(v) if "." in v or "e" in v.lower() else int(v) for v in items)


@dataclass(frozen=True)
class ResultRow:
    predicate: str
    param: object
    d: int
    n: int
    qcount: int
    extent: float
    algorithm: str
    mean_node_reads: float
    mean_time_ms: float
    mean_results: float
    queries: int


CSV_COLUMNS = [f.name for f in fields(ResultRow)]


def make_predicate(name: str, param) -> Predicate:
    if name == "ieps":
        return EpsRange(float(param))
    if name == "iknn":
        return KNN(int(param))
    if name == "idsq":
        return DynamicSkyline()
    raise ValueError(f"unknown predicate {name!r}")


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.source == "uniform":
        return gen_uniform(cfg.n, cfg.d, cfg.seed)
    if cfg.source == "clustered":
        return gen_clustered(cfg.n, cfg.d, cfg.seed, cfg.clusters, cfg.spread)
    return ingest_points(cfg.source)


def run_algorithm(name: str, spec: InverseQuerySpec, tree: AggRTree, seed: int = 0):
    if name == "mqf":
        return run_inverse_query(spec, tree)
    if name == "sqf":
        return sqf_inverse(tree, spec, seed=seed)
    if name == "naive":
        return naive_inverse(tree, spec)
    raise ValueError(f"unknown algorithm {name!r}")


def run_experiment(cfg: ExperimentConfig, out=None, tree: Optional[AggRTree] = None,
                   ds: Optional[Dataset] = None) -> list[ResultRow]:
    """Run every sweep cell and algorithm; optionally write the CSV to ``out``.

    Each cell draws its query sets from its own seed (master seed plus cell
    index), so cells are independent of one another and of execution order.
    """
    ds = ds if ds is not None else load_dataset(cfg)
    tree = tree if tree is not None else bulk_load(ds, cfg.page_size)
    warm_up()
    rows: list[ResultRow] = []
    cell = 0
    for param in cfg.params:
        pred = make_predicate(cfg.predicate, param)
        for qcount in cfg.qcounts:
            cell_seed = cfg.seed * 1_000_003 + cell
            cell += 1
            sets = [gen_query_set(ds, qcount, cfg.extent, seed=cell_seed * 7919 + i)
                    for i in range(cfg.queries)]
            for alg in cfg.algorithms:
                reads = times = results = 0.0
                for i, Q in enumerate(sets):
                    rep = run_algorithm(alg, InverseQuerySpec(pred, Q), tree, seed=cell_seed + i)
                    reads += rep.node_reads
                    if cfg.record_time:
                        times += rep.wall_time * 1000.0
                    results += len(rep.results)
                k = max(1, len(sets))
                rows.append(ResultRow(cfg.predicate, param, ds.dim, len(ds), qcount, cfg.extent,
                                      alg, reads / k, times / k, results / k, len(sets)))
    if out is not None:
        write_csv(rows, out)
    return rows


def write_csv(rows: Sequence[ResultRow], out) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_cell(getattr(r, c)) for c in CSV_COLUMNS])

    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            emit(fh)
    else:
        emit(out)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".6g")
    return str(v)
