import os

import hypothesis
import numpy as np
import pytest

from invq.geometry import Point, QuerySet
from invq.rtree import bulk_load
from invq.workbench import Dataset

hypothesis.settings.register_profile("default", deadline=None, max_examples=100)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def line(xs):
    """1D dataset, ids in input order."""
    return Dataset.from_coords(np.array(xs, dtype=float)[:, None])


def plane(pts):
    return Dataset.from_coords(np.array(pts, dtype=float))


def queries(ds, ids):
    return QuerySet([Point(int(ds.ids[i]), tuple(ds.coords[i])) for i in ids])


@pytest.fixture
def demo_line():
    """The 1D demo dataset {0, 1, 2, 3, 10}."""
    ds = line([0, 1, 2, 3, 10])
    return ds, bulk_load(ds)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
