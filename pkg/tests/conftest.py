import numpy as np
import orjson
import pytest

from models.grid import Grid
from models.kernel import StableKernel
from models.media import PeriodicProfile
from models.reaction import ReactionModel


@pytest.fixture
def kernel():
    return StableKernel.constant(0.5)


@pytest.fixture
def grid():
    # h = 1/16 on [-16, 16)
    return Grid(1, 16.0, 512, 16)


@pytest.fixture
def logistic():
    return ReactionModel.logistic(PeriodicProfile.constant(1.0))


@pytest.fixture
def periodic_media():
    return PeriodicProfile.trig(1.0, sin=[0.5])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def scenario_document():
    return {
        "dimension": 1,
        "alpha": 0.5,
        "kernel": {"family": "constant", "params": {"value": 1.0}, "b": 1.0, "B": 1.0},
        "media": {"family": "constant", "params": {"value": 1.0}},
        "reaction": {"family": "logistic"},
        "grid": {"L": 16.0, "n_box": 512, "n_cell": 16},
        "run": {"T": 3.0, "dt": 0.01, "snap_every": 0.25, "backend": "spectral"},
        "eigen": {"cell_n": 64, "tol": 1e-10, "method": "dense"},
        "front": {"levels": [0.25, 0.5, 0.75], "fit_window": [1.0, 3.0]},
    }


@pytest.fixture
def write_scenario(tmp_path):
    def write(document, name="scenario.json"):
        path = tmp_path / name
        path.write_bytes(orjson.dumps(document))
        return path

    return write
