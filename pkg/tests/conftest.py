import os

import pytest

from magic_coupling_studio.analysis import run_sweep
from magic_coupling_studio.config import validate_config
from magic_coupling_studio.couplings import compute_report

EXAMPLES_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir,
                            "magic_coupling_studio", "examples")

# five 171Yb+ ions in a 130 kHz axial trap
BASE = {"n_ions": 5, "species": "171Yb+", "omega_z_hz": 130e3, "dB_dz": 150.0}


def make_config(**overrides):
    raw = dict(BASE)
    raw.update(overrides)
    return validate_config(raw)


@pytest.fixture
def examples_dir():
    return EXAMPLES_DIR


@pytest.fixture
def yb_config():
    return make_config


@pytest.fixture(scope="session")
def report_150():
    return compute_report(make_config())


@pytest.fixture(scope="session")
def report_19():
    return compute_report(make_config(dB_dz=19.0))


@pytest.fixture(scope="session")
def sweep_150():
    return run_sweep(make_config(), (2, 40))
