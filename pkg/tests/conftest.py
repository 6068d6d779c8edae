import warnings

import numpy as np
import pytest

from fasguide import continuation, dispersion, synthesis
from fasguide.core import Medium, WaveguideConfig, demo_config


@pytest.fixture(scope="session")
def cfg():
    return demo_config()


@pytest.fixture(scope="session")
def sym_cfg():
    """One medium split into two equal layers: a homogeneous rigid duct of height 1.4."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return WaveguideConfig(0.7, 0.7, Medium(1.0, 1.0), Medium(1.0, 1.0))


@pytest.fixture(scope="session")
def demo_branches(cfg):
    return dispersion.trace_branches(np.arange(21.0, 40.0 + 1e-9, 0.05), cfg)


@pytest.fixture(scope="session")
def demo_peaks(cfg, demo_branches):
    return dispersion.find_gv_peaks(demo_branches, (22.0, 39.0), cfg)


@pytest.fixture(scope="session")
def sheet_curve(cfg, demo_peaks):
    return continuation.sheet0prime(np.arange(20.0, 40.0 + 1e-9, 0.05), 1.0, cfg, peaks=demo_peaks)


@pytest.fixture(scope="session")
def pulse():
    return synthesis.ProbePulse()


@pytest.fixture(scope="session")
def simulation(cfg, pulse):
    return synthesis.simulate(cfg, pulse, [10.0, 20.0, 30.0])
