"""Shared fixtures for the WillmoreLab tests."""

import numpy as np
import pytest

from willmore_lab.core.metrics import MetricFamily, S3Point, TensorField
from willmore_lab.utils.config import RunConfig

LMAX = 8


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def run_config():
    """Defaults with the smallest admissible band limit."""
    return RunConfig.load(overrides={"lmax": LMAX, "verify_lmax": LMAX})


@pytest.fixture
def identity():
    return S3Point.identity()


@pytest.fixture
def generic_point():
    return S3Point((0.3, -0.5, 0.7, 0.4))


@pytest.fixture
def hopf_family():
    return MetricFamily.round_plus_tensor(TensorField("hopf_modulated"), 0.05)
