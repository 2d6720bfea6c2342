"""Shared fixtures; the expensive experiment runs once per session."""

from __future__ import annotations

import time

import numpy as np
import pytest

from randset_pde.fem import build_mesh
from randset_pde.models import EllipticModel
from randset_pde.propagation import (
    GaussianFamilyModel,
    ParameterGrid,
    propagate_random_set,
)
from randset_pde.randomsets import Interval

MEMBRANE_SEED = 42


@pytest.fixture(scope="session")
def membrane_run():
    """Full desk-scale membrane experiment: 18x18 L-shape, 130 KL pairs,
    500 samples, 11 correlation lengths in [0.5, 1.5].  Returns the
    random-set result and its wall-clock seconds."""
    mesh = build_mesh("l_shape", 18, 18)
    model = EllipticModel(mesh=mesh, m_pairs=130, sigma=1.0, a_min=0.1,
                          slice_x2=0.4444, pbox_x1=0.3333)
    grid = ParameterGrid.regular([Interval(0.5, 1.5)], [11])
    t0 = time.perf_counter()
    rs = propagate_random_set(model, grid, 500, seed=MEMBRANE_SEED)
    elapsed = time.perf_counter() - t0
    return rs, elapsed


@pytest.fixture(scope="session")
def gauss_run():
    """Imprecise Gaussian family, 11x11 parameter grid, N = 10**4."""
    grid = ParameterGrid.regular([Interval(-1.0, 1.0), Interval(1.0, 2.0)], [11, 11])
    thresholds = np.linspace(-8.0, 8.0, 201)
    rs = propagate_random_set(GaussianFamilyModel(), grid, 10_000, seed=MEMBRANE_SEED,
                              thresholds=thresholds)
    return rs


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance pass/fail lines past pytest's output capture."""
    try:
        from test_acceptance import RESULT_LINES
    except ImportError:
        return
    if RESULT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULT_LINES):
            terminalreporter.write_line(line)
