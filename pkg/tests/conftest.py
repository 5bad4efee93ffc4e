"""Shared fixtures: the case study and its solved pipeline, computed once per
session because the SDP chains dominate test runtime."""

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)

from pecsynth.model import Detector
from pecsynth.quadtank import SCENARIO_SETS, build_case
from pecsynth.realization import (
    assemble_closed_loop,
    residual_driven_form,
    transform_plant,
)
from pecsynth.set_analysis import detector_error_set_search, residual_set_search
from pecsynth.synthesis import synthesize


@pytest.fixture(scope="session")
def case():
    return build_case()


@pytest.fixture(scope="session")
def tp(case):
    return transform_plant(case.plant)


@pytest.fixture(scope="session")
def residual_solution(case):
    import time

    t0 = time.time()
    cert, Pi = residual_set_search(case.plant, case.bounds, case.L)
    return {"cert": cert, "Pi": Pi, "runtime": time.time() - t0}


@pytest.fixture(scope="session")
def detector(case, residual_solution):
    return Detector(L=case.L, Pi=residual_solution["Pi"],
                    A=case.plant.A, C=case.plant.C)


@pytest.fixture(scope="session")
def loops(case, tp, detector):
    """Residual-driven loops keyed by scenario label."""
    out = {}
    for sensors in SCENARIO_SETS:
        sc = case.scenario(sensors)
        cl = assemble_closed_loop(case.base, tp,
                                  np.zeros((case.base.n_rho, case.plant.n_y)), sc)
        out[sc.label()] = (sc, cl, residual_driven_form(cl, detector, tp, sc))
    return out


@pytest.fixture(scope="session")
def error_certs(case, residual_solution, loops):
    Pi = residual_solution["Pi"]
    out = {}
    for label, (sc, cl, rd) in loops.items():
        out[label] = detector_error_set_search(rd, case.bounds, Pi)
    return out


@pytest.fixture(scope="session")
def synth_results(case, tp, detector, residual_solution, error_certs, loops):
    import time

    Pi = residual_solution["Pi"]
    out = {}
    t0 = time.time()
    for label, (sc, cl, rd) in loops.items():
        out[label] = synthesize(case.base, tp, detector, case.bounds,
                                error_certs[label], Pi, sc)
    out["_runtime"] = time.time() - t0
    return out
