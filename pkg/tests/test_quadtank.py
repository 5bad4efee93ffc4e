import math

import numpy as np
import pytest

from pecsynth import matrixkit as mk
from pecsynth.quadtank import QuadTankParams
from pecsynth.realization import assemble_closed_loop
from pecsynth.simulator import SimConfig, simulate


def test_time_constant_arithmetic(case):
    expected_T1 = (28.0 / 0.071) * math.sqrt(2 * 12.4 / 981.0)
    assert case.params.time_constants[0] == pytest.approx(expected_T1, rel=1e-12)
    assert expected_T1 == pytest.approx(62.7, abs=0.1)


def test_input_matrix_entry(case):
    expected = 0.70 * 3.33 * 0.5 / 28.0
    assert case.plant.B[0, 0] == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.0416, abs=1e-4)


def test_plant_structure(case):
    A = case.plant.A
    assert mk.is_hurwitz(A)                      # all -1/T_i on the diagonal
    assert A[0, 2] > 0 and A[1, 3] > 0           # upper tanks feed lower ones
    assert A[2, 0] == 0 and A[3, 1] == 0
    assert np.array_equal(case.plant.G, case.plant.B)
    assert np.array_equal(case.plant.C, np.eye(4))
    assert np.array_equal(case.plant.H, np.eye(4))


def test_dimensions(case):
    assert case.base.n_rho == 2
    assert case.plant.n_y == 4
    assert case.plant.n_x + case.base.n_rho == 6


def test_controller_ignores_upper_tank_sensors(case):
    assert np.abs(case.base.D_c[:, 2:]).max() == 0
    assert np.abs(case.base.B_c[:, 2:]).max() == 0


def test_nominal_closed_loop_hurwitz(case, tp):
    cl = assemble_closed_loop(case.base, tp, np.zeros((2, 4)), case.scenario((1,)))
    assert mk.is_hurwitz(cl.A)


def test_observer_poles(case):
    eig = np.sort(np.linalg.eigvals(case.plant.A - case.L @ case.plant.C).real)
    assert np.allclose(eig, [-2.1, -2.1, -2.0, -2.0], rtol=1e-9)


def test_regulation_decay(case, detector):
    x0 = np.array([1.0, -0.8, 0.5, 0.6])
    cfg = SimConfig(dt=0.02, horizon=600.0, disturbance_mode="zero", x0=x0)
    tr = simulate(case.plant, case.base, detector, cfg)
    assert np.abs(tr.x[-1]).max() < 1e-3


def test_scenarios_cover_study(case):
    labels = [sc.label() for sc in case.scenarios]
    assert labels == ["{1}", "{4}", "{1,4}", "{2,4}", "{1,2,3,4}"]


def test_params_reject_bad_split():
    with pytest.raises(ValueError):
        QuadTankParams(valve_splits=(1.2, 0.5))
