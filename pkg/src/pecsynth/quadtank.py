"""Linearized quadruple-tank case study: plant, decentralized PI base
controller, observer gain, disturbance bounds, and the five attack scenarios
studied in the benchmark."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pecsynth import matrixkit as mk
from pecsynth.model import (
    AttackScenario,
    BaseController,
    DisturbanceBounds,
    LtiPlant,
    bounds_from_componentwise_peaks,
    make_scenario,
)


@dataclass(frozen=True)
class QuadTankParams:
    """Physical parameters of the four-tank process around the operating
    point, plus the PI gains and observer poles used in the study."""

    tank_areas: tuple = (28.0, 32.0, 28.0, 32.0)          # cm^2
    outlet_areas: tuple = (7.1e-2, 5.7e-2, 7.1e-2, 5.7e-2)  # cm^2
    levels0: tuple = (12.4, 12.7, 1.8, 1.4)               # cm
    pump0: tuple = (3.0, 3.0)                              # V
    pump_gains: tuple = (3.33, 3.35)                       # cm^3 / (V s)
    valve_splits: tuple = (0.70, 0.60)
    sensor_gain: float = 0.50                              # V / cm
    gravity: float = 981.0                                 # cm / s^2
    v_peak: float = 0.05                                   # V
    w_peak: float = 0.003                                  # V
    pi_gains: tuple = ((3.0, 30.0), (2.7, 40.0))           # (K_j, T_Ij)
    observer_poles: tuple = (-2.0, -2.0, -2.1, -2.1)

    def __post_init__(self):
        if any(a <= 0 for a in self.tank_areas + self.outlet_areas + self.levels0):
            raise ValueError("areas and operating levels must be positive")
        if any(not (0 < g < 1) for g in self.valve_splits):
            raise ValueError("valve splits must lie in (0, 1)")
        if self.sensor_gain <= 0 or self.gravity <= 0:
            raise ValueError("gains must be positive")

    @property
    def time_constants(self) -> np.ndarray:
        A = np.asarray(self.tank_areas)
        a = np.asarray(self.outlet_areas)
        h0 = np.asarray(self.levels0)
        return (A / a) * np.sqrt(2.0 * h0 / self.gravity)


@dataclass(frozen=True)
class QuadTankCase:
    params: QuadTankParams
    plant: LtiPlant
    base: BaseController
    L: np.ndarray
    bounds: DisturbanceBounds
    scenarios: tuple

    def scenario(self, sensors) -> AttackScenario:
        key = tuple(sorted(sensors))
        for sc in self.scenarios:
            if sc.sensors == key:
                return sc
        return make_scenario(self.plant.n_y, sensors)


SCENARIO_SETS = ((1,), (4,), (1, 4), (2, 4), (1, 2, 3, 4))


def build_case(params: QuadTankParams = None) -> QuadTankCase:
    """Assemble the full case study in output coordinates (C = H = I_4).

    The base PI controller acts on the first two outputs only and regulates
    deviations about the operating point (references are zero); disturbance
    bounds use the per-component peak rule.
    """
    p = params or QuadTankParams()
    T = p.time_constants
    A_t = np.asarray(p.tank_areas)
    k1, k2 = p.pump_gains
    g1, g2 = p.valve_splits
    kc = p.sensor_gain

    A = np.diag(-1.0 / T)
    A[0, 2] = A_t[2] / (A_t[0] * T[2])
    A[1, 3] = A_t[3] / (A_t[1] * T[3])
    B = np.array([
        [g1 * k1 * kc / A_t[0], 0.0],
        [0.0, g2 * k2 * kc / A_t[1]],
        [0.0, (1.0 - g2) * k2 * kc / A_t[2]],
        [(1.0 - g1) * k1 * kc / A_t[3], 0.0],
    ])
    plant = LtiPlant(A=A, B=B, C=np.eye(4), G=B.copy(), H=np.eye(4))

    (K1, TI1), (K2, TI2) = p.pi_gains
    A_c = np.zeros((2, 2))
    B_c = np.zeros((2, 4)); B_c[0, 0] = -1.0; B_c[1, 1] = -1.0
    C_c = np.diag([K1 / TI1, K2 / TI2])
    D_c = np.zeros((2, 4)); D_c[0, 0] = -K1; D_c[1, 1] = -K2
    base = BaseController(A_c=A_c, B_c=B_c, C_c=C_c, D_c=D_c)

    L = mk.place_observer_gain(plant.A, plant.C, list(p.observer_poles))
    bounds = bounds_from_componentwise_peaks(p.w_peak, p.v_peak, plant.n_w, plant.n_v)
    scenarios = tuple(make_scenario(plant.n_y, s) for s in SCENARIO_SETS)
    return QuadTankCase(params=p, plant=plant, base=base, L=L, bounds=bounds,
                        scenarios=scenarios)
