"""Domain types for the plant, disturbance bounds, attacker, detector, and
base controller, with validated constructors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pecsynth import matrixkit as mk
from pecsynth.errors import (
    BadIndex,
    DimensionMismatch,
    NonPositivePeak,
    NotDetectable,
    NotStabilizable,
    NotStable,
    RankDeficientC,
)


@dataclass(frozen=True)
class LtiPlant:
    """Perturbed LTI system  dx = A x + B u + G w,  y = C x + H v."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    G: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        A = mk.as_matrix(self.A, "A")
        B = mk.as_matrix(self.B, "B")
        C = mk.as_matrix(self.C, "C")
        G = mk.as_matrix(self.G, "G")
        H = mk.as_matrix(self.H, "H")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch("A must be square")
        if B.shape[0] != n or G.shape[0] != n:
            raise DimensionMismatch("B and G must have n_x rows")
        if C.shape[1] != n:
            raise DimensionMismatch("C must have n_x columns")
        if H.shape[0] != C.shape[0]:
            raise DimensionMismatch("H must have n_y rows")
        if mk.rank(C) < C.shape[0]:
            raise RankDeficientC("C must have full row rank")
        if not mk.is_stabilizable(A, B):
            raise NotStabilizable("(A, B) is not stabilizable")
        if not mk.is_detectable(A, C):
            raise NotDetectable("(A, C) is not detectable")
        for name, M in (("A", A), ("B", B), ("C", C), ("G", G), ("H", H)):
            object.__setattr__(self, name, M)

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    @property
    def n_w(self) -> int:
        return self.G.shape[1]

    @property
    def n_v(self) -> int:
        return self.H.shape[1]


@dataclass(frozen=True)
class DisturbanceBounds:
    """Ellipsoidal peak bounds {w : w^T W_w w <= 1}, {v : v^T W_v v <= 1}."""

    W_w: np.ndarray
    W_v: np.ndarray

    def __post_init__(self):
        for name, M in (("W_w", self.W_w), ("W_v", self.W_v)):
            S = mk.sym(M, name=name)
            if S.size and mk.min_eig_sym(S) <= 0:
                raise DimensionMismatch(f"{name} must be positive definite")
            object.__setattr__(self, name, S)

    def scaled(self, factor: float) -> "DisturbanceBounds":
        """Scale both shape matrices; factor > 1 means tighter disturbance sets."""
        return DisturbanceBounds(self.W_w * factor, self.W_v * factor)


@dataclass(frozen=True)
class AttackScenario:
    """Sensor-selection matrix for an additive attack on a sensor subset."""

    sensors: tuple
    Gamma: np.ndarray
    Gamma_pinv: np.ndarray

    def __post_init__(self):
        G = mk.as_matrix(self.Gamma, "Gamma")
        Gp = mk.as_matrix(self.Gamma_pinv, "Gamma_pinv")
        if np.abs(Gp @ G - np.eye(G.shape[1])).max() > 1e-12:
            raise BadIndex("Gamma_pinv @ Gamma must be the identity")
        object.__setattr__(self, "sensors", tuple(sorted(self.sensors)))
        object.__setattr__(self, "Gamma", G)
        object.__setattr__(self, "Gamma_pinv", Gp)

    @property
    def n_attacked(self) -> int:
        return self.Gamma.shape[1]

    @property
    def projector(self) -> np.ndarray:
        """Gamma Gamma^+, the orthogonal projector onto attacked sensor axes."""
        return self.Gamma @ self.Gamma_pinv

    def label(self) -> str:
        return "{" + ",".join(str(s) for s in self.sensors) + "}"


@dataclass(frozen=True)
class Detector:
    """Observer gain plus the residual alarm ellipsoid r^T Pi r <= 1."""

    L: np.ndarray
    Pi: np.ndarray
    A: np.ndarray = None
    C: np.ndarray = None

    def __post_init__(self):
        L = mk.as_matrix(self.L, "L")
        Pi = mk.sym(self.Pi, name="Pi")
        if mk.min_eig_sym(Pi) <= 0:
            raise NotStable("Pi must be positive definite")
        if self.A is not None and self.C is not None:
            A = mk.as_matrix(self.A, "A")
            C = mk.as_matrix(self.C, "C")
            if not mk.is_hurwitz(A - L @ C):
                raise NotStable("A - LC must be Hurwitz")
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "C", C)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "Pi", Pi)


@dataclass(frozen=True)
class BaseController:
    """Dynamic output feedback  drho = A_c rho + B_c y,  u = C_c rho + D_c y.

    Closed-loop stability is validated at assembly time, not here.
    """

    A_c: np.ndarray
    B_c: np.ndarray
    C_c: np.ndarray
    D_c: np.ndarray

    def __post_init__(self):
        A_c = mk.as_matrix(self.A_c, "A_c")
        B_c = mk.as_matrix(self.B_c, "B_c")
        C_c = mk.as_matrix(self.C_c, "C_c")
        D_c = mk.as_matrix(self.D_c, "D_c")
        n_rho = A_c.shape[0]
        if A_c.shape != (n_rho, n_rho):
            raise DimensionMismatch("A_c must be square")
        if B_c.shape[0] != n_rho or C_c.shape[1] != n_rho:
            raise DimensionMismatch("controller matrix shapes are inconsistent")
        if D_c.shape != (C_c.shape[0], B_c.shape[1]):
            raise DimensionMismatch("D_c shape must be n_u x n_y")
        for name, M in (("A_c", A_c), ("B_c", B_c), ("C_c", C_c), ("D_c", D_c)):
            object.__setattr__(self, name, M)

    @property
    def n_rho(self) -> int:
        return self.A_c.shape[0]


def make_scenario(n_y: int, sensors) -> AttackScenario:
    """Selection matrix with one canonical basis column per attacked sensor,
    ascending index order. Indices are 1-based."""
    sensors = list(sensors)
    if len(set(sensors)) != len(sensors):
        raise BadIndex(f"duplicate sensor indices in {sensors}")
    for s in sensors:
        if not (1 <= int(s) <= n_y) or int(s) != s:
            raise BadIndex(f"sensor index {s} outside [1, {n_y}]")
    sensors = sorted(int(s) for s in sensors)
    Gamma = np.zeros((n_y, len(sensors)))
    for j, s in enumerate(sensors):
        Gamma[s - 1, j] = 1.0
    return AttackScenario(tuple(sensors), Gamma, Gamma.T)


def bounds_from_peaks(w_peak: float, v_peak: float, n_w: int, n_v: int) -> DisturbanceBounds:
    """Smallest ball ellipsoids containing every vector with all components in
    [-peak, peak]: W = I / (n * peak^2)."""
    if not (w_peak > 0) or not (v_peak > 0):
        raise NonPositivePeak("peaks must be strictly positive")
    return DisturbanceBounds(
        np.eye(n_w) / (n_w * w_peak**2),
        np.eye(n_v) / (n_v * v_peak**2),
    )


def bounds_from_componentwise_peaks(w_peak: float, v_peak: float, n_w: int, n_v: int) -> DisturbanceBounds:
    """Per-component rule W = I / peak^2 (ball of radius `peak`)."""
    if not (w_peak > 0) or not (v_peak > 0):
        raise NonPositivePeak("peaks must be strictly positive")
    return DisturbanceBounds(np.eye(n_w) / w_peak**2, np.eye(n_v) / v_peak**2)
