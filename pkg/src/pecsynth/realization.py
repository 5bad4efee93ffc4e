"""Output-coordinate transform, the kernel-parameterized controller
realization family, and assembly of the disturbed closed loop together with
its residual-driven reformulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from pecsynth import matrixkit as mk
from pecsynth.errors import (
    DetectorUnstable,
    DimensionMismatch,
    KernelViolation,
    NotStable,
    RankDeficientC,
)
from pecsynth.model import AttackScenario, BaseController, Detector, LtiPlant

KERNEL_TOL = 1e-8


@dataclass(frozen=True)
class TransformedPlant:
    """Plant in coordinates xbar = T x with T = [C; T2], T2 an orthonormal
    basis of ker(C). xbar_1 is the output-reconstructible part."""

    T: np.ndarray
    T2: np.ndarray
    A11: np.ndarray
    A12: np.ndarray
    A21: np.ndarray
    A22: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    H: np.ndarray

    @property
    def n_y(self) -> int:
        return self.A11.shape[0]

    @property
    def n_x(self) -> int:
        return self.T.shape[0]

    @property
    def Abar(self) -> np.ndarray:
        return np.block([[self.A11, self.A12], [self.A21, self.A22]])

    @property
    def Bbar(self) -> np.ndarray:
        return np.vstack([self.B1, self.B2])

    @property
    def Gbar(self) -> np.ndarray:
        return np.vstack([self.G1, self.G2])


@dataclass(frozen=True)
class PecRealization:
    """Realized controller with state rho_bar = rho + F xbar_1.

    F is stored through F = Theta K^T, K an orthonormal left-null basis of
    A12, so the kernel constraint F A12 = 0 holds by construction.
    """

    F: np.ndarray
    K: np.ndarray
    Theta: np.ndarray
    A_c: np.ndarray
    B_c: np.ndarray
    C_c: np.ndarray
    D_c: np.ndarray

    def controller(self) -> BaseController:
        """The realized matrices packaged as a controller driven by y."""
        return BaseController(self.A_c, self.B_c, self.C_c, self.D_c)


@dataclass(frozen=True)
class ClosedLoop:
    """zeta-dynamics  dzeta = A zeta + G w + H v + T d_y,  zeta = (xbar, rho)."""

    A: np.ndarray
    G: np.ndarray
    H: np.ndarray
    T: np.ndarray

    @property
    def n_zeta(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class ResidualDrivenLoop:
    """Closed loop driven by (w, v, r, ebar_1) after eliminating the attack
    signal, plus the attacked detector-error dynamics."""

    A: np.ndarray
    B_w: np.ndarray
    B_v: np.ndarray
    B_r: np.ndarray
    B_e: np.ndarray       # acts on the full ebar; only first n_y columns nonzero
    Ae: np.ndarray
    Ae_w: np.ndarray
    Ae_v: np.ndarray
    Ae_r: np.ndarray
    scenario: AttackScenario


def transform_plant(plant: LtiPlant) -> TransformedPlant:
    """Block decomposition of the plant in xbar = [C; T2] x coordinates."""
    C = plant.C
    n_x, n_y = plant.n_x, plant.n_y
    if mk.rank(C) < n_y:
        raise RankDeficientC("C must have full row rank")
    if n_x == n_y:
        T2 = np.zeros((0, n_x))
        T = C.copy()
    else:
        T2 = null_space(C).T
        T = np.vstack([C, T2])
    if abs(np.linalg.det(T)) <= 1e-9:
        raise RankDeficientC("transform T = [C; T2] is numerically singular")
    Tinv = np.linalg.inv(T)
    Abar = T @ plant.A @ Tinv
    Bbar = T @ plant.B
    Gbar = T @ plant.G
    back = Tinv @ Abar @ T
    if np.abs(back - plant.A).max() > 1e-9 * (1.0 + np.abs(plant.A).max()):
        raise DimensionMismatch("transform round-trip failed")
    return TransformedPlant(
        T=T,
        T2=T2,
        A11=Abar[:n_y, :n_y],
        A12=Abar[:n_y, n_y:],
        A21=Abar[n_y:, :n_y],
        A22=Abar[n_y:, n_y:],
        B1=Bbar[:n_y],
        B2=Bbar[n_y:],
        G1=Gbar[:n_y],
        G2=Gbar[n_y:],
        H=plant.H,
    )


def pec_dim(tp: TransformedPlant) -> int:
    """Dimension of the left null space of A12: the realization family's free
    directions per controller state. Equals n_y when A12 has no columns."""
    if tp.A12.shape[1] == 0:
        return tp.n_y
    return tp.n_y - mk.rank(tp.A12)


def kernel_basis(tp: TransformedPlant) -> np.ndarray:
    """Orthonormal K with K^T A12 = 0; F = Theta K^T ranges over admissible F."""
    return mk.left_null_basis(tp.A12)


def realize(base: BaseController, tp: TransformedPlant, Theta) -> PecRealization:
    """Controller realization for F = Theta K^T.

    The realized matrices reproduce the base controller's nominal closed-loop
    behavior exactly; Theta = 0 returns the base matrices unchanged.
    """
    K = kernel_basis(tp)
    Theta = mk.as_matrix(Theta, "Theta") if np.size(Theta) else np.zeros((base.n_rho, K.shape[1]))
    if Theta.shape != (base.n_rho, K.shape[1]):
        raise DimensionMismatch(
            f"Theta must be {base.n_rho} x {K.shape[1]}, got {Theta.shape}"
        )
    F = Theta @ K.T
    return _realize_from_F(base, tp, F, K, Theta)


def realize_from_F(base: BaseController, tp: TransformedPlant, F) -> PecRealization:
    """Realization from an explicit F; F must satisfy the kernel constraint."""
    F = mk.as_matrix(F, "F")
    K = kernel_basis(tp)
    if tp.A12.shape[1] and np.abs(F @ tp.A12).max() > KERNEL_TOL:
        raise KernelViolation("F does not annihilate the unmeasured coupling block")
    Theta = F @ K  # exact because rows of F lie in span(K)
    return _realize_from_F(base, tp, F, K, Theta)


def _realize_from_F(base, tp, F, K, Theta) -> PecRealization:
    if F.shape != (base.n_rho, tp.n_y):
        raise DimensionMismatch(f"F must be {base.n_rho} x {tp.n_y}, got {F.shape}")
    if tp.A12.shape[1] and np.abs(F @ tp.A12).max() > KERNEL_TOL:
        raise KernelViolation("F does not annihilate the unmeasured coupling block")
    A_c, B_c, C_c, D_c = base.A_c, base.B_c, base.C_c, base.D_c
    FB1 = F @ tp.B1
    A_cr = A_c + FB1 @ C_c
    B_cr = B_c - A_c @ F + F @ tp.A11 + FB1 @ D_c - FB1 @ C_c @ F
    C_cr = C_c
    D_cr = D_c - C_c @ F
    return PecRealization(F=F, K=K, Theta=Theta, A_c=A_cr, B_c=B_cr, C_c=C_cr, D_c=D_cr)


def _channel_blocks(base: BaseController, tp: TransformedPlant, F):
    """Shared factors of the disturbance/attack input maps, affine in F."""
    DF = base.D_c - base.C_c @ F
    BF = base.B_c - base.A_c @ F + F @ tp.A11
    return DF, BF


def assemble_closed_loop(base: BaseController, tp: TransformedPlant, F,
                         sc: AttackScenario) -> ClosedLoop:
    """Closed loop in zeta = (xbar_1, xbar_2, rho) coordinates.

    The state matrix does not depend on F; only the disturbance and attack
    channels do (affinely).
    """
    F = mk.as_matrix(F, "F") if np.size(F) else np.zeros((base.n_rho, tp.n_y))
    if tp.A12.shape[1] and np.abs(F @ tp.A12).max() > KERNEL_TOL:
        raise KernelViolation("F does not annihilate the unmeasured coupling block")
    n2 = tp.n_x - tp.n_y
    A_c, B_c, C_c, D_c = base.A_c, base.B_c, base.C_c, base.D_c
    A = np.block([
        [tp.A11 + tp.B1 @ D_c, tp.A12, tp.B1 @ C_c],
        [tp.A21 + tp.B2 @ D_c, tp.A22, tp.B2 @ C_c],
        [B_c, np.zeros((base.n_rho, n2)), A_c],
    ])
    if not mk.is_hurwitz(A):
        raise NotStable("nominal closed loop is not Hurwitz")
    DF, BF = _channel_blocks(base, tp, F)
    G = np.vstack([tp.G1, tp.G2, -F @ tp.G1])
    H = np.vstack([tp.B1 @ DF @ tp.H, tp.B2 @ DF @ tp.H, BF @ tp.H])
    T = np.vstack([tp.B1 @ DF @ sc.Gamma, tp.B2 @ DF @ sc.Gamma, BF @ sc.Gamma])
    return ClosedLoop(A=A, G=G, H=H, T=T)


def residual_driven_form(cl: ClosedLoop, det: Detector, tp: TransformedPlant,
                         sc: AttackScenario) -> ResidualDrivenLoop:
    """Eliminate the attack signal via the pseudoinverse identity
    d_y = Gamma^+ (r - ebar_1 - H v) and rewrite both the closed loop and the
    detector error dynamics as driven by (w, v, r, ebar_1)."""
    n_x, n_y = tp.n_x, tp.n_y
    Lbar = tp.T @ det.L
    P = sc.projector
    TGp = cl.T @ sc.Gamma_pinv
    B_v = cl.H - TGp @ tp.H
    B_r = TGp
    B_e = np.hstack([-TGp, np.zeros((cl.n_zeta, n_x - n_y))])
    Abar = tp.Abar
    corr = np.hstack([Lbar @ (np.eye(n_y) - P), np.zeros((n_x, n_x - n_y))])
    Ae = Abar - corr
    if not mk.is_hurwitz(Ae):
        raise DetectorUnstable(
            f"attacked error dynamics not Hurwitz for sensors {sc.label()}"
        )
    return ResidualDrivenLoop(
        A=cl.A,
        B_w=cl.G,
        B_v=B_v,
        B_r=B_r,
        B_e=B_e,
        Ae=Ae,
        Ae_w=tp.Gbar,
        Ae_v=-Lbar @ (np.eye(n_y) - P) @ tp.H,
        Ae_r=-Lbar @ P,
        scenario=sc,
    )
