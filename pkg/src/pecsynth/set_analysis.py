"""The two reachable-set analysis programs: the attack-free residual
ellipsoid (joint shape of the estimation-error and residual sets) and the
detector's error ellipsoid under a stealthy attack on a fixed sensor subset.

Both are S-procedure log-det programs solved on exactly equivalent
normalized data: disturbance blocks are congruence-scaled to unit balls and
the error state is balanced by a per-direction reach proxy, which shifts the
log-det objective by a known constant and leaves multipliers untouched. The
certificates store the normalized assignment so they can be independently
reassembled and eigenvalue-checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from pecsynth import lmi
from pecsynth import matrixkit as mk
from pecsynth.errors import Infeasible
from pecsynth.lmi import BlockLmi, ObjectiveTerm, SlotSpec, SolverOptions, bmat
from pecsynth.model import DisturbanceBounds, LtiPlant
from pecsynth.realization import ResidualDrivenLoop

DEFAULT_ALPHA_E_GRID = np.geomspace(1e-2, 1e1, 24)
DEFAULT_ALPHA_R_GRID = np.linspace(0.05, 0.95, 13)
DEFAULT_ERROR_GRID = np.geomspace(1e-3, 1.0, 30)


@dataclass(frozen=True)
class EllipsoidCertificate:
    """Shape matrix of {z : z^T P z <= 1} together with the S-procedure
    multipliers and the certificate residual that re-verified it."""

    P: np.ndarray
    alpha: tuple
    multipliers: dict
    objective: float
    program: str
    residual: float
    scenario: str = ""
    assignment: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        P = mk.sym(self.P, name="P")
        if mk.min_eig_sym(P) <= 0:
            raise Infeasible("certificate shape matrix must be positive definite")
        if self.residual < -1e-6:
            raise Infeasible(f"certificate residual {self.residual} below -1e-6")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))

    @property
    def neg_log_det(self) -> float:
        return -mk.logdet_pd(self.P)


def inv_sqrt_pd(W) -> np.ndarray:
    """W^{-1/2} of a symmetric positive definite matrix."""
    S = mk.sym(W)
    vals, vecs = np.linalg.eigh(S)
    if vals[0] <= 0:
        raise Infeasible("matrix must be positive definite")
    return vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T


def balance_scales(A, channels) -> np.ndarray:
    """Per-direction reach proxy |A^-1| . sum_i |B_i| 1 for unit-ball inputs,
    floored at 1e-3 of the largest entry. Pure preconditioner."""
    n = A.shape[0]
    f = np.zeros(n)
    for B in channels:
        if B.size:
            f += np.abs(B).sum(axis=1)
    if not f.any():
        return np.ones(n)
    d = np.abs(np.linalg.solve(A, f))
    return np.maximum(d, 1e-3 * max(d.max(), 1e-12))


def _zeros(shape):
    return np.zeros(shape)


def _embed(n, sl, M):
    S = np.zeros((n, n))
    S[sl, sl] = M
    return S


def _invariant_lmi(A, channels, alpha, extra_slots=(), extra_objective=(),
                   second_constraint=None):
    """Build the invariant-ellipsoid program for dz = A z + sum_i B_i u_i with
    u_i in unit balls. `channels` is a list of (beta_name, B) with B already
    normalized. Optional second constraint reuses the same slots.

    Returns (BlockLmi, dims) where dims is the kappa partition.
    """
    n = A.shape[0]
    chans = [(name, B) for name, B in channels if B.shape[1] > 0]
    dims = [n] + [B.shape[1] for _, B in chans] + [1]
    total = sum(dims)
    offs = np.cumsum([0] + dims)

    S_mats = []
    for i, (_, B) in enumerate(chans):
        m = B.shape[1]
        S = np.zeros((total, total))
        S[offs[i + 1]:offs[i + 2], offs[i + 1]:offs[i + 2]] = -np.eye(m)
        S[-1, -1] = 1.0
        S_mats.append(S)

    def build(values):
        P = values["P"]
        top = [A.T @ P + P @ A] + [P @ B for _, B in chans] + [_zeros((n, 1))]
        rows = [top]
        for i, (_, B) in enumerate(chans):
            m = B.shape[1]
            row = [B.T @ P]
            for j, (_, Bj) in enumerate(chans):
                row.append(_zeros((m, Bj.shape[1])))
            row.append(_zeros((m, 1)))
            rows.append(row)
        last = [_zeros((1, n))] + [_zeros((1, B.shape[1])) for _, B in chans] + [_zeros((1, 1))]
        rows.append(last)
        M = bmat(rows)
        Nrows = [[P] + [_zeros((n, B.shape[1])) for _, B in chans] + [_zeros((n, 1))]]
        for i, (_, B) in enumerate(chans):
            m = B.shape[1]
            Nrows.append([_zeros((m, n))] + [_zeros((m, Bj.shape[1])) for _, Bj in chans]
                         + [_zeros((m, 1))])
        Nrows.append([_zeros((1, n))] + [_zeros((1, B.shape[1])) for _, B in chans]
                     + [-np.ones((1, 1))])
        N = bmat(Nrows)
        out = -M - alpha * N
        for i, (name, _) in enumerate(chans):
            out = out - values[name] * S_mats[i]
        return out

    slots = [SlotSpec("P", "sym", (n, n))]
    slots += [SlotSpec(name, "scalar", nonneg=True) for name, _ in chans]
    slots += list(extra_slots)
    constraints = [build]
    if second_constraint is not None:
        constraints.append(second_constraint(dims, offs, chans))
    objective = [ObjectiveTerm("neg_log_det", "P")] + list(extra_objective)
    return BlockLmi(dims, slots, constraints, objective), dims


def residual_lmi(plant: LtiPlant, bounds: DisturbanceBounds, L, alpha_e, alpha_r):
    """Joint program for the attack-free error ellipsoid and the residual
    alarm ellipsoid; kappa partition [n_x, n_w, n_v, 1]."""
    L = mk.as_matrix(L, "L")
    A_e = plant.A - L @ plant.C
    if not mk.is_hurwitz(A_e):
        raise Infeasible("A - LC must be Hurwitz")
    Wwi = inv_sqrt_pd(bounds.W_w) if bounds.W_w.size else np.zeros((0, 0))
    Wvi = inv_sqrt_pd(bounds.W_v) if bounds.W_v.size else np.zeros((0, 0))
    Bw = plant.G @ Wwi
    Bv = (-L @ plant.H) @ Wvi
    d = balance_scales(A_e, [Bw, Bv])
    D = np.diag(d)
    Di = np.diag(1.0 / d)
    Az = Di @ A_e @ D
    chans = [("beta_e_w", Di @ Bw), ("beta_e_v", Di @ Bv)]

    n_y = plant.n_y
    CD = plant.C @ D
    HV = plant.H @ Wvi

    def second(dims, offs, live):
        n = dims[0]
        total = sum(dims)
        v_off = None
        for i, (name, B) in enumerate(live):
            if name == "beta_e_v":
                v_off = (offs[i + 1], offs[i + 2])
        S_v = np.zeros((total, total))
        if v_off is not None:
            S_v[v_off[0]:v_off[1], v_off[0]:v_off[1]] = -np.eye(v_off[1] - v_off[0])
        S_v[-1, -1] = 1.0

        def build2(values):
            P = values["P"]
            Pi = values["Pi"]
            rows = [[CD.T @ Pi @ CD] + [_zeros((n, B.shape[1])) if name != "beta_e_v"
                                        else CD.T @ Pi @ HV for name, B in live]
                    + [_zeros((n, 1))]]
            for name, B in live:
                m = B.shape[1]
                first = HV.T @ Pi @ CD if name == "beta_e_v" else _zeros((m, n))
                row = [first]
                for name2, B2 in live:
                    if name == "beta_e_v" and name2 == "beta_e_v":
                        row.append(HV.T @ Pi @ HV)
                    else:
                        row.append(_zeros((m, B2.shape[1])))
                row.append(_zeros((m, 1)))
                rows.append(row)
            rows.append([_zeros((1, n))] + [_zeros((1, B.shape[1])) for _, B in live]
                        + [-np.ones((1, 1))])
            Mr = bmat(rows)
            Nrows = [[P] + [_zeros((n, B.shape[1])) for _, B in live] + [_zeros((n, 1))]]
            for _, B in live:
                m = B.shape[1]
                Nrows.append([_zeros((m, n))] + [_zeros((m, B2.shape[1])) for _, B2 in live]
                             + [_zeros((m, 1))])
            Nrows.append([_zeros((1, n))] + [_zeros((1, B.shape[1])) for _, B in live]
                         + [-np.ones((1, 1))])
            N = bmat(Nrows)
            return -Mr + alpha_r * N - values["beta_r_v"] * S_v

        return build2

    extra = [
        SlotSpec("Pi", "sym", (n_y, n_y)),
        SlotSpec("beta_r_v", "scalar", nonneg=True),
    ]
    prog, dims = _invariant_lmi(
        Az, chans, alpha_e,
        extra_slots=extra,
        extra_objective=[ObjectiveTerm("neg_log_det", "Pi")],
        second_constraint=second,
    )
    info = {"D": D, "Di": Di, "balance": d}
    return prog, info


def residual_set(plant: LtiPlant, bounds: DisturbanceBounds, L, alpha_e: float,
                 alpha_r: float, opts: SolverOptions = SolverOptions()):
    """Solve the joint program at one (alpha_e, alpha_r) point.

    Returns (certificate for the error-set shape P_e, residual shape Pi).
    """
    prog, info = residual_lmi(plant, bounds, L, alpha_e, alpha_r)
    sol = lmi.solve(prog, opts)
    if not sol.optimal:
        raise Infeasible(f"residual-set program {sol.status} at alpha=({alpha_e}, {alpha_r})")
    Di = info["Di"]
    P_e = Di @ sol.values["P"] @ Di
    Pi = sol.values["Pi"]
    objective = -mk.logdet_pd(P_e) - mk.logdet_pd(Pi)
    cert = EllipsoidCertificate(
        P=P_e,
        alpha=(alpha_e, alpha_r),
        multipliers={k: v for k, v in sol.values.items() if np.isscalar(v)},
        objective=objective,
        program="ResidualSet",
        residual=sol.certificate_residual,
        assignment=sol.values,
    )
    return cert, Pi


def residual_set_search(plant: LtiPlant, bounds: DisturbanceBounds, L,
                        alpha_e_grid=None, alpha_r_grid=None,
                        opts: SolverOptions = SolverOptions()):
    """2-D grid search over (alpha_e, alpha_r); best joint objective wins."""
    ae = DEFAULT_ALPHA_E_GRID if alpha_e_grid is None else np.asarray(alpha_e_grid, float)
    ar = DEFAULT_ALPHA_R_GRID if alpha_r_grid is None else np.asarray(alpha_r_grid, float)
    best = None
    for a_e in ae:
        for a_r in ar:
            try:
                cert, Pi = residual_set(plant, bounds, L, float(a_e), float(a_r), opts)
            except Infeasible:
                continue
            if best is None or cert.objective < best[0].objective - 1e-12:
                best = (cert, Pi)
    if best is None:
        raise Infeasible("every (alpha_e, alpha_r) grid point was infeasible")
    return best


def error_lmi(rd: ResidualDrivenLoop, bounds: DisturbanceBounds, Pi, alpha):
    """Detector-error program under stealthy attack; kappa partition
    [n_x, n_w, n_v, n_y, 1]."""
    Pi = mk.sym(Pi, name="Pi")
    Wwi = inv_sqrt_pd(bounds.W_w) if bounds.W_w.size else np.zeros((0, 0))
    Wvi = inv_sqrt_pd(bounds.W_v) if bounds.W_v.size else np.zeros((0, 0))
    Pii = inv_sqrt_pd(Pi)
    Bw = rd.Ae_w @ Wwi
    Bv = rd.Ae_v @ Wvi
    Br = rd.Ae_r @ Pii
    d = balance_scales(rd.Ae, [Bw, Bv, Br])
    D = np.diag(d)
    Di = np.diag(1.0 / d)
    Az = Di @ rd.Ae @ D
    chans = [("beta_e_w", Di @ Bw), ("beta_e_v", Di @ Bv), ("beta_e_r", Di @ Br)]
    prog, dims = _invariant_lmi(Az, chans, alpha)
    return prog, {"D": D, "Di": Di, "balance": d}


def detector_error_set(rd: ResidualDrivenLoop, bounds: DisturbanceBounds, Pi,
                       alpha_e: float, opts: SolverOptions = SolverOptions()) -> EllipsoidCertificate:
    """Error ellipsoid under stealthy attack at one alpha value."""
    prog, info = error_lmi(rd, bounds, Pi, alpha_e)
    sol = lmi.solve(prog, opts)
    if not sol.optimal:
        raise Infeasible(f"detector-error program {sol.status} at alpha={alpha_e}")
    Di = info["Di"]
    P = Di @ sol.values["P"] @ Di
    return EllipsoidCertificate(
        P=P,
        alpha=(alpha_e,),
        multipliers={k: v for k, v in sol.values.items() if np.isscalar(v)},
        objective=-mk.logdet_pd(P),
        program="DetectorErrorSet",
        residual=sol.certificate_residual,
        scenario=rd.scenario.label(),
        assignment=sol.values,
    )


def detector_error_set_search(rd: ResidualDrivenLoop, bounds: DisturbanceBounds, Pi,
                              grid=None, opts: SolverOptions = SolverOptions()) -> EllipsoidCertificate:
    """Grid search over alpha; smallest -log det(P) among feasible points."""
    grid = DEFAULT_ERROR_GRID if grid is None else np.asarray(grid, dtype=float)
    best = None
    for a in grid:
        try:
            cert = detector_error_set(rd, bounds, Pi, float(a), opts)
        except Infeasible:
            continue
        if best is None or cert.objective < best.objective - 1e-12:
            best = cert
    if best is None:
        raise Infeasible("every alpha grid point was infeasible")
    return best
