"""Trace-minimization program for the optimal controller realization: find F
so the closed-loop reachable-set ellipsoid under stealthy attacks is the
smallest certified one, alongside the F = 0 baseline for comparison.

The congruence-transformed inequality is jointly affine in (Y, F, beta), so
when the free-F solve at some grid point fails certification while the F = 0
solve passed, a convex blend toward the F = 0 point restores the certificate
at negligible objective cost. The F = 0 solution also always remains a
candidate, which enforces trace(Y*) <= trace(Y_baseline) structurally.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from pecsynth import lmi
from pecsynth import matrixkit as mk
from pecsynth.errors import CertificateMismatch, Infeasible, NotStable
from pecsynth.lmi import BlockLmi, ObjectiveTerm, SlotSpec, SolverOptions, bmat, hstack, vstack
from pecsynth.model import AttackScenario, BaseController, Detector, DisturbanceBounds
from pecsynth.realization import TransformedPlant, assemble_closed_loop, kernel_basis
from pecsynth.set_analysis import EllipsoidCertificate, balance_scales, inv_sqrt_pd

DEFAULT_SYNTH_GRID = np.geomspace(1e-3, 1.0, 30)
SYNTH_OPTS = SolverOptions(margin=1e-4)


@dataclass(frozen=True)
class SynthesisResult:
    """Optimal realization matrix with its closed-loop ellipsoid certificate
    and the F = 0 baseline solved on the same grid."""

    F_star: np.ndarray
    Y: np.ndarray
    P_zeta: np.ndarray
    trace_value: float
    alpha: float
    multipliers: dict
    baseline_trace: float
    baseline_alpha: float
    scenario: str
    residual: float

    @property
    def improvement(self) -> float:
        return self.baseline_trace - self.trace_value


def _theorem_lmi(base: BaseController, tp: TransformedPlant, bounds: DisturbanceBounds,
                 Pe_bar, Pi, sc: AttackScenario, alpha: float, A_cl, balance,
                 fix_F_zero: bool):
    """Normalized congruence-form program; kappa partition
    [n_zeta, n_w, n_v, n_x, n_y, 1]."""
    n_x, n_y, n_rho = tp.n_x, tp.n_y, base.n_rho
    n_z = n_x + n_rho
    n2 = n_x - n_y
    K = kernel_basis(tp)
    p = K.shape[1]
    proj = sc.projector
    Wwi = inv_sqrt_pd(bounds.W_w) if bounds.W_w.size else np.zeros((0, 0))
    Wvi = inv_sqrt_pd(bounds.W_v) if bounds.W_v.size else np.zeros((0, 0))
    Pei = inv_sqrt_pd(Pe_bar)
    Pii = inv_sqrt_pd(Pi)
    D = np.diag(balance)
    Di = np.diag(1.0 / balance)
    Az = Di @ A_cl @ D

    n_w = Wwi.shape[0]
    n_v = Wvi.shape[0]
    seg = [("beta_w", n_w, Wwi), ("beta_v", n_v, Wvi), ("beta_e", n_x, Pei), ("beta_r", n_y, Pii)]
    seg = [(name, dim, R) for name, dim, R in seg if dim > 0]
    dims = [n_z] + [dim for _, dim, _ in seg] + [1]
    total = sum(dims)
    offs = np.cumsum([0] + dims)
    S_mats = {}
    for i, (name, dim, _) in enumerate(seg):
        S = np.zeros((total, total))
        S[offs[i + 1]:offs[i + 2], offs[i + 1]:offs[i + 2]] = -np.eye(dim)
        S[-1, -1] = 1.0
        S_mats[name] = S

    A_c, B_c, C_c, D_c = base.A_c, base.B_c, base.C_c, base.D_c
    H = tp.H

    def channels(F):
        """Normalized input maps of the residual-driven loop, affine in F."""
        DF = D_c - C_c @ F
        BF = B_c - A_c @ F + F @ tp.A11
        Gz = Di @ vstack([tp.G1, tp.G2, -F @ tp.G1]) @ Wwi
        mid = [tp.B2 @ DF] if n2 else []
        pat = vstack([tp.B1 @ DF] + mid + [BF])
        TGp = pat @ proj
        Hv = Di @ (pat @ H - TGp @ H) @ Wvi
        Ee = Di @ (-hstack([TGp, np.zeros((n_z, n2))]) if n2 else -TGp) @ Pei
        Rr = Di @ TGp @ Pii
        return {"beta_w": Gz, "beta_v": Hv, "beta_e": Ee, "beta_r": Rr}

    def build(values):
        Y = values["Y"]
        F = np.zeros((n_rho, n_y)) if fix_F_zero else values["Theta"] @ K.T
        ch = channels(F)
        AY = Az @ Y
        top = [AY + AY.T] + [ch[name] for name, _, _ in seg] + [np.zeros((n_z, 1))]
        rows = [top]
        for i, (name, dim, _) in enumerate(seg):
            row = [ch[name].T]
            for name2, dim2, _ in seg:
                row.append(np.zeros((dim, dim2)))
            row.append(np.zeros((dim, 1)))
            rows.append(row)
        rows.append([np.zeros((1, n_z))] + [np.zeros((1, dim)) for _, dim, _ in seg]
                    + [np.zeros((1, 1))])
        M = bmat(rows)
        Nrows = [[Y] + [np.zeros((n_z, dim)) for _, dim, _ in seg] + [np.zeros((n_z, 1))]]
        for name, dim, _ in seg:
            Nrows.append([np.zeros((dim, n_z))] + [np.zeros((dim, d2)) for _, d2, _ in seg]
                         + [np.zeros((dim, 1))])
        Nrows.append([np.zeros((1, n_z))] + [np.zeros((1, dim)) for _, dim, _ in seg]
                     + [-np.ones((1, 1))])
        N = bmat(Nrows)
        out = -M - alpha * N
        for name, _, _ in seg:
            out = out - values[name] * S_mats[name]
        return out

    slots = [SlotSpec("Y", "sym", (n_z, n_z), psd=True)]
    if not fix_F_zero:
        slots.append(SlotSpec("Theta", "mat", (n_rho, p)))
    slots += [SlotSpec(name, "scalar", nonneg=True) for name, _, _ in seg]
    objective = [ObjectiveTerm("trace", "Y", weight=D @ D)]
    prog = BlockLmi(dims, slots, [build], objective)
    return prog, K, D, Di


def _balance_for(base, tp, bounds, Pe_bar, Pi, sc, A_cl):
    """Reach-proxy balance from the F = 0 channels."""
    n2 = tp.n_x - tp.n_y
    n_z = tp.n_x + base.n_rho
    Wwi = inv_sqrt_pd(bounds.W_w) if bounds.W_w.size else np.zeros((0, 0))
    Wvi = inv_sqrt_pd(bounds.W_v) if bounds.W_v.size else np.zeros((0, 0))
    Pei = inv_sqrt_pd(Pe_bar)
    Pii = inv_sqrt_pd(Pi)
    pat = np.vstack([tp.B1 @ base.D_c, tp.B2 @ base.D_c, base.B_c])
    TGp = pat @ sc.projector
    Gz = np.vstack([tp.G1, tp.G2, np.zeros((base.n_rho, tp.G1.shape[1]))]) @ Wwi
    Hv = (pat @ tp.H - TGp @ tp.H) @ Wvi
    Ee = (np.hstack([-TGp, np.zeros((n_z, n2))]) if n2 else -TGp) @ Pei
    Rr = TGp @ Pii
    return balance_scales(A_cl, [Gz, Hv, Ee, Rr])


def _extract_Pe(Pe_bar, sc):
    if isinstance(Pe_bar, EllipsoidCertificate):
        if Pe_bar.scenario and Pe_bar.scenario != sc.label():
            raise CertificateMismatch(
                f"error-set certificate is for sensors {Pe_bar.scenario}, not {sc.label()}"
            )
        return Pe_bar.P
    return mk.sym(Pe_bar, name="Pe_bar")


def _polish_regularized(prog, Wobj, lam, opts):
    """Re-solve with a small elementwise-L1 penalty on Theta.

    The trace objective is nearly flat in sensor directions the loop ignores,
    so the interior-point solution parks small arbitrary values there; an L1
    penalty calibrated well below the improvement-per-magnitude of the useful
    columns zeroes the flat ones exactly. Returns verified slot values or None.
    """
    import cvxpy as cp

    variables = {s.name: s.make_variable() for s in prog.slots}
    if "Theta" not in variables:
        return None
    cons = [prog.constraints[0](variables) >> opts.margin * np.eye(prog.dim)]
    for s in prog.slots:
        if s.kind == "sym" and s.psd:
            cons.append(variables[s.name] >> 0)
    obj = cp.trace(cp.Constant(Wobj) @ variables["Y"]) + lam * cp.sum(cp.abs(variables["Theta"]))
    prob = cp.Problem(cp.Minimize(obj), cons)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            prob.solve(solver="CLARABEL", chordal_decomposition_enable=False)
    except cp.SolverError:
        return None
    if prob.status not in ("optimal", "optimal_inaccurate"):
        return None
    values = {}
    for s in prog.slots:
        v = variables[s.name].value
        if v is None:
            return None
        if s.kind == "scalar":
            values[s.name] = max(float(v), 0.0) if s.nonneg else float(v)
        elif s.kind == "sym":
            values[s.name] = 0.5 * (np.asarray(v) + np.asarray(v).T)
        else:
            values[s.name] = np.asarray(v, dtype=float)
    if lmi.certificate_residual(prog, values) < -opts.feas_tol:
        return None
    return values


def _blend(prog, free_values, base_values, feas_tol):
    """Convex combination toward the certified F = 0 point; smallest mixing
    weight whose certificate passes wins."""
    keys = set(free_values)
    base_full = dict(base_values)
    if "Theta" in keys and "Theta" not in base_full:
        base_full["Theta"] = np.zeros_like(free_values["Theta"])
    for gamma in (1e-4, 1e-3, 1e-2, 0.1, 0.3, 1.0):
        mixed = {k: (1 - gamma) * free_values[k] + gamma * base_full[k] for k in keys}
        if lmi.certificate_residual(prog, mixed) >= -feas_tol:
            return mixed
    return None


def synthesize(base: BaseController, tp: TransformedPlant, det: Detector,
               bounds: DisturbanceBounds, Pe_bar, Pi, sc: AttackScenario,
               alpha_grid=None, opts: SolverOptions = SYNTH_OPTS) -> SynthesisResult:
    """Grid search over alpha for the realization minimizing trace(Y), with
    the F = 0 baseline solved on the same grid for an apples-to-apples
    comparison."""
    Pe_mat = _extract_Pe(Pe_bar, sc)
    Pi = mk.sym(Pi, name="Pi")
    grid = DEFAULT_SYNTH_GRID if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    cl0 = assemble_closed_loop(base, tp, np.zeros((base.n_rho, tp.n_y)), sc)
    A_cl = cl0.A
    if not mk.is_hurwitz(A_cl):
        raise NotStable("closed loop is not Hurwitz")
    bal = _balance_for(base, tp, bounds, Pe_mat, Pi, sc, A_cl)

    best_base = None   # (trace, alpha, values, residual)
    best_free = None
    for alpha in grid:
        prog0, K, D, Di = _theorem_lmi(base, tp, bounds, Pe_mat, Pi, sc,
                                       float(alpha), A_cl, bal, fix_F_zero=True)
        sol0 = lmi.solve(prog0, opts)
        cand0 = None
        if sol0.optimal:
            cand0 = (sol0.objective, float(alpha), sol0.values, sol0.certificate_residual)
            if best_base is None or sol0.objective < best_base[0] - 1e-12:
                best_base = cand0

        progF, K, D, Di = _theorem_lmi(base, tp, bounds, Pe_mat, Pi, sc,
                                       float(alpha), A_cl, bal, fix_F_zero=False)
        solF = lmi.solve(progF, opts)
        candF = None
        if solF.optimal:
            candF = (solF.objective, float(alpha), solF.values, solF.certificate_residual)
        elif solF.values and cand0 is not None:
            mixed = _blend(progF, solF.values, cand0[2], opts.feas_tol)
            if mixed is not None:
                tr = float(np.trace(D @ mixed["Y"] @ D))
                candF = (tr, float(alpha), mixed,
                         lmi.certificate_residual(progF, mixed))
        if candF is not None and (best_free is None or candF[0] < best_free[0] - 1e-12):
            best_free = candF

    if best_base is None:
        raise Infeasible("baseline (F = 0) infeasible on the whole alpha grid")
    # F = 0 stays a candidate for the optimized problem
    if best_free is None or best_base[0] < best_free[0]:
        vals = dict(best_base[2])
        vals["Theta"] = np.zeros((base.n_rho, kernel_basis(tp).shape[1]))
        best_free = (best_base[0], best_base[1], vals, best_base[3])

    # pin the flat directions of the optimal face to the sparsest F
    trF, alphaF, valsF, residF = best_free
    gap = max(best_base[0] - trF, 0.0)
    theta_l1 = float(np.sum(np.abs(valsF.get("Theta", 0.0)))) + 1e-12
    lam = 0.25 * max(gap, 1e-9) / theta_l1
    progP, _, Dp, _ = _theorem_lmi(base, tp, bounds, Pe_mat, Pi, sc,
                                   alphaF, A_cl, bal, fix_F_zero=False)
    polished = _polish_regularized(progP, Dp @ Dp, lam, opts)
    if polished is not None:
        tr_pol = float(np.trace(Dp @ mk.sym(polished["Y"]) @ Dp))
        if tr_pol <= min(best_base[0], trF + 0.4 * max(gap, 1e-9)) + 1e-9:
            best_free = (tr_pol, alphaF, polished,
                         lmi.certificate_residual(progP, polished))

    K = kernel_basis(tp)
    D = np.diag(bal)
    trF, alphaF, valsF, residF = best_free
    Y = D @ mk.sym(valsF["Y"]) @ D
    F_star = np.asarray(valsF.get("Theta", np.zeros((base.n_rho, K.shape[1])))) @ K.T
    P_zeta = np.linalg.inv(Y)
    return SynthesisResult(
        F_star=F_star,
        Y=Y,
        P_zeta=0.5 * (P_zeta + P_zeta.T),
        trace_value=float(trF),
        alpha=alphaF,
        multipliers={k: v for k, v in valsF.items() if np.isscalar(v)},
        baseline_trace=float(best_base[0]),
        baseline_alpha=float(best_base[1]),
        scenario=sc.label(),
        residual=float(residF),
    )


def baseline_trace(base: BaseController, tp: TransformedPlant, det: Detector,
                   bounds: DisturbanceBounds, Pe_bar, Pi, sc: AttackScenario,
                   alpha_grid=None, opts: SolverOptions = SYNTH_OPTS) -> float:
    """trace(Y) of the F = 0 loop on the same grid the synthesis uses."""
    Pe_mat = _extract_Pe(Pe_bar, sc)
    Pi = mk.sym(Pi, name="Pi")
    grid = DEFAULT_SYNTH_GRID if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    cl0 = assemble_closed_loop(base, tp, np.zeros((base.n_rho, tp.n_y)), sc)
    bal = _balance_for(base, tp, bounds, Pe_mat, Pi, sc, cl0.A)
    best = None
    for alpha in grid:
        prog, K, D, Di = _theorem_lmi(base, tp, bounds, Pe_mat, Pi, sc,
                                      float(alpha), cl0.A, bal, fix_F_zero=True)
        sol = lmi.solve(prog, opts)
        if sol.optimal and (best is None or sol.objective < best - 1e-12):
            best = sol.objective
    if best is None:
        raise Infeasible("baseline (F = 0) infeasible on the whole alpha grid")
    return float(best)
