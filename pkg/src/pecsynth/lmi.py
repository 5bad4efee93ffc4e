"""Generic block S-procedure matrix-inequality construction and a solver
contract returning certified solutions.

A `BlockLmi` owns named decision slots (symmetric matrices, general matrices,
scalar multipliers) and one or more constraint builders, each an affine map
from a slot assignment to a symmetric matrix required PSD. The same builder
code serves the solver (cvxpy expressions) and the independent certificate
check (numpy arrays); `bmat`/`vstack`/`hstack` below dispatch on operand type.

Solutions are accepted on the strength of the reassembled certificate, not
the solver's status label: an `optimal_inaccurate` point whose constraint
blocks re-verify at `feas_tol` is Optimal here, and a clean status without a
verifying certificate is NumericalTrouble.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import cvxpy as cp
import numpy as np

from pecsynth import matrixkit as mk
from pecsynth.errors import AllInfeasible, DimensionMismatch, Infeasible

_CVX = (cp.expressions.expression.Expression,)


def _any_cvx(rows):
    for r in rows:
        items = r if isinstance(r, (list, tuple)) else [r]
        for x in items:
            if isinstance(x, _CVX):
                return True
    return False


def bmat(rows):
    """Block matrix that works for numpy arrays and cvxpy expressions alike."""
    if _any_cvx(rows):
        return cp.bmat(rows)
    return np.block([list(r) for r in rows])


def vstack(blocks):
    blocks = [b for b in blocks if b.shape[0] > 0]
    return cp.vstack(blocks) if _any_cvx(blocks) else np.vstack(list(blocks))


def hstack(blocks):
    blocks = [b for b in blocks if b.shape[1] > 0]
    return cp.hstack(blocks) if _any_cvx(blocks) else np.hstack(list(blocks))


@dataclass(frozen=True)
class SlotSpec:
    """One decision variable of a BlockLmi."""

    name: str
    kind: str                  # 'sym' | 'mat' | 'scalar'
    shape: tuple = ()
    psd: bool = False          # sym slot constrained >> 0
    nonneg: bool = False       # scalar slot constrained >= 0

    def make_variable(self):
        if self.kind == "sym":
            return cp.Variable(self.shape, symmetric=True)
        if self.kind == "mat":
            return cp.Variable(self.shape)
        if self.kind == "scalar":
            return cp.Variable(nonneg=self.nonneg)
        raise DimensionMismatch(f"unknown slot kind {self.kind!r}")

    def validate(self, value):
        if self.kind == "scalar":
            v = float(value)
            if self.nonneg and v < -1e-12:
                raise DimensionMismatch(f"slot {self.name} must be nonnegative")
            return v
        M = mk.as_matrix(value, self.name)
        if M.shape != self.shape:
            raise DimensionMismatch(
                f"slot {self.name} expects shape {self.shape}, got {M.shape}"
            )
        if self.kind == "sym":
            M = mk.sym(M, name=self.name)
        return M


@dataclass(frozen=True)
class ObjectiveTerm:
    """Additive objective piece: minimize -log det(slot) or trace(W @ slot)."""

    kind: str                  # 'neg_log_det' | 'trace'
    slot: str
    weight: np.ndarray = None  # optional PSD weight for trace terms

    def expr(self, var):
        if self.kind == "neg_log_det":
            return -cp.log_det(var)
        if self.kind == "trace":
            if self.weight is None:
                return cp.trace(var)
            return cp.trace(cp.Constant(self.weight) @ var)
        raise DimensionMismatch(f"unknown objective kind {self.kind!r}")

    def value(self, val):
        if self.kind == "neg_log_det":
            return -mk.logdet_pd(val)
        if self.weight is None:
            return float(np.trace(val))
        return float(np.trace(self.weight @ val))


@dataclass(frozen=True)
class BlockLmi:
    """S-procedure program: minimize the objective over the slots subject to
    every constraint builder's matrix being PSD."""

    block_dims: Sequence[int]
    slots: Sequence[SlotSpec]
    constraints: Sequence[Callable[[Mapping[str, object]], object]]
    objective: Sequence[ObjectiveTerm]

    @property
    def dim(self) -> int:
        return int(sum(self.block_dims))

    def slot_map(self):
        return {s.name: s for s in self.slots}


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-7
    margin: float = 0.0        # PSD slack requested from the solver
    max_iters: int = 200
    solver: str = "CLARABEL"


@dataclass(frozen=True)
class SdpSolution:
    values: dict
    objective: float
    status: str                          # 'Optimal' | 'Infeasible' | 'NumericalTrouble'
    certificate_residual: float          # min over blocks of min eigenvalue

    @property
    def optimal(self) -> bool:
        return self.status == "Optimal"


def assemble(lmi: BlockLmi, assignment: Mapping[str, object], block: int = 0) -> np.ndarray:
    """Numerically assemble one constraint block at the given assignment."""
    specs = lmi.slot_map()
    missing = [n for n in specs if n not in assignment]
    if missing:
        raise DimensionMismatch(f"assignment missing slots {missing}")
    values = {n: specs[n].validate(v) for n, v in assignment.items() if n in specs}
    M = lmi.constraints[block](values)
    M = np.asarray(M, dtype=float)
    if M.shape != (lmi.dim, lmi.dim):
        raise DimensionMismatch(
            f"constraint {block} assembled to {M.shape}, expected {(lmi.dim, lmi.dim)}"
        )
    return 0.5 * (M + M.T)


def certificate_residual(lmi: BlockLmi, assignment: Mapping[str, object]) -> float:
    """Smallest eigenvalue across all reassembled constraint blocks."""
    return min(
        mk.min_eig_sym(assemble(lmi, assignment, i)) for i in range(len(lmi.constraints))
    )


def solve(lmi: BlockLmi, opts: SolverOptions = SolverOptions()) -> SdpSolution:
    """Solve the program; Optimal status implies the reassembled certificate
    passed at feas_tol and PSD-declared slots are PSD to the same tolerance.

    A requested margin tightens the problem, which can make near-boundary or
    structurally-margined programs fail; the margin is laddered down toward
    zero until a verified solution appears. The certificate gate makes the
    margin-free rung equally sound.
    """
    margins = [opts.margin]
    if opts.margin > 0:
        margins += [opts.margin / 10.0, 0.0]
    last = None
    for m in margins:
        sol = _solve_once(lmi, SolverOptions(feas_tol=opts.feas_tol, margin=m,
                                             max_iters=opts.max_iters, solver=opts.solver))
        if sol.optimal:
            return sol
        last = sol
    return last


def _solve_once(lmi: BlockLmi, opts: SolverOptions) -> SdpSolution:
    variables = {s.name: s.make_variable() for s in lmi.slots}
    cons = []
    n = lmi.dim
    for build in lmi.constraints:
        cons.append(build(variables) >> opts.margin * np.eye(n))
    for s in lmi.slots:
        if s.kind == "sym" and s.psd:
            cons.append(variables[s.name] >> 0)
    obj = cp.Minimize(sum(t.expr(variables[t.slot]) for t in lmi.objective))
    prob = cp.Problem(obj, cons)
    solver_kwargs = {}
    if opts.solver == "CLARABEL":
        # chordal decomposition of the PSD cone destabilizes these programs
        solver_kwargs["max_iter"] = opts.max_iters
        solver_kwargs["chordal_decomposition_enable"] = False
    try:
        with warnings.catch_warnings():
            # reduced-accuracy warnings are expected; the certificate decides
            warnings.simplefilter("ignore", UserWarning)
            prob.solve(solver=opts.solver, **solver_kwargs)
    except cp.SolverError:
        return SdpSolution({}, float("nan"), "NumericalTrouble", float("-inf"))
    if prob.status in ("infeasible", "infeasible_inaccurate"):
        return SdpSolution({}, float("inf"), "Infeasible", float("-inf"))
    if prob.status not in ("optimal", "optimal_inaccurate") or any(
        variables[s.name].value is None for s in lmi.slots
    ):
        return SdpSolution({}, float("nan"), "NumericalTrouble", float("-inf"))

    values = {}
    for s in lmi.slots:
        v = variables[s.name].value
        if s.kind == "scalar":
            values[s.name] = max(float(v), 0.0) if s.nonneg else float(v)
        elif s.kind == "sym":
            values[s.name] = 0.5 * (np.asarray(v) + np.asarray(v).T)
        else:
            values[s.name] = np.asarray(v, dtype=float)

    resid = certificate_residual(lmi, values)
    ok = resid >= -opts.feas_tol
    for s in lmi.slots:
        if s.kind == "sym" and s.psd:
            ok = ok and mk.min_eig_sym(values[s.name]) >= -opts.feas_tol
    for t in lmi.objective:
        if t.kind == "neg_log_det":
            ok = ok and mk.min_eig_sym(values[t.slot]) > 0
    if not ok:
        return SdpSolution(values, float("nan"), "NumericalTrouble", resid)
    objective = sum(t.value(values[t.slot]) for t in lmi.objective)
    return SdpSolution(values, float(objective), "Optimal", resid)


def grid_search(build: Callable[[float], BlockLmi], grid, opts: SolverOptions = SolverOptions()):
    """Solve one program per grid value; return (alpha, solution) with the
    smallest objective among Optimal solves, ties toward the smaller alpha."""
    grid = list(grid)
    if not grid:
        raise AllInfeasible("empty grid")
    if any(a < 0 for a in grid):
        raise Infeasible("grid values must be nonnegative")
    best = None
    for alpha in sorted(grid):
        sol = solve(build(alpha), opts)
        if sol.optimal and (best is None or sol.objective < best[1].objective - 1e-12):
            best = (alpha, sol)
    if best is None:
        raise AllInfeasible(f"no feasible grid point among {len(grid)} values")
    return best


def default_alpha_grid(lo: float = 1e-2, hi: float = 1e1, count: int = 30) -> np.ndarray:
    """Log-spaced multiplier grid."""
    return np.geomspace(lo, hi, count)
