"""Generic LP layer: representation, solvers, KKT certificate."""
from __future__ import annotations

import importlib.util

import numpy as np
import scipy.sparse as sp

from .core import (EQ, GE, LE, Infeasible, IterationLimit, KktReport, LinearProgram,
                   LpBuilder, LpError, LpSolution, SolverOptions, Status, Unbounded,
                   check_kkt, dump_lp, parse_lp_dump, reduced_costs)
from .simplex import simplex_solve

__all__ = [
    "EQ", "GE", "LE", "Infeasible", "IterationLimit", "KktReport", "LinearProgram",
    "LpBuilder", "LpError", "LpSolution", "SolverOptions", "Status", "Unbounded",
    "check_kkt", "dump_lp", "parse_lp_dump", "reduced_costs", "solve",
]


def _highs_solve(lp: LinearProgram, opts: SolverOptions) -> LpSolution:
    from scipy.optimize import linprog

    A = lp.A.tocsr()
    eq = np.flatnonzero(lp.sense == EQ)
    le = np.flatnonzero(lp.sense == LE)
    ge = np.flatnonzero(lp.sense == GE)
    ub_rows = np.concatenate([le, ge])
    A_ub = sp.vstack([A[le], -A[ge]], format="csr") if ub_rows.size else None
    b_ub = np.concatenate([lp.b[le], -lp.b[ge]]) if ub_rows.size else None
    A_eq = A[eq] if eq.size else None
    b_eq = lp.b[eq] if eq.size else None
    bounds = np.column_stack([lp.lb, lp.ub])
    bounds = [(None if not np.isfinite(l) else l, None if not np.isfinite(u) else u)
              for l, u in bounds]
    options = {"primal_feasibility_tolerance": min(opts.feas_tol, 1e-9),
               "dual_feasibility_tolerance": min(opts.opt_tol, 1e-9)}
    if opts.max_iter:
        options["maxiter"] = opts.max_iter
    res = linprog(lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ds", options=options)
    status = {0: Status.OPTIMAL, 1: Status.ITERATION_LIMIT, 2: Status.INFEASIBLE,
              3: Status.UNBOUNDED}.get(res.status, Status.INFEASIBLE)
    y = np.zeros(lp.n_rows)
    if status is Status.OPTIMAL:
        if eq.size:
            y[eq] = res.eqlin.marginals
        if ub_rows.size:
            m = res.ineqlin.marginals
            y[le] = m[:le.size]
            y[ge] = -m[le.size:]
        x = np.asarray(res.x, dtype=float)
        obj = float(lp.c @ x)
    else:
        x = np.full(lp.n_vars, np.nan)
        obj = float("nan")
    return LpSolution(status, x, y, obj, int(getattr(res, "nit", 0) or 0), "highs")


def _ipm_solve(lp: LinearProgram, opts: SolverOptions) -> LpSolution:
    """HiGHS interior point without crossover.

    Much faster than simplex on large, highly degenerate extensive forms.  The
    returned point is interior to the optimal face (no vertex), accurate to
    the solver tolerances.
    """
    import highspy

    A = lp.A.tocsc()
    lo = np.where(lp.sense == LE, -np.inf, lp.b)
    hi = np.where(lp.sense == GE, np.inf, lp.b)
    model = highspy.HighsLp()
    model.num_col_, model.num_row_ = lp.n_vars, lp.n_rows
    model.col_cost_ = lp.c
    model.col_lower_, model.col_upper_ = lp.lb, lp.ub
    model.row_lower_, model.row_upper_ = lo, hi
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_ = A.indptr
    model.a_matrix_.index_ = A.indices
    model.a_matrix_.value_ = A.data
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("solver", "ipm")
    h.setOptionValue("run_crossover", "off")
    h.setOptionValue("primal_feasibility_tolerance", min(opts.feas_tol, 1e-9))
    h.setOptionValue("dual_feasibility_tolerance", min(opts.opt_tol, 1e-9))
    h.setOptionValue("ipm_optimality_tolerance", 1e-10)
    if opts.max_iter:
        h.setOptionValue("ipm_iteration_limit", opts.max_iter)
    h.passModel(model)
    h.run()
    ms = h.getModelStatus()
    S = highspy.HighsModelStatus
    status = {S.kOptimal: Status.OPTIMAL, S.kInfeasible: Status.INFEASIBLE,
              S.kUnbounded: Status.UNBOUNDED, S.kIterationLimit: Status.ITERATION_LIMIT,
              S.kUnboundedOrInfeasible: Status.INFEASIBLE}.get(ms, Status.INFEASIBLE)
    info = h.getInfo()
    if status is Status.OPTIMAL:
        sol = h.getSolution()
        x = np.asarray(sol.col_value, dtype=float)
        y = np.asarray(sol.row_dual, dtype=float)
        obj = float(lp.c @ x)
    else:
        x, y, obj = np.full(lp.n_vars, np.nan), np.zeros(lp.n_rows), float("nan")
    return LpSolution(status, x, y, obj, int(info.ipm_iteration_count), "ipm")


def _have_highspy() -> bool:
    return importlib.util.find_spec("highspy") is not None


def solve(lp: LinearProgram, opts: SolverOptions | None = None, *, raise_on_error=True) -> LpSolution:
    """Solve ``lp`` and return primal values with row duals.

    ``opts.method`` selects the built-in simplex, HiGHS dual simplex
    (``"highs"``), HiGHS interior point (``"ipm"``), or ``"auto"``: built-in
    up to ``opts.auto_threshold`` columns, interior point above it (dual
    simplex when highspy is missing).  A non-optimal status
    raises the matching :class:`LpError` subclass unless ``raise_on_error``
    is false.
    """
    opts = opts or SolverOptions()
    method = opts.method
    if method == "auto":
        if lp.n_vars <= opts.auto_threshold:
            method = "simplex"
        else:
            method = "ipm" if _have_highspy() else "highs"
    sol = {"simplex": simplex_solve, "highs": _highs_solve, "ipm": _ipm_solve}[method](lp, opts)
    if raise_on_error and not sol.optimal:
        raise {Status.INFEASIBLE: Infeasible, Status.UNBOUNDED: Unbounded,
               Status.ITERATION_LIMIT: IterationLimit}[sol.status]()
    return sol
