"""Linear program container, solution record and KKT certificate.

Sign convention for row duals follows the Lagrangian

    L(x, y) = c'x - sum_r y_r (a_r'x - b_r)

so that for a minimization an equality row has a free multiplier, a ``<=``
row has ``y_r <= 0`` and a ``>=`` row has ``y_r >= 0``.  With this choice the
dual of a nodal balance row ``injections - withdrawals = 0`` is the nodal
price itself.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

EQ, LE, GE = "=", "<=", ">="


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


class LpError(RuntimeError):
    def __init__(self, status: Status, message: str = ""):
        self.status = status
        super().__init__(message or status.value)


class Infeasible(LpError):
    def __init__(self, message: str = "problem is infeasible"):
        super().__init__(Status.INFEASIBLE, message)


class Unbounded(LpError):
    def __init__(self, message: str = "problem is unbounded"):
        super().__init__(Status.UNBOUNDED, message)


class IterationLimit(LpError):
    def __init__(self, message: str = "iteration limit reached"):
        super().__init__(Status.ITERATION_LIMIT, message)


@dataclass(eq=False)
class LinearProgram:
    """min c'x  s.t.  A x (sense) b,  lb <= x <= ub."""

    c: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    row_labels: list = field(default_factory=list)
    var_labels: list = field(default_factory=list)
    # builder-specific index layout (e.g. which columns hold g, which rows
    # are nodal balances); opaque to the solver
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = sp.csr_matrix(self.A, dtype=float)
        self.sense = np.asarray(self.sense, dtype=object)
        self.b = np.asarray(self.b, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        m, n = self.A.shape
        if self.c.shape != (n,) or self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("variable arrays do not match the column count")
        if self.b.shape != (m,) or self.sense.shape != (m,):
            raise ValueError("row arrays do not match the row count")
        bad = set(self.sense.tolist()) - {EQ, LE, GE}
        if bad:
            raise ValueError(f"unknown row relation(s): {bad}")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")
        if not self.row_labels:
            self.row_labels = [f"r{i}" for i in range(m)]
        if not self.var_labels:
            self.var_labels = [f"x{j}" for j in range(n)]

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def row_index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.row_labels)}

    def var_index(self) -> dict:
        return {lab: j for j, lab in enumerate(self.var_labels)}


@dataclass
class LpSolution:
    status: Status
    primal: np.ndarray
    row_duals: np.ndarray
    objective_value: float
    iterations: int = 0
    method: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class SolverOptions:
    feas_tol: float = 1e-8
    opt_tol: float = 1e-8
    max_iter: int | None = None
    pivot_rule: str = "dantzig"
    # "simplex" = built-in bounded revised simplex, "highs" = HiGHS dual
    # simplex via scipy, "ipm" = HiGHS barrier without crossover, "auto"
    # picks by size.
    method: str = "auto"
    auto_threshold: int = 5000
    refactor_every: int = 50

    def __post_init__(self):
        if self.feas_tol <= 0 or self.opt_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.pivot_rule not in ("dantzig", "bland"):
            raise ValueError(f"unknown pivot rule {self.pivot_rule!r}")
        if self.method not in ("auto", "simplex", "highs", "ipm"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class KktReport:
    primal_residual: float
    dual_residual: float
    complementarity: float
    duality_gap: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.primal_residual, self.dual_residual,
                   self.complementarity) <= self.tol

    def __str__(self):
        flag = "ok" if self.passed else "FAIL"
        return (f"KKT[{flag}] primal={self.primal_residual:.3e} "
                f"dual={self.dual_residual:.3e} comp={self.complementarity:.3e} "
                f"gap={self.duality_gap:.3e}")


def reduced_costs(lp: LinearProgram, y: np.ndarray) -> np.ndarray:
    return lp.c - lp.A.T @ y


def check_kkt(lp: LinearProgram, sol: LpSolution, tol: float = 1e-8) -> KktReport:
    """Measure primal feasibility, dual consistency and complementarity.

    The primal residual is scaled by ``1 + |b_r|`` (rows) or ``1 + |x_j|``
    (bounds).  The dual residual is absolute: a reduced cost may be positive
    only at an active lower bound and negative only at an active upper bound;
    row multipliers must carry the sign their relation allows.
    Complementarity is ``|y_r| * slack_r`` on inequality rows plus reduced
    cost times distance for variables counted as sitting at a bound.
    """
    x, y = sol.primal, sol.row_duals
    r = lp.A @ x - lp.b
    eq, le, ge = lp.sense == EQ, lp.sense == LE, lp.sense == GE
    viol = np.zeros(lp.n_rows)
    viol[eq] = np.abs(r[eq])
    viol[le] = np.maximum(r[le], 0.0)
    viol[ge] = np.maximum(-r[ge], 0.0)
    bound_viol = np.maximum(np.maximum(lp.lb - x, x - lp.ub), 0.0)
    primal = max(float(np.max(viol / (1.0 + np.abs(lp.b)), initial=0.0)),
                 float(np.max(bound_viol / (1.0 + np.abs(x)), initial=0.0)))

    sign_viol = np.zeros(lp.n_rows)
    sign_viol[le] = np.maximum(y[le], 0.0)
    sign_viol[ge] = np.maximum(-y[ge], 0.0)

    z = reduced_costs(lp, y)
    z_pos, z_neg = np.maximum(z, 0.0), np.maximum(-z, 0.0)
    with np.errstate(invalid="ignore"):
        d_lb = np.where(np.isfinite(lp.lb), x - lp.lb, np.inf)
        d_ub = np.where(np.isfinite(lp.ub), lp.ub - x, np.inf)
    eps_lb = 1e-6 * (1.0 + np.abs(np.where(np.isfinite(lp.lb), lp.lb, 0.0)))
    eps_ub = 1e-6 * (1.0 + np.abs(np.where(np.isfinite(lp.ub), lp.ub, 0.0)))
    at_lb, at_ub = d_lb <= eps_lb, d_ub <= eps_ub
    dual_res = np.where(at_lb, 0.0, z_pos) + np.where(at_ub, 0.0, z_neg)
    dual = max(float(np.max(dual_res, initial=0.0)), float(np.max(sign_viol, initial=0.0)))

    comp_var = (np.where(at_lb, z_pos * np.abs(np.where(at_lb, d_lb, 0.0)), 0.0)
                + np.where(at_ub, z_neg * np.abs(np.where(at_ub, d_ub, 0.0)), 0.0))
    comp_row = np.where(eq, 0.0, np.abs(y) * np.abs(r))
    comp = max(float(np.max(comp_var, initial=0.0)), float(np.max(comp_row, initial=0.0)))

    lb_f = np.where(np.isfinite(lp.lb), lp.lb, 0.0)
    ub_f = np.where(np.isfinite(lp.ub), lp.ub, 0.0)
    dual_obj = float(lp.b @ y + z_pos @ lb_f - z_neg @ ub_f)
    primal_obj = float(lp.c @ x)
    gap = abs(primal_obj - dual_obj) / (1.0 + abs(primal_obj))
    return KktReport(primal, dual, comp, gap, tol)


# --------------------------------------------------------------------------
# plain-text dump

def _fmt(v: float) -> str:
    if v == np.inf:
        return "inf"
    if v == -np.inf:
        return "-inf"
    return repr(float(v))


def dump_lp(lp: LinearProgram) -> str:
    """Render ``lp`` in the line-oriented debug format.

    One record per line, whitespace separated, in this order::

        LP <n_vars> <n_rows>
        VAR <j> <label> <cost> <lb> <ub>        (for every column)
        ROW <i> <label> <sense> <rhs>           (for every row)
        COEF <i> <j> <value>                    (nonzeros, row-major)
        END
    """
    out = [f"LP {lp.n_vars} {lp.n_rows}"]
    for j in range(lp.n_vars):
        out.append(f"VAR {j} {_label(lp.var_labels[j])} {_fmt(lp.c[j])} "
                   f"{_fmt(lp.lb[j])} {_fmt(lp.ub[j])}")
    for i in range(lp.n_rows):
        out.append(f"ROW {i} {_label(lp.row_labels[i])} {lp.sense[i]} {_fmt(lp.b[i])}")
    A = lp.A.tocsr()
    A.sort_indices()
    for i in range(lp.n_rows):
        for k in range(A.indptr[i], A.indptr[i + 1]):
            out.append(f"COEF {i} {A.indices[k]} {_fmt(A.data[k])}")
    out.append("END")
    return "\n".join(out) + "\n"


def _label(lab) -> str:
    if isinstance(lab, tuple):
        s = ":".join(str(x) for x in lab)
    else:
        s = str(lab)
    return s.replace(" ", "_") or "_"


def parse_lp_dump(text: str) -> LinearProgram:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0][0] != "LP" or lines[-1] != ["END"]:
        raise ValueError("not an LP dump")
    n, m = int(lines[0][1]), int(lines[0][2])
    c = np.zeros(n); lb = np.zeros(n); ub = np.zeros(n)
    sense = np.empty(m, dtype=object); b = np.zeros(m)
    vlab = [""] * n; rlab = [""] * m
    rows, cols, vals = [], [], []
    for rec in lines[1:-1]:
        if rec[0] == "VAR":
            j = int(rec[1]); vlab[j] = rec[2]
            c[j], lb[j], ub[j] = float(rec[3]), float(rec[4]), float(rec[5])
        elif rec[0] == "ROW":
            i = int(rec[1]); rlab[i] = rec[2]; sense[i] = rec[3]; b[i] = float(rec[4])
        elif rec[0] == "COEF":
            rows.append(int(rec[1])); cols.append(int(rec[2])); vals.append(float(rec[3]))
        else:
            raise ValueError(f"unknown record {rec[0]!r}")
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    return LinearProgram(c, A, sense, b, lb, ub, rlab, vlab)


class LpBuilder:
    """Incremental assembly of a :class:`LinearProgram` from labelled pieces."""

    def __init__(self):
        self._c: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._vlab: list = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._sense: list[str] = []
        self._b: list[float] = []
        self._rlab: list = []

    def add_var(self, label, cost=0.0, lb=-np.inf, ub=np.inf) -> int:
        self._c.append(float(cost))
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._vlab.append(label)
        return len(self._c) - 1

    def add_row(self, label, coefs: Sequence[tuple[int, float]], sense: str, rhs: float) -> int:
        i = len(self._b)
        for j, v in coefs:
            if v != 0.0:
                self._rows.append(i)
                self._cols.append(j)
                self._vals.append(float(v))
        self._sense.append(sense)
        self._b.append(float(rhs))
        self._rlab.append(label)
        return i

    def build(self) -> LinearProgram:
        m, n = len(self._b), len(self._c)
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)), shape=(m, n))
        A.sum_duplicates()
        return LinearProgram(np.array(self._c), A, np.array(self._sense, dtype=object),
                             np.array(self._b), np.array(self._lb), np.array(self._ub),
                             list(self._rlab), list(self._vlab))
