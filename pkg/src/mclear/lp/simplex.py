"""Bounded-variable revised primal simplex.

Rows are brought to equality form with one logical (slack) column each,
``A x + s = b``, where the bounds on ``s`` encode the row relation.  Rows
whose slack cannot absorb the starting residual receive an artificial
column; phase one drives the artificials to zero, phase two optimizes the
true objective.

The basis is held as a sparse LU factorization (``scipy.sparse.linalg.splu``)
plus a product-form eta file, refactorized every ``refactor_every`` pivots.
Pricing is Dantzig's rule on the full reduced-cost vector with Bland's rule
taking over after a run of degenerate pivots.  The ratio test is the
two-pass Harris variant.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import LE, GE, LinearProgram, LpSolution, SolverOptions, Status

_AT_LB, _AT_UB, _FREE, _BASIC = 0, 1, 2, 3
_PIVOT_TOL = 1e-9
_DEGENERATE_RUN = 30


class _Basis:
    """LU of the basis matrix with a product-form update file."""

    def __init__(self, cols: sp.csc_matrix, head: np.ndarray):
        self.cols = cols
        self.refactor(head)

    def refactor(self, head: np.ndarray):
        B = self.cols[:, head].tocsc()
        try:
            self.lu = spla.splu(B, permc_spec="COLAMD", diag_pivot_thresh=0.1)
        except RuntimeError as exc:  # singular
            raise np.linalg.LinAlgError(str(exc)) from exc
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, v: np.ndarray) -> np.ndarray:
        w = self.lu.solve(v)
        for p, d in self.etas:
            wp = w[p] / d[p]
            w -= wp * d
            w[p] = wp
        return w

    def btran(self, v: np.ndarray) -> np.ndarray:
        w = v.copy()
        for p, d in reversed(self.etas):
            wp = w[p]
            w[p] = 0.0
            w[p] = (wp - d @ w) / d[p]
        return self.lu.solve(w, trans="T")

    def update(self, p: int, d: np.ndarray):
        self.etas.append((p, d))


class _Simplex:
    def __init__(self, lp: LinearProgram, opts: SolverOptions):
        self.opts = opts
        A = lp.A.tocsc()
        m, n = A.shape
        self.m, self.n = m, n
        # slack bounds encode the relation: a'x + s = b
        slb = np.zeros(m)
        sub = np.zeros(m)
        sub[lp.sense == LE] = np.inf
        slb[lp.sense == GE] = -np.inf
        self.lb = np.concatenate([lp.lb, slb])
        self.ub = np.concatenate([lp.ub, sub])
        self.cost = np.concatenate([lp.c, np.zeros(m)])
        self.b = lp.b.copy()
        self.A = sp.hstack([A, sp.identity(m, format="csc")], format="csc")
        self.AT = self.A.T.tocsr()
        self.iterations = 0

    # ------------------------------------------------------------------
    def _start(self):
        lb, ub = self.lb, self.ub
        N = self.n + self.m
        x = np.zeros(N)
        state = np.full(N, _FREE)
        fin_lb, fin_ub = np.isfinite(lb), np.isfinite(ub)
        x[fin_lb] = lb[fin_lb]
        state[fin_lb] = _AT_LB
        only_ub = ~fin_lb & fin_ub
        x[only_ub] = ub[only_ub]
        state[only_ub] = _AT_UB
        x[self.n:] = 0.0
        resid = self.b - self.A[:, :self.n] @ x[:self.n]
        head = np.empty(self.m, dtype=int)
        art_cols, art_sign = [], []
        for r in range(self.m):
            s = self.n + r
            if lb[s] - 1e-12 <= resid[r] <= ub[s] + 1e-12:
                x[s] = resid[r]
                state[s] = _BASIC
                head[r] = s
            else:
                bound = lb[s] if resid[r] < lb[s] else ub[s]
                x[s] = bound
                state[s] = _AT_LB if bound == lb[s] else _AT_UB
                sign = 1.0 if resid[r] - bound > 0 else -1.0
                art_cols.append(r)
                art_sign.append(sign)
                head[r] = N + len(art_cols) - 1
        k = len(art_cols)
        if k:
            art = sp.csc_matrix((np.array(art_sign), (np.array(art_cols), np.arange(k))),
                                shape=(self.m, k))
            self.A = sp.hstack([self.A, art], format="csc")
            self.AT = self.A.T.tocsr()
            xa = np.abs(resid[art_cols] - x[self.n + np.array(art_cols)])
            x = np.concatenate([x, xa])
            state = np.concatenate([state, np.full(k, _BASIC)])
            self.lb = np.concatenate([self.lb, np.zeros(k)])
            self.ub = np.concatenate([self.ub, np.full(k, np.inf)])
            self.cost = np.concatenate([self.cost, np.zeros(k)])
        self.n_art = k
        self.x, self.state, self.head = x, state, head
        self.basis = _Basis(self.A, head)

    def _recompute_basics(self):
        nb = self.state != _BASIC
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.head] = self.basis.ftran(rhs)

    # ------------------------------------------------------------------
    def _iterate(self, cost: np.ndarray, max_iter: int) -> Status:
        opt_tol, feas_tol = self.opts.opt_tol, self.opts.feas_tol
        bland = self.opts.pivot_rule == "bland"
        degenerate = 0
        lb, ub = self.lb, self.ub
        fixed = lb == ub
        while True:
            if self.iterations >= max_iter:
                return Status.ITERATION_LIMIT
            y = self.basis.btran(cost[self.head])
            d = cost - self.AT @ y
            st = self.state
            elig = np.zeros_like(d, dtype=bool)
            elig |= (st == _AT_LB) & (d < -opt_tol)
            elig |= (st == _AT_UB) & (d > opt_tol)
            elig |= (st == _FREE) & (np.abs(d) > opt_tol)
            elig &= ~fixed
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                self.y = y
                return Status.OPTIMAL
            use_bland = bland or degenerate >= _DEGENERATE_RUN
            if use_bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0

            aq = self.A[:, q].toarray().ravel()
            w = self.basis.ftran(aq)
            # basic values move as x_B - direction * t * w
            xb = self.x[self.head]
            lbb, ubb = lb[self.head], ub[self.head]
            move = direction * w
            dec = move > _PIVOT_TOL
            inc = move < -_PIVOT_TOL
            # Harris pass one: step with bounds relaxed by feas_tol
            t1 = np.full(self.m, np.inf)
            t1[dec] = (xb[dec] - lbb[dec] + feas_tol) / move[dec]
            t1[inc] = (ubb[inc] - xb[inc] + feas_tol) / (-move[inc])
            tmax = t1.min() if self.m else np.inf
            flip = ub[q] - lb[q]
            if not np.isfinite(tmax) and not np.isfinite(flip):
                return Status.UNBOUNDED
            if flip <= tmax:
                t, p = flip, -1
            else:
                # pass two: among rows with exact ratio <= tmax take the
                # largest pivot magnitude
                t2 = np.full(self.m, np.inf)
                t2[dec] = (xb[dec] - lbb[dec]) / move[dec]
                t2[inc] = (ubb[inc] - xb[inc]) / (-move[inc])
                ok = np.flatnonzero(t2 <= tmax)
                if use_bland:
                    # smallest variable index among ties
                    tmin = t2[ok].min()
                    ties = ok[t2[ok] <= tmin + 1e-12]
                    p = int(ties[np.argmin(self.head[ties])])
                else:
                    p = int(ok[np.argmax(np.abs(w[ok]))])
                t = max(t2[p], 0.0)

            self.iterations += 1
            degenerate = degenerate + 1 if t <= 1e-12 else 0
            self.x[self.head] = xb - direction * t * w
            self.x[q] += direction * t
            if p < 0:
                self.state[q] = _AT_UB if direction > 0 else _AT_LB
                self.x[q] = ub[q] if direction > 0 else lb[q]
                continue
            leaving = self.head[p]
            if move[p] > 0:
                self.x[leaving] = lb[leaving]
                self.state[leaving] = _AT_LB
            else:
                self.x[leaving] = ub[leaving]
                self.state[leaving] = _AT_UB
            if not np.isfinite(self.x[leaving]):
                # free basic variable cannot leave to an infinite bound
                self.x[leaving] = 0.0
                self.state[leaving] = _FREE
            self.head[p] = q
            self.state[q] = _BASIC
            if len(self.basis.etas) >= self.opts.refactor_every:
                self.basis.refactor(self.head)
                self._recompute_basics()
            else:
                self.basis.update(p, w)

    # ------------------------------------------------------------------
    def run(self) -> tuple[Status, np.ndarray, np.ndarray, int]:
        self._start()
        max_iter = self.opts.max_iter or 10 * (self.m + self.n) + 1000
        n_real = self.n + self.m
        if self.n_art:
            cost1 = np.zeros_like(self.cost)
            cost1[n_real:] = 1.0
            status = self._iterate(cost1, max_iter)
            if status is not Status.OPTIMAL:
                return status, self.x[:self.n], np.zeros(self.m), self.iterations
            self.basis.refactor(self.head)
            self._recompute_basics()
            infeas = self.x[n_real:].sum()
            if infeas > self.opts.feas_tol * (1.0 + np.abs(self.b).max(initial=0.0)):
                return Status.INFEASIBLE, self.x[:self.n], np.zeros(self.m), self.iterations
            # artificials are pinned at zero from here on
            self.ub[n_real:] = 0.0
            self.x[n_real:] = np.clip(self.x[n_real:], 0.0, 0.0)
            nonbasic_art = np.flatnonzero(self.state[n_real:] != _BASIC) + n_real
            self.state[nonbasic_art] = _AT_LB
        status = self._iterate(self.cost, max_iter)
        if status is Status.OPTIMAL:
            self.basis.refactor(self.head)
            self._recompute_basics()
            y = self.basis.btran(self.cost[self.head])
        else:
            y = np.zeros(self.m)
        return status, self.x[:self.n].copy(), y, self.iterations


def simplex_solve(lp: LinearProgram, opts: SolverOptions) -> LpSolution:
    solver = _Simplex(lp, opts)
    status, x, y, its = solver.run()
    obj = float(lp.c @ x) if status is Status.OPTIMAL else float("nan")
    return LpSolution(status, x, y, obj, its, "simplex")
