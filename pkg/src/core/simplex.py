"""
Dense two-phase tableau simplex for min <c, x> s.t. A x = b, x >= 0

Pivoting is deterministic: Dantzig's most-negative reduced cost with
lowest-index tie-breaking, falling back to Bland's rule after a run of
degenerate pivots. Redundant equality rows left after phase 1 are dropped.
"""

import numpy as np

import bellbound_conf
from src.core.errors import InfeasibleError, UnboundedError, NonConvergenceError, ValidationError
from src.utils.helpers import get_logger


class LpResult:
    """Optimal point and value of a linear program"""

    def __init__(self, x, value, iterations, backend):
        """Store the solution"""
        self.x = x
        self.value = value
        self.iterations = iterations
        self.backend = backend

    def __str__(self):
        """String representation"""
        return f"LpResult(value={self.value:.12g}, iterations={self.iterations}, backend={self.backend})"


class DenseSimplex:
    """Two-phase tableau simplex with deterministic pivoting"""

    def __init__(self, pivot_tol=1e-9, cost_tol=1e-10, max_iterations=None, degenerate_switch=50):
        """Initialize tolerances and caps"""
        self.logger = get_logger(__name__)
        self.pivot_tol = pivot_tol
        self.cost_tol = cost_tol
        self.max_iterations = max_iterations or bellbound_conf.SIMPLEX_MAX_ITERATIONS
        self.degenerate_switch = degenerate_switch
        self.iterations = 0

    def solve(self, c, A, b):
        """Minimize c.x subject to A x = b, x >= 0"""
        A = np.array(A, dtype=float)
        b = np.array(b, dtype=float)
        c = np.array(c, dtype=float)
        m, n = A.shape
        if b.shape != (m,) or c.shape != (n,):
            raise ValidationError(f"LP shapes disagree: A {A.shape}, b {b.shape}, c {c.shape}")
        self.iterations = 0

        flip = b < 0
        A[flip] *= -1.0
        b[flip] *= -1.0

        # Phase 1: artificial basis
        tableau = np.hstack([A, np.eye(m), b[:, np.newaxis]])
        basis = np.arange(n, n + m)
        phase1_cost = np.concatenate([np.zeros(n), np.ones(m)])
        self._iterate(tableau, basis, phase1_cost)

        infeasibility = float(phase1_cost[basis] @ tableau[:, -1])
        if infeasibility > bellbound_conf.FEASIBILITY_TOL * max(1.0, float(np.abs(b).sum())):
            raise InfeasibleError(f"Phase 1 ended with infeasibility {infeasibility:.3e}")

        # Drive artificials out of the basis; rows where that is impossible are redundant
        keep = []
        for row in range(m):
            if basis[row] < n:
                keep.append(row)
                continue
            entries = np.abs(tableau[row, :n])
            col = int(np.argmax(entries))
            if entries[col] > self.pivot_tol:
                self._pivot(tableau, basis, row, col)
                keep.append(row)
        if len(keep) < m:
            self.logger.debug(f"Dropped {m - len(keep)} redundant equality rows")

        tableau = np.hstack([tableau[keep, :n], tableau[keep, -1:]])
        basis = basis[keep]

        # Phase 2
        self._iterate(tableau, basis, c)

        # Polish the basic solution against the original rows
        x = np.zeros(n)
        basic = np.linalg.lstsq(A[:, basis], b, rcond=None)[0]
        x[basis] = np.maximum(basic, 0.0)
        return LpResult(x, float(c @ x), self.iterations, "simplex")

    def _pivot(self, tableau, basis, row, col):
        """Pivot the tableau on (row, col)"""
        pivot_row = tableau[row] / tableau[row, col]
        tableau -= np.outer(tableau[:, col], pivot_row)
        tableau[row] = pivot_row
        basis[row] = col

    def _iterate(self, tableau, basis, cost):
        """Run simplex pivots until the reduced costs are nonnegative"""
        n_cols = tableau.shape[1] - 1
        degenerate_run = 0
        while True:
            if self.iterations >= self.max_iterations:
                raise NonConvergenceError(f"Simplex hit the iteration cap {self.max_iterations}")

            reduced = cost[:n_cols] - cost[basis] @ tableau[:, :n_cols]
            candidates = np.flatnonzero(reduced < -self.cost_tol)
            if candidates.size == 0:
                return
            if degenerate_run < self.degenerate_switch:
                col = int(candidates[np.argmin(reduced[candidates])])
            else:
                col = int(candidates[0])

            column = tableau[:, col]
            positive = np.flatnonzero(column > self.pivot_tol)
            if positive.size == 0:
                raise UnboundedError("LP objective is unbounded below")
            rhs = np.maximum(tableau[positive, -1], 0.0)
            ratios = rhs / column[positive]
            best = ratios.min()
            tied = positive[ratios <= best + 1e-12]
            row = int(tied[np.argmin(basis[tied])])

            degenerate_run = degenerate_run + 1 if best <= 1e-12 else 0
            self._pivot(tableau, basis, row, col)
            self.iterations += 1


def solve_lp(c, A, b, backend=None):
    """Solve min c.x s.t. A x = b, x >= 0 with the configured backend"""
    backend = backend or bellbound_conf.LP_BACKEND
    if backend == "simplex":
        return DenseSimplex().solve(c, A, b)
    if backend == "highs":
        from scipy.optimize import linprog

        res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        if res.status == 2:
            raise InfeasibleError(f"HiGHS reports infeasible: {res.message}")
        if res.status == 3:
            raise UnboundedError(f"HiGHS reports unbounded: {res.message}")
        if res.status != 0:
            raise NonConvergenceError(f"HiGHS failed: {res.message}")
        return LpResult(np.asarray(res.x), float(res.fun), int(res.nit), "highs")
    raise ValidationError(f"Unknown LP backend '{backend}'")
