"""Linear programming core.

Problems are kept in the form::

    min  c @ x
    s.t. A @ x == b
         lower <= x <= upper

with finite lower bounds and finite or infinite upper bounds.  The default
solver is a bounded-variable revised simplex (two phases, product-form basis
updates) that returns exact row duals; a HiGHS backend is available for
larger stage problems.
"""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
OPT_TOL = 1e-7
VERIFY_TOL = 1e-6
REFACTOR_EVERY = 100
DRIFT_TOL = 1e-8
DEGENERACY_STREAK = 50


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class LpValidationError(ValueError):
    """Raised for structurally malformed problems (not for infeasibility)."""


class LpVerificationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class LpProblem:
    """Equality-form LP with variable bounds.

    ``row_ids`` must be unique; ``row_tags`` are opaque labels that callers use
    to find rows again (e.g. to read duals of the stage rows only).
    """

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    row_ids: tuple = None
    row_tags: tuple = None
    var_names: tuple = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        A = sp.csr_matrix(self.A, dtype=float)
        if A.shape == (0, 0) and c.size:
            A = sp.csr_matrix((b.size, c.size))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float).ravel())
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float).ravel())
        if self.row_ids is None:
            object.__setattr__(self, "row_ids", tuple(f"r{i}" for i in range(b.size)))
        else:
            object.__setattr__(self, "row_ids", tuple(self.row_ids))
        if self.row_tags is not None:
            object.__setattr__(self, "row_tags", tuple(self.row_tags))
        if self.var_names is not None:
            object.__setattr__(self, "var_names", tuple(self.var_names))

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size

    @classmethod
    def from_rows(cls, c, rows, lower=None, upper=None, row_tags=None, var_names=None):
        """Build from ``rows = [(row_id, {var_index: coeff}, rhs), ...]``.

        Raises LpValidationError when a row references a variable that does
        not exist.
        """
        c = np.asarray(c, dtype=float)
        n = c.size
        data, ri, ci, b, ids = [], [], [], [], []
        for k, (rid, coeffs, rhs) in enumerate(rows):
            for j, v in coeffs.items():
                if not (isinstance(j, (int, np.integer)) and 0 <= j < n):
                    raise LpValidationError(f"row {rid!r} references unknown variable {j!r}")
                ri.append(k)
                ci.append(int(j))
                data.append(float(v))
            b.append(float(rhs))
            ids.append(str(rid))
        A = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
        lower = np.zeros(n) if lower is None else lower
        upper = np.full(n, np.inf) if upper is None else upper
        prob = cls(c, A, np.array(b), lower, upper, tuple(ids), row_tags, var_names)
        prob.validate()
        return prob

    def validate(self) -> None:
        n, m = self.n_vars, self.n_rows
        if self.A.shape != (m, n):
            raise LpValidationError(f"A has shape {self.A.shape}, expected {(m, n)}")
        if self.lower.size != n or self.upper.size != n:
            raise LpValidationError("bound vectors do not match the variable count")
        if len(self.row_ids) != m:
            raise LpValidationError("row_ids length does not match the row count")
        if len(set(self.row_ids)) != m:
            raise LpValidationError("row ids are not unique")
        if self.row_tags is not None and len(self.row_tags) != m:
            raise LpValidationError("row_tags length does not match the row count")
        if not np.all(np.isfinite(self.lower)):
            raise LpValidationError("lower bounds must be finite")
        if np.any(np.isnan(self.upper)):
            raise LpValidationError("upper bound is NaN")
        bad = np.flatnonzero(self.lower > self.upper)
        if bad.size:
            j = int(bad[0])
            raise LpValidationError(
                f"inverted bounds on variable {j}: {self.lower[j]} > {self.upper[j]}")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b))
                and np.all(np.isfinite(self.A.data))):
            raise LpValidationError("non-finite coefficient")


@dataclass(frozen=True, eq=False)
class LpOutcome:
    status: LpStatus
    x: np.ndarray = None
    duals: np.ndarray = None
    reduced_costs: np.ndarray = None
    objective: float = math.nan
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass(frozen=True)
class VerificationReport:
    primal_residual: float
    dual_residual: float
    duality_gap: float
    primal_objective: float
    dual_objective: float
    passed: bool
    tol: float = VERIFY_TOL


# --------------------------------------------------------------------------
# verification

def verify_optimality(problem: LpProblem, outcome: LpOutcome, tol: float = VERIFY_TOL):
    """Check primal feasibility, reduced-cost signs and the duality gap.

    Reduced costs are recomputed from ``outcome.duals`` so a perturbed dual
    vector shows up in the gap.  Residuals are reported raw; the pass test
    scales them by ``1 + magnitude`` of the relevant data.
    """
    if outcome.status is not LpStatus.OPTIMAL:
        raise LpVerificationError(f"cannot verify a {outcome.status.value} outcome")
    x = np.asarray(outcome.x, dtype=float)
    pi = np.asarray(outcome.duals, dtype=float)
    A, b, c, lo, up = problem.A, problem.b, problem.c, problem.lower, problem.upper

    primal = 0.0
    if b.size:
        primal = float(np.max(np.abs(A @ x - b)))
    bound_viol = np.maximum(lo - x, 0.0)
    bound_viol = np.maximum(bound_viol, np.where(np.isfinite(up), x - up, 0.0))
    if bound_viol.size:
        primal = max(primal, float(bound_viol.max()))

    d = c - A.T @ pi if b.size else c.copy()
    d_pos = np.maximum(d, 0.0)
    d_neg = np.maximum(-d, 0.0)
    up_finite = np.isfinite(up)
    # a negative reduced cost needs a finite upper bound to be dual feasible
    dual_res = float(np.max(np.where(up_finite, 0.0, d_neg), initial=0.0))
    dual_obj = float(b @ pi + d_pos @ lo - d_neg[up_finite] @ up[up_finite])
    primal_obj = float(c @ x)
    gap = abs(primal_obj - dual_obj)

    b_scale = 1.0 + (float(np.max(np.abs(b))) if b.size else 0.0)
    c_scale = 1.0 + (float(np.max(np.abs(c))) if c.size else 0.0)
    passed = (primal <= tol * b_scale and dual_res <= tol * c_scale
              and gap <= tol * (1.0 + abs(primal_obj)))
    return VerificationReport(primal, dual_res, gap, primal_obj, dual_obj, passed, tol)


_verify_all = bool(os.environ.get("SAVSDDP_VERIFY_LP"))


def verify_all_enabled() -> bool:
    return _verify_all


def set_verify_all(flag: bool) -> bool:
    """Toggle verification of every optimal solve; returns the old setting."""
    global _verify_all
    old, _verify_all = _verify_all, bool(flag)
    return old


_stats = {"checked": 0, "failed": 0}


def verification_stats() -> dict:
    """Counts of outcomes checked (and failed) while verification was on."""
    return dict(_stats)


def check_outcome(problem: LpProblem, outcome: LpOutcome, label: str = "") -> None:
    """Verify ``outcome`` if it is optimal; raise LpVerificationError on failure."""
    if not outcome.optimal:
        return
    rep = verify_optimality(problem, outcome)
    _stats["checked"] += 1
    if not rep.passed:
        _stats["failed"] += 1
        raise LpVerificationError(f"{label}optimality check failed: {rep}")


# --------------------------------------------------------------------------
# solve

def solve(problem: LpProblem, method: str = "simplex") -> LpOutcome:
    """Solve ``problem`` with ``method`` in {"simplex", "highs"}."""
    problem.validate()
    if method == "simplex":
        out = _RevisedSimplex(problem).run()
    elif method == "highs":
        out = _solve_highs(problem)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if _verify_all:
        check_outcome(problem, out)
    return out


class _RevisedSimplex:
    """Bounded-variable revised simplex with artificial-variable phase 1.

    Nonbasic variables sit at a bound; Dantzig pricing, falling back to
    Bland's rule after a run of degenerate pivots.  Ties resolve to the
    lowest index.
    """

    def __init__(self, problem: LpProblem):
        self.p = problem
        m, n = problem.n_rows, problem.n_vars
        self.m, self.n = m, n
        A = problem.A.toarray()
        lo = problem.lower.copy()
        up = problem.upper.copy()
        x = lo.copy()
        r = problem.b - A @ x
        sign = np.where(r >= 0, 1.0, -1.0)
        self.A = np.hstack([A, np.diag(sign)]) if m else A.reshape(0, n)
        self.b = problem.b
        self.lo = np.concatenate([lo, np.zeros(m)])
        self.up = np.concatenate([up, np.full(m, np.inf)])
        self.x = np.concatenate([x, np.abs(r)])
        self.basis = np.arange(n, n + m)
        self.is_basic = np.zeros(n + m, dtype=bool)
        self.is_basic[self.basis] = True
        self.iterations = 0
        self.max_iter = 50 * (n + m) + 1000
        self.c_scale = max(1.0, float(np.max(np.abs(problem.c), initial=0.0)))
        self.b_scale = max(1.0, float(np.max(np.abs(problem.b), initial=0.0)))

    # basis factorization -------------------------------------------------
    def _refactor(self):
        self.etas = []
        if self.m:
            self.lu = lu_factor(self.A[:, self.basis])
            nb = ~self.is_basic
            rhs = self.b - self.A[:, nb] @ self.x[nb]
            self.x[self.basis] = lu_solve(self.lu, rhs)

    def _ftran(self, a):
        v = lu_solve(self.lu, a)
        for p, w in self.etas:
            vp = v[p] / w[p]
            v -= w * vp
            v[p] = vp
        return v

    def _btran(self, cb):
        z = cb.copy()
        for p, w in reversed(self.etas):
            z[p] = (z[p] - (z @ w - z[p] * w[p])) / w[p]
        return lu_solve(self.lu, z, trans=1)

    def _ratio_test(self, sw, theta, bland):
        """Leaving row and step length; ``leave = -1`` means a bound flip.

        Harris two-pass test: the step limit is computed with bounds relaxed
        by the feasibility tolerance, then the largest pivot within that
        limit is taken (lowest basis index on ties).  Under Bland's rule the
        exact minimum ratio with lowest-index ties is used instead.
        """
        piv = PIVOT_TOL * max(1.0, float(np.max(np.abs(sw))))
        xb = self.x[self.basis]
        lb = self.lo[self.basis]
        ub = self.up[self.basis]
        dec = sw > piv
        inc = (sw < -piv) & np.isfinite(ub)
        gap = np.full(sw.size, np.inf)
        gap[dec] = xb[dec] - lb[dec]
        gap[inc] = ub[inc] - xb[inc]
        a = np.abs(sw)
        ratios = np.full(sw.size, np.inf)
        mask = dec | inc
        ratios[mask] = np.maximum(gap[mask], 0.0) / a[mask]
        if bland:
            rmin = ratios.min()
            if not rmin < theta:
                return -1, theta
            ties = np.flatnonzero(ratios <= rmin + 1e-12 * max(1.0, rmin))
            leave = int(ties[np.argmin(self.basis[ties])])
            return leave, ratios[leave]
        relaxed = np.full(sw.size, np.inf)
        relaxed[mask] = (np.maximum(gap[mask], 0.0) + FEAS_TOL) / a[mask]
        limit = relaxed.min()
        if not ratios.min() < theta:
            return -1, theta
        cand = np.flatnonzero(ratios <= limit)
        best = a[cand].max()
        top = cand[a[cand] >= best * (1.0 - 1e-12)]
        leave = int(top[np.argmin(self.basis[top])])
        if ratios[leave] >= theta:
            return -1, theta
        return leave, ratios[leave]

    # main loop -------------------------------------------------------------
    def _phase(self, cost):
        m = self.m
        tol = OPT_TOL * max(1.0, float(np.max(np.abs(cost), initial=0.0)))
        self._refactor()
        streak = 0
        bland = False
        since_refactor = 0
        while True:
            if self.iterations >= self.max_iter:
                raise RuntimeError("simplex iteration limit reached")
            y = self._btran(cost[self.basis]) if m else np.zeros(0)
            d = cost - self.A.T @ y if m else cost.copy()
            movable = ~self.is_basic & (self.up > self.lo)
            at_up = self.x >= self.up
            elig = movable & (((d < -tol) & ~at_up) | ((d > tol) & at_up))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return "optimal", y
            q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            sgn = 1.0 if d[q] < 0 else -1.0

            w = self._ftran(self.A[:, q]) if m else np.zeros(0)
            theta = self.up[q] - self.lo[q]
            leave = -1
            if m:
                leave, theta = self._ratio_test(sgn * w, theta, bland)
            if not np.isfinite(theta):
                return "unbounded", None

            self.iterations += 1
            self.x[q] += sgn * theta
            if m:
                self.x[self.basis] -= sgn * theta * w
            if leave < 0:
                # bound flip, basis unchanged
                self.x[q] = self.up[q] if sgn > 0 else self.lo[q]
            else:
                out = self.basis[leave]
                self.x[out] = self.lo[out] if sgn * w[leave] > 0 else self.up[out]
                self.basis[leave] = q
                self.is_basic[out] = False
                self.is_basic[q] = True
                self.etas.append((leave, w))
                since_refactor += 1

            # progress is judged on the objective: Harris steps can be tiny but nonzero
            if theta * abs(d[q]) <= 1e-9 * max(1.0, abs(float(cost @ self.x))):
                streak += 1
                if streak >= DEGENERACY_STREAK:
                    bland = True
            else:
                streak = 0
                bland = False

            if since_refactor >= REFACTOR_EVERY:
                self._refactor()
                since_refactor = 0
            elif m and leave >= 0:
                drift = np.max(np.abs(self.A @ self.x - self.b))
                if drift > DRIFT_TOL * self.b_scale:
                    self._refactor()
                    since_refactor = 0

    def run(self) -> LpOutcome:
        n, m = self.n, self.m
        if m:
            c1 = np.concatenate([np.zeros(n), np.ones(m)])
            self._phase(c1)
            infeas = float(self.x[n:].sum())
            if infeas > FEAS_TOL * self.b_scale:
                return LpOutcome(LpStatus.INFEASIBLE, iterations=self.iterations)
            # artificials are pinned at zero for phase 2
            self.up[n:] = 0.0
            self.x[n:][~self.is_basic[n:]] = 0.0
        c2 = np.concatenate([self.p.c, np.zeros(m)])
        status, y = self._phase(c2)
        if status == "unbounded":
            return LpOutcome(LpStatus.UNBOUNDED, iterations=self.iterations)
        self._refactor()
        y = self._btran(c2[self.basis]) if m else np.zeros(0)
        x = self.x[:n].copy()
        # snap tiny bound violations left by floating point
        x = np.clip(x, self.p.lower, self.p.upper)
        d = self.p.c - self.p.A.T @ y if m else self.p.c.copy()
        return LpOutcome(LpStatus.OPTIMAL, x, y, np.asarray(d).ravel(),
                         float(self.p.c @ x), self.iterations)


# HiGHS silently drops smaller entries (default 1e-9); 1e-12 is its floor
SMALL_MATRIX_VALUE = 1e-12


def _solve_highs(problem: LpProblem) -> LpOutcome:
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("small_matrix_value", SMALL_MATRIX_VALUE)
    lp = highspy.HighsLp()
    n, m = problem.n_vars, problem.n_rows
    lp.num_col_ = n
    lp.num_row_ = m
    lp.col_cost_ = problem.c
    lp.col_lower_ = problem.lower
    lp.col_upper_ = np.where(np.isfinite(problem.upper), problem.upper, highspy.kHighsInf)
    lp.row_lower_ = problem.b
    lp.row_upper_ = problem.b
    A = problem.A.tocsc()
    A.sort_indices()
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = A.indptr
    lp.a_matrix_.index_ = A.indices
    lp.a_matrix_.value_ = A.data
    lp.a_matrix_.num_col_ = n
    lp.a_matrix_.num_row_ = m
    h.passModel(lp)
    h.run()
    st = h.getModelStatus()
    MS = highspy.HighsModelStatus
    if st == MS.kUnboundedOrInfeasible:
        h.setOptionValue("presolve", "off")
        h.run()
        st = h.getModelStatus()
    if st == MS.kInfeasible:
        return LpOutcome(LpStatus.INFEASIBLE)
    if st in (MS.kUnbounded, MS.kUnboundedOrInfeasible):
        return LpOutcome(LpStatus.UNBOUNDED)
    if st != MS.kOptimal:
        raise RuntimeError(f"HiGHS returned {h.modelStatusToString(st)}")
    sol = h.getSolution()
    x = np.clip(np.array(sol.col_value), problem.lower, problem.upper)
    y = np.array(sol.row_dual) if m else np.zeros(0)
    d = problem.c - problem.A.T @ y if m else problem.c.copy()
    return LpOutcome(LpStatus.OPTIMAL, x, y, np.asarray(d).ravel(), float(problem.c @ x),
                     int(h.getInfo().simplex_iteration_count))



QUALITY_GUARD = 1e-7


class HighsSession:
    """A HiGHS model kept alive across solves.

    Repeated solves may change the equality right-hand sides and the costs
    and may append inequality rows; each solve warm-starts from the previous
    basis.  Row duals follow the same sign convention as ``solve``.
    """

    def __init__(self, c, A, b, lower, upper):
        import highspy

        self._hs = highspy
        self.h = highspy.Highs()
        self.h.setOptionValue("output_flag", False)
        self.h.setOptionValue("threads", 1)
        self.h.setOptionValue("small_matrix_value", SMALL_MATRIX_VALUE)
        self.n = len(c)
        self.m_eq = len(b)
        self.c = np.asarray(c, dtype=float).copy()
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        prob = LpProblem(c, A, b, lower, upper)
        prob.validate()
        lp = highspy.HighsLp()
        lp.num_col_ = self.n
        lp.num_row_ = self.m_eq
        lp.col_cost_ = prob.c
        lp.col_lower_ = prob.lower
        lp.col_upper_ = np.where(np.isfinite(prob.upper), prob.upper, highspy.kHighsInf)
        lp.row_lower_ = prob.b
        lp.row_upper_ = prob.b
        Ac = prob.A.tocsc()
        Ac.sort_indices()
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = Ac.indptr
        lp.a_matrix_.index_ = Ac.indices
        lp.a_matrix_.value_ = Ac.data
        lp.a_matrix_.num_col_ = self.n
        lp.a_matrix_.num_row_ = self.m_eq
        self.h.passModel(lp)
        self._rows = np.arange(self.m_eq, dtype=np.int32)
        self.n_extra = 0
        self._A = prob.A.tocsr()
        self._b = prob.b.copy()
        self._ineq_lower = np.zeros(0)
        self.cold_retries = 0

    def set_rhs(self, b):
        b = np.asarray(b, dtype=float)
        self._b = b.copy()
        if self.m_eq:
            self.h.changeRowsBounds(self.m_eq, self._rows, b, b)

    def set_cost(self, c):
        c = np.asarray(c, dtype=float)
        if not np.array_equal(c, self.c):
            self.h.changeColsCost(self.n, np.arange(self.n, dtype=np.int32), c)
            self.c = c.copy()

    def add_rows(self, A, lower):
        """Append rows ``A x >= lower``."""
        A = sp.csr_matrix(A, dtype=float)
        k = A.shape[0]
        if not k:
            return
        A.sort_indices()
        lower = np.asarray(lower, dtype=float)
        self.h.addRows(k, lower, np.full(k, self._hs.kHighsInf),
                       A.nnz, A.indptr[:-1].astype(np.int32), A.indices.astype(np.int32),
                       A.data)
        self.n_extra += k
        self._A = sp.vstack([self._A, A]).tocsr()
        self._ineq_lower = np.concatenate([self._ineq_lower, lower])

    def _quality(self, x, y) -> tuple:
        """Scaled primal and dual errors of a solution, as the verifier sees them.

        Dual error covers interior columns with nonzero reduced cost, columns
        with no upper bound and a negative reduced cost, and cut rows with a
        negative dual or a nonzero dual on a slack row.
        """
        d = self.c - self._A.T @ y
        interior = (x > self.lower + 1e-9) & (x < self.upper - 1e-9)
        dual = max(float(np.max(np.abs(d[interior]), initial=0.0)),
                   float(np.max(-d[~np.isfinite(self.upper)], initial=0.0)))
        Ax = self._A @ x
        primal = float(np.max(np.abs(Ax[:self.m_eq] - self._b), initial=0.0))
        yc = y[self.m_eq:]
        if yc.size:
            slack = Ax[self.m_eq:] - self._ineq_lower
            dual = max(dual, float(np.max(-yc, initial=0.0)),
                       float(np.max(np.abs(yc[slack > 1e-9]), initial=0.0)))
            primal = max(primal, float(np.max(-slack, initial=0.0)))
        b_scale = 1.0 + max(np.abs(self._b).max(initial=0.0),
                            np.abs(self._ineq_lower).max(initial=0.0))
        return primal / b_scale, dual / (1.0 + np.abs(self.c).max(initial=0.0))

    def solve(self) -> LpOutcome:
        """Outcome with ``duals`` over the equality rows then the appended rows."""
        h = self.h
        h.run()
        MS = self._hs.HighsModelStatus
        st = h.getModelStatus()
        if st not in (MS.kOptimal, MS.kInfeasible, MS.kUnbounded, MS.kUnboundedOrInfeasible):
            # warm start went numerically bad: retry cold
            h.clearSolver()
            h.run()
            st = h.getModelStatus()
        if st == MS.kUnboundedOrInfeasible:
            h.setOptionValue("presolve", "off")
            h.run()
            h.setOptionValue("presolve", "choose")
            st = h.getModelStatus()
        if st == MS.kInfeasible:
            return LpOutcome(LpStatus.INFEASIBLE)
        if st in (MS.kUnbounded, MS.kUnboundedOrInfeasible):
            return LpOutcome(LpStatus.UNBOUNDED)
        if st != MS.kOptimal:
            raise RuntimeError(f"HiGHS returned {h.modelStatusToString(st)}")
        sol = h.getSolution()
        x = np.clip(np.array(sol.col_value), self.lower, self.upper)
        y = np.array(sol.row_dual)
        if max(self._quality(x, y)) > QUALITY_GUARD:
            # long warm-started runs can leave an optimal basis with inaccurate values
            self.cold_retries += 1
            h.clearSolver()
            h.run()
            if h.getModelStatus() == MS.kOptimal:
                sol = h.getSolution()
                x = np.clip(np.array(sol.col_value), self.lower, self.upper)
                y = np.array(sol.row_dual)
        return LpOutcome(LpStatus.OPTIMAL, x, y, np.array(sol.col_dual), float(self.c @ x),
                         int(h.getInfo().simplex_iteration_count))


# --------------------------------------------------------------------------
# text dump

def dump_text(problem: LpProblem) -> str:
    """Plain-text dump, one constraint per line; ``load_text`` inverts it."""
    lines = [f"vars {problem.n_vars}"]
    lines.append("obj : " + " ".join(f"{float(v)!r}*x{j}" for j, v in enumerate(problem.c)))
    for j, (lo, up) in enumerate(zip(problem.lower, problem.upper)):
        lines.append(f"bound x{j} : {float(lo)!r} {float(up)!r}")
    A = problem.A.tocsr()
    for i, rid in enumerate(problem.row_ids):
        lo_, hi_ = A.indptr[i], A.indptr[i + 1]
        terms = " ".join(f"{float(v)!r}*x{j}" for j, v in zip(A.indices[lo_:hi_], A.data[lo_:hi_]))
        lines.append(f"{rid} : {terms} = {float(problem.b[i])!r}")
    return "\n".join(lines) + "\n"


def load_text(text: str) -> LpProblem:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    n = int(lines[0].split()[1])
    c = np.zeros(n)
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    rows = []
    for ln in lines[1:]:
        head, _, body = ln.partition(" : ")
        if head == "obj":
            for term in body.split():
                v, var = term.split("*")
                c[int(var[1:])] = float(v)
        elif head.startswith("bound "):
            j = int(head.split()[1][1:])
            lo, up = body.split()
            lower[j], upper[j] = float(lo), float(up)
        else:
            lhs, _, rhs = body.rpartition(" = ")
            coeffs = {}
            for term in lhs.split():
                v, var = term.split("*")
                coeffs[int(var[1:])] = float(v)
            rows.append((head, coeffs, float(rhs)))
    return LpProblem.from_rows(c, rows, lower, upper)
