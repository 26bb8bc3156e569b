"""Relaxed placement program and a self-contained simplex solver.

``build_relaxed_program`` turns an instance into a box-constrained linear
program: placement variables x[r,m] and admission variables y[r], all in
[0, 1], with one redundancy row per request (placed copies of a served
request must reach its replica count), one admission row per request, and
one capacity row per node and resource.

``simplex_solve`` is a two-phase primal simplex on the revised tableau with
bounded variables: nonbasic variables rest at a finite bound, the ratio test
considers both bounds of every basic variable plus a bound flip of the
entering variable, and artificial variables appear only for rows whose slack
starts infeasible (the placement relaxation never needs any, since the
all-zero point is feasible).  Entering variable: largest reduced cost,
switching to Bland's smallest-index rule after a long degenerate streak.
The basis inverse is maintained by eta updates and refactorized periodically.
"""

from dataclasses import dataclass, field

import numpy as np

from .model import RESOURCES, FractionalSolution, ProblemInstance

DEFAULT_TOL = 1e-7
DEFAULT_PIVOT_FLOOR = 1e-10

LE = "<="
GE = ">="

_AT_LOWER, _AT_UPPER, _BASIC = 0, 1, 2
_REFACTOR_EVERY = 64
_DEGENERATE_STREAK = 40


class SimplexError(RuntimeError):
    """Base class for solver failures."""


class InfeasibleProgramError(SimplexError):
    pass


class UnboundedProgramError(SimplexError):
    pass


class IterationLimitError(SimplexError):
    pass


class NumericalInstabilityError(SimplexError):
    pass


@dataclass
class LinearProgram:
    """Maximize objective @ v subject to sparse <=/>= rows and box bounds.

    Rows are (coeffs, sense, rhs) with coeffs a list of (var index, value)
    pairs.  Bounds default to [0, 1] for every variable.  ``shape`` marks
    programs built from an instance: (n_requests, n_mecs) for unpacking the
    variable vector back into placement form.
    """

    n_vars: int
    objective: np.ndarray = None
    rows: list = field(default_factory=list)
    lower: np.ndarray = None
    upper: np.ndarray = None
    names: list = None
    shape: tuple = None

    def __post_init__(self):
        if self.n_vars < 0:
            raise ValueError("n_vars must be nonnegative")
        if self.objective is None:
            self.objective = np.zeros(self.n_vars)
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (self.n_vars,):
            raise ValueError("objective length must equal n_vars")
        if self.lower is None:
            self.lower = np.zeros(self.n_vars)
        if self.upper is None:
            self.upper = np.ones(self.n_vars)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if not np.isfinite(self.lower).all():
            raise ValueError("variable lower bounds must be finite")
        if (self.upper < self.lower).any():
            raise ValueError("upper bounds must dominate lower bounds")

    def add_row(self, coeffs, sense: str, rhs: float) -> None:
        if sense not in (LE, GE):
            raise ValueError(f"row sense must be {LE!r} or {GE!r}")
        if not np.isfinite(rhs):
            raise ValueError("row rhs must be finite")
        for j, a in coeffs:
            if not 0 <= j < self.n_vars:
                raise ValueError(f"row references unknown variable {j}")
            if not np.isfinite(a):
                raise ValueError("row coefficients must be finite")
        self.rows.append((list(coeffs), sense, float(rhs)))

    def var_name(self, j: int) -> str:
        if self.names is not None:
            return self.names[j]
        return f"v{j}"


def build_relaxed_program(inst: ProblemInstance) -> LinearProgram:
    """Relax the placement problem: binary requirements become [0, 1] boxes."""
    R, M = inst.n_requests, inst.n_mecs
    n = R * M + R
    objective = np.zeros(n)
    names = [f"x_{r}_{m}" for r in range(R) for m in range(M)]
    names += [f"y_{r}" for r in range(R)]

    def xv(r, m):
        return r * M + m

    def yv(r):
        return R * M + r

    lp = LinearProgram(n_vars=n, objective=objective, names=names, shape=(R, M))
    for r, req in enumerate(inst.requests):
        lp.objective[yv(r)] = req.reward
        # served requests must reach their replica count
        coeffs = [(xv(r, m), 1.0) for m in range(M)]
        coeffs.append((yv(r), -float(inst.replicas[r])))
        lp.add_row(coeffs, GE, 0.0)
    for r in range(R):
        # admitted at most once (kept explicit although the box implies it)
        lp.add_row([(yv(r), 1.0)], LE, 1.0)
    for res in RESOURCES:
        demand = inst.demand_vector(res)
        cap = inst.capacity_vector(res)
        for m in range(M):
            coeffs = [(xv(r, m), float(demand[r])) for r in range(R)]
            lp.add_row(coeffs, LE, float(cap[m]))
    return lp


@dataclass
class SimplexResult:
    values: np.ndarray
    objective: float
    iterations: int


class _BoundedSimplex:
    """Dense working state for one solve; see the module docstring."""

    def __init__(self, lp, tol, pivot_floor, max_iterations):
        self.tol = tol
        self.pivot_floor = pivot_floor
        m = len(lp.rows)
        n = lp.n_vars
        self.m = m
        self.n_struct = n
        self.n_real = n + m            # structural + one slack per row
        total = self.n_real + m        # + one artificial slot per row
        self.A = np.zeros((m, total))
        self.b = np.zeros(m)
        self.lower = np.full(total, 0.0)
        self.upper = np.full(total, np.inf)
        self.lower[:n] = lp.lower
        self.upper[:n] = lp.upper
        for i, (coeffs, sense, rhs) in enumerate(lp.rows):
            for j, a in coeffs:
                self.A[i, j] += a
            self.A[i, n + i] = 1.0 if sense == LE else -1.0
            self.b[i] = rhs
        # artificial slots start fixed at zero; activated only when needed
        self.upper[self.n_real:] = 0.0
        self.max_iterations = max_iterations or (50 * (m + total) + 1000)
        self.iterations = 0

        self.status = np.full(total, _AT_LOWER, dtype=np.int8)
        self.basis = np.zeros(m, dtype=int)
        self.Binv = np.eye(m)

    # -- setup ---------------------------------------------------------------

    def _install_basis(self):
        """Slack basis where feasible, artificial columns elsewhere."""
        n = self.n_struct
        struct_at_lower = self.lower[:n]
        resid = self.b - self.A[:, :n] @ struct_at_lower
        self.artificials = []
        for i in range(self.m):
            sigma = self.A[i, n + i]
            slack_val = sigma * resid[i]   # slack coefficient is +-1
            if slack_val >= 0.0:
                self.basis[i] = n + i
                self.status[n + i] = _BASIC
            else:
                art = self.n_real + i
                self.A[i, art] = 1.0 if resid[i] >= 0 else -1.0
                self.upper[art] = np.inf
                self.basis[i] = art
                self.status[art] = _BASIC
                self.artificials.append(art)
        self._refactorize()

    def _refactorize(self):
        try:
            self.Binv = np.linalg.inv(self.A[:, self.basis])
        except np.linalg.LinAlgError as exc:
            raise NumericalInstabilityError("basis matrix is singular") from exc

    # -- state ---------------------------------------------------------------

    def _values(self) -> np.ndarray:
        v = np.where(self.status == _AT_UPPER, self.upper, self.lower)
        v[self.basis] = 0.0
        xb = self.Binv @ (self.b - self.A @ v)
        v[self.basis] = xb
        return v

    # -- core loop -----------------------------------------------------------

    def _optimize(self, cost):
        """Run primal iterations for one phase; cost is maximized."""
        degenerate_streak = 0
        bland = False
        fixed = self.upper - self.lower <= 0.0
        since_refactor = 0
        while True:
            self.iterations += 1
            if self.iterations > self.max_iterations:
                raise IterationLimitError(
                    f"no optimum within {self.max_iterations} iterations"
                )
            v = self._values()
            xb = v[self.basis]
            duals = cost[self.basis] @ self.Binv
            reduced = cost - duals @ self.A
            improving = np.where(
                self.status == _AT_LOWER, reduced > self.tol,
                np.where(self.status == _AT_UPPER, reduced < -self.tol, False),
            )
            improving &= ~fixed
            candidates = np.flatnonzero(improving)
            if candidates.size == 0:
                return
            if bland:
                q = int(candidates[0])
            else:
                q = int(candidates[np.argmax(np.abs(reduced[candidates]))])

            w = self.Binv @ self.A[:, q]
            direction = 1.0 if self.status[q] == _AT_LOWER else -1.0
            delta = direction * w          # basic values move as xb - t*delta
            steps = np.full(self.m, np.inf)
            lb = self.lower[self.basis]
            ub = self.upper[self.basis]
            pos = delta > self.pivot_floor
            steps[pos] = (xb[pos] - lb[pos]) / delta[pos]
            neg = (delta < -self.pivot_floor) & np.isfinite(ub)
            steps[neg] = (xb[neg] - ub[neg]) / delta[neg]
            np.maximum(steps, 0.0, out=steps)

            t_flip = self.upper[q] - self.lower[q]
            t_row = steps.min() if self.m else np.inf
            if not np.isfinite(t_row) and not np.isfinite(t_flip):
                raise UnboundedProgramError("objective unbounded above")

            if t_flip <= t_row:
                # entering variable runs to its opposite bound; basis unchanged
                self.status[q] = _AT_UPPER if self.status[q] == _AT_LOWER else _AT_LOWER
                step = t_flip
            else:
                tie = np.flatnonzero(steps <= t_row + self.tol)
                r = int(tie[np.argmax(np.abs(delta[tie]))])
                if abs(w[r]) < self.pivot_floor:
                    raise NumericalInstabilityError(
                        f"pivot magnitude {abs(w[r]):.3e} below floor"
                    )
                leaving = self.basis[r]
                self.status[leaving] = _AT_UPPER if delta[r] < 0 else _AT_LOWER
                self.status[q] = _BASIC
                self.basis[r] = q
                pivot_row = self.Binv[r] / w[r]
                self.Binv -= np.outer(w, pivot_row)
                self.Binv[r] = pivot_row
                since_refactor += 1
                if since_refactor >= _REFACTOR_EVERY:
                    self._refactorize()
                    since_refactor = 0
                step = steps[r]

            if step <= self.tol:
                degenerate_streak += 1
                if degenerate_streak >= _DEGENERATE_STREAK:
                    bland = True
            else:
                degenerate_streak = 0
                bland = False

    # -- phases ---------------------------------------------------------------

    def solve(self) -> SimplexResult:
        self._install_basis()
        total = self.A.shape[1]
        if self.artificials:
            phase1_cost = np.zeros(total)
            phase1_cost[self.artificials] = -1.0
            self._optimize(phase1_cost)
            v = self._values()
            infeasibility = float(v[self.artificials].sum())
            scale = max(1.0, float(np.abs(self.b).max(initial=0.0)))
            if infeasibility > self.tol * scale:
                raise InfeasibleProgramError(
                    f"phase 1 left total infeasibility {infeasibility:.3e}"
                )
            self._retire_artificials()

        cost = np.zeros(total)
        cost[: self.n_struct] = self.objective_coeffs
        self._optimize(cost)
        v = self._values()
        self._certify(cost, v)
        values = v[: self.n_struct]
        # snap solver dust back onto the boxes
        lo = self.lower[: self.n_struct]
        hi = self.upper[: self.n_struct]
        values = np.clip(values, lo, np.where(np.isfinite(hi), hi, values))
        objective = float(self.objective_coeffs @ values)
        return SimplexResult(values=values, objective=objective,
                             iterations=self.iterations)

    def _retire_artificials(self):
        """Pin artificials to zero; pivot basic ones out where possible."""
        for art in self.artificials:
            self.lower[art] = self.upper[art] = 0.0
            if self.status[art] != _BASIC:
                self.status[art] = _AT_LOWER
        for r in range(self.m):
            art = self.basis[r]
            if art < self.n_real:
                continue
            row = self.Binv[r] @ self.A[:, : self.n_real]
            nonbasic = self.status[: self.n_real] != _BASIC
            usable = np.flatnonzero(nonbasic & (np.abs(row) > self.pivot_floor))
            if usable.size == 0:
                continue  # dependent row; artificial stays basic at zero
            q = int(usable[0])
            w = self.Binv @ self.A[:, q]
            self.status[art] = _AT_LOWER
            self.status[q] = _BASIC
            self.basis[r] = q
            pivot_row = self.Binv[r] / w[r]
            self.Binv -= np.outer(w, pivot_row)
            self.Binv[r] = pivot_row

    def _certify(self, cost, v):
        """Optimality and feasibility certificates on the final point."""
        scale = max(1.0, float(np.abs(self.b).max(initial=0.0)))
        row_resid = self.A @ v - self.b
        if np.abs(row_resid).max(initial=0.0) > 1e-6 * scale:
            raise NumericalInstabilityError("final basis violates row equations")
        duals = cost[self.basis] @ self.Binv
        reduced = cost - duals @ self.A
        bad_low = (self.status == _AT_LOWER) & (reduced > 10 * self.tol)
        bad_up = (self.status == _AT_UPPER) & (reduced < -10 * self.tol)
        movable = self.upper - self.lower > 0.0
        if ((bad_low | bad_up) & movable).any():
            raise NumericalInstabilityError("reduced costs fail the optimality test")


def simplex_solve(lp: LinearProgram, tol: float = DEFAULT_TOL,
                  pivot_floor: float = DEFAULT_PIVOT_FLOOR,
                  max_iterations: int = None) -> SimplexResult:
    """Maximize the program; raises on infeasible/unbounded/stalled solves."""
    if lp.n_vars == 0:
        for coeffs, sense, rhs in lp.rows:
            if (sense == LE and rhs < 0) or (sense == GE and rhs > 0):
                raise InfeasibleProgramError("constant row is violated")
        return SimplexResult(values=np.zeros(0), objective=0.0, iterations=0)
    solver = _BoundedSimplex(lp, tol, pivot_floor, max_iterations)
    solver.objective_coeffs = lp.objective
    return solver.solve()


def solve_lp(lp: LinearProgram, tol: float = DEFAULT_TOL, **kwargs) -> FractionalSolution:
    """Solve a relaxed placement program and unpack x, y from the variables."""
    if lp.shape is None:
        raise ValueError("program carries no (requests, mecs) shape to unpack")
    R, M = lp.shape
    result = simplex_solve(lp, tol=tol, **kwargs)
    x = result.values[: R * M].reshape(R, M)
    y = result.values[R * M : R * M + R]
    return FractionalSolution(x=x, y=y, objective=result.objective)


def lp_format(lp: LinearProgram) -> str:
    """Dump the program in a standard text interchange layout."""
    def term(j, a, lead):
        name = lp.var_name(j)
        if lead:
            return f"{a:.12g} {name}"
        sign = "-" if a < 0 else "+"
        return f"{sign} {abs(a):.12g} {name}"

    lines = ["Maximize"]
    obj_terms = [(j, a) for j, a in enumerate(lp.objective) if a != 0.0]
    if not obj_terms:
        obj_terms = [(0, 0.0)] if lp.n_vars else []
    parts = [term(j, a, i == 0) for i, (j, a) in enumerate(obj_terms)]
    lines.append(" obj: " + (" ".join(parts) if parts else "0"))
    lines.append("Subject To")
    for i, (coeffs, sense, rhs) in enumerate(lp.rows):
        parts = [term(j, a, k == 0) for k, (j, a) in enumerate(coeffs)]
        lines.append(f" c{i}: " + " ".join(parts) + f" {sense} {rhs:.12g}")
    lines.append("Bounds")
    for j in range(lp.n_vars):
        hi = "+inf" if not np.isfinite(lp.upper[j]) else f"{lp.upper[j]:.12g}"
        lines.append(f" {lp.lower[j]:.12g} <= {lp.var_name(j)} <= {hi}")
    lines.append("End")
    return "\n".join(lines) + "\n"
