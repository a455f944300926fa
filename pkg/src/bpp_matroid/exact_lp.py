"""Exact rational linear programming.

A revised simplex method over gmpy2 rationals.  Entering columns follow
Dantzig's rule until a run of degenerate pivots, then Bland's rule, which
rules out cycling.  Every
returned optimum is a basic feasible solution, i.e. a vertex of the feasible
polyhedron, and satisfies the constraints exactly.
"""

from dataclasses import dataclass, field
from fractions import Fraction

from gmpy2 import mpq

LE, EQ, GE = "<=", "==", ">="

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"

# consecutive degenerate pivots tolerated before switching to Bland's rule
DEGENERATE_LIMIT = 20

_ZERO = mpq(0)
_ONE = mpq(1)


def to_fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def _q(x):
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


@dataclass
class LinearProgram:
    """min/max c.x subject to rows (coeffs, relation, rhs) and x >= 0.

    Rows and the objective are sparse dicts {variable index: coefficient}.
    """

    num_vars: int
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    maximize: bool = False
    names: list | None = None

    def add_constraint(self, coeffs, relation, rhs):
        if relation not in (LE, EQ, GE):
            raise ValueError(f"bad relation {relation!r}")
        if not isinstance(coeffs, dict):
            coeffs = {j: c for j, c in enumerate(coeffs) if c}
        self.constraints.append((dict(coeffs), relation, Fraction(rhs)))

    def set_objective(self, coeffs, maximize=False):
        if not isinstance(coeffs, dict):
            coeffs = {j: c for j, c in enumerate(coeffs) if c}
        self.objective = dict(coeffs)
        self.maximize = maximize

    def row_value(self, coeffs, values):
        return sum((Fraction(c) * values[j] for j, c in coeffs.items()), Fraction(0))

    def is_feasible_point(self, values) -> bool:
        if any(v < 0 for v in values):
            return False
        for coeffs, rel, rhs in self.constraints:
            lhs = self.row_value(coeffs, values)
            if rel == LE and lhs > rhs or rel == GE and lhs < rhs or rel == EQ and lhs != rhs:
                return False
        return True

    def tight_rows(self, values):
        """Coefficient rows of constraints tight at ``values`` (bounds included)."""
        rows = []
        for coeffs, rel, rhs in self.constraints:
            if self.row_value(coeffs, values) == rhs:
                rows.append(dict(coeffs))
        for j, v in enumerate(values):
            if v == 0:
                rows.append({j: Fraction(1)})
        return rows

    def to_text(self) -> str:
        """One constraint per line, for diagnostics."""
        names = self.names or [f"x{j}" for j in range(self.num_vars)]

        def fmt(coeffs):
            terms = [f"{'+' if c >= 0 else '-'} {abs(Fraction(c))}*{names[j]}" for j, c in sorted(coeffs.items())]
            return " ".join(terms) if terms else "0"

        lines = [("maximize " if self.maximize else "minimize ") + fmt(self.objective)]
        for coeffs, rel, rhs in self.constraints:
            lines.append(f"{fmt(coeffs)} {rel} {rhs}")
        return "\n".join(lines)


@dataclass
class BasicSolution:
    status: str
    values: list = field(default_factory=list)
    basis: tuple = ()
    objective_value: Fraction | None = None
    duals: list = field(default_factory=list)

    @property
    def optimal(self):
        return self.status == OPTIMAL


class RevisedSimplex:
    """Primal revised simplex on  min c.x, A x = b, x >= 0  with b >= 0.

    Columns are sparse lists of (row, value).  The caller supplies a feasible
    starting basis (one column per row).  Columns can be appended between
    solves, which keeps the current basis feasible; this is what column
    generation relies on.
    """

    def __init__(self, rhs, columns, costs, basis, blocked=()):
        self.m = len(rhs)
        self.columns = [[(r, _q(v)) for r, v in col if v] for col in columns]
        self.costs = [_q(c) for c in costs]
        self.basis = list(basis)
        self.blocked = set(blocked)
        self.pivots = 0
        self.degenerate_run = 0
        self.bland = False
        if len(self.basis) != self.m:
            raise ValueError("basis must have one column per row")
        b = [_q(v) for v in rhs]
        # build B^-1 by Gauss-Jordan on the starting basis
        m = self.m
        mat = [[_ZERO] * m for _ in range(m)]
        for k, j in enumerate(self.basis):
            for r, v in self.columns[j]:
                mat[r][k] = v
        inv = [[_ONE if i == k else _ZERO for k in range(m)] for i in range(m)]
        for c in range(m):
            p = next((r for r in range(c, m) if mat[r][c] != 0), None)
            if p is None:
                raise ValueError("starting basis is singular")
            mat[c], mat[p] = mat[p], mat[c]
            inv[c], inv[p] = inv[p], inv[c]
            piv = mat[c][c]
            if piv != 1:
                mat[c] = [v / piv for v in mat[c]]
                inv[c] = [v / piv for v in inv[c]]
            for r in range(m):
                f = mat[r][c]
                if r != c and f != 0:
                    mat[r] = [a - f * b_ for a, b_ in zip(mat[r], mat[c])]
                    inv[r] = [a - f * b_ for a, b_ in zip(inv[r], inv[c])]
        # rows of inv now map b to the basic values in basis-position order
        self.binv = inv
        self.xb = [sum((inv[i][r] * b[r] for r in range(m) if b[r] != 0), _ZERO) for i in range(m)]
        if any(v < 0 for v in self.xb):
            raise ValueError("starting basis is not feasible")
        self._refresh_duals()

    def _refresh_duals(self):
        m = self.m
        y = [_ZERO] * m
        for i, j in enumerate(self.basis):
            cb = self.costs[j]
            if cb != 0:
                row = self.binv[i]
                for r in range(m):
                    if row[r] != 0:
                        y[r] += cb * row[r]
        self.y = y

    def set_costs(self, costs):
        self.costs = [_q(c) for c in costs]
        self._refresh_duals()

    def add_column(self, entries, cost) -> int:
        self.columns.append([(r, _q(v)) for r, v in entries if v])
        self.costs.append(_q(cost))
        return len(self.columns) - 1

    def reduced_cost(self, j):
        y = self.y
        return self.costs[j] - sum((y[r] * v for r, v in self.columns[j]), _ZERO)

    def _entering(self):
        in_basis = set(self.basis)
        y = self.y
        best, best_d = None, _ZERO
        for j, col in enumerate(self.columns):
            if j in in_basis or j in self.blocked:
                continue
            d = self.costs[j]
            for r, v in col:
                d -= y[r] * v
            if d < best_d:
                if self.bland:
                    return j, d
                best, best_d = j, d
        return best, (best_d if best is not None else None)

    def _ftran(self, j):
        m = self.m
        col = self.columns[j]
        u = [_ZERO] * m
        binv = self.binv
        for i in range(m):
            row = binv[i]
            acc = _ZERO
            for r, v in col:
                e = row[r]
                if e != 0:
                    acc += e * v
            u[i] = acc
        return u

    def step(self) -> str | None:
        """One pivot; returns a terminal status or None."""
        q, d = self._entering()
        if q is None:
            return OPTIMAL
        u = self._ftran(q)
        p = None
        best = None
        for i in range(self.m):
            if u[i] > 0:
                ratio = self.xb[i] / u[i]
                if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[p]):
                    best, p = ratio, i
        if p is None:
            return UNBOUNDED
        if best == 0:
            self.degenerate_run += 1
            if self.degenerate_run > DEGENERATE_LIMIT:
                self.bland = True
        else:
            self.degenerate_run = 0
            self.bland = False
        self._pivot(p, q, u, d)
        return None

    def _pivot(self, p, q, u, d):
        binv = self.binv
        piv = u[p]
        prow = [v / piv for v in binv[p]]
        binv[p] = prow
        theta = self.xb[p] / piv
        self.xb[p] = theta
        nz = [r for r, v in enumerate(prow) if v != 0]
        for i in range(self.m):
            f = u[i]
            if i == p or f == 0:
                continue
            row = binv[i]
            for r in nz:
                row[r] -= f * prow[r]
            self.xb[i] -= f * theta
        if d != 0:
            y = self.y
            for r in nz:
                y[r] += d * prow[r]
        self.basis[p] = q
        self.pivots += 1

    def solve(self, max_pivots=None) -> str:
        while True:
            status = self.step()
            if status is not None:
                return status
            if max_pivots is not None and self.pivots >= max_pivots:
                raise RuntimeError("simplex pivot limit reached")

    def values(self, count=None):
        count = len(self.columns) if count is None else count
        x = [_ZERO] * count
        for i, j in enumerate(self.basis):
            if j < count:
                x[j] = self.xb[i]
        return x

    def objective(self):
        return sum((self.costs[j] * self.xb[i] for i, j in enumerate(self.basis)), _ZERO)


def _standard_form(lp: LinearProgram):
    """Columns, rhs and a starting basis; artificials are appended last."""
    n = lp.num_vars
    columns = [[] for _ in range(n)]
    rhs = []
    signs = []
    slack_basis = {}
    need_artificial = []
    for i, (coeffs, rel, b) in enumerate(lp.constraints):
        sign = -1 if b < 0 else 1
        b = b * sign
        signs.append(sign)
        if sign < 0:
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        for j, c in coeffs.items():
            if c:
                columns[j].append((i, Fraction(c) * sign))
        rhs.append(b)
        if rel == LE:
            columns.append([(i, 1)])
            slack_basis[i] = len(columns) - 1
        elif rel == GE:
            columns.append([(i, -1)])
            need_artificial.append(i)
        else:
            need_artificial.append(i)
    first_artificial = len(columns)
    basis = [None] * len(rhs)
    for i, j in slack_basis.items():
        basis[i] = j
    for i in need_artificial:
        columns.append([(i, 1)])
        basis[i] = len(columns) - 1
    return columns, rhs, basis, first_artificial, signs


def _phase_one(lp: LinearProgram):
    columns, rhs, basis, first_art, signs = _standard_form(lp)
    costs = [0] * first_art + [1] * (len(columns) - first_art)
    sx = RevisedSimplex(rhs, columns, costs, basis)
    if first_art < len(columns):
        sx.solve()
        if sx.objective() != 0:
            return None, first_art
        _drive_out_artificials(sx, first_art)
    sx.blocked = set(range(first_art, len(columns)))
    sx.row_signs = signs
    return sx, first_art


def _drive_out_artificials(sx: RevisedSimplex, first_art: int):
    """Pivot zero-level artificials out of the basis where the row allows."""
    for p in range(sx.m):
        if sx.basis[p] < first_art:
            continue
        in_basis = set(sx.basis)
        row = sx.binv[p]
        for j in range(first_art):
            if j in in_basis:
                continue
            val = sum((row[r] * v for r, v in sx.columns[j]), _ZERO)
            if val != 0:
                u = sx._ftran(j)
                sx._pivot(p, j, u, sx.reduced_cost(j))
                break
        # a row with no candidate is redundant; its artificial stays at zero


def _solution(lp, sx, first_art, status):
    vals = [to_fraction(v) for v in sx.values(lp.num_vars)]
    obj = sum((Fraction(c) * vals[j] for j, c in lp.objective.items()), Fraction(0))
    obj_sign = -1 if lp.maximize else 1
    duals = [to_fraction(v) * sign * obj_sign for v, sign in zip(sx.y, sx.row_signs)]
    return BasicSolution(status, vals, tuple(sorted(j for j in sx.basis if j < first_art)), obj, duals)


def feasible_vertex(lp: LinearProgram) -> BasicSolution:
    """Any basic feasible solution (phase 1 only), or infeasible."""
    sx, first_art = _phase_one(lp)
    if sx is None:
        return BasicSolution(INFEASIBLE)
    return _solution(lp, sx, first_art, OPTIMAL)


def solve_lp(lp: LinearProgram) -> BasicSolution:
    """Optimal vertex of ``lp``, or an infeasible/unbounded status."""
    sx, first_art = _phase_one(lp)
    if sx is None:
        return BasicSolution(INFEASIBLE)
    sign = -1 if lp.maximize else 1
    costs = [0] * len(sx.columns)
    for j, c in lp.objective.items():
        costs[j] = Fraction(c) * sign
    sx.set_costs(costs)
    status = sx.solve()
    if status == UNBOUNDED:
        return BasicSolution(UNBOUNDED)
    return _solution(lp, sx, first_art, OPTIMAL)
