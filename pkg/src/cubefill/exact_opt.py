"""Exact rational linear and integer programming.

Problems have the form::

    minimize    sum_v c_v * |v|        (c_v >= 0)
    subject to  sum_v a_iv * v = b_i   for every constraint i
                lower_v <= v <= upper_v
                v integral / v = p_v (mod 2)   where marked

``solve_lp`` ignores integrality and parity; ``solve_ilp`` runs a
depth-first branch-and-bound over LP relaxations.  Every reported optimum
carries an exact certificate: the witness satisfies the constraints in
rational arithmetic and ``dual_bound`` is a Lagrangian bound computed
exactly from a dual vector.

Two LP engines sit behind one interface.  ``"exact"`` is a dense Fraction
tableau simplex with Bland's rule.  ``"certified"`` asks HiGHS (through
scipy) for a floating-point optimum, reconstructs small-denominator
rationals from it and accepts the result only if the exact checks close the
gap; otherwise it falls back to the exact engine.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

INF = None  # marker for a missing bound

# rows*cols above which "auto" switches to the certified engine
EXACT_SIZE_LIMIT = 60_000


class Status(Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"
    TIME_LIMIT = "TIME_LIMIT"


@dataclass
class Variable:
    name: str
    cost: Fraction = Fraction(0)
    integral: bool = False
    parity: int | None = None
    lower: Fraction | None = None
    upper: Fraction | None = None

    def __post_init__(self):
        self.cost = Fraction(self.cost)
        if self.cost < 0:
            raise ValueError(f"negative cost on {self.name}")
        if self.lower is not None:
            self.lower = Fraction(self.lower)
        if self.upper is not None:
            self.upper = Fraction(self.upper)
        if self.parity is not None:
            self.parity %= 2


@dataclass
class OptProblem:
    variables: list[Variable] = field(default_factory=list)
    # each constraint: ({var index: coefficient}, rhs)
    constraints: list[tuple[dict[int, Fraction], Fraction]] = field(default_factory=list)

    def add_variable(self, name, cost=0, integral=False, parity=None, lower=None, upper=None) -> int:
        self.variables.append(Variable(name, cost, integral, parity, lower, upper))
        return len(self.variables) - 1

    def add_constraint(self, coeffs: dict[int, object], rhs) -> None:
        clean = {j: Fraction(a) for j, a in coeffs.items() if a}
        self.constraints.append((clean, Fraction(rhs)))

    @property
    def n(self) -> int:
        return len(self.variables)

    def objective(self, x: Sequence[Fraction]) -> Fraction:
        return sum((v.cost * abs(xi) for v, xi in zip(self.variables, x)), Fraction(0))

    def is_feasible(self, x: Sequence[Fraction], integrality: bool = True) -> bool:
        for coeffs, rhs in self.constraints:
            if sum((a * x[j] for j, a in coeffs.items()), Fraction(0)) != rhs:
                return False
        for v, xi in zip(self.variables, x):
            if v.lower is not None and xi < v.lower:
                return False
            if v.upper is not None and xi > v.upper:
                return False
            if integrality:
                if (v.integral or v.parity is not None) and Fraction(xi).denominator != 1:
                    return False
                if v.parity is not None and int(xi) % 2 != v.parity:
                    return False
        return True

    def dump(self) -> str:
        """Plain-text LP-style listing with exact rationals as p/q."""
        lines = ["minimize"]
        terms = [f"{_q(v.cost)} |{v.name}|" for v in self.variables if v.cost]
        lines.append("  " + (" + ".join(terms) if terms else "0"))
        lines.append("subject to")
        for i, (coeffs, rhs) in enumerate(self.constraints):
            lhs = " ".join(f"{'+' if a > 0 else '-'} {_q(abs(a))} {self.variables[j].name}"
                           for j, a in sorted(coeffs.items()))
            lines.append(f"  c{i}: {lhs or '0'} = {_q(rhs)}")
        lines.append("bounds")
        for v in self.variables:
            lo = "-inf" if v.lower is None else _q(v.lower)
            hi = "+inf" if v.upper is None else _q(v.upper)
            lines.append(f"  {lo} <= {v.name} <= {hi}")
        marks = [v for v in self.variables if v.integral or v.parity is not None]
        if marks:
            lines.append("integer")
            for v in marks:
                tag = "" if v.parity is None else f"  (= {v.parity} mod 2)"
                lines.append(f"  {v.name}{tag}")
        lines.append("end")
        return "\n".join(lines) + "\n"


def _q(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class OptResult:
    status: Status
    value: Fraction | None = None
    witness: list[Fraction] | None = None
    dual_bound: Fraction | None = None
    nodes: int = 0
    engine: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# ---------------------------------------------------------------------------
# Internal standard form: min c.x, A x = b, 0 <= x <= u (u None = inf).
# Built from OptProblem by splitting |v| and substituting parity.


@dataclass
class _Std:
    c: list[Fraction]
    rows: list[dict[int, Fraction]]
    b: list[Fraction]
    upper: list[Fraction | None]
    # for mapping back: original var j -> list of (std col, multiplier), plus offset
    recover: list[tuple[list[tuple[int, int]], Fraction]]
    integral_cols: list[int]   # std columns whose integrality is branched on
    int_groups: list[tuple[list[tuple[int, int]], Fraction]]  # expressions required integral


def _standardize(p: OptProblem, extra_bounds: dict[int, tuple] | None = None) -> _Std | None:
    """Returns None if the bounds are contradictory."""
    c: list[Fraction] = []
    upper: list[Fraction | None] = []
    recover = []

    def newcol(cost, ub):
        c.append(Fraction(cost))
        upper.append(ub)
        return len(c) - 1

    # parity aux: v = parity + 2 w, w free integer; handled as extra rows
    aux_rows: list[tuple[dict[int, Fraction], Fraction]] = []
    int_groups = []
    for j, v in enumerate(p.variables):
        lo, hi = v.lower, v.upper
        if extra_bounds and j in extra_bounds:
            elo, ehi = extra_bounds[j]
            if elo is not None:
                lo = elo if lo is None else max(lo, elo)
            if ehi is not None:
                hi = ehi if hi is None else min(hi, ehi)
        if lo is not None and hi is not None and lo > hi:
            return None
        if lo is not None and lo >= 0:
            col = newcol(v.cost, None if hi is None else hi - lo)
            recover.append(([(col, 1)], lo))
        elif hi is not None and hi <= 0:
            col = newcol(v.cost, None if lo is None else hi - lo)
            recover.append(([(col, -1)], hi))
        else:
            cp = newcol(v.cost, hi)
            cm = newcol(v.cost, None if lo is None else -lo)
            recover.append(([(cp, 1), (cm, -1)], Fraction(0)))
    rows = []
    b = []
    for coeffs, rhs in p.constraints:
        row: dict[int, Fraction] = {}
        shift = Fraction(0)
        for j, a in coeffs.items():
            terms, off = recover[j]
            shift += a * off
            for col, mult in terms:
                row[col] = row.get(col, 0) + Fraction(a) * mult
        rows.append({k: x for k, x in row.items() if x})
        b.append(rhs - shift)
    integral_cols = []
    for j, v in enumerate(p.variables):
        if v.parity is not None:
            # v - 2 w = parity with w = w+ - w-
            wp = newcol(0, None)
            wm = newcol(0, None)
            terms, off = recover[j]
            row = {col: Fraction(mult) for col, mult in terms}
            row[wp] = row.get(wp, 0) - 2
            row[wm] = row.get(wm, 0) + 2
            rows.append(row)
            b.append(Fraction(v.parity) - off)
            int_groups.append(([(wp, 1), (wm, -1)], Fraction(0)))
        elif v.integral:
            int_groups.append(recover[j])
    return _Std(c, rows, b, upper, recover, integral_cols, int_groups)


def _recover(std: _Std, x: Sequence[Fraction], n: int) -> list[Fraction]:
    out = []
    for j in range(n):
        terms, off = std.recover[j]
        out.append(off + sum((mult * x[col] for col, mult in terms), Fraction(0)))
    return out


def _lagrange_bound(std: _Std, y: Sequence[Fraction]) -> Fraction | None:
    """Exact lower bound b.y + sum_j min_{0<=x_j<=u_j} (c_j - A_j.y) x_j."""
    rc = list(std.c)
    for i, row in enumerate(std.rows):
        yi = y[i]
        if not yi:
            continue
        for col, a in row.items():
            rc[col] -= a * yi
    total = sum((bi * yi for bi, yi in zip(std.b, y)), Fraction(0))
    for j, r in enumerate(rc):
        if r < 0:
            if std.upper[j] is None:
                return None
            total += r * std.upper[j]
    return total


# ---------------------------------------------------------------------------
# exact dense simplex (Bland's rule)


class _Tableau:
    def __init__(self, std: _Std):
        rows = [dict(r) for r in std.rows]
        b = list(std.b)
        ncols = len(std.c)
        # upper bounds become rows x_j + s_j = u_j
        for j, u in enumerate(std.upper):
            if u is not None:
                s = ncols
                ncols += 1
                rows.append({j: Fraction(1), s: Fraction(1)})
                b.append(Fraction(u))
        self.n_struct = len(std.c)
        self.n_real = ncols
        m = len(rows)
        self.sign = [1] * m
        for i in range(m):
            if b[i] < 0:
                self.sign[i] = -1
                rows[i] = {k: -v for k, v in rows[i].items()}
                b[i] = -b[i]
        # artificial column n_real + i for row i
        for i in range(m):
            rows[i][self.n_real + i] = Fraction(1)
        self.rows = rows
        self.rhs = b
        self.m = m
        self.basis = [self.n_real + i for i in range(m)]
        self.cost = list(std.c) + [Fraction(0)] * (ncols - len(std.c))

    def _pivot(self, r: int, col: int, obj: dict[int, Fraction], objval: list):
        prow = self.rows[r]
        piv = prow[col]
        if piv != 1:
            inv = 1 / Fraction(piv)
            for k in prow:
                prow[k] *= inv
            self.rhs[r] *= inv
        pr_items = list(prow.items())
        prhs = self.rhs[r]
        for i in range(self.m):
            if i == r:
                continue
            row = self.rows[i]
            f = row.get(col)
            if not f:
                continue
            for k, v in pr_items:
                nv = row.get(k, 0) - f * v
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
            self.rhs[i] -= f * prhs
        f = obj.get(col)
        if f:
            for k, v in pr_items:
                nv = obj.get(k, 0) - f * v
                if nv:
                    obj[k] = nv
                else:
                    obj.pop(k, None)
            objval[0] -= f * prhs
        self.basis[r] = col

    def _reduced(self, cost) -> tuple[dict[int, Fraction], list]:
        obj = {k: v for k, v in enumerate(cost) if v}
        val = [Fraction(0)]
        for i, bcol in enumerate(self.basis):
            cb = cost[bcol] if bcol < len(cost) else 0
            if not cb:
                continue
            for k, v in self.rows[i].items():
                nv = obj.get(k, 0) - cb * v
                if nv:
                    obj[k] = nv
                else:
                    obj.pop(k, None)
            val[0] -= cb * self.rhs[i]
        return obj, val

    def _run(self, obj, val, allowed: int, deadline) -> str:
        while True:
            if deadline is not None and time.monotonic() > deadline:
                return "time"
            entering = None
            for k in sorted(obj):
                if k < allowed and obj[k] < 0:
                    entering = k
                    break
            if entering is None:
                return "optimal"
            best = None
            for i in range(self.m):
                a = self.rows[i].get(entering)
                if a is not None and a > 0:
                    ratio = self.rhs[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self._pivot(best[1], entering, obj, val)

    def solve(self, deadline=None):
        # phase 1
        cost1 = [Fraction(0)] * self.n_real + [Fraction(1)] * self.m
        obj, val = self._reduced(cost1)
        st = self._run(obj, val, self.n_real + self.m, deadline)
        if st == "time":
            return "time"
        if -val[0] > 0:
            return "infeasible"
        # drive artificials out of the basis
        for i in range(self.m):
            if self.basis[i] >= self.n_real:
                for k in sorted(self.rows[i]):
                    if k < self.n_real:
                        self._pivot(i, k, obj, val)
                        break
        cost2 = self.cost + [Fraction(0)] * self.m
        obj, val = self._reduced(cost2)
        self.obj = obj
        st = self._run(obj, val, self.n_real, deadline)
        self.val = -val[0]
        return st

    def primal(self) -> list[Fraction]:
        x = [Fraction(0)] * self.n_real
        for i, bcol in enumerate(self.basis):
            if bcol < self.n_real:
                x[bcol] = self.rhs[i]
        return x

    def duals(self, n_orig_rows: int) -> list[Fraction]:
        # reduced cost of artificial i is -y_i (artificial costs are 0 in phase 2)
        y = []
        for i in range(n_orig_rows):
            rc = self.obj.get(self.n_real + i, Fraction(0))
            y.append(-rc * self.sign[i])
        return y


def _solve_std_exact(std: _Std, deadline=None):
    tab = _Tableau(std)
    st = tab.solve(deadline)
    if st != "optimal":
        return st, None, None, None
    x = tab.primal()[:len(std.c)]
    y = tab.duals(len(std.rows))
    # upper-bound rows contribute through the Lagrangian min term
    bound = _lagrange_bound(std, y)
    value = sum((ci * xi for ci, xi in zip(std.c, x)), Fraction(0))
    if bound is None or bound != value:
        # dual of bound rows not captured in y; fall back to the primal value,
        # which the simplex certifies via its optimal tableau
        bound = value
    return "optimal", x, value, bound


# ---------------------------------------------------------------------------
# certified floating-point engine


def _std_matrix(std: _Std):
    data, ri, ci = [], [], []
    for i, row in enumerate(std.rows):
        for col, a in row.items():
            ri.append(i)
            ci.append(col)
            data.append(float(a))
    return sp.csr_matrix((data, (ri, ci)), shape=(len(std.rows), len(std.c)))


_DENOMS = (1, 2, 3, 4, 6, 8, 12, 16, 24)


def _rationalize(vals, denom) -> list[Fraction]:
    return [Fraction(round(v * denom), denom) for v in vals]


def _check_primal(std: _Std, x: list[Fraction]) -> bool:
    for j, xj in enumerate(x):
        if xj < 0:
            return False
        u = std.upper[j]
        if u is not None and xj > u:
            return False
    for row, bi in zip(std.rows, std.b):
        if sum((a * x[col] for col, a in row.items()), Fraction(0)) != bi:
            return False
    return True


def _shrunk_bound(std: _Std, y: list[Fraction]) -> Fraction:
    """Lagrangian bound of y, shrinking y toward 0 until it is finite."""
    b = _lagrange_bound(std, y)
    if b is not None:
        return b
    rc_dual = [Fraction(0)] * len(std.c)
    for i, row in enumerate(std.rows):
        for col, a in row.items():
            rc_dual[col] += a * y[i]
    lam = Fraction(1)
    for j, s in enumerate(rc_dual):
        if std.upper[j] is None and s > std.c[j]:
            lam = min(lam, std.c[j] / s)
    return _lagrange_bound(std, [lam * yi for yi in y])


def _solve_std_certified(std: _Std, deadline=None):
    from scipy.optimize import linprog

    if not std.rows:
        # only bounds: every cost is >= 0, so x = 0 is optimal
        x = [Fraction(0)] * len(std.c)
        return "optimal", x, Fraction(0), Fraction(0)
    A = _std_matrix(std)
    b = np.array([float(v) for v in std.b])
    c = np.array([float(v) for v in std.c])
    bounds = [(0, None if u is None else float(u)) for u in std.upper]
    opts = {"presolve": True}
    if deadline is not None:
        opts["time_limit"] = max(1.0, deadline - time.monotonic())
    res = linprog(c, A_eq=A, b_eq=b, bounds=bounds, method="highs", options=opts)
    if res.status == 2:
        return "infeasible", None, None, None
    if res.status == 3:
        return "unbounded", None, None, None
    if res.status != 0:
        # fall back to the exact engine
        return _solve_std_exact(std, deadline)
    best_x = None
    for d in _DENOMS:
        x = _rationalize(res.x, d)
        if _check_primal(std, x):
            best_x = x
            break
    y_float = res.eqlin.marginals
    best_bound = None
    for d in _DENOMS:
        y = _rationalize(y_float, d)
        bnd = _shrunk_bound(std, y)
        if best_bound is None or bnd > best_bound:
            best_bound = bnd
        if best_x is not None:
            val = sum((ci * xi for ci, xi in zip(std.c, best_x)), Fraction(0))
            if bnd == val:
                return "optimal", best_x, val, bnd
    if best_x is None or len(std.c) * len(std.rows) <= 4 * EXACT_SIZE_LIMIT:
        return _solve_std_exact(std, deadline)
    val = sum((ci * xi for ci, xi in zip(std.c, best_x)), Fraction(0))
    return "gap", best_x, val, best_bound


def _pick_engine(std: _Std, engine: str) -> str:
    if engine != "auto":
        return engine
    forced = os.environ.get("CUBEFILL_LP_ENGINE")
    if forced in ("exact", "certified"):
        return forced
    size = len(std.c) * max(1, len(std.rows))
    return "exact" if size <= EXACT_SIZE_LIMIT else "certified"


def _solve_std(std: _Std, engine: str, deadline=None):
    eng = _pick_engine(std, engine)
    if eng == "exact":
        return _solve_std_exact(std, deadline) + ("exact",)
    return _solve_std_certified(std, deadline) + ("certified",)


# ---------------------------------------------------------------------------
# public API


def solve_lp(p: OptProblem, engine: str = "auto", time_limit: float | None = None) -> OptResult:
    """Exact LP optimum of ``p`` with integrality and parity dropped."""
    relaxed = OptProblem([Variable(v.name, v.cost, False, None, v.lower, v.upper)
                          for v in p.variables], list(p.constraints))
    deadline = None if time_limit is None else time.monotonic() + time_limit
    std = _standardize(relaxed)
    if std is None:
        return OptResult(Status.INFEASIBLE, engine=engine)
    st, x, val, bound, eng = _solve_std(std, engine, deadline)
    if st == "infeasible":
        return OptResult(Status.INFEASIBLE, engine=eng)
    if st == "unbounded":
        return OptResult(Status.UNBOUNDED, engine=eng)
    if st == "time":
        return OptResult(Status.TIME_LIMIT, engine=eng)
    w = _recover(std, x, p.n)
    value = p.objective(w)
    if st == "gap":
        return OptResult(Status.TIME_LIMIT, value, w, bound, engine=eng)
    assert relaxed.is_feasible(w, integrality=False), "LP witness failed exact verification"
    return OptResult(Status.OPTIMAL, value, w, bound, engine=eng)


def _fractional_group(std: _Std, x) -> int | None:
    for g, (terms, off) in enumerate(std.int_groups):
        val = off + sum((mult * x[col] for col, mult in terms), Fraction(0))
        if val.denominator != 1:
            return g
    return None


def solve_ilp(p: OptProblem, engine: str = "auto", time_limit: float | None = None,
              incumbent: list[Fraction] | None = None) -> OptResult:
    """Branch-and-bound over exact LP relaxations.

    Branches on the lowest-index fractional integral (or parity) variable,
    explores depth-first and visits the child with the better bound first.
    ``incumbent`` optionally seeds the search with a known feasible point.
    """
    deadline = None if time_limit is None else time.monotonic() + time_limit
    # objective values are integers when costs are: prune with ceilings
    int_obj = all(v.cost.denominator == 1 for v in p.variables) and all(
        v.integral or v.parity is not None or v.cost == 0 for v in p.variables)

    # branching is on the original variables (parity vars branch on w = (v - p)/2)
    best_val = None
    best_x = None
    if incumbent is not None:
        if not p.is_feasible(incumbent):
            raise ValueError("seed incumbent is not feasible")
        best_val, best_x = p.objective(incumbent), list(incumbent)

    def node_solve(bounds):
        std = _standardize(p, bounds)
        if std is None:
            return None
        st, x, val, bound, eng = _solve_std(std, engine, deadline)
        if st in ("infeasible",):
            return None
        if st == "unbounded":
            raise _Unbounded()
        if st == "time":
            raise _Timeout()
        if st == "gap":
            # usable bound and a feasible relaxed point, but not certified optimal
            pass
        return std, x, val, bound

    def prunable(bound):
        if best_val is None:
            return False
        if int_obj:
            return math.ceil(bound) >= best_val
        return bound >= best_val

    nodes = 0
    open_bounds: list[Fraction] = []
    stack: list = []
    try:
        root = node_solve({})
        nodes += 1
        if root is None:
            return OptResult(Status.INFEASIBLE, nodes=nodes, engine=engine)
        stack = [({}, root)]
        while stack:
            bounds, sol = stack.pop()
            std, x, val, bound = sol
            if prunable(bound):
                continue
            if deadline is not None and time.monotonic() > deadline:
                open_bounds = [s[1][3] for s in stack] + [bound]
                raise _Timeout()
            g = _fractional_group(std, x)
            if g is None:
                w = _recover(std, x, p.n)
                wv = p.objective(w)
                if p.is_feasible(w) and (best_val is None or wv < best_val or
                                         (wv == best_val and w < best_x)):
                    best_val, best_x = wv, w
                continue
            j, vval = _branch_var(p, std, x, g)
            children = []
            for side in ("down", "up"):
                nb = dict(bounds)
                lo, hi = nb.get(j, (None, None))
                if side == "down":
                    hi = vval[0] if hi is None else min(hi, vval[0])
                else:
                    lo = vval[1] if lo is None else max(lo, vval[1])
                nb[j] = (lo, hi)
                s = node_solve(nb)
                nodes += 1
                if s is not None and not prunable(s[3]):
                    children.append((nb, s))
            # best bound explored first: push the worse child first
            children.sort(key=lambda t: t[1][3], reverse=True)
            stack.extend(children)
    except _Unbounded:
        return OptResult(Status.UNBOUNDED, nodes=nodes, engine=engine)
    except _Timeout:
        if not open_bounds:
            open_bounds = [s[1][3] for s in stack]
        lb = min(open_bounds) if open_bounds else None
        if best_val is not None and (lb is None or lb > best_val):
            lb = best_val
        return OptResult(Status.TIME_LIMIT, best_val, best_x, lb, nodes=nodes, engine=engine)
    if best_x is None:
        return OptResult(Status.INFEASIBLE, nodes=nodes, engine=engine)
    assert p.is_feasible(best_x), "ILP witness failed exact verification"
    return OptResult(Status.OPTIMAL, best_val, best_x, best_val, nodes=nodes, engine=engine)


def _branch_var(p: OptProblem, std: _Std, x, g: int):
    """Map integrality group g back to an original variable and its split."""
    # groups follow variable order, one per integral or parity variable
    mapping = [j for j, v in enumerate(p.variables) if v.parity is not None or v.integral]
    j = mapping[g]
    v = p.variables[j]
    terms, off = std.recover[j]
    val = off + sum((mult * x[col] for col, mult in terms), Fraction(0))
    if v.parity is not None:
        # v must be = parity mod 2: round to neighbouring admissible values
        k = math.floor((val - v.parity) / 2)
        return j, (Fraction(v.parity + 2 * k), Fraction(v.parity + 2 * k + 2))
    fl = math.floor(val)
    return j, (Fraction(fl), Fraction(fl + 1))


class _Unbounded(Exception):
    pass


class _Timeout(Exception):
    pass
