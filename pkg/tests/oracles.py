"""Independent brute-force oracles used to cross-check the solvers."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from cubefill.chain import Chain, Ring
from cubefill.exact_opt import OptProblem
from cubefill.grid import GridScale, cell_boundary, cells_in_box

BOX = 3


def enumerate_min(domains, costs, constraints):
    """Exhaustive minimum of sum(costs[j] * |x_j|) over the product of domains.

    ``constraints`` holds (coeffs, rhs, modulus) with modulus None for an
    exact equation.  Each constraint is checked as soon as its last
    variable is fixed; partial costs prune only assignments that cannot
    beat the incumbent, so the search stays exhaustive.
    """
    n = len(domains)
    closing: list[list[int]] = [[] for _ in range(n)]
    free = []
    for i, (coeffs, rhs, mod) in enumerate(constraints):
        if coeffs:
            closing[max(coeffs)].append(i)
        else:
            free.append(i)
    for i in free:
        coeffs, rhs, mod = constraints[i]
        if (rhs % mod if mod else rhs) != 0:
            return None, None
    best = [None, None]
    x = [0] * n

    def ok(i):
        coeffs, rhs, mod = constraints[i]
        s = sum(a * x[j] for j, a in coeffs.items()) - rhs
        return s % mod == 0 if mod else s == 0

    def rec(j, cost):
        if best[0] is not None and cost >= best[0]:
            return
        if j == n:
            best[0], best[1] = cost, list(x)
            return
        for v in sorted(domains[j], key=abs):
            x[j] = v
            if all(ok(i) for i in closing[j]):
                rec(j + 1, cost + costs[j] * abs(v))
        x[j] = 0

    rec(0, Fraction(0))
    return best[0], best[1]


def brute_force_problem(p: OptProblem):
    """Enumerate an all-integral OptProblem over [-BOX, BOX] (intersected with its bounds)."""
    domains = []
    for v in p.variables:
        lo = -BOX if v.lower is None else max(-BOX, int(v.lower))
        hi = BOX if v.upper is None else min(BOX, int(v.upper))
        vals = [t for t in range(lo, hi + 1) if v.parity is None or t % 2 == v.parity]
        domains.append(vals)
    cons = [(coeffs, rhs, None) for coeffs, rhs in p.constraints]
    return enumerate_min(domains, [v.cost for v in p.variables], cons)


def brute_force_fill(T: Chain, cells, ring: Ring):
    """min mass U over U supported on ``cells`` with coefficients in the box and dU = T."""
    rows: dict = {}
    for j, c in enumerate(cells):
        for face, s in cell_boundary(c):
            rows.setdefault(face, {})[j] = s
    for face in T.support():
        rows.setdefault(face, {})
    mod = 2 if ring is Ring.MOD2 else None
    cons = [(rows[f], T[f], mod) for f in sorted(rows)]
    dom = [0, 1] if ring is Ring.MOD2 else list(range(-BOX, BOX + 1))
    val, x = enumerate_min([dom] * len(cells), [Fraction(1)] * len(cells), cons)
    return val


def brute_force_noa(A: Chain, cells):
    """min l1 of an integral cycle on ``cells`` congruent to A mod 2, coefficients in the box."""
    rows: dict = {}
    for j, c in enumerate(cells):
        for face, s in cell_boundary(c):
            rows.setdefault(face, {})[j] = s
    cons = [(rows[f], 0, None) for f in sorted(rows)]
    domains = [[t for t in range(-BOX, BOX + 1) if t % 2 == (1 if c in A.coeffs else 0)] for c in cells]
    val, _ = enumerate_min(domains, [Fraction(1)] * len(cells), cons)
    return val


def bound_program(p: OptProblem, box: int = BOX) -> OptProblem:
    for v in p.variables:
        v.lower = Fraction(-box) if v.lower is None else max(v.lower, Fraction(-box))
        v.upper = Fraction(box) if v.upper is None else min(v.upper, Fraction(box))
    return p


# instance families with at most 12 candidate cells

FILL_BOXES = [((2, 3), 2), ((3, 4), 2), ((1, 1, 2), 3), ((2, 1, 1), 3), ((1, 2, 1), 3), ((2, 2), 2)]
NOA_BOXES = [((2, 2), 1), ((1, 1, 2), 2), ((1, 2, 1), 2)]


def random_fill_instance(rng: np.random.Generator):
    shape, N = FILL_BOXES[int(rng.integers(len(FILL_BOXES)))]
    scale = GridScale(1, N)
    top = cells_in_box((0,) * N, shape, N if N == 2 else 2)
    d = top[0].dim - 1
    if len(top) > 12:
        top = [top[int(i)] for i in sorted(rng.choice(len(top), 12, replace=False))]
    ring = [Ring.INT, Ring.MOD2][int(rng.integers(2))]
    coeffs = {c: int(rng.integers(-2, 3)) for c in top if rng.random() < 0.5}
    U = Chain(Ring.INT, scale, d + 1, coeffs)
    T = U.boundary()
    if ring is Ring.MOD2:
        T = T.mod2()
    return T, top, ring


def random_noa_instance(rng: np.random.Generator):
    shape, d = NOA_BOXES[int(rng.integers(len(NOA_BOXES)))]
    N = len(shape)
    scale = GridScale(1, N)
    cells = cells_in_box((0,) * N, shape, d)
    assert len(cells) <= 12
    tops = cells_in_box((0,) * N, shape, d + 1)
    B = Chain(Ring.MOD2, scale, d + 1, {c: 1 for c in tops if rng.random() < 0.5})
    A = B.boundary() if B else Chain.zero(Ring.MOD2, scale, d)
    return A, cells


def random_generic_instance(rng: np.random.Generator) -> OptProblem:
    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 4))
    p = OptProblem()
    for j in range(n):
        parity = int(rng.integers(2)) if rng.random() < 0.3 else None
        p.add_variable(f"x{j}", int(rng.integers(0, 4)), integral=True, parity=parity,
                       lower=-BOX, upper=BOX)
    for _ in range(m):
        coeffs = {j: int(rng.integers(-2, 3)) for j in range(n)}
        p.add_constraint(coeffs, int(rng.integers(-4, 5)))
    return p
