"""Pseudo-orientations of mod-2 cycles and halving of even fillings.

A pseudo-orientation of a mod-2 cycle ``A`` is an integral cycle ``R`` with
``R = A (mod 2)``.  Its minimal mass is the nonorientability area NOA(A).
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction

from .chain import Chain, ChainError, Ring
from .exact_opt import OptProblem, Status, solve_ilp
from .filling import _boundary_rows, candidate_boxes, fv, region_certifies
from .grid import GridCell, cell_boundary, cells_in_box


@dataclass(frozen=True)
class PseudoOrientation:
    R: Chain
    target: Chain

    def validate(self) -> None:
        if self.R.ring is not Ring.INT or self.target.ring is not Ring.MOD2:
            raise ChainError("pseudo-orientation needs an integral R and a mod-2 target")
        if self.R.dim > 0 and not self.R.boundary().is_zero():
            raise ChainError("R is not a cycle")
        if self.R.mod2() != self.target:
            bad = sorted(self.R.mod2().support() ^ self.target.support())[0]
            raise ChainError(f"R disagrees with the target mod 2 on {bad}")


@dataclass
class OrientabilityReport:
    orientable: bool
    witness: object  # Chain with +-1 coefficients, or a closed walk of cells
    pseudomanifold: bool


@dataclass
class NOAResult:
    value: Fraction | None
    R: PseudoOrientation | None
    certified_region: bool
    status: Status
    lower_bound: Fraction | None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _require_mod2_cycle(A: Chain) -> Chain:
    if A.ring is not Ring.MOD2:
        A = A.mod2()
    if A.dim > 0 and not A.boundary().is_zero():
        raise ChainError("A is not a mod-2 cycle")
    return A


def _face_incidence(cells) -> dict[GridCell, list[tuple[GridCell, int]]]:
    inc: dict[GridCell, list[tuple[GridCell, int]]] = defaultdict(list)
    for c in sorted(cells):
        for face, s in cell_boundary(c):
            inc[face].append((c, s))
    return inc


def is_pseudomanifold(A: Chain) -> bool:
    if A.dim == 0:
        return True
    inc = _face_incidence(A.support())
    return all(len(v) == 2 for v in inc.values())


def _propagate(A: Chain):
    """Spread signs across shared faces so neighbouring cells cancel there.

    Returns (signs, parent, conflict): the BFS parent map serves witness
    walks, and conflict is (face, cell, other) for the first face at which
    the spanning-tree signs fail to cancel, else None.
    """
    inc = _face_incidence(A.support())
    signs: dict[GridCell, int] = {}
    parent: dict[GridCell, GridCell | None] = {}
    conflict = None
    for root in sorted(A.support()):
        if root in signs:
            continue
        signs[root] = 1
        parent[root] = None
        queue = deque([root])
        while queue:
            c = queue.popleft()
            for face, s in cell_boundary(c):
                for other, t in inc[face]:
                    if other == c:
                        continue
                    want = -signs[c] * s * t
                    if other not in signs:
                        signs[other] = want
                        parent[other] = c
                        queue.append(other)
                    elif signs[other] != want and conflict is None and len(inc[face]) == 2:
                        conflict = (face, c, other)
    return signs, parent, conflict


def _tree_path(parent, c):
    out = [c]
    while parent[out[-1]] is not None:
        out.append(parent[out[-1]])
    return out


def _ilp_orientation(A: Chain) -> Chain | None:
    cells = sorted(A.support())
    p = OptProblem()
    for c in cells:
        p.add_variable(f"r{c.anchor}{c.extents}", 0, integral=True, parity=1, lower=-1, upper=1)
    for face, row in sorted(_boundary_rows(cells).items()):
        p.add_constraint(row, 0)
    res = solve_ilp(p)
    if res.status is not Status.OPTIMAL:
        return None
    return Chain(Ring.INT, A.scale, A.dim, {c: res.witness[j] for j, c in enumerate(cells)})


def is_orientable(A: Chain) -> OrientabilityReport:
    """Decide whether signs +-1 on supp A make it an integral cycle."""
    A = _require_mod2_cycle(A)
    if A.dim == 0 or A.is_zero():
        return OrientabilityReport(True, A.lift(Ring.INT), True)
    pm = is_pseudomanifold(A)
    if pm:
        signs, parent, conflict = _propagate(A)
        if conflict is None:
            R = Chain(Ring.INT, A.scale, A.dim, signs)
            assert R.boundary().is_zero()
            return OrientabilityReport(True, R, True)
        _, c, other = conflict
        a, b = _tree_path(parent, c), _tree_path(parent, other)
        on_b = set(b)
        i = next(i for i, x in enumerate(a) if x in on_b)
        j = b.index(a[i])
        # c -> ... -> common ancestor -> ... -> other, closed across the face
        walk = a[: i + 1] + list(reversed(b[:j]))
        return OrientabilityReport(False, walk, True)
    R = _ilp_orientation(A)
    return OrientabilityReport(R is not None, R, False)


def walk_reverses_orientation(A: Chain, walk: list[GridCell]) -> bool:
    """Check that carrying a sign around the closed walk flips it."""
    inc = _face_incidence(A.support())
    sign = 1
    for c, nxt in zip(walk, walk[1:] + walk[:1]):
        shared = [(f, s) for f, s in cell_boundary(c) if any(o == nxt for o, _ in inc[f])]
        if not shared:
            return False
        face, s = shared[0]
        t = next(t for o, t in inc[face] if o == nxt)
        sign = -sign * s * t
    return sign == -1


# ---------------------------------------------------------------------------


def _signed_lift(A: Chain) -> Chain:
    signs, _, _ = _propagate(A) if A.dim > 0 else ({c: 1 for c in A.support()}, None, None)
    return Chain(Ring.INT, A.scale, A.dim, signs)


def cut_pseudo_orientation(A: Chain, engine: str = "auto", time_limit: float | None = None) -> Chain:
    """R = L + 2W where L is a spanning-tree lift of A and dW = -dL/2."""
    A = _require_mod2_cycle(A)
    L = _signed_lift(A)
    if A.dim == 0:
        return L
    c = L.boundary().lift_double() * -1
    if c.is_zero():
        return L
    res = fv(c, Ring.INT, time_limit=time_limit, engine=engine)
    if res.witness is None:
        raise ChainError("could not fill the orientation cut")
    R = L + res.witness * 2
    assert R.boundary().is_zero() and R.mod2() == A
    return R


def noa(A: Chain, dilate: int = 0, time_limit: float | None = 60.0,
        engine: str = "auto") -> NOAResult:
    """Minimal mass of an integral cycle congruent to A mod 2, over a box.

    Clamping into the box is a chain map commuting with reduction mod 2
    that fixes A and does not increase mass, so the box optimum is global.
    """
    A = _require_mod2_cycle(A)
    vol = A.scale.r ** A.dim
    if A.is_zero():
        z = Chain.zero(Ring.INT, A.scale, A.dim)
        return NOAResult(Fraction(0), PseudoOrientation(z, A), True, Status.OPTIMAL, Fraction(0))
    report = is_orientable(A)
    if report.orientable:
        R = report.witness
        return NOAResult(R.mass(), PseudoOrientation(R, A), True, Status.OPTIMAL, R.mass())
    boxes = candidate_boxes(A, dilate, split=False)
    certified = region_certifies(A, boxes)
    lo, hi = boxes[0]
    cells = cells_in_box(lo, hi, A.dim)
    index = {c: j for j, c in enumerate(cells)}
    # parity: a non-orientable cycle needs at least one extra pair of cells
    parity_bound = A.mass() + 2 * vol
    p = OptProblem()
    for c in cells:
        p.add_variable(f"r{c.anchor}{c.extents}", 1, integral=True, parity=1 if c in A.coeffs else 0)
    for face, row in sorted(_boundary_rows(cells).items()):
        p.add_constraint(row, 0)
    seed = cut_pseudo_orientation(A, engine=engine)
    x0 = [Fraction(0)] * len(cells)
    for c, v in seed.coeffs.items():
        x0[index[c]] = Fraction(v)
    res = solve_ilp(p, engine=engine, time_limit=time_limit, incumbent=x0)
    R = Chain(Ring.INT, A.scale, A.dim, {c: res.witness[j] for j, c in enumerate(cells) if res.witness[j]})
    value = R.mass()
    lower = parity_bound
    if res.dual_bound is not None:
        lower = max(lower, res.dual_bound * vol)
    status = res.status
    if value == lower:
        status = Status.OPTIMAL
    PseudoOrientation(R, A).validate()
    return NOAResult(value, PseudoOrientation(R, A), certified, status, min(lower, value))


# ---------------------------------------------------------------------------


def halve_dim0(U: Chain) -> tuple[Chain, Chain]:
    """Split a 1-chain with even boundary into two fillings of half of it.

    Every copy of every edge is a graph edge; Euler circuits of the (even)
    multigraph give a cycle R with coefficients of absolute value <= |U|,
    and U+- = (U +- R)/2 both fill dU/2.
    """
    if U.dim != 1 or U.ring is not Ring.INT:
        raise ChainError("halve_dim0 needs an integral 1-chain")
    dU = U.boundary()
    for v, c in dU.items():
        if c % 2:
            raise ChainError(f"odd boundary coefficient {c} at vertex {v.anchor}")
    # adjacency: edge copies as (id, u, v) oriented along U
    adj: dict[tuple, list] = defaultdict(list)
    copies = []
    for cell, c in U.items():
        lo = cell.anchor
        hi = cell.far_corner()
        a, b = (lo, hi) if c > 0 else (hi, lo)
        for _ in range(abs(c)):
            k = len(copies)
            copies.append((cell, a, b))
            adj[a].append(k)
            adj[b].append(k)
    used = [False] * len(copies)
    travel = [0] * len(copies)
    ptr = defaultdict(int)
    for start in sorted(adj):
        # Hierholzer on the undirected multigraph, recording traversal direction
        while True:
            while ptr[start] < len(adj[start]) and used[adj[start][ptr[start]]]:
                ptr[start] += 1
            if ptr[start] >= len(adj[start]):
                break
            v = start
            while True:
                while ptr[v] < len(adj[v]) and used[adj[v][ptr[v]]]:
                    ptr[v] += 1
                if ptr[v] >= len(adj[v]):
                    break
                k = adj[v][ptr[v]]
                used[k] = True
                _, a, b = copies[k]
                if v == a:
                    travel[k], v = 1, b
                else:
                    travel[k], v = -1, a
            if v != start:
                raise ChainError("internal error: open trail in an even multigraph")
    plus: dict[GridCell, int] = defaultdict(int)
    minus: dict[GridCell, int] = defaultdict(int)
    for k, (cell, _, _) in enumerate(copies):
        sgn = 1 if U[cell] > 0 else -1
        (plus if travel[k] == 1 else minus)[cell] += sgn
    Up = Chain(Ring.INT, U.scale, 1, plus)
    Um = Chain(Ring.INT, U.scale, 1, minus)
    T = dU.lift_double()
    assert Up.boundary() == T and Um.boundary() == T
    assert Up.mass() + Um.mass() == U.mass()
    return (Up, Um) if Up.mass() <= Um.mass() else (Um, Up)


def orient_codim1(A: Chain) -> Chain:
    """Orient a mod-2 (N-1)-cycle as the boundary of its parity interior."""
    A = _require_mod2_cycle(A)
    N = A.ambient_dim
    if A.dim != N - 1:
        raise ChainError(f"orient_codim1 needs an (N-1)-chain, got dim {A.dim} in R^{N}")
    if A.is_zero():
        return Chain.zero(Ring.INT, A.scale, A.dim)
    walls: dict[tuple, list[int]] = defaultdict(list)
    perp = tuple(range(1, N))
    for c in A.support():
        if c.extents == perp:
            walls[c.anchor[1:]].append(c.anchor[0])
    inside: dict[GridCell, int] = {}
    full = tuple(range(N))
    for rest, xs in sorted(walls.items()):
        xs.sort()
        if len(xs) % 2:
            raise ChainError("A is not a bounded cycle")
        for a, b in zip(xs[::2], xs[1::2]):
            for x in range(a, b):
                inside[GridCell((x,) + rest, full)] = 1
    B = Chain(Ring.INT, A.scale, N, inside)
    R = B.boundary()
    if R.mod2() != A:
        raise ChainError("A is not a bounded cycle")
    return R


def halve_filling(U: Chain, R: PseudoOrientation | Chain) -> Chain:
    """The lighter of (U - R)/2 and (U + R)/2; both bound dU/2."""
    Rc = R.R if isinstance(R, PseudoOrientation) else R
    if U.ring is not Ring.INT:
        raise ChainError("halve_filling needs an integral U")
    if Rc.dim > 0 and not Rc.boundary().is_zero():
        raise ChainError("R is not a cycle")
    for cell in sorted(U.support() | Rc.support()):
        if (U[cell] - Rc[cell]) % 2:
            raise ChainError(f"U and R differ in parity on {cell}")
    a = (U - Rc).lift_double()
    b = (U + Rc).lift_double()
    out = a if a.mass() <= b.mass() else b
    if U.dim > 0:
        assert out.boundary() == U.boundary().lift_double()
    return out
