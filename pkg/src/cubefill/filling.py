"""Filling volumes and flat norms of cellular cycles.

All programs live on a finite set of cells.  When that set is every cell of
an axis-parallel lattice box containing ``supp T``, the regional optimum is
the global one: clamping coordinates into the box is 1-Lipschitz, sends grid
cells to grid cells (or collapses them), commutes with the boundary and
fixes ``T``.  Any filling anywhere in R^N therefore pushes forward to a
filling inside the box of no larger mass.  Results computed on such a box
are flagged ``certified``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .chain import Chain, ChainError, Ring
from .exact_opt import OptProblem, OptResult, Status, solve_ilp, solve_lp
from .grid import GridCell, GridScale, bounding_box, cell_boundary, cells_in_box

Box = tuple[tuple[int, ...], tuple[int, ...]]


@dataclass
class FillingResult:
    status: Status
    value: Fraction | None
    witness: Chain | None
    ring: Ring
    region_used: frozenset[GridCell]
    certified: bool
    dual_bound: Fraction | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _components(cells: list[GridCell]) -> list[list[GridCell]]:
    """Group cells that share a vertex."""
    parent = list(range(len(cells)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[tuple[int, ...], int] = {}
    for i, c in enumerate(cells):
        for v in c.vertices():
            j = owner.setdefault(v, i)
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[GridCell]] = {}
    for i, c in enumerate(cells):
        groups.setdefault(find(i), []).append(c)
    return [sorted(g) for _, g in sorted(groups.items())]


def _dilate(box: Box, k: int) -> Box:
    lo, hi = box
    return tuple(a - k for a in lo), tuple(b + k for b in hi)


def _overlap(a: Box, b: Box) -> bool:
    return all(al <= bh and bl <= ah for al, ah, bl, bh in zip(a[0], a[1], b[0], b[1]))


def _hull(a: Box, b: Box) -> Box:
    return (tuple(map(min, a[0], b[0])), tuple(map(max, a[1], b[1])))


def candidate_boxes(T: Chain, dilate: int = 0, split: bool = True) -> list[Box]:
    """Dilated bounding boxes of the connected pieces of ``supp T``.

    Boxes that touch are merged until the list is pairwise disjoint.
    """
    if T.is_zero():
        return []
    cells = sorted(T.support())
    groups = _components(cells) if split else [cells]
    boxes = [_dilate(bounding_box(g), dilate) for g in groups]
    merged = True
    while merged:
        merged = False
        out: list[Box] = []
        for b in boxes:
            for i, o in enumerate(out):
                if _overlap(b, o):
                    out[i] = _hull(b, o)
                    merged = True
                    break
            else:
                out.append(b)
        boxes = out
    return sorted(boxes)


def candidate_region(T: Chain, dilate: int = 0, split: bool = True) -> set[GridCell]:
    """All (dim T + 1)-cells inside the dilated component boxes of supp T."""
    region: set[GridCell] = set()
    for lo, hi in candidate_boxes(T, dilate, split):
        region.update(cells_in_box(lo, hi, T.dim + 1))
    return region


def region_certifies(T: Chain, boxes: list[Box]) -> bool:
    if T.is_zero():
        return True
    if len(boxes) != 1:
        return False
    lo, hi = boxes[0]
    blo, bhi = bounding_box(T.support())
    return all(l <= a for l, a in zip(lo, blo)) and all(b <= h for b, h in zip(bhi, hi))


# ---------------------------------------------------------------------------


def _check_cycle(T: Chain):
    if T.dim > 0 and not T.boundary().is_zero():
        raise ChainError("T is not a boundary-compatible cycle")


def _boundary_rows(cells: list[GridCell]) -> dict[GridCell, dict[int, int]]:
    rows: dict[GridCell, dict[int, int]] = {}
    for j, c in enumerate(cells):
        for face, s in cell_boundary(c):
            rows.setdefault(face, {})[j] = s
    return rows


def _build_fill_program(T: Chain, cells: list[GridCell], ring: Ring) -> OptProblem:
    p = OptProblem()
    for c in cells:
        if ring is Ring.MOD2:
            p.add_variable(f"u{c.anchor}{c.extents}", 1, integral=True, lower=0, upper=1)
        else:
            p.add_variable(f"u{c.anchor}{c.extents}", 1, integral=ring is Ring.INT)
    rows = _boundary_rows(cells)
    for face in T.support():
        rows.setdefault(face, {})
    for face in sorted(rows):
        coeffs = dict(rows[face])
        rhs = T[face]
        if ring is Ring.MOD2:
            y = p.add_variable(f"y{face.anchor}{face.extents}", 0, integral=True)
            coeffs[y] = 2
        p.add_constraint(coeffs, rhs)
    return p


def _to_chain(res: OptResult, cells: list[GridCell], ring: Ring, scale: GridScale, dim: int) -> Chain:
    coeffs = {c: res.witness[j] for j, c in enumerate(cells) if res.witness[j]}
    return Chain(ring, scale, dim, coeffs)


def fv(T: Chain, ring: Ring | None = None, dilate: int = 0, split: bool = False,
       time_limit: float | None = None, engine: str = "auto") -> FillingResult:
    """Filling volume of the cycle ``T`` over ``ring`` (default: T's ring)."""
    ring = ring or T.ring
    if ring is Ring.MOD2 and T.ring is not Ring.MOD2:
        T = T.mod2()
    elif ring is not Ring.MOD2 and T.ring is Ring.MOD2:
        T = T.lift(ring)
    elif ring is not T.ring:
        T = T.lift(ring)
    _check_cycle(T)
    if T.is_zero():
        return FillingResult(Status.OPTIMAL, Fraction(0), Chain.zero(ring, T.scale, T.dim + 1),
                             ring, frozenset(), True, Fraction(0))
    if T.dim + 1 > T.ambient_dim:
        return FillingResult(Status.INFEASIBLE, None, None, ring, frozenset(), True)
    boxes = candidate_boxes(T, dilate, split)
    region = set()
    for lo, hi in boxes:
        region.update(cells_in_box(lo, hi, T.dim + 1))
    cells = sorted(region)
    p = _build_fill_program(T, cells, ring)
    if ring is Ring.RAT:
        res = solve_lp(p, engine=engine, time_limit=time_limit)
    else:
        res = solve_ilp(p, engine=engine, time_limit=time_limit)
    certified = region_certifies(T, boxes)
    vol = T.scale.r ** (T.dim + 1)
    if res.witness is None:
        return FillingResult(res.status, None, None, ring, frozenset(region), certified)
    U = _to_chain(res, cells, ring, T.scale, T.dim + 1)
    if U.boundary() != T:
        raise AssertionError("filling witness does not bound T")
    bound = None if res.dual_bound is None else res.dual_bound * vol
    return FillingResult(res.status, res.value * vol, U, ring, frozenset(region),
                         certified and res.status is Status.OPTIMAL, bound)


def fv_half_integral(T: Chain, dilate: int = 0, **kw) -> FillingResult:
    """Optimal filling with coefficients in (1/2)Z: half of an optimal filling of 2T."""
    T = T if T.ring is Ring.INT else T.lift(Ring.INT)
    r = fv(T * 2, Ring.INT, dilate, **kw)
    if r.witness is None:
        return r
    return FillingResult(r.status, r.value / 2, r.witness.half(), Ring.RAT, r.region_used,
                         r.certified, None if r.dual_bound is None else r.dual_bound / 2)


@dataclass
class FlatNormResult:
    status: Status
    value: Fraction | None
    B: Chain | None
    remainder: Chain | None
    certified: bool


def flat_norm(A: Chain, ring: Ring | None = None, dilate: int = 1,
              time_limit: float | None = None) -> FlatNormResult:
    """min over B of mass B + mass(A - dB); the remainder is A - dB."""
    ring = ring or A.ring
    if ring is not A.ring:
        A = A.mod2() if ring is Ring.MOD2 else A.lift(ring)
    if A.is_zero():
        return FlatNormResult(Status.OPTIMAL, Fraction(0), Chain.zero(ring, A.scale, A.dim + 1),
                              A, True)
    r = A.scale.r
    boxes = candidate_boxes(A, dilate, split=False)
    lo, hi = boxes[0]
    bcells = cells_in_box(lo, hi, A.dim + 1) if A.dim < A.ambient_dim else []
    scells = cells_in_box(lo, hi, A.dim)
    p = OptProblem()
    integral = ring is not Ring.RAT
    bounds = {"lower": 0, "upper": 1} if ring is Ring.MOD2 else {}
    # costs divided by r^dim: B-cells weigh r, remainder cells weigh 1
    for c in bcells:
        p.add_variable(f"b{c.anchor}{c.extents}", r, integral=integral, **bounds)
    nb = len(bcells)
    for c in scells:
        p.add_variable(f"s{c.anchor}{c.extents}", 1, integral=integral, **bounds)
    rows = _boundary_rows(bcells)
    for i, c in enumerate(scells):
        coeffs = dict(rows.get(c, {}))
        coeffs[nb + i] = 1
        if ring is Ring.MOD2:
            y = p.add_variable(f"y{c.anchor}{c.extents}", 0, integral=True)
            coeffs[y] = 2
        p.add_constraint(coeffs, A[c])
    res = solve_lp(p, time_limit=time_limit) if ring is Ring.RAT else solve_ilp(p, time_limit=time_limit)
    if res.witness is None:
        return FlatNormResult(res.status, None, None, None, False)
    B = Chain(ring, A.scale, A.dim + 1, {c: res.witness[j] for j, c in enumerate(bcells) if res.witness[j]})
    S = Chain(ring, A.scale, A.dim, {c: res.witness[nb + i] for i, c in enumerate(scells)
                                     if res.witness[nb + i]})
    if (S + B.boundary() if B else S) != A:
        raise AssertionError("flat norm witness does not decompose A")
    value = B.mass() + S.mass()
    return FlatNormResult(res.status, value, B, S, res.status is Status.OPTIMAL)
