"""Instance generators with self-checking postconditions.

* ``gen_klein_bottle``: a cubical Klein bottle in R^4.  The base is a
  rectangular loop in axes (0, 1).  Over each base vertex sits a fiber ring
  ``d(S x [0, a])`` where ``S`` is a lattice path in the (1, 2) coordinates
  of the fiber and ``[0, a]`` runs along axis 3.  Near the start of the
  loop ``S`` is turned through a half turn in small steps, so the fiber
  comes back reversed and the total space is non-orientable.
* ``gen_young_rings``: an odd number of fiber rings on that surface with
  alternating orientations, together with the band chain bounding twice
  their sum.
* ``gen_handled_cube``: the unit cube with handles glued on at finer and
  finer scales.
* ``gen_random_cycle`` / ``gen_region``: random test instances.
"""
from __future__ import annotations

import itertools
from collections import Counter, defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .chain import Chain, ChainError, Ring
from .grid import GridCell, GridScale, cell_boundary, cells_in_box
from .orient import is_orientable, is_pseudomanifold

Point = tuple[int, int]


class GalleryError(ValueError):
    pass


@dataclass(frozen=True)
class SurfaceReport:
    closed: bool
    pseudomanifold: bool
    orientable: bool
    embedded: bool
    euler_characteristic: int

    @property
    def is_klein_bottle(self) -> bool:
        return (self.closed and self.pseudomanifold and self.embedded
                and not self.orientable and self.euler_characteristic == 0)


def _closure_counts(cells) -> tuple[int, int, int]:
    verts, edges = set(), set()
    for c in cells:
        for e, _ in cell_boundary(c):
            edges.add(e)
            for v, _ in cell_boundary(e):
                verts.add(v)
    return len(verts), len(edges), len(cells)


def _links_are_circles(cells) -> bool:
    """Every vertex link is one cycle: no pinch points, no branching."""
    link: dict[GridCell, dict[GridCell, list[GridCell]]] = defaultdict(lambda: defaultdict(list))
    for f in cells:
        edges = [e for e, _ in cell_boundary(f)]
        for v in {w for e in edges for w, _ in cell_boundary(e)}:
            at_v = [e for e in edges if any(w == v for w, _ in cell_boundary(e))]
            a, b = at_v
            link[v][a].append(b)
            link[v][b].append(a)
    for graph in link.values():
        if any(len(nb) != 2 for nb in graph.values()):
            return False
        start = next(iter(graph))
        seen = {start}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in graph[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        if len(seen) != len(graph):
            return False
    return True


def verify_surface(A: Chain) -> SurfaceReport:
    """Closedness, pseudomanifold and manifold checks plus V - E + F.

    ``embedded`` asks that the link of every vertex of the support be a
    single circle, i.e. the support is a topological surface in R^N.
    """
    if A.dim != 2:
        raise ChainError("verify_surface expects a 2-chain")
    A = A if A.ring is Ring.MOD2 else A.mod2()
    cells = sorted(A.support())
    closed = A.boundary().is_zero()
    pm = is_pseudomanifold(A)
    embedded = pm and _links_are_circles(cells)
    orientable = closed and is_orientable(A).orientable
    V, E, F = _closure_counts(cells)
    return SurfaceReport(closed, pm, orientable, embedded, V - E + F)


# ---------------------------------------------------------------------------
# Klein bottle and rings


def _stair(p: Point, q: Point) -> list[Point]:
    """Lattice path from p to q alternating the two directions while both remain."""
    pts = [p]
    x, y = p
    xfirst = True
    while (x, y) != q:
        dx = (q[0] > x) - (q[0] < x)
        dy = (q[1] > y) - (q[1] < y)
        if dx and (xfirst or not dy):
            x += dx
        else:
            y += dy
        if dx and dy:
            xfirst = not xfirst
        pts.append((x, y))
    return pts


def _segs(path: list[Point]) -> set[tuple[Point, Point]]:
    return {tuple(sorted(s)) for s in zip(path, path[1:])}


def _seg_face(b: Point, s, z: int) -> GridCell:
    p, q = s
    axis = 1 if p[1] == q[1] else 2
    return GridCell((b[0], b[1] + p[0], p[1], z), (axis, 3))


def _sq_face(b: Point, sq: Point, z: int) -> GridCell:
    return GridCell((b[0], b[1] + sq[0], sq[1], z), (1, 2))


def _bdry_mod2(faces) -> set[GridCell]:
    acc: Counter = Counter()
    for f in faces:
        for e, _ in cell_boundary(f):
            acc[e] += 1
    return {e for e, v in acc.items() if v % 2}


def _ring(b: Point, S: list[Point], a: int) -> set[GridCell]:
    return _bdry_mod2({_seg_face(b, s, z) for s in _segs(S) for z in range(a)})


def _enclosed(cycle) -> set[Point]:
    """Unit squares enclosed (mod 2) by a closed rectilinear curve."""
    pts = [p for s in cycle for p in s]
    if not pts:
        return set()
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    vertical = {s for s in cycle if s[0][0] == s[1][0]}
    out = set()
    for y in range(y0, y1):
        inside = False
        for x in range(x0, x1 + 1):
            if ((x, y), (x, y + 1)) in vertical:
                inside = not inside
            if inside:
                out.add((x, y))
    return out


def _transition(b: Point, S: list[Point], S2: list[Point], a: int) -> set[GridCell]:
    """Faces inside the fiber hyperplane at b turning the ring of S into that of S2."""
    e0 = _segs(_stair(S[0], S2[0]))
    e1 = _segs(_stair(S[-1], S2[-1]))
    swept = _enclosed(_segs(S) ^ _segs(S2) ^ e0 ^ e1)
    faces: set[GridCell] = set()
    for s in e0 ^ e1:
        for z in range(a):
            faces ^= {_seg_face(b, s, z)}
    for sq in swept:
        faces ^= {_sq_face(b, sq, 0), _sq_face(b, sq, a)}
    if _ring(b, S, a) ^ _bdry_mod2(faces) != _ring(b, S2, a):
        raise GalleryError("fiber transition does not connect the two rings")
    return faces


def _rect_loop(m: int, H: int) -> list[Point]:
    return ([(x, 0) for x in range(m + 1)] + [(m, y) for y in range(1, H + 1)]
            + [(x, H) for x in range(m - 1, -1, -1)] + [(0, y) for y in range(H - 1, 0, -1)])


def _diamond(h: int, pos: int) -> Point:
    # pos 0..2h walks the right half of the l1 circle of radius h from (0, h) to (0, -h)
    return (pos, h - pos) if pos <= h else (2 * h - pos, h - pos)


@dataclass(frozen=True)
class KleinBottle:
    cycle: Chain
    base: tuple[Point, ...]
    rings: tuple[frozenset[GridCell], ...]
    width: int
    height: int


def _build_klein(m: int, width: int, height: int) -> KleinBottle:
    h = width // 2
    if m <= 2 * h:
        # the half turn must finish before the first corner of the base
        raise GalleryError("twist zone does not fit on the base")
    base = _rect_loop(m, m)
    stages = {0: _stair((0, -h), (0, h))}
    for pos in range(1, 2 * h + 1):
        e = _diamond(h, pos)
        stages[pos] = _stair((-e[0], -e[1]), e)
    faces: set[GridCell] = set()
    rings = []
    S = stages[0]
    for i, b in enumerate(base):
        if i in stages and stages[i] != S:
            faces ^= _transition(b, S, stages[i], height)
            S = stages[i]
        ring = _ring(b, S, height)
        rings.append(frozenset(ring))
        nb = base[(i + 1) % len(base)]
        axis = 0 if nb[1] == b[1] else 1
        step = (nb[0] - b[0]) + (nb[1] - b[1])
        for e in ring:
            anchor = list(e.anchor)
            if step < 0:
                anchor[axis] -= 1
            faces ^= {GridCell(tuple(anchor), tuple(sorted(e.extents + (axis,))))}
    if _segs(S) != _segs(stages[0]):
        raise GalleryError("fiber does not close up")
    A = Chain(Ring.MOD2, GridScale(1, 4), 2, {f: 1 for f in faces})
    return KleinBottle(A, tuple(base), tuple(rings), width, height)


@lru_cache(maxsize=None)
def klein_min_size(width: int = 4, height: int = 2) -> int:
    """Smallest base side for which the construction verifies as a Klein bottle."""
    for m in range(1, 4 * width + 8):
        try:
            kb = _build_klein(m, width, height)
        except GalleryError:
            continue
        if verify_surface(kb.cycle).is_klein_bottle:
            return m
    raise GalleryError(f"no valid Klein bottle for fiber {width}x{height}")


def _check_fiber(width: int, height: int):
    if width < 2 or width % 2:
        raise GalleryError("fiber width must be even and at least 2")
    if height < 1:
        raise GalleryError("fiber height must be at least 1")


def klein_bottle(m: int, width: int = 4, height: int = 2) -> KleinBottle:
    _check_fiber(width, height)
    m_min = klein_min_size(width, height)
    if m < m_min:
        raise GalleryError(f"base size {m} too small; minimum is m = {m_min}")
    kb = _build_klein(m, width, height)
    if not verify_surface(kb.cycle).is_klein_bottle:
        raise GalleryError(f"construction failed verification at m = {m}")
    return kb


def gen_klein_bottle(m: int, width: int = 4, height: int = 2) -> tuple[Chain, SurfaceReport]:
    kb = klein_bottle(m, width, height)
    report = verify_surface(kb.cycle)
    return kb.cycle, report


def _orient_with_cuts(cells, cuts: set[GridCell]) -> dict[GridCell, int] | None:
    """Signs on a closed pseudomanifold cancelling on every edge except the cuts,
    where they must add up instead."""
    inc: dict[GridCell, list[tuple[GridCell, int]]] = defaultdict(list)
    for f in cells:
        for e, s in cell_boundary(f):
            inc[e].append((f, s))
    signs: dict[GridCell, int] = {}
    for root in sorted(cells):
        if root in signs:
            continue
        signs[root] = 1
        queue = deque([root])
        while queue:
            f = queue.popleft()
            for e, s in cell_boundary(f):
                (g, t), = [x for x in inc[e] if x[0] != f]
                want = signs[f] * s * t * (1 if e in cuts else -1)
                if g not in signs:
                    signs[g] = want
                    queue.append(g)
                elif signs[g] != want:
                    return None
    return signs


@dataclass(frozen=True)
class YoungRings:
    T: Chain
    U_bands: Chain
    K: Chain
    ring_positions: tuple[int, ...]


def young_rings(m: int, k: int, width: int = 4, height: int = 2) -> YoungRings:
    if k < 1:
        raise GalleryError("k must be at least 1")
    kb = klein_bottle(m, width, height)
    n = len(kb.base)
    count = 2 * k + 1
    if count > n:
        raise GalleryError(f"{count} rings do not fit on a base loop of {n} vertices; increase m")
    positions = tuple(sorted({(j * n) // count for j in range(count)}))
    cuts: set[GridCell] = set()
    for i in positions:
        if cuts & kb.rings[i]:
            raise GalleryError("rings are not disjoint")
        cuts |= kb.rings[i]
    signs = _orient_with_cuts(kb.cycle.support(), cuts)
    if signs is None:
        raise GalleryError("bands cannot be oriented alternately")
    U = Chain(Ring.INT, kb.cycle.scale, 2, signs)
    T = U.boundary().lift_double()
    if U.boundary() != T * 2 or U.mod2() != kb.cycle:
        raise GalleryError("band chain fails its boundary identity")
    if T.mod2().support() != frozenset(cuts):
        raise GalleryError("half boundary is not the union of the rings")
    return YoungRings(T, U, kb.cycle, positions)


def gen_young_rings(m: int, k: int, width: int = 4, height: int = 2) -> tuple[Chain, Chain, Chain]:
    y = young_rings(m, k, width, height)
    return y.T, y.U_bands, y.K


# ---------------------------------------------------------------------------
# handled cube


def make_handle(s: int = 5) -> Chain:
    """A punctured torus on the grid of side 1/s whose boundary is the unit square.

    The unit square at height 0 with two holes, joined by an arch-shaped tube
    rising above it.  Needs s >= 5 so the holes avoid the boundary.
    """
    if s < 5:
        raise GalleryError("handle needs at least 5 subdivisions per side")
    y = s // 2
    arch = [(1, y, 0), (1, y, 1), (2, y, 1), (3, y, 1), (3, y, 0)]
    faces: Counter = Counter()
    for i in range(s):
        for j in range(s):
            faces[GridCell((i, j, 0), (0, 1))] += 1
    for a in arch:
        for f, _ in cell_boundary(GridCell(a, (0, 1, 2))):
            faces[f] += 1
    cells = {f: 1 for f, v in faces.items() if v % 2}
    return Chain(Ring.MOD2, GridScale(Fraction(1, s), 3), 2, cells)


def _verify_handle(H: Chain) -> None:
    if H.ring is not Ring.MOD2 or H.dim != 2 or H.ambient_dim != 3:
        raise GalleryError("handle must be a mod-2 2-chain in R^3")
    s = 1 / H.scale.r
    if s.denominator != 1:
        raise GalleryError("handle grid must subdivide the unit square")
    s = s.numerator
    square = Chain(Ring.MOD2, H.scale, 2, {GridCell((i, j, 0), (0, 1)): 1
                                           for i in range(s) for j in range(s)})
    if H.boundary() != square.boundary():
        raise GalleryError("handle boundary is not the unit square")
    for c in H.support():
        lo, hi = c.anchor, c.far_corner()
        if lo[2] < 0 or any(lo[i] < 0 or hi[i] > s for i in (0, 1)):
            raise GalleryError("handle leaves the prism over its square")
        if lo[2] == 0 and 2 in c.extents and (lo[0] in (0, s) or lo[1] in (0, s)):
            raise GalleryError("handle touches the side of its prism")
    # cap with the rest of the boundary of the slab just below the square
    slab = Chain(Ring.MOD2, H.scale, 3, {GridCell((i, j, -1), (0, 1, 2)): 1
                                         for i in range(s) for j in range(s)})
    rep = verify_surface(H + slab.boundary() + square)
    # a punctured torus capped by a disc is a torus
    if not (rep.closed and rep.embedded and rep.orientable and rep.euler_characteristic == 0):
        raise GalleryError("handle is not an embedded punctured torus")


# outward frames for the six cube faces: (axis u, axis v, normal axis, normal side)
_CUBE_FACES = ((0, 1, 2, 1), (0, 1, 2, 0), (1, 2, 0, 1), (1, 2, 0, 0), (0, 2, 1, 1), (0, 2, 1, 0))


def _place(cell: GridCell, frame, offset: tuple[int, int], n: int, size: int) -> GridCell:
    """Map a handle cell (grid of side 1/size inside [0,1]^2 x [0,inf)) onto a
    cube face subsquare of the grid of side 1/n (n = size * copies)."""
    u, v, w, side = frame
    corners = []
    for x in cell.vertices():
        p = [0, 0, 0]
        p[u] = offset[0] + x[0]
        p[v] = offset[1] + x[1]
        p[w] = n + x[2] if side else -x[2]
        corners.append(tuple(p))
    lo = tuple(min(c[i] for c in corners) for i in range(3))
    hi = tuple(max(c[i] for c in corners) for i in range(3))
    return GridCell(lo, tuple(i for i in range(3) if hi[i] > lo[i]))


def gen_handled_cube(k: int, L: int, H: Chain | None = None) -> Chain:
    """Unit cube boundary with k generations of handles.

    Generation j replaces all L^(2(j-1)) subsquares of side L^-(j-1) of cube
    face j by copies of ``H`` scaled by L^-(j-1).  Handles of one
    generation stay in disjoint prisms over their squares.
    """
    if k < 0 or L < 2:
        raise GalleryError("need k >= 0 and L >= 2")
    if k > len(_CUBE_FACES):
        raise GalleryError(f"at most {len(_CUBE_FACES)} handle generations fit on the cube")
    H = make_handle() if H is None else H
    _verify_handle(H)
    s = (1 / H.scale.r).numerator
    n = s * L ** max(k - 1, 0)  # cells per unit length of the final grid
    scale = GridScale(Fraction(1, n), 3)
    faces: Counter = Counter()
    cube = Chain(Ring.MOD2, GridScale(1, 3), 3, {GridCell((0, 0, 0), (0, 1, 2)): 1})
    for f in cube.boundary().refine(n).support():
        faces[f] += 1
    for j in range(1, k + 1):
        frame = _CUBE_FACES[j - 1]
        copies = L ** (j - 1)
        size = n // copies
        Hj = H.refine(size // s)
        u, v, w, side = frame
        for a, b in itertools.product(range(copies), repeat=2):
            off = (a * size, b * size)
            for x in range(size):
                for y in range(size):
                    anchor = [0, 0, 0]
                    anchor[u], anchor[v], anchor[w] = off[0] + x, off[1] + y, n if side else 0
                    faces[GridCell(tuple(anchor), tuple(sorted((u, v))))] += 1
            for c in Hj.support():
                faces[_place(c, frame, off, n, size)] += 1
    D = Chain(Ring.MOD2, scale, 2, {f: 1 for f, c in faces.items() if c % 2})
    expected = 6 + k * (H.mass() - 1)
    if D.mass() != expected:
        raise GalleryError(f"handled cube has mass {D.mass()}, expected {expected}")
    return D


# ---------------------------------------------------------------------------
# random instances


def _rng_coeff(rng, ring: Ring):
    if ring is Ring.MOD2:
        return 1
    c = int(rng.integers(1, 3)) * (1 if rng.random() < 0.5 else -1)
    if ring is Ring.RAT:
        return Fraction(c, int(rng.integers(1, 3)))
    return c


def gen_random_chain(d: int, ring: Ring, box: tuple[int, ...], density: float, seed: int) -> Chain:
    rng = np.random.default_rng(seed)
    N = len(box)
    cells = cells_in_box((0,) * N, tuple(box), d)
    coeffs = {}
    for c in cells:
        if rng.random() < density:
            coeffs[c] = _rng_coeff(rng, ring)
    return Chain(ring, GridScale(1, N), d, coeffs)


def gen_random_cycle(d: int, ring: Ring, box: tuple[int, ...], density: float, seed: int) -> Chain:
    """Boundary of a random (d+1)-chain in the lattice box [0, box]."""
    N = len(box)
    if not 0 <= d < N:
        raise GalleryError(f"cannot build a {d}-cycle bounding in R^{N}")
    return gen_random_chain(d + 1, ring, box, density, seed).boundary()


def gen_region(box: tuple[int, ...], density: float, seed: int, ring: Ring = Ring.INT) -> Chain:
    """Random union of top-dimensional cubes with coefficient 1."""
    rng = np.random.default_rng(seed)
    N = len(box)
    cells = [c for c in cells_in_box((0,) * N, tuple(box), N) if rng.random() < density]
    return Chain(ring, GridScale(1, N), N, {c: 1 for c in cells})


def gen_even_boundary_pair(d: int, box: tuple[int, ...], density: float, seed: int) -> tuple[Chain, Chain]:
    """Random (T, U) with dU = 2T, U a (d+1)-chain in the box.

    U is the {0, 1} lift of a random mod-2 (d+1)-cycle plus twice a random
    chain, so U is not merely an even chain in general.
    """
    N = len(box)
    if not 0 <= d <= N - 2:
        raise GalleryError(f"need d + 2 <= N, got d = {d} in R^{N}")
    cyc = gen_random_cycle(d + 1, Ring.MOD2, box, density, seed).lift(Ring.INT)
    V = gen_random_chain(d + 1, Ring.INT, box, density / 2, seed + 7919)
    V = Chain(Ring.INT, V.scale, d + 1, {c: 1 if v > 0 else -1 for c, v in V.coeffs.items()})
    U = cyc + V * 2
    T = U.boundary().lift_double()
    return T, U


def gen_random_pl(d: int, N: int, seed: int, max_simplices: int = 3, extent: int = 2,
                  denominator: int = 4):
    """A few straight d-simplices with random vertices on the 1/denominator lattice."""
    from .deform import PLChain

    rng = np.random.default_rng([seed, d, N])
    while True:
        items = []
        for _ in range(int(rng.integers(1, max_simplices + 1))):
            pts = [tuple(Fraction(int(rng.integers(0, extent * denominator + 1)), denominator)
                         for _ in range(N)) for _ in range(d + 1)]
            items.append((pts, int(rng.choice([-1, 1]))))
        T = PLChain.from_terms(d, N, items).nondegenerate()
        if not T.is_zero():
            return T
