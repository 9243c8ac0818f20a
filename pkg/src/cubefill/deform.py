"""Federer-Fleming deformation of PL chains onto a cubical skeleton.

PL chains are formal integer combinations of oriented straight simplices
with exact rational vertices.  The deformation pushes a d-chain through the
skeleta of the grid of side r: inside every k-cell (k = N, ..., d+1) it is
projected radially from a random center onto the cell boundary.  On the
pyramid over one facet the radial projection is a projective map, so after
cutting pieces along the pyramid walls each straight simplex maps to the
straight simplex on the projected vertices.  No resolution parameter is
needed and all coordinates stay rational.

Cutting changes the formal chain but not the current it represents, so the
decomposition T = P + Q + dR is checked as an identity of currents: both
sides are integrated exactly against random forms with affine coefficients,
the dR term through Stokes.  Zero-volume pieces are dropped as they arise.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

import numpy as np

from .chain import Chain, ChainError, Ring
from .exact_opt import Status, solve_ilp
from .filling import _build_fill_program
from .grid import GridCell, GridScale, cells_in_box, coarse_parent

Point = tuple[Fraction, ...]
Simplex = tuple[Point, ...]


class DeformationError(RuntimeError):
    pass


class CenterHit(DeformationError):
    """The drawn center lies on the chain; draw again."""


# ---------------------------------------------------------------------------
# exact volumes


def _int_det(m: list[list[int]]) -> int:
    """Bareiss fraction-free determinant of an integer matrix."""
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if n == 3:
        a, b, c = m
        return (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]))
    m = [list(r) for r in m]
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def _int_edges(s: Simplex) -> tuple[list[list[int]], int]:
    """Edge vectors from the first vertex scaled to integers, and the scale."""
    den = 1
    for v in s:
        for x in v:
            den = math.lcm(den, x.denominator)
    v0 = s[0]
    return [[int((a - b) * den) for a, b in zip(v, v0)] for v in s[1:]], den


def squared_volume(s: Simplex) -> Fraction:
    """Squared d-volume of a straight simplex (Gram determinant / (d!)^2)."""
    d = len(s) - 1
    if d == 0:
        return Fraction(1)
    e, den = _int_edges(s)
    gram = [[sum(x * y for x, y in zip(a, b)) for b in e] for a in e]
    return Fraction(_int_det(gram), (den ** d * math.factorial(d)) ** 2)


def float_volume(s: Simplex) -> float:
    """d-volume in floating point, for reported totals and heuristics."""
    d = len(s) - 1
    if d == 0:
        return 1.0
    e = np.array([[float(a - b) for a, b in zip(v, s[0])] for v in s[1:]])
    g = e @ e.T
    return math.sqrt(max(float(np.linalg.det(g)), 0.0)) / math.factorial(d)


def signed_volume(s: Simplex, axes: tuple[int, ...]) -> Fraction:
    """Signed volume of the projection onto the coordinate axes ``axes``."""
    d = len(s) - 1
    if d == 0:
        return Fraction(1)
    e, den = _int_edges(s)
    return Fraction(_int_det([[row[a] for a in axes] for row in e]), den ** d * math.factorial(d))


def signed_volumes(s: Simplex, axes_list) -> list[Fraction]:
    """signed_volume for several coordinate projections at once."""
    d = len(s) - 1
    if d == 0:
        return [Fraction(1)] * len(axes_list)
    e, den = _int_edges(s)
    scale = den ** d * math.factorial(d)
    return [Fraction(_int_det([[row[a] for a in axes] for row in e]), scale) for axes in axes_list]


# ---------------------------------------------------------------------------
# PL chains


def _canon(pts: Iterable[Point]) -> tuple[Simplex | None, int]:
    pts = list(pts)
    if len(set(pts)) != len(pts):
        return None, 0
    order = sorted(range(len(pts)), key=lambda i: pts[i])
    sign = 1
    seen = [False] * len(order)
    for i in range(len(order)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return tuple(pts[i] for i in order), sign


def _pt(x) -> Point:
    return tuple(Fraction(v) for v in x)


@dataclass(frozen=True, eq=False)
class PLChain:
    dim: int
    ambient_dim: int
    terms: Mapping[Simplex, int] = field(default_factory=dict)

    def __post_init__(self):
        acc: dict[Simplex, int] = defaultdict(int)
        for s, c in self.terms.items():
            if len(s) != self.dim + 1:
                raise ChainError(f"simplex with {len(s)} vertices in a {self.dim}-chain")
            key, sign = _canon(_pt(v) for v in s)
            if key is None or not c:
                continue
            if any(len(v) != self.ambient_dim for v in key):
                raise ChainError("vertex outside the ambient dimension")
            acc[key] += sign * int(c)
        object.__setattr__(self, "terms", MappingProxyType({k: v for k, v in acc.items() if v}))

    @classmethod
    def _raw(cls, dim: int, n: int, terms: dict) -> PLChain:
        """Wrap terms that are already canonical and nonzero."""
        out = object.__new__(cls)
        object.__setattr__(out, "dim", dim)
        object.__setattr__(out, "ambient_dim", n)
        object.__setattr__(out, "terms", MappingProxyType(terms))
        return out

    @classmethod
    def zero(cls, dim: int, n: int) -> PLChain:
        return cls(dim, n, {})

    @classmethod
    def from_terms(cls, dim: int, n: int, items: Iterable[tuple[Iterable, int]]) -> PLChain:
        acc: dict[Simplex, int] = defaultdict(int)
        for pts, c in items:
            key, sign = _canon(_pt(v) for v in pts)
            if key is not None:
                if any(len(v) != n for v in key):
                    raise ChainError("vertex outside the ambient dimension")
                acc[key] += sign * int(c)
        return cls._raw(dim, n, {k: v for k, v in acc.items() if v})

    @classmethod
    def from_cellular(cls, T: Chain) -> PLChain:
        """Freudenthal triangulation of each cell, oriented like the cell."""
        import itertools

        r = T.scale.r
        items = []
        for cell, c in T.coeffs.items():
            c = int(c) if T.ring is not Ring.RAT else c
            if T.ring is Ring.RAT and Fraction(c).denominator != 1:
                raise ChainError("PL chains need integer coefficients")
            base = [a * r for a in cell.anchor]
            if cell.dim == 0:
                items.append(([tuple(base)], int(c)))
                continue
            for perm in itertools.permutations(range(cell.dim)):
                pts = [tuple(base)]
                cur = list(base)
                for j in perm:
                    cur[cell.extents[j]] += r
                    pts.append(tuple(cur))
                inv = sum(1 for a in range(len(perm)) for b in range(a + 1, len(perm)) if perm[a] > perm[b])
                items.append((pts, int(c) * (-1) ** inv))
        return cls.from_terms(T.dim, T.ambient_dim, items)

    def __len__(self):
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def items(self):
        return sorted(self.terms.items())

    def __eq__(self, other):
        if not isinstance(other, PLChain):
            return NotImplemented
        return self.dim == other.dim and dict(self.terms) == dict(other.terms)

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def __add__(self, other: PLChain) -> PLChain:
        if other.dim != self.dim:
            raise ChainError(f"dimension mismatch: {self.dim} vs {other.dim}")
        acc = dict(self.terms)
        for k, v in other.terms.items():
            acc[k] = acc.get(k, 0) + v
        return PLChain._raw(self.dim, self.ambient_dim, {k: v for k, v in acc.items() if v})

    def __neg__(self) -> PLChain:
        return PLChain._raw(self.dim, self.ambient_dim, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: PLChain) -> PLChain:
        return self + (-other)

    def __mul__(self, k: int) -> PLChain:
        return PLChain._raw(self.dim, self.ambient_dim,
                            {s: k * v for s, v in self.terms.items() if k * v})

    __rmul__ = __mul__

    def boundary(self) -> PLChain:
        if self.dim == 0:
            raise ChainError("no boundary of a 0-chain")
        items = []
        for s, c in self.terms.items():
            for i in range(len(s)):
                items.append((s[:i] + s[i + 1:], c * (-1) ** i))
        return PLChain.from_terms(self.dim - 1, self.ambient_dim, items)

    def mass(self) -> float:
        return sum(abs(c) * float_volume(s) for s, c in self.terms.items())

    def nondegenerate(self) -> PLChain:
        """Drop the exactly zero-volume simplices (zero as currents)."""
        return PLChain._raw(self.dim, self.ambient_dim,
                            {s: c for s, c in self.terms.items() if squared_volume(s) != 0})

    def vertices(self) -> set[Point]:
        return {v for s in self.terms for v in s}


# ---------------------------------------------------------------------------
# cutting simplices


def _cut(items: list[tuple[Simplex, int]], h: Callable[[Point], Fraction]) -> list:
    """Split until no simplex has vertices strictly on both sides of h = 0.

    Splitting s at the point p of edge (i, j) gives s[v_j:=p] and s[v_i:=p],
    which cover s with its orientation.
    """
    done = []
    stack = list(items)
    while stack:
        s, c = stack.pop()
        vals = [h(v) for v in s]
        pair = next(((i, j) for i in range(len(s)) for j in range(i + 1, len(s))
                     if vals[i] * vals[j] < 0), None)
        if pair is None:
            done.append((s, c))
            continue
        i, j = pair
        t = vals[i] / (vals[i] - vals[j])
        p = tuple(a + t * (b - a) for a, b in zip(s[i], s[j]))
        # each piece has strictly fewer straddling pairs, so this terminates
        stack.append((s[:j] + (p,) + s[j + 1:], c))
        stack.append((s[:i] + (p,) + s[i + 1:], c))
    return done


def min_cell(s: Simplex, r: Fraction) -> GridCell | None:
    """Smallest closed grid cell containing the simplex, or None if it straddles."""
    anchor, ext = [], []
    for a in range(len(s[0])):
        lo = min(v[a] for v in s) / r
        hi = max(v[a] for v in s) / r
        g = math.floor(lo)
        if lo == hi and lo.denominator == 1:
            anchor.append(int(lo))
            continue
        if hi > g + 1:
            return None
        anchor.append(g)
        ext.append(a)
    return GridCell(tuple(anchor), tuple(ext))


def _grid_cut(items, r: Fraction) -> list:
    done = []
    stack = list(items)
    while stack:
        s, c = stack.pop()
        if min_cell(s, r) is not None:
            done.append((s, c))
            continue
        for a in range(len(s[0])):
            lo = min(v[a] for v in s) / r
            hi = max(v[a] for v in s) / r
            g = math.floor(lo) + 1
            if g < hi:
                stack.extend(_cut([(s, c)], lambda x, a=a, g=g: x[a] - g * r))
                break
    return done


# ---------------------------------------------------------------------------
# radial projection in one cell


def _facets(cell: GridCell, r: Fraction, y: Point):
    out = []
    for a in cell.extents:
        lo = cell.anchor[a] * r
        for f in (lo + r, lo):
            out.append((a, f, f - y[a]))
    return out


def _ell(facet, y: Point, x: Point) -> Fraction:
    a, _, den = facet
    return (x[a] - y[a]) / den


def _assign(s: Simplex, facets, y: Point, cache: dict | None = None):
    """A facet whose pyramid contains the whole simplex, or a cutting function."""
    if cache is None:
        cache = {}
    vals = []
    for v in s:
        row = cache.get(v)
        if row is None:
            row = cache[v] = [_ell(F, y, v) for F in facets]
        vals.append(row)
    mus = [max(row) for row in vals]
    if any(m <= 0 for m in mus):
        raise CenterHit("center lies on the chain")
    best = {j for j in range(len(facets)) if vals[0][j] == mus[0]}
    f = min(best)
    while True:
        bad = [i for i in range(len(s)) if vals[i][f] != mus[i]]
        if not bad:
            return f, None
        w = bad[0]
        g = next(j for j in range(len(facets)) if vals[w][j] == mus[w])
        diff = [vals[i][f] - vals[i][g] for i in range(len(s))]
        if any(x > 0 for x in diff):
            F, G = facets[f], facets[g]
            return None, (lambda x, F=F, G=G: _ell(F, y, x) - _ell(G, y, x))
        f = g


def _project_point(x: Point, y: Point, facet) -> Point:
    lam = _ell(facet, y, x)
    out = [yi + (xi - yi) / lam for xi, yi in zip(x, y)]
    out[facet[0]] = facet[1]
    return tuple(out)


def _prism(s: Simplex, w: Simplex, c: int):
    """Staircase prism with d(prism) = w - s - prism(ds) formally."""
    out = []
    for i in range(len(s)):
        out.append((s[:i + 1] + w[i:], c * (-1) ** i))
    return out


@dataclass
class _CellPush:
    image: list[tuple[Simplex, int]]
    tracks: list[tuple[Simplex, int]]       # prisms of the pieces
    edge_tracks: list[tuple[Simplex, int]]  # prisms of the pieces' boundaries


def _push_in_cell(items, cell: GridCell, r: Fraction, y: Point) -> _CellPush:
    facets = _facets(cell, r, y)
    stack = list(items)
    image, tracks, edge_tracks = [], [], []
    cache: dict = {}
    while stack:
        s, c = stack.pop()
        f, h = _assign(s, facets, y, cache)
        if h is not None:
            stack.extend(_cut([(s, c)], h))
            continue
        F = facets[f]
        w = tuple(_project_point(v, y, F) for v in s)
        image.append((w, c))
        tracks.extend(_prism(s, w, c))
        for i in range(len(s)):
            if len(s) > 1:
                edge_tracks.extend(_prism(s[:i] + s[i + 1:], w[:i] + w[i + 1:], c * (-1) ** i))
    return _CellPush(image, tracks, edge_tracks)


def radial_project(cell: GridCell, center: Point, chain: PLChain, r: Fraction = Fraction(1)) -> PLChain:
    """Image of ``chain`` (inside the closed cell) under radial projection
    from ``center`` onto the cell boundary."""
    r = Fraction(r)
    y = _pt(center)
    for s in chain.terms:
        mc = min_cell(s, r)
        if mc is None or not _cell_contains(cell, mc):
            raise DeformationError("chain leaves the cell")
    keep, move = [], []
    for s, c in chain.terms.items():
        (move if min_cell(s, r).dim == cell.dim else keep).append((s, c))
    push = _push_in_cell(move, cell, r, y)
    return PLChain.from_terms(chain.dim, chain.ambient_dim, keep + push.image)


def _cell_contains(big: GridCell, small: GridCell) -> bool:
    for a in range(big.ambient_dim):
        lo, hi = big.anchor[a], big.anchor[a] + (1 if a in big.extents else 0)
        slo = small.anchor[a]
        shi = slo + (1 if a in small.extents else 0)
        if slo < lo or shi > hi:
            return False
    return True


# ---------------------------------------------------------------------------
# centers


def _zigzag(n: int) -> int:
    return 2 * n if n >= 0 else -2 * n - 1


_DEN = 2 ** 8


def draw_center(seed: int, cell: GridCell, r: Fraction, attempt: int = 0) -> Point:
    """Deterministic center in the middle half of ``cell``; never on the
    midplanes, so it avoids the refined grid of side r/2."""
    key = [seed % 2 ** 32, attempt, len(cell.extents)] + [_zigzag(a) for a in cell.anchor] + list(cell.extents)
    rng = np.random.default_rng(key)
    y = [Fraction(a) * r for a in cell.anchor]
    for a in cell.extents:
        u = 2 * int(rng.integers(0, _DEN // 2)) + 1
        y[a] += r / 4 + (r / 2) * Fraction(u, _DEN)
    return tuple(y)


# ---------------------------------------------------------------------------
# the cascade


@dataclass
class _Cascade:
    out: list[tuple[Simplex, int]]
    tracks: list[tuple[Simplex, int]]  # homotopy of the pieces (dim + 1)
    H: list[tuple[Simplex, int]]       # homotopy of their boundaries (dim)
    cells: set[GridCell]               # smallest cells holding the input pieces


def _level_cells(items, r) -> dict[GridCell, list]:
    groups: dict[GridCell, list] = defaultdict(list)
    for s, c in items:
        mc = min_cell(s, r)
        if mc is None:
            raise DeformationError("piece straddles grid cells")
        groups[mc].append((s, c))
    return groups


def _growth(items, push: _CellPush) -> float:
    before = sum(abs(c) * float_volume(s) for s, c in items)
    after = sum(abs(c) * float_volume(s) for s, c in push.image)
    return after / before if before else 0.0


def _cascade(items, dim: int, n: int, r: Fraction, stop: int, centers: dict, seed: int,
             reject: bool) -> _Cascade:
    """Push the pieces down to the stop-skeleton, levels n, ..., stop + 1."""
    cur = _grid_cut(items, r)
    tracks: list = []
    H: list = []
    top = {min_cell(s, r) for s, _ in cur}
    for k in range(n, stop, -1):
        groups = _level_cells(cur, r)
        nxt = []
        for cell in sorted(groups):
            group = groups[cell]
            if cell.dim < k:
                nxt.extend(group)
                continue
            if cell.dim > k:
                raise DeformationError(f"piece in a {cell.dim}-cell at level {k}")
            push = _choose_and_push(group, cell, r, centers, seed, reject)
            nxt.extend(push.image)
            tracks.extend(push.tracks)
            H.extend(push.edge_tracks)
        cur = nxt
    return _Cascade(cur, tracks, H, top)


def _choose_and_push(group, cell, r, centers, seed, reject) -> _CellPush:
    if cell in centers:
        return _push_in_cell(group, cell, r, centers[cell])
    candidates = []
    attempt = 0
    want = 4 if reject else 1
    while len(candidates) < want:
        if attempt > 64:
            raise DeformationError(f"no admissible center for cell {cell}")
        y = draw_center(seed, cell, r, attempt)
        attempt += 1
        try:
            push = _push_in_cell(group, cell, r, y)
        except CenterHit:
            continue
        candidates.append((y, push))
    if reject:
        g = [_growth(group, p) for _, p in candidates]
        avg = sum(g) / len(g)
        y, push = next((cp for cp, gi in zip(candidates, g) if gi <= 4 * avg), candidates[0])
    else:
        y, push = candidates[0]
    centers[cell] = y
    return push


# ---------------------------------------------------------------------------
# cellularization


def cellularize(T: PLChain, scale: GridScale) -> Chain:
    """Degree chain of a PL d-chain lying in the d-skeleton.

    The degrees are integers exactly when the boundary (as a current) lies
    in the (d-1)-skeleton; anything else raises.
    """
    r = scale.r
    d = T.dim
    acc: dict[GridCell, Fraction] = defaultdict(Fraction)
    bound: dict[GridCell, Fraction] = defaultdict(Fraction)
    for s, c in T.terms.items():
        mc = min_cell(s, r)
        if mc is None or mc.dim > d:
            raise DeformationError("chain leaves the d-skeleton")
        if mc.dim < d:
            continue
        v = signed_volume(s, mc.extents) * c
        acc[mc] += v
        bound[mc] += abs(v)
    vol = r ** d
    coeffs = {}
    for cell, v in acc.items():
        q = v / vol
        if q.denominator != 1:
            raise DeformationError(f"non-integral degree {q} on {cell}")
        if abs(q) > bound[cell] / vol:
            raise DeformationError("degree exceeds the covering mass")
        if q:
            coeffs[cell] = q.numerator
    return Chain(Ring.INT, scale, d, coeffs)


# ---------------------------------------------------------------------------
# public deformation


@dataclass
class DeformationOutput:
    P: Chain
    Q: PLChain
    R: PLChain
    seed: int
    centers: dict[GridCell, Point]
    measured_constants: dict[str, float]
    P_pl: PLChain
    neighbourhood: frozenset[GridCell]


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def deform_chain(T: PLChain, scale: GridScale, seed: int = 0,
                 centers: dict[GridCell, Point] | None = None) -> DeformationOutput:
    """Cellular approximation T = P + Q + dR at grid side ``scale.r``.

    Centers already present in ``centers`` are reused, so calling this on
    dT with the returned center map gives dP exactly (naturality).
    """
    r = scale.r
    n, d = T.ambient_dim, T.dim
    if scale.ambient_dim != n:
        raise DeformationError("scale and chain disagree on the ambient dimension")
    reject = centers is None
    centers = {} if centers is None else dict(centers)
    T2, Q, R, A = _deform_pl(T, r, centers, seed, reject)
    if not currents_agree(T - T2 - Q, R, seed):
        raise DeformationError("decomposition T = P + Q + dR does not close")
    P = cellularize(T2, scale)
    nb = set()
    for cell in A.cells:
        nb.update(_top_cells_containing(cell))
    for cell in P.support():
        if not any(_cell_contains(K, cell) for K in _top_cells_containing(cell) if K in nb):
            raise DeformationError(f"P leaves the neighbourhood of T at {cell}")
    mT = T.mass()
    mdT = T.boundary().mass() if d > 0 else 0.0
    mP = float(P.mass())
    mdP = float(P.boundary().mass()) if d > 0 else 0.0
    measured = {
        "P": _ratio(mP, mT + float(r) * mdT),
        "dP": _ratio(mdP, mdT),
        "Q": _ratio(Q.mass(), float(r) * mdT),
        "R": _ratio(R.mass(), float(r) * mT),
    }
    return DeformationOutput(P, Q, R, seed, centers, measured, T2, frozenset(nb))


def _deform_pl(T: PLChain, r: Fraction, centers: dict, seed: int, reject: bool, full: bool = True):
    """Stage A pushes T into the d-skeleton; stage B pushes the boundary of
    the result into the (d-1)-skeleton inside the d-cells and adds the swept
    region.  Returns (T'', Q, R, stage A) with T = T'' + Q + dR as currents."""
    n, d = T.ambient_dim, T.dim
    A = _cascade(list(T.terms.items()), d, n, r, d, centers, seed, reject)
    T_A = PLChain.from_terms(d, n, A.out)
    if d == 0:
        if not full:
            return T_A, None, None, A
        return T_A, -PLChain.zero(d, n), -PLChain.from_terms(d + 1, n, A.tracks), A
    B = _cascade(list(T_A.boundary().terms.items()), d - 1, d, r, d - 1, centers, seed, reject)
    swept = PLChain.from_terms(d, n, B.tracks)
    if not full:
        return T_A + swept, None, None, A
    R = -PLChain.from_terms(d + 1, n, A.tracks)
    H_A = PLChain.from_terms(d, n, A.H)
    return T_A + swept, -swept - H_A, R, A


def _form_integrals(S: PLChain, R: PLChain, forms: dict) -> tuple[list, list]:
    """Integrals of each form f dx_I over S and of its differential over R."""
    n, d = S.ambient_dim, S.dim
    keys = list(forms)
    lhs = [Fraction(0)] * len(keys)
    for s, c in S.terms.items():
        vols = signed_volumes(s, keys)
        bary = [sum(v[i] for v in s) / (d + 1) for i in range(n)]
        for t, axes in enumerate(keys):
            if vols[t]:
                coef = forms[axes]
                lhs[t] += c * vols[t] * (coef[0] + sum(a * x for a, x in zip(coef[1:], bary)))
    import itertools

    big = list(itertools.combinations(range(n), d + 1))
    totals = dict.fromkeys(big, Fraction(0))
    for s, c in R.terms.items():
        for J, v in zip(big, signed_volumes(s, big)):
            totals[J] += c * v
    rhs = []
    for axes in keys:
        coef = forms[axes]
        acc = Fraction(0)
        for j in range(n):
            if j not in axes:
                sign = (-1) ** sum(1 for a in axes if a < j)
                acc += coef[j + 1] * sign * totals[tuple(sorted(axes + (j,)))]
        rhs.append(acc)
    return lhs, rhs


def currents_agree(S: PLChain, R: PLChain, seed: int = 0) -> bool:
    """Randomized exact test of S = dR as currents.

    Integrates S against f dx_I and R against d(f dx_I) for every coordinate
    multi-index I, with f affine with random coefficients up to 2^40 in
    size; a wrong identity survives with probability about 2^-40 per I.
    """
    import itertools

    rng = np.random.default_rng([seed % 2 ** 32, 7])
    n, d = S.ambient_dim, S.dim
    forms = {axes: [int(v) for v in rng.integers(-2 ** 40, 2 ** 40, size=n + 1)]
             for axes in itertools.combinations(range(n), d)}
    lhs, rhs = _form_integrals(S, R, forms)
    return lhs == rhs


def _top_cells_containing(cell: GridCell) -> list[GridCell]:
    import itertools

    n = cell.ambient_dim
    full = tuple(range(n))
    ranges = [[cell.anchor[a]] if a in cell.extents else [cell.anchor[a] - 1, cell.anchor[a]]
              for a in range(n)]
    return [GridCell(tuple(x), full) for x in itertools.product(*ranges)]


# ---------------------------------------------------------------------------
# coarsening of cellular chains


@dataclass
class CoarsenResult:
    P: Chain
    H: Chain
    H_boundary: Chain


class Coarsener:
    """Cellular chain map from the grid of side r to side 2r with a cellular
    chain homotopy.

    The map sends a fine cell to the degree chain of its Federer-Fleming
    deformation.  Centers do not depend on the chain: every coarse cell of
    a given orientation gets the same random offset from its anchor, so the
    map is linear, commutes with the boundary and is equivariant under
    translations by the coarse lattice.  Only the cells anchored in the unit
    block {0, 1}^N are ever deformed; everything else is a translate.

    The homotopy h satisfies dh(s) = P(s) - s - h(ds); h(s) is an optimal
    integral filling inside the closed coarse cell carrying s.
    """

    def __init__(self, scale: GridScale, seed: int = 0):
        self.fine = scale
        self.coarse = scale.coarsened(2)
        self.seed = seed
        self.centers: dict[GridCell, Point] = {}
        self._offsets: dict[tuple[int, ...], Point] = {}
        self._push: dict[GridCell, Chain] = {}
        self._hom: dict[GridCell, Chain] = {}

    def center(self, cell: GridCell) -> Point:
        """Center of a coarse cell: anchor plus the offset of its type."""
        off = self._offsets.get(cell.extents)
        if off is None:
            origin = GridCell((0,) * cell.ambient_dim, cell.extents)
            off = self._offsets[cell.extents] = draw_center(self.seed, origin, self.coarse.r)
        return tuple(a * self.coarse.r + o for a, o in zip(cell.anchor, off))

    def _prepare_centers(self, parent: GridCell):
        for face in _closed_faces(parent):
            if face.dim > 0 and face not in self.centers:
                self.centers[face] = self.center(face)

    @staticmethod
    def _split(cell: GridCell) -> tuple[GridCell, tuple[int, ...]]:
        base = GridCell(tuple(a % 2 for a in cell.anchor), cell.extents)
        return base, tuple(a // 2 for a in cell.anchor)

    def push_cell(self, cell: GridCell) -> Chain:
        base, shift = self._split(cell)
        if base not in self._push:
            one = Chain(Ring.INT, self.fine, base.dim, {base: 1})
            self._prepare_centers(coarse_parent(base, 2))
            out = _deform_pl(PLChain.from_cellular(one), self.coarse.r, self.centers, self.seed,
                             False, full=False)[0]
            self._push[base] = cellularize(out, self.coarse)
        return _translate(self._push[base], shift)

    def push(self, T: Chain) -> Chain:
        ring = T.ring
        T = T if ring is Ring.INT else T.lift(Ring.INT)
        acc: dict[GridCell, int] = defaultdict(int)
        for cell, c in T.coeffs.items():
            for k, v in self.push_cell(cell).coeffs.items():
                acc[k] += c * v
        out = Chain(Ring.INT, self.coarse, T.dim, acc)
        return out if ring is Ring.INT else out.mod2()

    def homotopy_cell(self, cell: GridCell) -> Chain:
        base, shift = self._split(cell)
        if base not in self._hom:
            self._hom[base] = self._carrier_filling(base)
        return _translate(self._hom[base], tuple(2 * a for a in shift))

    def _carrier_filling(self, cell: GridCell) -> Chain:
        d = cell.dim
        one = Chain(Ring.INT, self.fine, d, {cell: 1})
        z = self.push_cell(cell).refine(2) - one
        if d > 0:
            z = z - self.homotopy(one.boundary())
        if z.is_zero():
            return self._zero(d + 1)
        parent = coarse_parent(cell, 2)
        lo = tuple(2 * a for a in parent.anchor)
        hi = tuple(2 * a + (2 if i in parent.extents else 0) for i, a in enumerate(parent.anchor))
        cells = cells_in_box(lo, hi, d + 1)
        if not cells:
            raise DeformationError(f"nonzero cycle in a {parent.dim}-cell carrier of {cell}")
        res = solve_ilp(_build_fill_program(z, cells, Ring.INT), engine="certified")
        if res.status is not Status.OPTIMAL:
            raise DeformationError(f"carrier filling failed for {cell}: {res.status}")
        h = Chain(Ring.INT, self.fine, d + 1,
                  {c: res.witness[j] for j, c in enumerate(cells) if res.witness[j]})
        if h.boundary() != z:
            raise DeformationError("carrier filling does not bound")
        return h

    def _zero(self, dim: int) -> Chain:
        return Chain.zero(Ring.INT, self.fine, dim)

    def homotopy(self, T: Chain) -> Chain:
        ring = T.ring
        T = T if ring is Ring.INT else T.lift(Ring.INT)
        acc: dict[GridCell, int] = defaultdict(int)
        for cell, c in T.coeffs.items():
            for k, v in self.homotopy_cell(cell).coeffs.items():
                acc[k] += c * v
        out = Chain(Ring.INT, self.fine, T.dim + 1, acc)
        return out if ring is Ring.INT else out.mod2()


def _translate(c: Chain, shift: tuple[int, ...]) -> Chain:
    if not any(shift):
        return c
    return Chain(c.ring, c.scale, c.dim,
                 {GridCell(tuple(a + s for a, s in zip(k.anchor, shift)), k.extents): v
                  for k, v in c.coeffs.items()})


def _closed_faces(cell: GridCell) -> list[GridCell]:
    import itertools

    out = []
    ext = cell.extents
    for choice in itertools.product((None, 0, 1), repeat=len(ext)):
        anchor = list(cell.anchor)
        keep = []
        for a, ch in zip(ext, choice):
            if ch is None:
                keep.append(a)
            else:
                anchor[a] += ch
        out.append(GridCell(tuple(anchor), tuple(keep)))
    return out


def coarsen(T: Chain, seed: int = 0, coarsener: Coarsener | None = None) -> CoarsenResult:
    """P at side 2r and H at side r with dH = P - T - H_boundary."""
    C = coarsener or Coarsener(T.scale, seed)
    P = C.push(T)
    H = C.homotopy(T)
    Hb = C.homotopy(T.boundary()) if T.dim > 0 else Chain.zero(T.ring, T.scale, T.dim)
    lhs = H.boundary()
    rhs = P.to_scale(T.scale) - T - Hb
    if lhs != rhs:
        raise DeformationError("coarsening homotopy identity fails")
    return CoarsenResult(P, H, Hb)
