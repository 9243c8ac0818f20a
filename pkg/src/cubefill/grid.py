"""Cubical grids on R^N: cells, signed boundaries, volumes, neighbourhoods.

A cell of the grid of side ``r`` is stored by its minimum corner (in units
of ``r``) and the sorted tuple of axes along which it has positive extent.
Cells are closed sets; every incidence test below uses closed cells.

Boundary sign convention (all chain files depend on it): for extents
``e_1 < ... < e_d`` the face obtained by dropping ``e_j`` on the far side
has sign ``(-1)**(j-1)``, the near-side face has sign ``(-1)**j``.  This is
the Koszul sign of the tensor-product cell ``I_1 x ... x I_N``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple


class GridCell(NamedTuple):
    anchor: tuple[int, ...]
    extents: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def ambient_dim(self) -> int:
        return len(self.anchor)

    def far_corner(self) -> tuple[int, ...]:
        hi = list(self.anchor)
        for a in self.extents:
            hi[a] += 1
        return tuple(hi)

    def vertices(self) -> list[tuple[int, ...]]:
        out = []
        for bits in itertools.product((0, 1), repeat=len(self.extents)):
            v = list(self.anchor)
            for a, b in zip(self.extents, bits):
                v[a] += b
            out.append(tuple(v))
        return out


def make_cell(anchor: Iterable[int], extents: Iterable[int]) -> GridCell:
    """Validated constructor; raises ValueError on malformed input."""
    anchor = tuple(int(a) for a in anchor)
    ext = tuple(int(e) for e in extents)
    if any(b <= a for a, b in zip(ext, ext[1:])):
        raise ValueError(f"extents must be strictly increasing: {ext}")
    if ext and (ext[0] < 0 or ext[-1] >= len(anchor)):
        raise ValueError(f"extent axis out of range for N={len(anchor)}: {ext}")
    return GridCell(anchor, ext)


@dataclass(frozen=True)
class GridScale:
    """Side length ``r`` of the grid tau_r in R^N."""

    r: Fraction
    ambient_dim: int

    def __post_init__(self):
        object.__setattr__(self, "r", Fraction(self.r))
        if self.r <= 0:
            raise ValueError("grid scale must be positive")
        if self.ambient_dim < 1:
            raise ValueError("ambient dimension must be >= 1")

    def refined(self, m: int) -> GridScale:
        return GridScale(self.r / m, self.ambient_dim)

    def coarsened(self, m: int = 2) -> GridScale:
        return GridScale(self.r * m, self.ambient_dim)


def cell_boundary(cell: GridCell) -> list[tuple[GridCell, int]]:
    if not cell.extents:
        raise ValueError("no boundary of a vertex")
    out = []
    ext = cell.extents
    for j, axis in enumerate(ext):
        rest = ext[:j] + ext[j + 1:]
        sign = 1 if j % 2 == 0 else -1
        far = list(cell.anchor)
        far[axis] += 1
        out.append((GridCell(tuple(far), rest), sign))
        out.append((GridCell(cell.anchor, rest), -sign))
    return out


def cell_volume(cell: GridCell, scale: GridScale) -> Fraction:
    return scale.r ** cell.dim


def cell_cofaces(cell: GridCell) -> list[tuple[GridCell, int]]:
    """The (dim+1)-cells having ``cell`` as a face, with incidence sign."""
    out = []
    n = cell.ambient_dim
    for axis in range(n):
        if axis in cell.extents:
            continue
        ext = tuple(sorted(cell.extents + (axis,)))
        j = ext.index(axis)
        sign = 1 if j % 2 == 0 else -1
        near = GridCell(cell.anchor, ext)
        a = list(cell.anchor)
        a[axis] -= 1
        far_owner = GridCell(tuple(a), ext)
        # cell is the near face of `near` and the far face of `far_owner`
        out.append((near, -sign))
        out.append((far_owner, sign))
    return out


def nbhd(cells: Iterable[GridCell], scale: GridScale | None = None) -> set[GridCell]:
    """Closed top-dimensional cells meeting the closed union of ``cells``."""
    out: set[GridCell] = set()
    for c in cells:
        n = c.ambient_dim
        if scale is not None and n != scale.ambient_dim:
            raise ValueError("cell and scale disagree on the ambient dimension")
        ranges = []
        for axis in range(n):
            a = c.anchor[axis]
            hi = a + (1 if axis in c.extents else 0)
            ranges.append(range(a - 1, hi + 1))
        full = tuple(range(n))
        for anchor in itertools.product(*ranges):
            out.add(GridCell(anchor, full))
    return out


def refine_cell(cell: GridCell, m: int) -> list[GridCell]:
    """The m**dim subcells (at scale r/m) tiling ``cell``."""
    if m < 1:
        raise ValueError("refinement factor must be >= 1")
    base = [a * m for a in cell.anchor]
    out = []
    for offs in itertools.product(range(m), repeat=cell.dim):
        a = list(base)
        for axis, o in zip(cell.extents, offs):
            a[axis] += o
        out.append(GridCell(tuple(a), cell.extents))
    return out


def coarse_parent(cell: GridCell, m: int) -> GridCell | None:
    """The smallest cell of the grid of side m*r containing ``cell``, if the
    fine cell is not split by it; always exists, possibly of higher dim."""
    anchor = []
    ext = []
    for axis in range(cell.ambient_dim):
        a = cell.anchor[axis]
        q, rem = divmod(a, m)
        if axis in cell.extents or rem != 0:
            ext.append(axis)
        anchor.append(q)
    return GridCell(tuple(anchor), tuple(ext))


def cells_in_box(lo: tuple[int, ...], hi: tuple[int, ...], dim: int) -> list[GridCell]:
    """All dim-cells inside the closed lattice box [lo, hi], in sorted order."""
    n = len(lo)
    out = []
    for ext in itertools.combinations(range(n), dim):
        ranges = []
        ok = True
        for axis in range(n):
            top = hi[axis] - 1 if axis in ext else hi[axis]
            if top < lo[axis]:
                ok = False
                break
            ranges.append(range(lo[axis], top + 1))
        if not ok:
            continue
        for anchor in itertools.product(*ranges):
            out.append(GridCell(anchor, ext))
    out.sort()
    return out


def bounding_box(cells: Iterable[GridCell]) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    lo = hi = None
    for c in cells:
        far = c.far_corner()
        if lo is None:
            lo, hi = list(c.anchor), list(far)
        else:
            for i in range(len(lo)):
                lo[i] = min(lo[i], c.anchor[i])
                hi[i] = max(hi[i], far[i])
    if lo is None:
        return None
    return tuple(lo), tuple(hi)


@dataclass(frozen=True)
class SlabComplexDesc:
    """The slab R^N x [2^i, 2^(i+1)] cut into (N+1)-cubes of side 2^i, with
    the bottom face subdivided at scale 2^(i-1).

    Cells are never enumerated globally; callers materialize chains inside
    bounding boxes.  The bottom face uses the product-of-dyadic-intervals
    structure, which is one of several valid fillings of the corners.
    """

    level: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("slab level must be >= 0")

    @property
    def base_scale(self) -> Fraction:
        return Fraction(2) ** self.level

    @property
    def bottom_subdivision(self) -> Fraction:
        return Fraction(2) ** (self.level - 1)

    @property
    def heights(self) -> tuple[Fraction, Fraction]:
        return Fraction(2) ** self.level, Fraction(2) ** (self.level + 1)
