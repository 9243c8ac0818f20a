"""Sparse cellular chains over Z, Z/2 and Q.

Chains are immutable values.  Coefficients are Python ints for ``Ring.INT``
and ``Ring.MOD2`` (always 1 for the latter) and ``Fraction`` for
``Ring.RAT``; no floating point is used anywhere in the algebra.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping

from .grid import GridCell, GridScale, cell_boundary, refine_cell


class Ring(Enum):
    INT = "Z"
    MOD2 = "Z2"
    RAT = "Q"

    def normalize(self, x):
        if self is Ring.MOD2:
            return int(x) % 2
        if self is Ring.INT:
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise ValueError(f"non-integral coefficient {x} for ring Z")
                return x.numerator
            return int(x)
        return Fraction(x)

    def norm(self, x) -> Fraction:
        if self is Ring.MOD2:
            return Fraction(1 if x % 2 else 0)
        return abs(Fraction(x))

    @classmethod
    def parse(cls, tag: str) -> Ring:
        for ring in cls:
            if ring.value == tag or ring.name == tag.upper():
                return ring
        raise ValueError(f"unknown coefficient ring {tag!r}")


class ChainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Chain:
    ring: Ring
    scale: GridScale
    dim: int
    coeffs: Mapping[GridCell, object] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for cell, c in self.coeffs.items():
            if cell.dim != self.dim or cell.ambient_dim != self.scale.ambient_dim:
                raise ChainError(f"cell {cell} does not match dim {self.dim} in R^{self.scale.ambient_dim}")
            c = self.ring.normalize(c)
            if c:
                clean[cell] = c
        object.__setattr__(self, "coeffs", MappingProxyType(clean))

    # construction helpers

    @classmethod
    def zero(cls, ring: Ring, scale: GridScale, dim: int) -> Chain:
        return cls(ring, scale, dim, {})

    @classmethod
    def from_cells(cls, cells: Iterable[GridCell], ring: Ring = Ring.INT,
                   scale: GridScale | None = None, coeff=1, dim: int | None = None) -> Chain:
        cells = list(cells)
        if scale is None:
            if not cells:
                raise ChainError("cannot infer ambient dimension of an empty chain")
            scale = GridScale(Fraction(1), cells[0].ambient_dim)
        if dim is None:
            if not cells:
                raise ChainError("cannot infer dimension of an empty chain")
            dim = cells[0].dim
        acc: dict[GridCell, object] = defaultdict(int)
        for c in cells:
            acc[c] += coeff
        return cls(ring, scale, dim, acc)

    def _like(self, coeffs, dim=None, ring=None, scale=None) -> Chain:
        return Chain(ring or self.ring, scale or self.scale,
                     self.dim if dim is None else dim, coeffs)

    # basic properties

    @property
    def ambient_dim(self) -> int:
        return self.scale.ambient_dim

    def support(self) -> frozenset[GridCell]:
        return frozenset(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __len__(self):
        return len(self.coeffs)

    def __bool__(self):
        return bool(self.coeffs)

    def __getitem__(self, cell: GridCell):
        return self.coeffs.get(cell, 0)

    def items(self):
        return sorted(self.coeffs.items())

    def __eq__(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        return (self.ring is other.ring and self.scale == other.scale
                and self.dim == other.dim and dict(self.coeffs) == dict(other.coeffs))

    def __hash__(self):
        return hash((self.ring, self.scale, self.dim, frozenset(self.coeffs.items())))

    def __repr__(self):
        body = ", ".join(f"{c}:{v}" for c, v in self.items()[:6])
        more = "" if len(self) <= 6 else f", ... ({len(self)} cells)"
        return f"Chain<{self.ring.value}, dim={self.dim}, r={self.scale.r}>({body}{more})"

    # algebra

    def _check_compatible(self, other: Chain):
        if self.ring is not other.ring:
            raise ChainError(f"ring mismatch: {self.ring.value} vs {other.ring.value}")
        if self.scale != other.scale:
            raise ChainError("chains at different scales do not mix; refine explicitly")
        if self.dim != other.dim:
            raise ChainError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: Chain) -> Chain:
        self._check_compatible(other)
        acc = dict(self.coeffs)
        for cell, c in other.coeffs.items():
            acc[cell] = acc.get(cell, 0) + c
        return self._like(acc)

    def __neg__(self) -> Chain:
        return self._like({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: Chain) -> Chain:
        return self + (-other)

    def __mul__(self, k) -> Chain:
        return self._like({cell: k * c for cell, c in self.coeffs.items()})

    __rmul__ = __mul__

    def boundary(self) -> Chain:
        if self.dim == 0:
            raise ChainError("no boundary of a 0-chain")
        acc: dict[GridCell, object] = defaultdict(int)
        for cell, c in self.coeffs.items():
            for face, s in cell_boundary(cell):
                acc[face] += s * c
        return self._like(acc, dim=self.dim - 1)

    def is_cycle(self) -> bool:
        return self.dim == 0 or self.boundary().is_zero()

    def mass(self) -> Fraction:
        return self.l1() * self.scale.r ** self.dim

    def mass_region(self, cells: Iterable[GridCell]) -> Fraction:
        return self.restrict(cells).mass()

    def l1(self) -> Fraction:
        return sum((self.ring.norm(c) for c in self.coeffs.values()), Fraction(0))

    def restrict(self, cells: Iterable[GridCell]) -> Chain:
        keep = set(cells)
        return self._like({k: v for k, v in self.coeffs.items() if k in keep})

    def mod2(self) -> Chain:
        if self.ring is Ring.RAT:
            bad = [c for c, v in self.coeffs.items() if v.denominator != 1]
            if bad:
                raise ChainError(f"non-integral coefficient on {bad[0]}")
        return self._like({k: int(v) % 2 for k, v in self.coeffs.items()}, ring=Ring.MOD2)

    def lift(self, ring: Ring = Ring.INT) -> Chain:
        """Reinterpret coefficients in another ring (Z/2 lifts to {0,1})."""
        return self._like(dict(self.coeffs), ring=ring)

    def lift_double(self) -> Chain:
        """Divide an all-even integral chain by two."""
        if self.ring is not Ring.INT:
            raise ChainError("lift_double needs an integral chain")
        out = {}
        for cell, c in sorted(self.coeffs.items()):
            if c % 2:
                raise ChainError(f"odd coefficient {c} on cell {cell}")
            out[cell] = c // 2
        return self._like(out)

    def half(self) -> Chain:
        """Exact half over Q (used for 1/2-integral fillings)."""
        return self._like({k: Fraction(v) / 2 for k, v in self.coeffs.items()}, ring=Ring.RAT)

    def refine(self, m: int) -> Chain:
        acc: dict[GridCell, object] = defaultdict(int)
        for cell, c in self.coeffs.items():
            for sub in refine_cell(cell, m):
                acc[sub] += c
        return self._like(acc, scale=self.scale.refined(m))

    def to_scale(self, scale: GridScale) -> Chain:
        """Refine to a finer scale that divides the current one."""
        q = self.scale.r / scale.r
        if q.denominator != 1:
            raise ChainError(f"scale {scale.r} does not divide {self.scale.r}")
        return self.refine(q.numerator) if q != 1 else self


def prism_cell(cell: GridCell, h: int) -> GridCell:
    """cell x [h, h+1] in R^(N+1); the new axis is the last one."""
    return GridCell(cell.anchor + (h,), cell.extents + (cell.ambient_dim,))


def slice_cell(cell: GridCell, h: int) -> GridCell:
    """cell x {h} in R^(N+1)."""
    return GridCell(cell.anchor + (h,), cell.extents)


@dataclass(frozen=True)
class PrismChain:
    """``[a, b] x base`` for a chain ``base`` at scale r; a, b multiples of r.

    The interval is stored on the last axis but oriented as the first
    factor, so ``d(prism T) = T x {b} - T x {a} - prism(dT)`` in every
    dimension.  As cells this is ``(-1)**dim`` times the axis-sorted cube.
    """

    base: Chain
    a: Fraction
    b: Fraction

    def __post_init__(self):
        a, b = Fraction(self.a), Fraction(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if not a < b:
            raise ChainError("prism interval needs a < b")
        r = self.base.scale.r
        if (a / r).denominator != 1 or (b / r).denominator != 1:
            raise ChainError(f"interval [{a}, {b}] is not on the grid of side {r}")

    def _lifted_scale(self) -> GridScale:
        return GridScale(self.base.scale.r, self.base.ambient_dim + 1)

    def materialize(self) -> Chain:
        r = self.base.scale.r
        lo, hi = int(self.a / r), int(self.b / r)
        sign = -1 if self.base.dim % 2 else 1
        acc = {}
        for cell, c in self.base.coeffs.items():
            for h in range(lo, hi):
                acc[prism_cell(cell, h)] = sign * c
        return Chain(self.base.ring, self._lifted_scale(), self.base.dim + 1, acc)


def level_chain(c: Chain, height: Fraction) -> Chain:
    """c x {height} in R^(N+1)."""
    h = Fraction(height) / c.scale.r
    if h.denominator != 1:
        raise ChainError(f"height {height} is not on the grid of side {c.scale.r}")
    scale = GridScale(c.scale.r, c.ambient_dim + 1)
    return Chain(c.ring, scale, c.dim, {slice_cell(k, h.numerator): v for k, v in c.coeffs.items()})


def prism(c: Chain, a, b) -> PrismChain:
    return PrismChain(c, a, b)


def project_out_last(c: Chain) -> Chain:
    """Push forward along R^(N+1) -> R^N; product cells are degenerate."""
    n = c.ambient_dim - 1
    acc: dict[GridCell, object] = defaultdict(int)
    for cell, v in c.coeffs.items():
        if n in cell.extents:
            continue
        acc[GridCell(cell.anchor[:n], cell.extents)] += v
    return Chain(c.ring, GridScale(c.scale.r, n), c.dim, acc)
