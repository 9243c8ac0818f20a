"""Multiscale constructions driven by dyadic coarsening.

Both constructions walk up the scales r, 2r, 4r, ... with one
:class:`~cubefill.deform.Coarsener` per level.  The coarsener supplies a
cellular chain map P and a chain homotopy h with dh = P - id - h d, so
everything below is exact integer (or mod 2) bookkeeping.

``guth_fill`` turns a filling U of 2T into a filling W of T.  At level i,
with U_{i+1} = P(U_i) and T_{i+1} = P(T_i), linearity of h gives

    2 h(T_i) = P(U_i) - U_i - d h(U_i),

so the connecting chain R_i = h(T_i) is recovered by halving a chain that
is even by construction; the code computes it that way and checks it
against h(T_i).  Since dR_i = T_{i+1} - T_i, W = -sum R_i fills T once the
coarsened cycle vanishes.

``multiscale_pseudo_orientation`` runs the same recursion mod 2 on a cycle
A: with V_i = h(A_i) mod 2, dV_i = A_{i+1} + A_i, and lifting V_i to
{0, 1} gives an integral cycle dV_i' congruent to A_{i+1} + A_i.  Summing
over the levels telescopes to A.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .chain import Chain, ChainError, Ring
from .deform import Coarsener, DeformationError
from .orient import PseudoOrientation

MAX_LEVELS = 64


class MultiscaleError(RuntimeError):
    pass


@dataclass
class Level:
    i: int
    T: Chain
    U: Chain | None
    R: Chain  # R_i for guth_fill, V_i for the pseudo-orientation


@dataclass
class MultiscaleTrace:
    levels: list[Level] = field(default_factory=list)
    termination_level: int = 0
    measured_ratio: float = 0.0
    mass_out: Fraction = Fraction(0)

    def summary(self) -> dict:
        return {
            "termination_level": self.termination_level,
            "measured_ratio": self.measured_ratio,
            "mass": str(self.mass_out),
            "levels": [
                {"i": lv.i, "scale": str(lv.T.scale.r), "mass_T": str(lv.T.mass()),
                 "mass_U": None if lv.U is None else str(lv.U.mass()),
                 "mass_R": str(lv.R.mass())}
                for lv in self.levels
            ],
        }


def guth_ratio(mass_w: Fraction, mass_u: Fraction) -> float:
    """mass W / (mass U (1 + log2(1 + mass U)))."""
    if mass_u == 0:
        return 0.0
    mu = float(mass_u)
    return float(mass_w) / (mu * (1 + math.log2(1 + mu)))


def guth_fill(T: Chain, U: Chain, seed: int = 0) -> tuple[Chain, MultiscaleTrace]:
    """Integral filling W of T built from an integral filling U of 2T."""
    if T.ring is not Ring.INT or U.ring is not Ring.INT:
        raise ChainError("guth_fill works over Z")
    if U.scale != T.scale or U.dim != T.dim + 1:
        raise ChainError("U must be a (dim T + 1)-chain at the scale of T")
    if U.boundary() != T * 2:
        raise ChainError("dU != 2T")
    base = T.scale
    trace = MultiscaleTrace()
    W = Chain.zero(Ring.INT, base, T.dim + 1)
    Ti, Ui = T, U
    i = 0
    while not Ti.is_zero():
        if i >= MAX_LEVELS:
            raise MultiscaleError(f"coarsened cycle survives {MAX_LEVELS} levels")
        C = Coarsener(Ti.scale, seed + i)
        T_next, U_next = C.push(Ti), C.push(Ui)
        if U_next.boundary() != T_next * 2:
            raise MultiscaleError(f"coarsening broke dU = 2T at level {i}")
        even = U_next.to_scale(Ti.scale) - Ui - C.homotopy(Ui).boundary()
        try:
            R = even.lift_double()
        except ChainError as exc:
            raise MultiscaleError(f"halving failed at level {i}: {exc}") from exc
        if R != C.homotopy(Ti):
            raise MultiscaleError(f"halved chain differs from the homotopy at level {i}")
        if R.boundary() != T_next.to_scale(Ti.scale) - Ti:
            raise MultiscaleError(f"telescoping identity fails at level {i}")
        trace.levels.append(Level(i, Ti, Ui, R))
        W = W - R.to_scale(base)
        Ti, Ui = T_next, U_next
        i += 1
    if W.boundary() != T:
        raise MultiscaleError("dW != T")
    trace.termination_level = i
    trace.mass_out = W.mass()
    trace.measured_ratio = guth_ratio(W.mass(), U.mass())
    return W, trace


def multiscale_pseudo_orientation(A: Chain, seed: int = 0) -> tuple[PseudoOrientation, MultiscaleTrace]:
    """Pseudo-orientation of the mod-2 cycle A assembled across scales."""
    if A.ring is not Ring.MOD2:
        A = A.mod2()
    if A.dim > 0 and not A.boundary().is_zero():
        raise ChainError("A is not a mod-2 cycle")
    base = A.scale
    trace = MultiscaleTrace()
    R = Chain.zero(Ring.INT, base, A.dim)
    Ai = A
    i = 0
    while not Ai.is_zero():
        if i >= MAX_LEVELS:
            raise MultiscaleError(f"coarsened cycle survives {MAX_LEVELS} levels")
        C = Coarsener(Ai.scale, seed + i)
        A_next = C.push(Ai)
        V = C.homotopy(Ai)
        if V.boundary() != A_next.to_scale(Ai.scale) + Ai:
            raise MultiscaleError(f"mod-2 homotopy identity fails at level {i}")
        piece = V.lift(Ring.INT).boundary()
        trace.levels.append(Level(i, Ai, None, V))
        R = R + piece.to_scale(base)
        Ai = A_next
        i += 1
    out = PseudoOrientation(R, A)
    out.validate()
    trace.termination_level = i
    trace.mass_out = R.mass()
    m = float(A.mass())
    trace.measured_ratio = float(R.mass()) / (m * max(1.0, math.log2(m))) if m else 0.0
    return out, trace


__all__ = [
    "Level", "MultiscaleError", "MultiscaleTrace", "DeformationError",
    "guth_fill", "guth_ratio", "multiscale_pseudo_orientation",
]
