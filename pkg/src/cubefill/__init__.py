"""Exact filling volumes, flat norms and nonorientability areas of cubical chains."""
from __future__ import annotations

from .chain import Chain, ChainError, Ring
from .exact_opt import OptProblem, OptResult, Status, solve_ilp, solve_lp
from .filling import FillingResult, fv, fv_half_integral, flat_norm
from .grid import GridCell, GridScale, make_cell
from .orient import (NOAResult, PseudoOrientation, halve_dim0, halve_filling, is_orientable, noa,
                     orient_codim1)

__all__ = [
    "Chain", "ChainError", "FillingResult", "GridCell", "GridScale", "NOAResult", "OptProblem",
    "OptResult", "PseudoOrientation", "Ring", "Status", "flat_norm", "fv", "fv_half_integral",
    "halve_dim0", "halve_filling", "is_orientable", "make_cell", "noa", "orient_codim1",
    "solve_ilp", "solve_lp",
]
__version__ = "0.1.0"
