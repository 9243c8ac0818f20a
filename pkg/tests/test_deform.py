from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from cubefill.chain import Chain, Ring
from cubefill.deform import (Coarsener, DeformationError, PLChain, _top_cells_containing,
                             cellularize, coarsen, currents_agree, deform_chain, draw_center,
                             radial_project, signed_volume, squared_volume)
from cubefill.gallery import gen_random_pl
from cubefill.grid import GridScale

from conftest import cell, square_boundary, unit


def seg(a, b, n=2):
    return PLChain.from_terms(1, n, [([a, b], 1)])


def test_plchain_orientation_and_boundary():
    s = seg((0, 0), (1, 0))
    assert -s == seg((1, 0), (0, 0))
    b = s.boundary()
    assert b == PLChain.from_terms(0, 2, [([(1, 0)], 1), ([(0, 0)], -1)])
    tri = PLChain.from_terms(2, 2, [([(0, 0), (1, 0), (0, 1)], 1)])
    assert tri.boundary().boundary().is_zero()
    assert squared_volume(((0, 0), (1, 0), (0, 1))) == F(1, 4)
    assert signed_volume(((0, 0), (1, 0), (0, 1)), (0, 1)) == F(1, 2)
    assert PLChain.from_terms(1, 2, [([(0, 0), (0, 0)], 1)]).is_zero()


def test_from_cellular_matches_boundary():
    sq = Chain(Ring.INT, unit(2), 2, {cell((0, 0), (0, 1)): 1})
    pl = PLChain.from_cellular(sq)
    assert len(pl) == 2
    assert currents_agree(pl.boundary(), pl)
    assert cellularize(pl, unit(2)) == sq
    assert currents_agree(PLChain.from_cellular(sq.boundary()), pl)


def test_radial_project_fixes_boundary():
    K = cell((0, 0), (0, 1))
    edge = seg((0, 0), (1, 0))
    assert radial_project(K, (F(1, 2), F(1, 3)), edge) == edge


def test_radial_project_point():
    K = cell((0, 0), (0, 1))
    pt = PLChain.from_terms(0, 2, [([(F(1, 2), F(1, 2))], 1)])
    out = radial_project(K, (F(3, 8), F(1, 2)), pt)
    assert out == PLChain.from_terms(0, 2, [([(F(1), F(1, 2))], 1)])


def test_radial_project_diameter():
    K = cell((0, 0), (0, 1))
    diag = seg((0, 0), (1, 1))
    y = (F(5, 8), F(3, 8))
    out = radial_project(K, y, diag)
    assert out.boundary() == diag.boundary()
    for s, _ in out.items():
        assert all(any(x in (0, 1) for x in p) for p in s)
        assert all(p[0] in (0, 1) for p in s) or all(p[1] in (0, 1) for p in s)
    assert out.mass() <= 4 * diag.mass()


def test_radial_project_rejects_outside():
    with pytest.raises(DeformationError):
        radial_project(cell((0, 0), (0, 1)), (F(1, 2), F(1, 2)), seg((0, 0), (2, 0)))


def test_cellularize_examples():
    sq = Chain(Ring.INT, unit(2), 2, {cell((0, 0), (0, 1)): 1})
    once = PLChain.from_cellular(sq)
    assert cellularize(once, unit(2)) == sq
    assert cellularize(once - once, unit(2)).is_zero()
    tri_a = PLChain.from_terms(2, 2, [([(0, 0), (1, 0), (1, 1)], 1), ([(0, 0), (1, 1), (0, 1)], 1)])
    tri_b = PLChain.from_terms(2, 2, [([(0, 0), (1, 0), (0, 1)], 1), ([(1, 0), (1, 1), (0, 1)], 1)])
    assert cellularize(tri_a + tri_b, unit(2)) == sq * 2
    with pytest.raises(DeformationError):
        cellularize(PLChain.from_terms(2, 2, [([(0, 0), (1, 0), (0, 1)], 1)]), unit(2))
    with pytest.raises(DeformationError):
        cellularize(seg((0, 0), (1, 1)), unit(2))


def test_deform_cellular_is_identity():
    T = PLChain.from_cellular(square_boundary())
    out = deform_chain(T, unit(2))
    assert out.P == square_boundary()
    assert out.Q.nondegenerate().is_zero() and out.R.nondegenerate().is_zero()


def test_axis_segment():
    out = deform_chain(seg((0, 0), (2, 0)), unit(2))
    expected = Chain(Ring.INT, unit(2), 1, {cell((0, 0), (0,)): 1, cell((1, 0), (0,)): 1})
    assert out.P == expected


def test_diagonal_segment():
    T = seg((0, 0), (3, 3))
    out = deform_chain(T, unit(2), seed=3)
    P = out.P
    start, end = cell((0, 0)), cell((3, 3))
    assert P.boundary() == Chain(Ring.INT, unit(2), 0, {end: 1, start: -1})
    assert all(abs(v) == 1 for v in P.coeffs.values())
    assert P.mass() == 6  # a monotone lattice path
    denom = T.mass() + float(T.boundary().mass())
    assert out.measured_constants["P"] == pytest.approx(6 / denom)


def test_naturality_and_locality_random():
    for d, N in [(1, 2), (1, 3), (2, 3)]:
        for s in range(4):
            T = gen_random_pl(d, N, s)
            out = deform_chain(T, GridScale(1, N), seed=s)
            nat = deform_chain(T.boundary(), GridScale(1, N), seed=s, centers=out.centers)
            assert nat.P == out.P.boundary()
            assert all(any(K in out.neighbourhood for K in _top_cells_containing(c))
                       for c in out.P.support())


def test_deform_at_finer_scale():
    T = seg((0, 0), (1, F(1, 2)))
    out = deform_chain(T, GridScale(F(1, 4), 2), seed=1)
    assert out.P.scale.r == F(1, 4)
    assert out.P.boundary() == Chain(Ring.INT, GridScale(F(1, 4), 2), 0,
                                     {cell((4, 2)): 1, cell((0, 0)): -1})


def test_scale_mismatch():
    with pytest.raises(DeformationError):
        deform_chain(seg((0, 0), (1, 1)), unit(3))


def test_currents_agree_detects_wrong_identity():
    T = gen_random_pl(1, 2, 0)
    out = deform_chain(T, unit(2))
    S = T - out.P_pl - out.Q
    assert currents_agree(S, out.R)
    if not out.R.nondegenerate().is_zero():
        assert not currents_agree(S, out.R * 2)


@given(st.integers(0, 2 ** 31), st.integers(-5, 5), st.integers(-5, 5))
def test_center_in_middle_half(seed, a, b):
    K = cell((a, b), (0, 1))
    y = draw_center(seed, K, F(1))
    for coord, lo in zip(y, (a, b)):
        assert lo + F(1, 4) < coord < lo + F(3, 4) and coord != lo + F(1, 2)
    assert y == draw_center(seed, K, F(1))


def test_coarsen_zero():
    z = Chain.zero(Ring.INT, unit(2), 1)
    res = coarsen(z)
    assert res.P.is_zero() and res.H.is_zero()


def test_coarsen_unit_square_boundary():
    T = square_boundary()
    seen = set()
    for seed in range(12):
        res = coarsen(T, seed)
        P = res.P
        assert P.scale.r == 2 and P.boundary().is_zero()
        assert P.mass() <= 8
        if not P.is_zero():
            assert len(P) == 4
            K = next(iter(c for c in P.support() if c.extents == (0,)))
            coarse = Chain(Ring.INT, P.scale, 2, {cell((K.anchor[0], min(c.anchor[1] for c in P.support())),
                                                       (0, 1)): 1})
            assert P in (coarse.boundary(), -coarse.boundary())
        seen.add(P.is_zero())
    assert seen == {True, False}


def test_coarsen_aligned_square():
    T = Chain(Ring.INT, unit(2), 2, {cell((x, y), (0, 1)): 1 for x in (0, 1) for y in (0, 1)}).boundary()
    for seed in range(4):
        res = coarsen(T, seed)
        assert res.P == Chain(Ring.INT, GridScale(2, 2), 2, {cell((0, 0), (0, 1)): 1}).boundary()
        assert res.P.mass() == 8
        assert res.H_boundary.is_zero()


def test_coarsener_is_a_chain_map():
    C = Coarsener(unit(3), seed=5)
    for c in [cell((0, 0, 0), (0, 1)), cell((1, 2, 3), (0, 2)), cell((3, 1, 0), (1, 2))]:
        one = Chain(Ring.INT, unit(3), 2, {c: 1})
        assert C.push(one).boundary() == C.push(one.boundary())
        h = C.homotopy(one)
        assert h.boundary() == C.push(one).to_scale(unit(3)) - one - C.homotopy(one.boundary())


def test_coarsener_translation_equivariant():
    C = Coarsener(unit(2), seed=2)
    a = C.push(Chain(Ring.INT, unit(2), 1, {cell((1, 0), (1,)): 1}))
    b = C.push(Chain(Ring.INT, unit(2), 1, {cell((5, 4), (1,)): 1}))
    shifted = Chain(Ring.INT, a.scale, 1, {cell((k.anchor[0] + 2, k.anchor[1] + 2), k.extents): v
                                           for k, v in a.coeffs.items()})
    assert b == shifted


def test_coarsen_mod2():
    T = square_boundary(Ring.MOD2)
    res = coarsen(T, 0)
    assert res.P.ring is Ring.MOD2 and res.P.boundary().is_zero()
