from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cubefill.chain import Chain, ChainError, Ring
from cubefill.filling import fv
from cubefill.gallery import gen_klein_bottle, gen_random_cycle, gen_region, klein_min_size
from cubefill.grid import cells_in_box
from cubefill.orient import (PseudoOrientation, halve_dim0, halve_filling, is_orientable,
                             is_pseudomanifold, noa, orient_codim1, walk_reverses_orientation)

from conftest import cell, cube_boundary, square_boundary, unit


def solid(cells, N=3, ring=Ring.INT):
    return Chain(ring, unit(N), N, {c: 1 for c in cells})


def torus_region():
    return solid([c for c in cells_in_box((0, 0, 0), (3, 3, 1), 3) if c.anchor[:2] != (1, 1)])


def hollow_box():
    return solid([c for c in cells_in_box((0, 0, 0), (3, 3, 3), 3) if c.anchor != (1, 1, 1)])


@pytest.fixture(scope="module")
def klein():
    K, _ = gen_klein_bottle(klein_min_size())
    return K


def test_noa_trivial_cases():
    z = Chain.zero(Ring.MOD2, unit(3), 2)
    assert noa(z).value == 0
    r = noa(cube_boundary(Ring.MOD2))
    assert r.value == 6 and r.optimal
    assert r.R.R.mod2() == cube_boundary(Ring.MOD2)
    assert r.R.R in (cube_boundary(), -cube_boundary())


def test_noa_rejects_non_cycle():
    with pytest.raises(ChainError):
        noa(Chain(Ring.MOD2, unit(2), 1, {cell((0, 0), (0,)): 1}))


def test_is_orientable_examples(klein):
    assert is_orientable(cube_boundary(Ring.MOD2)).orientable
    rep = is_orientable(torus_region().boundary().mod2())
    assert rep.orientable and rep.pseudomanifold
    assert rep.witness.boundary().is_zero() and set(map(abs, rep.witness.coeffs.values())) == {1}
    rep = is_orientable(klein)
    assert not rep.orientable and rep.pseudomanifold
    assert walk_reverses_orientation(klein, rep.witness)


def test_non_pseudomanifold_fallback():
    # two cube boundaries touching along one edge
    A = solid([cell((0, 0, 0), (0, 1, 2)), cell((1, 1, 0), (0, 1, 2))], ring=Ring.MOD2).boundary()
    assert not is_pseudomanifold(A)
    rep = is_orientable(A)
    assert rep.orientable and not rep.pseudomanifold
    assert rep.witness.boundary().is_zero() and rep.witness.mod2() == A


def test_klein_walk_is_closed(klein):
    walk = is_orientable(klein).witness
    assert all(c in klein.coeffs for c in walk)
    assert len(set(walk)) == len(walk)


def test_halve_dim0_examples():
    e = Chain(Ring.INT, unit(2), 1, {cell((0, 0), (0,)): 2})
    a, b = halve_dim0(e)
    assert a == b == e.lift_double()
    assert a.mass() == e.mass() / 2
    # square corners a=(0,0) b=(1,0) c=(1,1) d=(0,1)
    ab, cb = cell((0, 0), (0,)), cell((1, 0), (1,))
    cd, ad = cell((0, 1), (0,)), cell((0, 0), (1,))
    U = Chain(Ring.INT, unit(2), 1, {ab: 1, cb: -1, cd: -1, ad: 1})
    plus, minus = halve_dim0(U)
    assert plus.mass() == 2 and plus.mass() + minus.mass() == U.mass()
    options = [Chain(Ring.INT, unit(2), 1, {ab: 1, cd: -1}), Chain(Ring.INT, unit(2), 1, {cb: -1, ad: 1})]
    assert plus in options
    T = U.boundary().lift_double()
    assert plus.boundary() == T == minus.boundary()


def test_halve_dim0_odd_rejected():
    with pytest.raises(ChainError, match="odd boundary"):
        halve_dim0(Chain(Ring.INT, unit(2), 1, {cell((0, 0), (0,)): 1}))


@given(st.integers(0, 10_000))
def test_halve_dim0_splits_mass(seed):
    rng = np.random.default_rng(seed)
    edges = cells_in_box((0, 0, 0), (2, 2, 2), 1)
    U = Chain(Ring.INT, unit(3), 1, {edges[int(i)]: int(rng.integers(-3, 4)) for i in rng.integers(0, len(edges), 6)})
    U = U + U  # even boundary
    if U.is_zero():
        return
    plus, minus = halve_dim0(U)
    assert plus.boundary() == minus.boundary() == U.boundary().lift_double()
    assert plus.mass() + minus.mass() == U.mass() and plus.mass() <= minus.mass()


def test_orient_codim1_examples():
    A = cube_boundary(Ring.MOD2)
    assert orient_codim1(A) == cube_boundary()
    L = solid([cell((0, 0, 0), (0, 1, 2)), cell((1, 0, 0), (0, 1, 2))])
    assert orient_codim1(L.boundary().mod2()) == L.boundary()
    H = hollow_box()
    R = orient_codim1(H.boundary().mod2())
    assert R == H.boundary()
    assert noa(H.boundary().mod2()).value == H.boundary().mod2().mass()


@given(st.integers(0, 10_000))
def test_orient_codim1_packaging(seed):
    A = gen_region((3, 3, 2), 0.4, seed).boundary().mod2()
    R = orient_codim1(A)
    assert R.boundary().is_zero() and R.mod2() == A
    assert R.support() == A.support() and all(abs(v) == 1 for v in R.coeffs.values())


def test_orient_codim1_errors():
    with pytest.raises(ChainError):
        orient_codim1(square_boundary(Ring.MOD2, N=3))


def test_halve_filling_examples():
    sq = Chain(Ring.INT, unit(2), 2, {cell((0, 0), (0, 1)): 1})
    zero = Chain.zero(Ring.INT, unit(2), 2)
    assert halve_filling(sq * 2, zero) == sq
    with pytest.raises(ChainError, match="parity"):
        halve_filling(sq, zero)


def test_halve_filling_reproduces_dim0_split():
    ab, cb = cell((0, 0), (0,)), cell((1, 0), (1,))
    cd, ad = cell((0, 1), (0,)), cell((0, 0), (1,))
    U = Chain(Ring.INT, unit(2), 1, {ab: 1, cb: -1, cd: -1, ad: 1})
    plus, minus = halve_dim0(U)
    R = plus - minus
    assert R.boundary().is_zero()
    out = halve_filling(U, PseudoOrientation(R, U.mod2()))
    assert out in (plus, minus) and out.mass() == plus.mass()


def test_lemma_inequality_on_random_pairs():
    from cubefill.gallery import gen_even_boundary_pair
    for s in range(4):
        T, U = gen_even_boundary_pair(1, (2, 2, 2), 0.35, s)
        if U.is_zero():
            continue
        n = noa(U.mod2())
        assert n.value >= U.mod2().mass()
        assert n.value == U.mod2().mass() if is_orientable(U.mod2()).orientable else True
        Uh = halve_filling(U, n.R)
        assert Uh.boundary() == T
        f = fv(T)
        assert 2 * f.value <= U.mass() + n.value


@given(st.integers(0, 10_000))
def test_noa_lower_bound(seed):
    A = gen_random_cycle(1, Ring.MOD2, (2, 2, 1), 0.4, seed)
    r = noa(A)
    assert r.value >= A.mass()
    assert (r.value == A.mass()) == is_orientable(A).orientable
