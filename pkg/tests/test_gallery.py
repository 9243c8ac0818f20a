from __future__ import annotations

from fractions import Fraction

import pytest

from cubefill.chain import Chain, Ring
from cubefill.gallery import (GalleryError, gen_even_boundary_pair, gen_handled_cube,
                              gen_klein_bottle, gen_random_chain, gen_random_cycle, gen_random_pl,
                              gen_region, gen_young_rings, klein_min_size, make_handle,
                              verify_surface)
from cubefill.grid import cells_in_box
from cubefill.orient import is_orientable

from conftest import cube_boundary, unit


@pytest.fixture(scope="module")
def klein():
    return gen_klein_bottle(klein_min_size())


def test_klein_bottle_report(klein):
    K, rep = klein
    assert rep.closed and rep.pseudomanifold and rep.embedded and not rep.orientable
    assert rep.euler_characteristic == 0 and rep.is_klein_bottle
    assert is_orientable(K).orientable == rep.orientable
    assert verify_surface(K) == rep


def test_klein_too_small():
    with pytest.raises(GalleryError, match="minimum"):
        gen_klein_bottle(klein_min_size() - 1)


def test_klein_larger_base_still_verifies():
    _, rep = gen_klein_bottle(klein_min_size() + 1)
    assert rep.is_klein_bottle


@pytest.mark.parametrize("k", [1, 2])
def test_young_rings_identities(klein, k):
    T, U, K = gen_young_rings(klein_min_size(), k)
    assert U.boundary() == T * 2
    assert U.mod2() == K == klein[0]
    assert T.boundary().is_zero()
    assert not T.is_zero()


def test_young_rings_bad_k():
    with pytest.raises(GalleryError):
        gen_young_rings(klein_min_size(), 0)


def test_verify_surface_examples():
    rep = verify_surface(cube_boundary(Ring.MOD2))
    assert rep.closed and rep.pseudomanifold and rep.orientable and rep.euler_characteristic == 2
    solid = Chain(Ring.MOD2, unit(3), 3, {c: 1 for c in cells_in_box((0, 0, 0), (3, 3, 1), 3)
                                          if c.anchor[:2] != (1, 1)})
    rep = verify_surface(solid.boundary())
    assert rep.closed and rep.orientable and rep.euler_characteristic == 0


def test_verify_surface_open_and_pinched():
    sq = Chain(Ring.MOD2, unit(3), 2, {cells_in_box((0, 0, 0), (1, 1, 0), 2)[0]: 1})
    assert not verify_surface(sq).closed
    two = Chain(Ring.MOD2, unit(3), 3, {c: 1 for c in cells_in_box((0, 0, 0), (2, 2, 1), 3)
                                        if c.anchor[0] == c.anchor[1]})
    rep = verify_surface(two.boundary())
    assert rep.closed and not rep.embedded


def test_handled_cube_masses():
    H = make_handle()
    assert gen_handled_cube(0, 2).mass() == 6
    assert gen_handled_cube(1, 2).mass() == 6 + (H.mass() - 1)
    D2 = gen_handled_cube(2, 4)
    assert D2.mass() == 6 + 2 * (H.mass() - 1)
    rep = verify_surface(D2)
    assert rep.closed and rep.pseudomanifold


def test_handled_cube_genus():
    L = 2
    for k in range(3):
        genus = sum(L ** (2 * (j - 1)) for j in range(1, k + 1))
        rep = verify_surface(gen_handled_cube(k, L))
        assert rep.orientable and rep.embedded and rep.euler_characteristic == 2 - 2 * genus


def test_handle_rejects_small_grid():
    with pytest.raises(GalleryError):
        make_handle(4)


def test_random_cycle_properties():
    assert gen_random_cycle(1, Ring.INT, (3, 3), 0.0, 1).is_zero()
    for s in range(5):
        for ring in Ring:
            c = gen_random_cycle(1, ring, (2, 2, 2), 0.4, s)
            assert c.boundary().is_zero()
            assert c == gen_random_cycle(1, ring, (2, 2, 2), 0.4, s)
    with pytest.raises(GalleryError):
        gen_random_cycle(2, Ring.INT, (2, 2), 0.5, 0)


def test_random_chain_and_region():
    c = gen_random_chain(2, Ring.RAT, (2, 2, 2), 0.5, 3)
    assert c.dim == 2 and all(v != 0 for v in c.coeffs.values())
    R = gen_region((3, 3), 0.5, 9)
    assert R.dim == 2 and set(R.coeffs.values()) <= {1}


def test_even_boundary_pair():
    for s in range(5):
        T, U = gen_even_boundary_pair(1, (3, 3, 3), 0.3, s)
        assert U.boundary() == T * 2
    with pytest.raises(GalleryError):
        gen_even_boundary_pair(1, (3, 3), 0.3, 0)


def test_random_pl():
    for d, N in [(1, 2), (2, 3), (2, 4)]:
        T = gen_random_pl(d, N, 5)
        assert T == gen_random_pl(d, N, 5)
        assert not T.is_zero() and T.dim == d
        for s, _ in T.items():
            assert all(Fraction(x).denominator in (1, 2, 4) for p in s for x in p)
