from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import settings

from cubefill.chain import Chain, Ring
from cubefill.grid import GridCell, GridScale

settings.register_profile("ci", deadline=None, max_examples=60)
settings.load_profile("ci")


def cell(anchor, extents=()):
    return GridCell(tuple(anchor), tuple(extents))


def unit(N: int, r=1) -> GridScale:
    return GridScale(Fraction(r), N)


def square_boundary(ring: Ring = Ring.INT, N: int = 2, anchor=None) -> Chain:
    anchor = anchor or (0,) * N
    sq = Chain(ring, unit(N), 2, {cell(anchor, (0, 1)): 1})
    return sq.boundary()


def cube_boundary(ring: Ring = Ring.INT) -> Chain:
    return Chain(ring, unit(3), 3, {cell((0, 0, 0), (0, 1, 2)): 1}).boundary()


@pytest.fixture
def sq_bd():
    return square_boundary()


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one summary line per acceptance criterion."""
    def record(number: int, ok: bool, detail: str):
        _CRITERIA.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
