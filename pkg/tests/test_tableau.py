import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from yoccoz.errors import DepthExceeded, InsufficientDepth
from yoccoz.tableau import (MarkedGrid, Source, VerdictKind, check_rules, longest_univalent_pullback,
                            marked_grid, recurrence_verdict, tau, tau_values, verdict_from_tau)


def periodic_grid(p, depth, width):
    m = np.zeros((depth + 1, width + 1), bool)
    m[:, ::p] = True
    return MarkedGrid(m)


def column0(depth, width):
    m = np.zeros((depth + 1, width + 1), bool)
    m[:, 0] = True
    return MarkedGrid(m)


@pytest.mark.parametrize("p", [1, 2, 3, 5])
def test_periodic_grids_are_valid(p):
    g = periodic_grid(p, 12, 24)
    assert check_rules(g) == []
    assert tau_values(g)[p - 1:] == [n - p for n in range(p, 13)]
    v = recurrence_verdict(g)
    assert v.kind is VerdictKind.PERIODIC and v.period == p
    assert str(v) == f"PeriodicTableau({p})"


def test_column0_only_grid():
    g = column0(8, 16)
    assert check_rules(g) == []
    assert tau_values(g) == [-1] * 8
    assert str(recurrence_verdict(g)) == "NonRecurrentAtDepth(1)"
    assert longest_univalent_pullback(g) == 9


def test_rule_counterexamples():
    g = column0(3, 6).marks.copy()
    g[3, 0] = False
    assert [v.rule for v in check_rules(MarkedGrid(g))] == ["column-0"]

    g = column0(3, 6).marks.copy()
    g[2, 3] = True  # no mark above it
    assert {v.rule for v in check_rules(MarkedGrid(g))} >= {"nesting"}

    # (2, 3) marked with (1, 1) marked forces (1, 4) marked
    g = periodic_grid(1, 3, 6).marks.copy()
    g[1, 4] = False
    g[2:, 4] = False
    rules = {(v.rule, v.cell) for v in check_rules(MarkedGrid(g))}
    assert ("T1", (1, 4)) in rules

    # (1, 2) marked with (0, 1) unmarked forces (0, 3) unmarked
    g = periodic_grid(2, 3, 6).marks.copy()
    g[0, 3] = True
    assert ("T2", (0, 3)) in {(v.rule, v.cell) for v in check_rules(MarkedGrid(g))}


def test_t3_counterexample():
    # period-2 grid: for the mark (1, 2), m = 2 so (2, 2) must match (1, 4)
    g = periodic_grid(2, 3, 8).marks.copy()
    g[2:, 2] = False
    rules = {(v.rule, v.cell) for v in check_rules(MarkedGrid(g))}
    assert ("T3", (2, 2)) in rules


@settings(max_examples=100, deadline=None)
@given(arrays(bool, st.tuples(st.integers(2, 9), st.integers(2, 12))))
def test_tau_matches_definition(m):
    m[:, 0] = True
    g = MarkedGrid(m)
    for n in range(1, min(g.depth, g.width) + 1):
        brute = max([k for k in range(n) if m[k, n - k]], default=-1)
        assert tau(g, n) == brute


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-1, 20), min_size=2, max_size=30))
def test_verdict_depends_on_values_only(t):
    a = verdict_from_tau(t)
    b = verdict_from_tau(tuple(t))
    assert a == b


def test_tau_range_checked():
    g = column0(3, 3)
    with pytest.raises(ValueError):
        tau(g, 0)
    with pytest.raises(DepthExceeded):
        tau(g, 5)


def test_verdict_needs_width():
    with pytest.raises(InsufficientDepth):
        recurrence_verdict(column0(9, 3))


def test_verdict_kinds_by_hand():
    assert verdict_from_tau([0, 1, 2, 3, 4, 5]).kind is VerdictKind.PERIODIC
    assert verdict_from_tau([0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5]).kind is VerdictKind.PERSISTENT
    assert verdict_from_tau([0, 1, 0, 3, 0, 5, 0, 7, 0, 9]).kind is VerdictKind.NOT_PERSISTENT


def test_grids_from_dynamics(puzzle_i, puzzle_m2, puzzle_air, frozen):
    for P, key in [(puzzle_i, "tau_i"), (puzzle_m2, "tau_m2"), (puzzle_air, "tau_air")]:
        g = marked_grid(P)
        assert g.source is Source.FROM_DYNAMICS
        assert g.marks.shape == (11, 21)
        assert check_rules(g) == []
        assert tau_values(g) == frozen[key]


def test_c_i_tau_alternates(frozen):
    # c_n = -i for odd n >= 3 lies in the critical piece of level 0 only
    t = frozen["tau_i"]
    assert t[2::2] == [0] * 4 and t[3::2] == [-1] * 4


def test_rows_round_trip():
    g = periodic_grid(3, 4, 7)
    assert MarkedGrid.from_rows(g.rows()) == g
    assert g.rows()[0] == "10010010"
