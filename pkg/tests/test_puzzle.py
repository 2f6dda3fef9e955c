import math
import numpy as np
import pytest

from yoccoz.dynamics import critical_orbit, fixed_points, green_potential
from yoccoz.errors import AlphaNotRepelling, DepthExceeded
from yoccoz.measure import area_bookkeeping
from yoccoz.puzzle import OnBoundary, Outside, build_puzzle, default_half_width


def test_level0_piece_counts(puzzle_i, puzzle_m2, puzzle_air):
    # the alpha rays cut {G < h0} into as many pieces as there are rays
    assert len(puzzle_i.levels[0]) == 3
    assert len(puzzle_m2.levels[0]) == 2
    assert len(puzzle_air.levels[0]) == 2


def test_rejects_attracting_alpha():
    with pytest.raises(AlphaNotRepelling):
        build_puzzle(fixed_points(0), 2, resolution=64)


@pytest.mark.parametrize("c", [1j, -2])
def test_box_holds_the_equipotential_disk(c):
    assert default_half_width(c, 1.0) >= 2.5
    assert default_half_width(-2, 1.0) > 3.09
    P = build_puzzle(fixed_points(c), 1, resolution=256)
    z = P.grid.centers()
    edge = np.concatenate([z[0], z[-1], z[:, 0], z[:, -1]])
    assert all(green_potential(c, w) > P.h0 for w in edge)


def test_partition_and_nesting(puzzle_i):
    P = puzzle_i
    for n in range(1, P.depth + 1):
        lab, up = P.labels[n], P.labels[n - 1]
        inside = lab >= 0
        # every level-n pixel sits in its parent piece
        assert np.all(up[inside] >= 0)
        for piece in P.levels[n]:
            assert np.all(up[lab == piece.id] == piece.parent_id)
        assert np.count_nonzero(inside) <= np.count_nonzero(up >= 0)


def test_bookkeeping_closes(puzzle_i):
    for n in (0, 5, 10):
        assert area_bookkeeping(puzzle_i, n)["closure"] == pytest.approx(1.0, abs=1e-12)


def test_symmetry_of_pieces(puzzle_m2):
    # p_c is even, so each level is symmetric under z -> -z
    P = puzzle_m2
    for n in (1, 4):
        a = P.pieces_mask(n)
        assert np.mean(a == a[::-1, ::-1]) > 0.999


def test_critical_pieces_hold_origin(puzzle_i):
    for n in range(puzzle_i.depth + 1):
        assert puzzle_i.locate(0j, n) == puzzle_i.critical_ids[n]
        assert puzzle_i.critical_piece(n).is_critical


def test_locate(puzzle_i):
    P = puzzle_i
    assert P.locate(3.0, 0) is Outside
    assert P.locate(fixed_points(1j).alpha, 1) is OnBoundary
    with pytest.raises(DepthExceeded):
        P.locate(0, 11)
    # c_1 = i lies in a level-0 piece and has a single pixel neighborhood
    pid = P.locate(1j, 0)
    assert isinstance(pid, int)
    assert P.vn_neighborhood(1j, 0) == {pid}
    # alpha touches every level-0 piece
    assert P.vn_neighborhood(fixed_points(1j).alpha, 0, radius=3) == {0, 1, 2}


def test_piece_paths(puzzle_i):
    p = puzzle_i.critical_piece(4)
    path = p.path
    assert len(path) == 5
    assert path == tuple(puzzle_i.critical_ids[:5])
    assert p.parent.id == path[-2]


def test_pullback_order(puzzle_air):
    orb = critical_orbit(puzzle_air.c, 4).points
    s = puzzle_air.pullback_string(orb[1:4], 0)
    assert [lv for lv, _ in s.pieces] == [2, 1, 0]
    assert s.order == 1 and not s.univalent
    # c_2 sits in the critical level-0 piece, c_1 does not
    assert puzzle_air.pullback_string(orb[1:3], 0).order == 1
    assert puzzle_air.pullback_string(orb[1:2], 0).univalent


def test_diameters_shrink(puzzle_i, frozen):
    d = [puzzle_i.diameter_stats(n)[0] for n in range(11)]
    assert d == pytest.approx(frozen["max_diameter_i"], rel=1e-12)
    assert all(a > b for a, b in zip(d, d[1:]))


def test_boundary_arcs(small_i):
    arcs = small_i.piece_boundary(0, small_i.critical_ids[0])
    kinds = {a.kind for a in arcs}
    assert "ray" in kinds and "equipotential" in kinds
    assert {a.kind for a in small_i.piece_boundary(3, 0)} == {"pulled-back"}


def test_resolution_independence_of_counts():
    # coarse and fine rasters agree on the combinatorics of shallow levels
    a = build_puzzle(fixed_points(1j), 3, resolution=512)
    b = build_puzzle(fixed_points(1j), 3, resolution=1024)
    assert [len(x) for x in a.levels] == [len(x) for x in b.levels]


def test_rejects_disconnected_julia_set():
    from yoccoz.errors import CriticalOrbitEscaped

    with pytest.raises(CriticalOrbitEscaped):
        build_puzzle(fixed_points(0.5), 2, resolution=64)


def test_combinatorics_independent_of_h0():
    a = build_puzzle(fixed_points(1j), 2, h0=1.0, resolution=512)
    b = build_puzzle(fixed_points(1j), 2, h0=2.0, resolution=512)
    for n in range(3):
        assert len(a.levels[n]) == len(b.levels[n])
        assert sorted(len(p.children_ids) for p in a.levels[n]) == sorted(len(p.children_ids) for p in b.levels[n])
    assert a.grid != b.grid


def test_preimage_of_alpha_touches_several_pieces(puzzle_i):
    # -alpha is the other preimage of alpha, so level-1 boundaries meet there
    a = fixed_points(1j).alpha
    assert len(puzzle_i.vn_neighborhood(-a, 1, radius=3)) >= 2


def test_level0_against_equipotential_disk(puzzle_i):
    P = puzzle_i
    disk = np.count_nonzero(P.green < P.h0) * P.grid.pixel_area
    assert P.diameter_stats(0)[0] <= 2 * (math.e + abs(P.c) / math.e)
    from yoccoz.measure import area_of_level, boundary_area
    assert area_of_level(P, 0) == pytest.approx(disk - boundary_area(P, 0), rel=0.01)
