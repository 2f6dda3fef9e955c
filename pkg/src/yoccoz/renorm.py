"""First-return maps of the critical orbit to a critical puzzle piece.

Given a level n and the returns m(1) < m(2) < ... of c_j = f^j(0) into
V = V^n(0) (with m(0) = 0), the pieces V_i = V^(n + l(i))(c_m(i)), where
l(i) = m(i+1) - m(i), carry g = f^l(i) onto V. The map is checked against the
conditions that make it a generalized polynomial-like map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import ndimage

from .dynamics import critical_orbit, iterate
from .errors import (AnnulusDegenerate, NoReturns, RasterTooCoarse, ValidationFailed)
from .mask import FOUR, PixelGrid, RegionMask, pixel_set_diameter

ORBIT_TOL = 1e-9


def returns_to_critical_piece(puzzle, n: int, budget: Optional[int] = None, search: int = 3) -> list[int]:
    """All j in 1..budget with c_j in V^n(0)."""
    puzzle._check_level(n)
    if budget is None:
        budget = puzzle.depth
    orb = critical_orbit(puzzle.c, budget + 1)
    crit = puzzle.critical_ids[n]
    out = []
    for j in range(1, min(budget, len(orb.points) - 1) + 1):
        if orb.escaped_at is not None and j >= orb.escaped_at:
            break
        if puzzle.locate(orb.points[j], n, search=search) == crit:
            out.append(j)
    return out


@dataclass
class PLMPiece:
    """One branch g = map on `mask` (maps onto V)."""

    mask: RegionMask
    degree: int
    l: int
    level: Optional[int] = None
    id: Optional[int] = None
    start: Optional[int] = None  # first return time m(i) using this piece
    map: Optional[Callable] = field(default=None, repr=False)

    def apply(self, z):
        return self.map(z)


@dataclass
class GeneralizedPLM:
    level: int
    V: RegionMask
    pieces: list
    returns: tuple
    c: Optional[complex] = None
    critical_point: complex = 0j
    puzzle: object = field(default=None, repr=False)
    orbit: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def return_times(self) -> tuple:
        return tuple(p.l for p in self.pieces)

    def piece_of(self, z) -> Optional[int]:
        """Index of the piece containing z, or None."""
        for k, p in enumerate(self.pieces):
            if p.mask.contains(z):
                return k
        return None

    def __call__(self, z):
        k = self.piece_of(z)
        if k is None:
            raise ValueError(f"{z} is outside the domain of g")
        return self.pieces[k].apply(z)

    @classmethod
    def synthetic(cls, grid: PixelGrid, V: Callable, branches: Sequence[tuple], critical_point=None):
        """Build from predicates: `branches` holds (predicate, map, degree) triples."""
        pieces = [PLMPiece(RegionMask.from_predicate(grid, pred), d, 1, map=f) for pred, f, d in branches]
        return cls(0, RegionMask.from_predicate(grid, V), pieces, (), None,
                   critical_point if critical_point is not None else complex("nan"))


@dataclass(frozen=True)
class PLMViolation:
    name: str
    pieces: tuple
    detail: str = ""


def _dynamic_map(c, l):
    def f(z):
        if np.ndim(z) == 0:
            return iterate(c, z, l)
        w = np.array(z, dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(l):
                w = w * w + c
        return w
    return f


def critical_annulus_ok(puzzle, n: int) -> bool:
    """V^(n-1)(0) contains the one-pixel dilation of V^n(0)."""
    if n < 1:
        return False
    big = puzzle.labels[n - 1] == puzzle.critical_ids[n - 1]
    small = puzzle.labels[n] == puzzle.critical_ids[n]
    grown = ndimage.binary_dilation(small, FOUR)
    return bool(np.all(big[grown]))


def select_level(puzzle, budget: Optional[int] = None) -> int:
    """Smallest n with a non-degenerate critical annulus V^(n-1)(0) - V^n(0), at
    least two returns to V^n(0), and every return piece within the puzzle depth."""
    for n in range(1, puzzle.depth + 1):
        if not critical_annulus_ok(puzzle, n):
            continue
        b = puzzle.depth - n if budget is None else budget
        m = returns_to_critical_piece(puzzle, n, b)
        if len(m) >= 2 and max(np.diff([0] + m)) + n <= puzzle.depth:
            return n
    raise AnnulusDegenerate("no level with a non-degenerate critical annulus and two returns")


def build_first_return_plm(puzzle, level: Optional[int] = None, budget: Optional[int] = None,
                           search: int = 3) -> GeneralizedPLM:
    """First-return map to V = V^level(0); raises ValidationFailed on any broken condition."""
    if level is None:
        level = select_level(puzzle, budget)
    n = level
    puzzle._check_level(n)
    if not critical_annulus_ok(puzzle, n):
        raise AnnulusDegenerate(f"V^{n - 1}(0) - V^{n}(0) is pinched at this resolution")
    if budget is None:
        budget = puzzle.depth - n
    m = returns_to_critical_piece(puzzle, n, budget, search)
    if not m:
        raise NoReturns(f"critical orbit does not return to V^{n}(0) within {budget} steps")
    orb = critical_orbit(puzzle.c, max(m) + 1).points
    times = [0] + m
    pieces, seen = [], {}
    for a, b in zip(times[:-1], times[1:]):
        l = b - a
        lv = n + l
        if lv > puzzle.depth:
            raise ValidationFailed("level", [(lv, None)],
                                   f"piece for the return {a} -> {b} needs level {lv} > depth {puzzle.depth}")
        pid = puzzle.locate(orb[a], lv, search=search)
        if not isinstance(pid, int):
            raise ValidationFailed("level", [(lv, None)], f"c_{a} is not inside a level-{lv} piece")
        key = (lv, pid)
        if key in seen:
            continue
        seen[key] = len(pieces)
        deg = 2 if puzzle.is_critical(lv, pid) else 1
        mask = puzzle.piece_mask(lv, pid, window="full")
        pieces.append(PLMPiece(mask, deg, l, lv, pid, a, _dynamic_map(puzzle.c, l)))
    V = puzzle.piece_mask(n, puzzle.critical_ids[n], window="full")
    g = GeneralizedPLM(n, V, pieces, tuple(m), complex(puzzle.c), 0j, puzzle, np.asarray(orb))
    validate_plm(g)
    return g


def check_plm(g: GeneralizedPLM) -> list[PLMViolation]:
    """All violated conditions (empty for a valid map)."""
    out = []
    keys = [(p.level, p.id) for p in g.pieces]
    grown = [p.mask.dilate(1) for p in g.pieces]
    for i in range(len(g.pieces)):
        for j in range(i + 1, len(g.pieces)):
            if not grown[i].isdisjoint(grown[j]):
                out.append(PLMViolation("disjointness", (keys[i], keys[j]), "closures meet"))
    for i, p in enumerate(g.pieces):
        if not grown[i].issubset(g.V):
            out.append(PLMViolation("containment", (keys[i],), "closure leaves V"))
    crit = [i for i, p in enumerate(g.pieces) if p.degree == 2]
    holds_cp = [i for i, p in enumerate(g.pieces) if bool(p.mask.contains(g.critical_point))]
    if len(crit) != 1 or crit != holds_cp:
        out.append(PLMViolation("unique_critical", tuple(keys[i] for i in crit + holds_cp),
                                f"degree-2 pieces {crit}, pieces holding the critical point {holds_cp}"))
    if g.orbit is not None and g.returns:
        times = [0] + list(g.returns)
        for a, b in zip(times[:-1], times[1:]):
            k = g.piece_of(g.orbit[a])
            if k is None:
                out.append(PLMViolation("orbit", ((a, b),), f"c_{a} lies in no piece"))
                continue
            w = g.pieces[k].apply(g.orbit[a])
            if not abs(w - g.orbit[b]) <= ORBIT_TOL * max(1.0, abs(g.orbit[b])):
                out.append(PLMViolation("orbit", (keys[k],), f"g(c_{a}) = {w} != c_{b} = {g.orbit[b]}"))
    if g.puzzle is not None:
        out += _check_puzzle_conditions(g)
    return out


def _check_puzzle_conditions(g) -> list[PLMViolation]:
    P, n, out = g.puzzle, g.level, []
    orb = critical_orbit(P.c, max([p.start + p.l for p in g.pieces] + [n]) + 1).points
    V = g.V.bitmap
    Vd = g.V.dilate(1).bitmap
    for p in g.pieces:
        if p.level is not None and p.level != n + p.l:
            out.append(PLMViolation("level", ((p.level, p.id),), f"level {p.level} != {n} + {p.l}"))
        for k in range(1, p.l):
            lv = p.level - k
            pid = P.locate(orb[p.start + k], lv, search=3)
            if not isinstance(pid, int) or np.any(V & (P.labels[lv] == pid)):
                out.append(PLMViolation("intermediate", ((p.level, p.id), (lv, pid)),
                                        f"f^{k} of the piece meets V"))
    # the images f^j V, j = 1..n, do not cut through the closure of V
    for j in range(1, n + 1):
        lv = n - j
        pid = P.locate(orb[j], lv, search=3)
        W = P.labels[lv] == pid
        if not (np.all(W[Vd]) or not np.any(W & Vd)):
            out.append(PLMViolation("boundary", ((lv, pid),), f"boundary of f^{j}V meets cl V"))
    return out


def validate_plm(g: GeneralizedPLM) -> GeneralizedPLM:
    v = check_plm(g)
    if v:
        raise ValidationFailed(v[0].name, list(v[0].pieces), v[0].detail)
    return g


def plm_orbit_check(g: GeneralizedPLM, iterations: int = 100) -> bool:
    """True when the g-orbit of the critical point stays in the union of pieces."""
    z = g.critical_point
    for _ in range(iterations):
        k = g.piece_of(z)
        if k is None:
            return False
        z = g.pieces[k].apply(z)
        if not np.isfinite(z):
            return False
    return g.piece_of(z) is not None


@dataclass(frozen=True)
class CantorDiagnostics:
    max_diameter: tuple
    area: tuple
    components: tuple


def preimage_masks(g: GeneralizedPLM, depth: int) -> list[RegionMask]:
    """g^-k(V) for k = 0..depth, evaluated at pixel centres."""
    grid = g.V.grid
    z = grid.centers()
    out = [g.V]
    for _ in range(depth):
        prev = out[-1]
        nxt = np.zeros(grid.shape, dtype=bool)
        for p in g.pieces:
            sel = p.mask.bitmap
            w = np.asarray(p.apply(z[sel]))
            nxt[sel] |= prev.contains(w)
        out.append(RegionMask(grid, nxt))
    return out


def cantor_diagnostics(g: GeneralizedPLM, depth: int, min_pixels: int = 2) -> CantorDiagnostics:
    """Largest component diameter, total area and component count of g^-k(V), k = 0..depth."""
    diam, area, count = [], [], []
    for k, m in enumerate(preimage_masks(g, depth)):
        lab, nc = ndimage.label(m.bitmap, FOUR)
        if nc == 0:
            raise RasterTooCoarse(f"g^-{k}(V) is empty at this resolution")
        sizes = np.bincount(lab.ravel())[1:]
        if sizes.min() < min_pixels:
            raise RasterTooCoarse(f"components of g^-{k}(V) fall below {min_pixels} pixels")
        best = 0.0
        for sl, idx in zip(ndimage.find_objects(lab), range(1, nc + 1)):
            best = max(best, pixel_set_diameter(lab[sl] == idx, m.grid, (sl[0].start, sl[1].start)))
        diam.append(best)
        area.append(m.area)
        count.append(nc)
    return CantorDiagnostics(tuple(diam), tuple(area), tuple(count))
