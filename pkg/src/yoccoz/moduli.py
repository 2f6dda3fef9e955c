"""Conformal moduli of pixel annuli and the bookkeeping built on them.

The modulus of A = D - K is 1 / I(u), where u is harmonic in A, 0 on K, 1 off D,
and I(u) is the Dirichlet integral. On the grid u lives on pixel centres; the
five-point energy sum((u_p - u_q)^2) over neighbouring pairs (weighted by dy/dx
for horizontal and dx/dy for vertical pairs) stands in for I(u).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
import pyamg
import scipy.sparse as sp

from .errors import (DepthExceeded, PreconditionError, PropagationConflict, SolverDiverged,
                     UnknownModulus)
from .mask import PixelGrid, RegionMask

SOLVER_TOL = 1e-8
SOLVER_MAXITER = 500
CONFLICT_TOL = 1e-9
ISOPERIMETRIC_SLACK = 0.05
UNKNOWN = math.nan
INFINITE = math.inf


@dataclass(frozen=True)
class AnnularRegion:
    """A = outer - inner on a common pixel grid."""

    outer: RegionMask
    inner: RegionMask

    def __post_init__(self):
        if self.outer.grid != self.inner.grid:
            raise ValueError("inner and outer masks must share a grid")
        if not self.inner.issubset(self.outer):
            raise ValueError("inner mask is not contained in the outer mask")
        if not (self.outer - self.inner):
            raise ValueError("annular region is empty")

    @property
    def grid(self) -> PixelGrid:
        return self.outer.grid

    @property
    def region(self) -> RegionMask:
        return self.outer - self.inner

    @classmethod
    def from_predicates(cls, grid: PixelGrid, outer: Callable, inner: Callable):
        return cls(RegionMask.from_predicate(grid, outer),
                   RegionMask.from_predicate(grid, lambda z: inner(z) & outer(z)))

    @classmethod
    def round(cls, r: float, R: float, n: int = 512, margin: float = 1.02, center: complex = 0j):
        """r <= |z - center| (inner closed disk) inside |z - center| < R."""
        grid = PixelGrid.square(margin * R, n, center)
        return cls.from_predicates(grid, lambda z: abs(z - center) < R,
                                   lambda z: abs(z - center) <= r)


@dataclass(frozen=True)
class ModulusResult:
    mu: float
    energy: float
    degenerate: bool = False
    residual: float = 0.0
    iterations: int = 0

    def __float__(self):
        return self.mu


def _energy_system(K: np.ndarray, D: np.ndarray, wx: float, wy: float):
    A = D & ~K
    n = int(A.sum())
    idx = np.full(A.shape, -1, dtype=np.int64)
    idx[A] = np.arange(n)
    value = np.where(K, 0.0, 1.0)
    diag = np.zeros(n)
    rhs = np.zeros(n)
    rows, cols, vals = [], [], []
    pinched = False
    pairs = (((slice(None), slice(None, -1)), (slice(None), slice(1, None)), wx),
             ((slice(None, -1), slice(None)), (slice(1, None), slice(None)), wy))
    for sa, sb, w in pairs:
        Aa, Ab = A[sa], A[sb]
        ia, ib = idx[sa], idx[sb]
        both = Aa & Ab
        rows += [ia[both], ib[both]]
        cols += [ib[both], ia[both]]
        vals += [np.full(2 * int(both.sum()), -w)]
        np.add.at(diag, ia[both], w)
        np.add.at(diag, ib[both], w)
        for src, other, isrc, so in ((Aa, Ab, ia, sb), (Ab, Aa, ib, sa)):
            one = src & ~other
            np.add.at(diag, isrc[one], w)
            np.add.at(rhs, isrc[one], w * value[so][one])
        # K directly next to the complement of D: the annulus is pinched
        pinched |= bool(np.any((K[sa] & ~D[sb]) | (~D[sa] & K[sb])))
    L = sp.csr_matrix((np.concatenate(vals) if vals else [], (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)) + sp.diags(diag)
    return A, idx, value, L.tocsr(), rhs, pinched


def dirichlet_energy(region: AnnularRegion, tol: float = SOLVER_TOL,
                     maxiter: int = SOLVER_MAXITER) -> ModulusResult:
    """Solve the discrete Dirichlet problem and return its energy and modulus."""
    K = np.pad(region.inner.bitmap, 1)
    D = np.pad(region.outer.bitmap, 1)
    if not K.any():
        return ModulusResult(INFINITE, 0.0)
    g = region.grid
    wx, wy = g.dy / g.dx, g.dx / g.dy
    A, idx, value, L, rhs, pinched = _energy_system(K, D, wx, wy)
    if pinched:
        return ModulusResult(0.0, INFINITE, degenerate=True)
    ml = pyamg.smoothed_aggregation_solver(L, symmetry="symmetric")
    res = []
    u = ml.solve(rhs, tol=tol, maxiter=maxiter, accel="cg", residuals=res)
    rel = res[-1] / res[0] if res and res[0] > 0 else 0.0
    if not rel <= tol:
        raise SolverDiverged(rel, len(res) - 1)
    U = value.copy()
    U[A] = u
    ex = (A[:, 1:] | A[:, :-1])
    ey = (A[1:, :] | A[:-1, :])
    E = float(wx * np.sum(np.diff(U, axis=1)[ex] ** 2) + wy * np.sum(np.diff(U, axis=0)[ey] ** 2))
    return ModulusResult(1.0 / E, E, False, rel, len(res) - 1)


def solve_modulus(region: AnnularRegion, tol: float = SOLVER_TOL, maxiter: int = SOLVER_MAXITER) -> float:
    """Modulus of the annular region; inf for an empty inner mask, 0 for a pinched one."""
    return dirichlet_energy(region, tol, maxiter).mu


# -- degree rule --------------------------------------------------------------

def _push_forward(mask: RegionMask, d: int, grid: PixelGrid) -> RegionMask:
    w = grid.centers()
    z = np.abs(w) ** (1.0 / d) * np.exp(1j * np.angle(w) / d)
    return RegionMask(grid, mask.contains(z))


def covering_check(region: AnnularRegion, d: int = 2, resolution: Optional[int] = None):
    """(mu_source, mu_image, ratio) for the image of the region under z -> z^d.

    The region must be invariant under z -> exp(2 pi i / d) z so that the image
    is the pull-back of the mask along the principal d-th root.
    """
    if d < 1:
        raise ValueError("degree must be >= 1")
    g = region.grid
    if d > 1:
        rot = np.exp(2j * np.pi / d)
        for m in (region.outer, region.inner):
            z = g.centers()[m.bitmap]
            frac = np.mean(m.contains(z * rot))
            if frac < 0.995:
                raise PreconditionError(f"region is not invariant under rotation by 2pi/{d} "
                                        f"({frac:.3f} of pixels map back)")
    reach = max(abs(g.xmin), abs(g.xmax), abs(g.ymin), abs(g.ymax)) ** d
    n = resolution or max(g.nx, g.ny)
    image_grid = PixelGrid.square(reach, n)
    image = AnnularRegion(_push_forward(region.outer, d, image_grid),
                          _push_forward(region.inner, d, image_grid))
    mu_s = solve_modulus(region)
    mu_i = solve_modulus(image)
    return mu_s, mu_i, mu_i / mu_s


# -- isoperimetric bound ------------------------------------------------------

@dataclass(frozen=True)
class IsoperimetricResult:
    lhs: float
    rhs: float
    mu: float
    holds: bool


def isoperimetric_check(region: AnnularRegion, slack: float = ISOPERIMETRIC_SLACK) -> IsoperimetricResult:
    """lambda(D)/lambda(K) against 1 + 4 pi mu(D - K)."""
    if not region.inner:
        raise PreconditionError("inner mask is empty")
    mu = solve_modulus(region)
    lhs = region.outer.area / region.inner.area
    rhs = 1.0 + 4.0 * math.pi * mu
    return IsoperimetricResult(lhs, rhs, mu, bool(lhs >= rhs * (1.0 - slack)))


# -- propagation over a marked grid ---------------------------------------------

@dataclass(frozen=True)
class ModulusMatrix:
    """mu[n, k] for the annulus V^n(c_k) - V^(n+1)(c_k); nan = unknown, inf = infinite."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if np.any(v[~np.isnan(v)] < 0):
            raise ValueError("moduli must be nonnegative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def unknown(cls, shape):
        return cls(np.full(shape, UNKNOWN))

    @property
    def known(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def __getitem__(self, cell):
        return float(self.values[cell])


def lemma1_propagate(grid, seeds) -> ModulusMatrix:
    """Close the seeds under mu[n-1, k+1] = mu[n, k] (V^n_k not critical) or
    2 mu[n, k] (V^n_k critical), for n >= 1, in both directions.

    `seeds` is a ModulusMatrix, an array, or a mapping {(n, k): value}.
    """
    marks = grid.marks
    shape = marks.shape
    if isinstance(seeds, ModulusMatrix):
        seeds = seeds.values
    if isinstance(seeds, Mapping):
        seed_items = [(tuple(map(int, cell)), float(v)) for cell, v in seeds.items()]
    else:
        arr = np.asarray(seeds, dtype=float)
        if arr.shape != shape:
            raise ValueError(f"seed matrix shape {arr.shape} != grid shape {shape}")
        seed_items = [((int(i), int(j)), float(arr[i, j])) for i, j in zip(*np.nonzero(~np.isnan(arr)))]
    mu = np.full(shape, UNKNOWN)
    why = {}
    stack = []

    def assign(cell, value, reason):
        i, j = cell
        if not (0 <= i < shape[0] and 0 <= j < shape[1]):
            return
        old = mu[cell]
        if not np.isnan(old):
            same = (old == value) or (abs(old - value) <= CONFLICT_TOL)
            if not same:
                raise PropagationConflict(cell, (old, why[cell]), (value, reason))
            return
        mu[cell] = value
        why[cell] = reason
        stack.append(cell)

    for cell, v in seed_items:
        if v < 0:
            raise ValueError(f"negative seed at {cell}")
        assign(cell, v, f"seed {cell}")
    while stack:
        n, k = stack.pop()
        v = mu[n, k]
        # forward: (n, k) -> (n-1, k+1)
        if n >= 1:
            assign((n - 1, k + 1), 2 * v if marks[n, k] else v, f"from ({n}, {k})")
        # backward: (n+1, k-1) -> (n, k)
        if n + 1 < shape[0] and k >= 1:
            assign((n + 1, k - 1), v / 2 if marks[n + 1, k - 1] else v, f"from ({n}, {k})")
    return ModulusMatrix(mu)


# -- nests ----------------------------------------------------------------------

@dataclass(frozen=True)
class PartialSums:
    moduli: tuple
    sums: tuple
    degenerate: tuple


def _sums(pairs) -> PartialSums:
    mods, flags = [], []
    for outer, inner in pairs:
        r = dirichlet_energy(AnnularRegion(outer, inner))
        mods.append(r.mu)
        flags.append(r.degenerate)
    return PartialSums(tuple(mods), tuple(np.cumsum(mods).tolist()), tuple(flags))


def nest_partial_sums(masks: Sequence[RegionMask]) -> PartialSums:
    """S_N = sum of mu(masks[n] - masks[n+1]) for n < N, for a nested mask sequence."""
    return _sums(zip(masks[:-1], masks[1:]))


def divergence_partial_sums(puzzle, x, max_level: int, search: int = 3) -> PartialSums:
    """Partial sums of mu(V^n(x) - V^(n+1)(x)) for n < max_level.

    Pinched annuli contribute 0 and are flagged in `degenerate`.
    """
    if max_level > puzzle.depth:
        raise DepthExceeded(f"need level {max_level} > depth {puzzle.depth}")
    ids = []
    for n in range(max_level + 1):
        pid = puzzle.locate(x, n, search=search)
        if not isinstance(pid, int):
            raise PreconditionError(f"x is not inside a level-{n} piece ({pid.value})")
        ids.append(pid)
    pairs = []
    for n in range(max_level):
        sl = puzzle.levels[n][ids[n]].slices
        win = (sl[0].start - 2, sl[0].stop + 2, sl[1].start - 2, sl[1].stop + 2)
        pairs.append((puzzle.piece_mask(n, ids[n], window=win),
                      puzzle.piece_mask(n + 1, ids[n + 1], window=win)))
    return _sums(pairs)


# -- weighted containment tree --------------------------------------------------

def nu(mu: float) -> float:
    """min(mu, 1/2); Infinite counts as 1/2."""
    if math.isnan(mu):
        raise UnknownModulus(["<unnamed>"])
    return min(float(mu), 0.5)


@dataclass
class WeightedTree:
    """Rooted forest keyed by (level, id); weight nu(U) on the edges below U."""

    parent: dict
    mu: dict
    area: dict = field(default_factory=dict)
    degenerate: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [v for v, m in self.mu.items() if m is None or (isinstance(m, float) and math.isnan(m))]
        missing += [v for v in self.parent if v not in self.mu and self.children(v)]
        if missing:
            raise UnknownModulus(sorted(set(missing)))
        self.nu = {v: nu(m) for v, m in self.mu.items()}

    def children(self, v):
        return [w for w, p in self.parent.items() if p == v]

    @property
    def depth(self) -> int:
        return max(lv for lv, _ in self.parent)

    def branch_minima(self) -> list[float]:
        """M_n = least sum of nu over the n edges of a branch from a root to level n."""
        best = {}
        for v in sorted(self.parent, key=lambda v: v[0]):
            p = self.parent[v]
            best[v] = 0.0 if p is None else best[p] + self.nu[p]
        out = []
        for n in range(self.depth + 1):
            vals = [b for v, b in best.items() if v[0] == n]
            out.append(min(vals) if vals else math.inf)
        return out

    @property
    def M(self) -> list[float]:
        return self.branch_minima()

    def level_areas(self) -> list[float]:
        return [sum(a for v, a in self.area.items() if v[0] == n) for n in range(self.depth + 1)]


def uniform_tree(depth: int, branching: int, mu: float, area_ratio: float = 0.5,
                 root_area: float = 1.0) -> WeightedTree:
    """Synthetic tree: every vertex has `branching` children, modulus mu, and the
    children together cover `area_ratio` of the parent's area."""
    parent, mus, area = {}, {}, {}
    level = [(0, 0)]
    parent[(0, 0)] = None
    area[(0, 0)] = root_area
    for n in range(depth):
        nxt = []
        for v in level:
            mus[v] = mu
            for b in range(branching):
                w = (n + 1, len(nxt))
                parent[w] = v
                area[w] = area[v] * area_ratio / branching
                nxt.append(w)
        level = nxt
    for v in level:
        mus[v] = mu
    return WeightedTree(parent, mus, area)


def piece_annulus(puzzle, level: int, pid: int) -> AnnularRegion:
    """U minus the union of its children, on the bounding window of U."""
    piece = puzzle.levels[level][pid]
    sl = piece.slices
    win = (sl[0].start - 2, sl[0].stop + 2, sl[1].start - 2, sl[1].stop + 2)
    outer = puzzle.piece_mask(level, pid, window=win)
    if piece.children_ids:
        inner = puzzle.piece_mask(level + 1, piece.children_ids, window=win)
    else:
        inner = RegionMask(outer.grid, np.zeros(outer.grid.shape, dtype=bool))
    return AnnularRegion(outer, inner)


def weighted_tree(source, max_level: Optional[int] = None, moduli: Optional[Mapping] = None) -> WeightedTree:
    """Weighted containment tree of a puzzle to `max_level` (default: depth - 1).

    mu(U) is the modulus of U minus the union of its children; values given in
    `moduli` (keyed by (level, id)) are used instead of solving.
    """
    if isinstance(source, WeightedTree):
        return source
    puzzle = source
    if max_level is None:
        max_level = puzzle.depth - 1
    if max_level + 1 > puzzle.depth:
        raise DepthExceeded(f"tree to level {max_level} needs puzzle depth {max_level + 1}")
    moduli = dict(moduli or {})
    parent, mus, area, degen = {}, {}, {}, {}
    for n in range(max_level + 1):
        for p in puzzle.levels[n]:
            v = (n, p.id)
            parent[v] = None if n == 0 else (n - 1, p.parent_id)
            area[v] = p.area
            if v in moduli:
                mus[v] = float(moduli[v])
                degen[v] = False
                continue
            try:
                r = dirichlet_energy(piece_annulus(puzzle, n, p.id))
            except ValueError:
                # children fill the piece at this resolution: no room for an annulus
                r = ModulusResult(0.0, INFINITE, degenerate=True)
            mus[v] = r.mu
            degen[v] = r.degenerate
    # the deepest level closes the branches; its own weight is never used
    for p in puzzle.levels[max_level + 1]:
        v = (max_level + 1, p.id)
        parent[v] = (max_level, p.parent_id)
        area[v] = p.area
    return WeightedTree(parent, mus, area, degen)
