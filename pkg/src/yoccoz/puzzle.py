"""Yoccoz puzzle partitions of a quadratic polynomial on a pixel raster.

Level 0 is {G < h0} cut by the cycle of rays landing at alpha. A pixel z with
G(z) < h0 / 2**n belongs to the level-n piece determined by the level-0 labels
of z, f(z), ..., f^n(z) together with connectivity: level-n pieces are the
4-connected components of pixels sharing that itinerary. Pixels where the
itinerary is undefined (an iterate falls on a ray pixel) or changes between
neighbours form the boundary layer, which belongs to no piece.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .dynamics import (DEFAULT_BUDGET, ParameterPoint, RayTrace, alpha_ray_cycle, as_point, critical_orbit,
                       fixed_points, green_grid, green_potential, trace_external_ray)
from .errors import CriticalOrbitEscaped, DepthExceeded, RasterTooCoarse
from .mask import FOUR, PixelGrid, RegionMask, pixel_set_diameter

DEFAULT_RESOLUTION = 2048
DEFAULT_HALF_WIDTH = 2.5
DEFAULT_H0 = 1.0
# level-0 sectors are labelled on {G < LABEL_MARGIN * h0} so that lookups of
# iterates close to the outer equipotential never fall off the labelled region
LABEL_MARGIN = 1.5
OUTSIDE = -2
BOUNDARY = -1


class Location(enum.Enum):
    ON_BOUNDARY = "OnBoundary"
    OUTSIDE = "Outside"


OnBoundary = Location.ON_BOUNDARY
Outside = Location.OUTSIDE


@dataclass(frozen=True)
class Arc:
    """One boundary arc of a piece.

    kind is "ray" (data: angle, potential span), "equipotential" (data: potential)
    or "pulled-back" (data: preimage depth). `points` is a polyline in the plane.
    """

    kind: str
    data: tuple
    points: np.ndarray = field(repr=False, compare=False)


@dataclass
class PuzzlePiece:
    level: int
    id: int
    parent_id: Optional[int]
    children_ids: list
    is_critical: bool
    count: int
    slices: tuple = field(repr=False)
    puzzle: "PuzzleComplex" = field(repr=False, compare=False)

    @property
    def area(self) -> float:
        return self.count * self.puzzle.grid.pixel_area

    @property
    def mask(self) -> RegionMask:
        """Mask cropped to the piece's bounding box plus a 2-pixel margin."""
        return self.puzzle.piece_mask(self.level, self.id, pad=2)

    @property
    def path(self) -> tuple:
        """Containment-tree path (level-0 id, level-1 id, ..., own id)."""
        ids = [self.id]
        p = self
        while p.parent_id is not None:
            p = self.puzzle.levels[p.level - 1][p.parent_id]
            ids.append(p.id)
        return tuple(reversed(ids))

    @property
    def parent(self) -> Optional["PuzzlePiece"]:
        if self.parent_id is None:
            return None
        return self.puzzle.levels[self.level - 1][self.parent_id]

    @property
    def boundary(self) -> list:
        return self.puzzle.piece_boundary(self.level, self.id)

    def representative(self) -> complex:
        """Center of one pixel of the piece (the first in raster order)."""
        sl = self.slices
        sub = self.puzzle.labels[self.level][sl] == self.id
        r, c = np.argwhere(sub)[0]
        return complex(self.puzzle.grid.center(r + sl[0].start, c + sl[1].start))


@dataclass(frozen=True)
class PullbackString:
    """Domains U_0, ..., U_n as (level, piece id) pairs, and the order of the pull-back."""

    orbit: tuple
    pieces: tuple
    order: int

    @property
    def univalent(self) -> bool:
        return self.order == 0


class PuzzleComplex:
    """Immutable leveled puzzle; construct with `build_puzzle`."""

    def __init__(self, param, depth, h0, ray_cycle, grid, rays, green, sector_labels,
                 labels, levels, critical_ids):
        self.param = param
        self.depth = depth
        self.h0 = h0
        self.ray_cycle = ray_cycle
        self.grid = grid
        self.rays = rays
        self.green = green
        self.sector_labels = sector_labels
        self.labels = labels
        self.levels = levels
        self.critical_ids = critical_ids

    @property
    def c(self) -> complex:
        return self.param.c

    @property
    def resolution(self):
        return (self.grid.nx, self.grid.ny)

    def __repr__(self):
        counts = [len(lv) for lv in self.levels]
        return f"PuzzleComplex(c={self.c}, depth={self.depth}, h0={self.h0}, pieces={counts})"

    # -- basic accessors -------------------------------------------------

    def _check_level(self, level):
        if not 0 <= level <= self.depth:
            raise DepthExceeded(f"level {level} outside 0..{self.depth}")

    def critical_piece(self, level) -> PuzzlePiece:
        self._check_level(level)
        return self.levels[level][self.critical_ids[level]]

    def domain(self, level) -> np.ndarray:
        return self.labels[level] != OUTSIDE

    def boundary_mask(self, level) -> np.ndarray:
        return self.labels[level] == BOUNDARY

    def pieces_mask(self, level) -> np.ndarray:
        return self.labels[level] >= 0

    def piece_mask(self, level, ids, window=None, pad=2) -> RegionMask:
        """Union of the given pieces as a mask.

        `window` = (r0, r1, c0, c1) selects the sub-grid; by default the bounding
        box of the pieces plus `pad` pixels. window="full" gives the whole grid.
        """
        self._check_level(level)
        if np.isscalar(ids):
            ids = [ids]
        ids = list(ids)
        lab = self.labels[level]
        if window == "full":
            return RegionMask(self.grid, np.isin(lab, ids))
        if window is None:
            r0 = c0 = 10 ** 9
            r1 = c1 = -1
            for i in ids:
                sl = self.levels[level][i].slices
                r0, r1 = min(r0, sl[0].start), max(r1, sl[0].stop)
                c0, c1 = min(c0, sl[1].start), max(c1, sl[1].stop)
            window = (r0 - pad, r1 + pad, c0 - pad, c1 + pad)
        r0, r1, c0, c1 = window
        out = np.zeros((r1 - r0, c1 - c0), dtype=bool)
        sr0, sr1 = max(r0, 0), min(r1, self.grid.ny)
        sc0, sc1 = max(c0, 0), min(c1, self.grid.nx)
        out[sr0 - r0:sr1 - r0, sc0 - c0:sc1 - c0] = np.isin(lab[sr0:sr1, sc0:sc1], ids)
        return RegionMask(self.grid.subgrid(r0, r1, c0, c1), out)

    # -- queries ---------------------------------------------------------

    def _itinerary(self, z: complex, level: int):
        """Level-0 sector labels of z, f(z), ..., f^level(z); None where undefined."""
        c = self.c
        out = []
        for k in range(level + 1):
            r, col = self.grid.index(z)
            out.append(int(self.sector_labels[r, col]) if r >= 0 else BOUNDARY)
            z = z * z + c
        return out

    def _piece_itinerary(self, level, pid):
        return self._itinerary(self.levels[level][pid].representative(), level)

    def locate(self, z, level: int, search: int = 0):
        """Piece id of V^level(z), or `OnBoundary` / `Outside`.

        With `search` > 0 a point whose pixel lies in the boundary layer is
        resolved to the unique piece within `search` pixels whose itinerary
        matches the point's own.
        """
        self._check_level(level)
        z = as_point(z)
        if green_potential(self.c, z) >= self.h0 / 2 ** level:
            return Outside
        r, c = self.grid.index(z)
        if r < 0:
            return Outside
        lab = int(self.labels[level][r, c])
        if lab >= 0:
            return lab
        if lab == OUTSIDE and search == 0:
            return OnBoundary
        if search > 0:
            win = self.labels[level][max(r - search, 0):r + search + 1, max(c - search, 0):c + search + 1]
            cands = sorted(set(int(v) for v in np.unique(win) if v >= 0))
            if cands:
                want = self._itinerary(z, level)
                if BOUNDARY not in want:
                    match = [p for p in cands if self._piece_itinerary(level, p) == want]
                    if len(match) == 1:
                        return match[0]
        return OnBoundary

    def vn_neighborhood(self, z, n: int, radius: int = 1) -> set:
        """Ids of level-n pieces whose closure (mask dilated by `radius` pixels) contains z."""
        self._check_level(n)
        z = as_point(z)
        if green_potential(self.c, z) >= self.h0 / 2 ** n:
            return Outside
        r, c = self.grid.index(z)
        win = self.labels[n][max(r - radius, 0):r + radius + 1, max(c - radius, 0):c + radius + 1]
        return set(int(v) for v in np.unique(win) if v >= 0)

    def is_critical(self, level, pid) -> bool:
        return pid == self.critical_ids[level]

    def pullback_string(self, orbit, terminal_level: int, search: int = 3) -> PullbackString:
        """Pull V^terminal_level(z_n) back along z_0..z_n: U_k = V^(terminal_level+n-k)(z_k)."""
        pts = tuple(orbit.points if hasattr(orbit, "points") else orbit)
        n = len(pts) - 1
        if n < 0:
            raise ValueError("empty orbit")
        if terminal_level + n > self.depth:
            raise DepthExceeded(f"pull-back needs level {terminal_level + n} > depth {self.depth}")
        pieces = []
        order = 0
        for k, z in enumerate(pts):
            lv = terminal_level + n - k
            pid = self.locate(z, lv, search=search)
            pieces.append((lv, pid))
            if isinstance(pid, int) and self.is_critical(lv, pid):
                order += 1
        return PullbackString(pts, tuple(pieces), order)

    @cached_property
    def _diameters(self):
        return {}

    def piece_diameters(self, level) -> np.ndarray:
        self._check_level(level)
        if level not in self._diameters:
            lab = self.labels[level]
            out = np.zeros(len(self.levels[level]))
            for p in self.levels[level]:
                sl = p.slices
                out[p.id] = pixel_set_diameter(lab[sl] == p.id, self.grid,
                                               offset=(sl[0].start, sl[1].start))
            self._diameters[level] = out
        return self._diameters[level]

    def diameter_stats(self, level) -> tuple[float, float]:
        """(max, mean) Euclidean diameter of the level's pieces."""
        d = self.piece_diameters(level)
        return float(d.max()), float(d.mean())

    def piece_boundary(self, level, pid) -> list:
        """Boundary arcs of a piece: traced rays and the equipotential at level 0,
        contour polylines tagged as pulled-back arcs at deeper levels."""
        from skimage import measure

        m = self.piece_mask(level, pid, pad=2)
        g = m.grid
        arcs = []
        for contour in measure.find_contours(m.bitmap.astype(float), 0.5):
            pts = g.center(contour[:, 0], contour[:, 1])
            if level == 0:
                arcs.append(Arc("equipotential", (self.h0,), pts))
            else:
                arcs.append(Arc("pulled-back", (level,), pts))
        if level == 0:
            for ray in self.rays:
                pts = ray.points
                hit = m.dilate(3).contains(pts)
                if hit.any():
                    span = (float(ray.potentials[hit].min()), float(ray.potentials[hit].max()))
                    arcs.insert(0, Arc("ray", (ray.angle, span), pts[hit]))
        return arcs


def _rasterize_polyline(grid: PixelGrid, pts: np.ndarray) -> np.ndarray:
    out = np.zeros(grid.shape, dtype=bool)
    step = 0.25 * min(grid.dx, grid.dy)
    for a, b in zip(pts[:-1], pts[1:]):
        k = max(2, int(math.ceil(abs(b - a) / step)) + 1)
        seg = np.linspace(a, b, k)
        r, c = grid.index(seg)
        ok = r >= 0
        out[r[ok], c[ok]] = True
    return out


def _label_level(key_full: np.ndarray, boundary: np.ndarray, domain: np.ndarray, symmetric: bool):
    """Boundary layer and component labels for one level.

    key_full holds an itinerary code per domain pixel (-1 where undefined).
    """
    valid = domain & ~boundary & (key_full >= 0)
    b = domain & ~valid
    # code changes: mark the left/lower pixel of every differing valid pair
    diff_x = valid[:, :-1] & valid[:, 1:] & (key_full[:, :-1] != key_full[:, 1:])
    diff_y = valid[:-1, :] & valid[1:, :] & (key_full[:-1, :] != key_full[1:, :])
    b[:, :-1] |= diff_x
    b[:-1, :] |= diff_y
    if symmetric:
        b |= b[::-1, ::-1]
    b &= domain
    lab, n = ndimage.label(domain & ~b, FOUR)
    return b, lab.astype(np.int32) - 1, n


def build_puzzle(param, depth: int, h0: float = DEFAULT_H0, resolution: int = DEFAULT_RESOLUTION,
                 half_width: Optional[float] = None, ray_cycle=None, grid=None) -> PuzzleComplex:
    """Build the puzzle to `depth` on a `resolution` x `resolution` grid.

    The default box is [-2.5, 2.5]^2, widened when needed so that it holds the
    whole equipotential disk {G < h0}.
    """
    if not isinstance(param, ParameterPoint):
        param = fixed_points(param)
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if not h0 > 0:
        raise ValueError("h0 must be positive")
    orb = critical_orbit(param.c, DEFAULT_BUDGET)
    if orb.escaped_at is not None:
        # J is disconnected: rays crash into precritical points, no puzzle
        raise CriticalOrbitEscaped(f"critical orbit escapes at step {orb.escaped_at}")
    if ray_cycle is None:
        ray_cycle = alpha_ray_cycle(param)
    q = len(ray_cycle)
    if grid is None:
        if half_width is None:
            half_width = default_half_width(param.c, h0)
        grid = PixelGrid.square(half_width, resolution)
    c = param.c
    z = grid.centers()
    green = green_grid(c, z)

    rays = tuple(trace_external_ray(param, a, 2.0 * h0, 0.0) for a in ray_cycle)
    barrier = np.zeros(grid.shape, dtype=bool)
    for ray in rays:
        pts = np.append(ray.points, ray.landing_estimate if ray.landed else param.alpha)
        barrier |= _rasterize_polyline(grid, pts)

    region = (green < LABEL_MARGIN * h0) & ~barrier
    lab, n = ndimage.label(region, FOUR)
    sizes = np.bincount(lab.ravel(), minlength=n + 1)
    sizes[0] = 0
    keep = np.argsort(sizes, kind="stable")[::-1][:q]
    if n < q or sizes[keep].min() < 16:
        raise RasterTooCoarse(f"expected {q} level-0 sectors, found {n} (sizes {sorted(sizes[1:])[-q:]})")
    keep = np.sort(keep)  # raster order of the first pixel
    sector = np.full(grid.shape, BOUNDARY, dtype=np.int16)
    for k, comp in enumerate(keep):
        sector[lab == comp] = k

    symmetric = grid.symmetric
    labels, levels, critical_ids = [], [], []

    dom = green < h0
    lab0 = np.where(dom, sector, OUTSIDE).astype(np.int32)
    bnd = dom & (sector < 0)
    labels.append(lab0)
    boundary = bnd
    idx = np.flatnonzero(dom)
    w = z.ravel()[idx]

    for level in range(1, depth + 1):
        dom = green < h0 / 2 ** level
        keep_idx = dom.ravel()[idx]
        idx, w = idx[keep_idx], w[keep_idx]
        w = w * w + c
        r, col = grid.index(w)
        s = np.full(idx.size, BOUNDARY, dtype=np.int64)
        ok = r >= 0
        s[ok] = sector[r[ok], col[ok]]
        parent = labels[-1].ravel()[idx].astype(np.int64)
        key = np.where((s >= 0) & (parent >= 0), parent * q + s, -1)
        key_full = np.full(grid.shape, -1, dtype=np.int64)
        key_full.ravel()[idx] = key
        boundary, lab_n, _ = _label_level(key_full, boundary & dom, dom, symmetric)
        lab_n = np.where(dom, lab_n, OUTSIDE).astype(np.int32)
        labels.append(lab_n)

    origin_r, origin_c = _origin_block(grid)
    for level, lab_n in enumerate(labels):
        pieces = []
        npieces = int(lab_n.max()) + 1
        if npieces == 0:
            raise RasterTooCoarse(f"level {level} has no pieces at this resolution")
        counts = np.bincount(lab_n[lab_n >= 0].ravel(), minlength=npieces)
        # find_objects entry v holds the bounding slices of piece v
        slices_for = ndimage.find_objects(np.where(lab_n >= 0, lab_n + 1, 0))
        if level > 0:
            prev = labels[level - 1]
            sel = lab_n >= 0
            ids, par = lab_n[sel], prev[sel].astype(np.int64)
            mn = np.full(npieces, np.iinfo(np.int64).max)
            mx = np.full(npieces, np.iinfo(np.int64).min)
            np.minimum.at(mn, ids, par)
            np.maximum.at(mx, ids, par)
            if np.any(mn != mx) or np.any(mn < 0):
                bad = np.nonzero((mn != mx) | (mn < 0))[0]
                raise RasterTooCoarse(f"level {level}: pieces {bad[:10].tolist()} not inside one parent")
        for pid in range(npieces):
            pieces.append(PuzzlePiece(level, pid, int(mn[pid]) if level > 0 else None, [],
                                      False, int(counts[pid]), slices_for[pid], None))
        levels.append(pieces)
        crit = _critical_label(lab_n, origin_r, origin_c)
        if crit is None:
            raise RasterTooCoarse(f"critical piece of level {level} has no pixels at this resolution")
        critical_ids.append(crit)

    puzzle = PuzzleComplex(param, depth, h0, tuple(ray_cycle), grid, rays, green, sector,
                           labels, levels, critical_ids)
    for level, pieces in enumerate(levels):
        for p in pieces:
            p.puzzle = puzzle
            p.is_critical = p.id == critical_ids[level]
            if p.parent_id is not None:
                levels[level - 1][p.parent_id].children_ids.append(p.id)
    return puzzle


def default_half_width(c, h0: float) -> float:
    # {G < h} lies in |z| < e^h + |c| e^-h (inverse Boettcher map w - c/(2w) + ...,
    # with a factor 2 of slack on the correction term)
    reach = math.exp(h0) + abs(complex(c)) * math.exp(-h0)
    return max(DEFAULT_HALF_WIDTH, 1.02 * reach)


def _origin_block(grid: PixelGrid):
    """Pixels whose closure contains the origin (1, 2 or 4 of them)."""
    fx = (0 - grid.xmin) / grid.dx
    fy = (0 - grid.ymin) / grid.dy
    cols = {int(math.floor(fx))}
    rows = {int(math.floor(fy))}
    if abs(fx - round(fx)) < 1e-9:
        cols = {int(round(fx)) - 1, int(round(fx))}
    if abs(fy - round(fy)) < 1e-9:
        rows = {int(round(fy)) - 1, int(round(fy))}
    return sorted(rows), sorted(cols)


def _critical_label(lab: np.ndarray, rows, cols) -> Optional[int]:
    for grow in (0, 1, 2):
        r0, r1 = rows[0] - grow, rows[-1] + grow + 1
        c0, c1 = cols[0] - grow, cols[-1] + grow + 1
        win = lab[max(r0, 0):r1, max(c0, 0):c1]
        vals = win[win >= 0]
        if vals.size:
            v, cnt = np.unique(vals, return_counts=True)
            return int(v[np.argmax(cnt)])
    return None
