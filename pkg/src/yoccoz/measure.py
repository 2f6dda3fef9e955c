"""Area accounting for puzzle levels: lambda(V^n), decay against the branch
minima M_n, and pixel upper bounds for the area of the Julia set."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import escape_radius
from .mask import PixelGrid

CSV_HEADER = ("level", "area", "ratio", "M_n", "exp_minus_bM")


def area_of_level(puzzle, n: int) -> float:
    """Total area of the level-n pieces."""
    puzzle._check_level(n)
    return int(np.count_nonzero(puzzle.pieces_mask(n))) * puzzle.grid.pixel_area


def boundary_area(puzzle, n: int) -> float:
    puzzle._check_level(n)
    return int(np.count_nonzero(puzzle.boundary_mask(n))) * puzzle.grid.pixel_area


def area_bookkeeping(puzzle, n: int) -> dict:
    """Pieces, boundary layer and exterior areas of level n, and the box area."""
    lab = puzzle.labels[n]
    a = puzzle.grid.pixel_area
    pieces = int(np.count_nonzero(lab >= 0)) * a
    bnd = int(np.count_nonzero(lab == -1)) * a
    ext = int(np.count_nonzero(lab == -2)) * a
    g = puzzle.grid
    box = (g.xmax - g.xmin) * (g.ymax - g.ymin)
    return {"pieces": pieces, "boundary": bnd, "exterior": ext, "box": box,
            "closure": (pieces + bnd + ext) / box}


@dataclass(frozen=True)
class DecayResult:
    b_hat: float
    slack: tuple
    levels: tuple

    @property
    def positive(self) -> bool:
        return bool(self.b_hat > 0)


def _levels_areas(source, depth=None) -> list[float]:
    if hasattr(source, "levels") and hasattr(source, "labels"):
        depth = source.depth if depth is None else depth
        return [area_of_level(source, n) for n in range(depth + 1)]
    return [float(a) for a in source]


def decay_check(areas, tree) -> DecayResult:
    """Best constant b with lambda(V^n) <= exp(-b M_n) lambda(V^0).

    `areas` is a puzzle, a sequence of level areas, or None (use the areas
    stored on the tree). b_hat is nan when no level has M_n > 0.
    """
    M = tree.branch_minima() if hasattr(tree, "branch_minima") else list(tree)
    lam = tree.level_areas() if areas is None else _levels_areas(areas, len(M) - 1)
    N = min(len(M), len(lam))
    cands, used = [], []
    for n in range(1, N):
        if M[n] > 0 and lam[n] > 0 and math.isfinite(M[n]):
            cands.append(-math.log(lam[n] / lam[0]) / M[n])
            used.append(n)
    b = min(cands) if cands else math.nan
    slack = tuple((math.exp(-b * M[n]) - lam[n] / lam[0]) if cands else math.nan for n in range(N))
    return DecayResult(b, slack, tuple(used))


@dataclass(frozen=True)
class AreaReport:
    c: complex
    resolution: tuple
    areas: tuple
    boundary_areas: tuple
    M: Optional[tuple] = None
    b_hat: float = math.nan

    @property
    def ratios(self) -> tuple:
        return tuple(b / a if a > 0 else 0.0 for a, b in zip(self.areas[:-1], self.areas[1:]))

    def rows(self):
        for n, a in enumerate(self.areas):
            ratio = self.areas[n] / self.areas[n - 1] if n > 0 and self.areas[n - 1] > 0 else math.nan
            m = self.M[n] if self.M is not None and n < len(self.M) else math.nan
            bound = math.exp(-self.b_hat * m) if math.isfinite(self.b_hat) and math.isfinite(m) else math.nan
            yield n, a, ratio, m, bound

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for n, *vals in self.rows():
            w.writerow([n] + [_fmt12(v) for v in vals])
        return buf.getvalue()


def _fmt12(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(float(v), ".12g")


def area_report(puzzle, tree=None) -> AreaReport:
    areas = tuple(area_of_level(puzzle, n) for n in range(puzzle.depth + 1))
    bnd = tuple(boundary_area(puzzle, n) for n in range(puzzle.depth + 1))
    M, b = None, math.nan
    if tree is not None:
        M = tuple(tree.branch_minima())
        b = decay_check(areas, tree).b_hat
    return AreaReport(complex(puzzle.c), puzzle.resolution, areas, bnd, M, b)


def julia_area_upper_bound(puzzle, level: Optional[int] = None) -> tuple[float, float]:
    """(bound, resolution slack) with bound = lambda(V^level) + boundary area.

    J within {G < h0} lies in the closure of the level-n pieces, so the pieces
    plus the boundary layer cover it at this resolution.
    """
    n = puzzle.depth if level is None else level
    slack = boundary_area(puzzle, n)
    return area_of_level(puzzle, n) + slack, slack


def box_cover_area(c, resolution: int, half_width: float = 2.0, budget: int = 256) -> float:
    """Area of the pixels whose corners disagree on escaping (a box cover of J).

    A corner counts as escaped when its orbit leaves the escape radius within
    `budget` steps.
    """
    g = PixelGrid.square(half_width, resolution)
    x = g.xmin + np.arange(g.nx + 1) * g.dx
    y = g.ymin + np.arange(g.ny + 1) * g.dy
    z = x[None, :] + 1j * y[:, None]
    R2 = escape_radius(c) ** 2
    esc = np.zeros(z.shape, dtype=bool)
    w = z.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(budget):
            w = np.where(esc, 0, w * w + c)
            esc |= (w.real ** 2 + w.imag ** 2) > R2
    s = esc.astype(np.int8)
    tot = s[:-1, :-1] + s[1:, :-1] + s[:-1, 1:] + s[1:, 1:]
    mixed = (tot > 0) & (tot < 4)
    return int(np.count_nonzero(mixed)) * g.pixel_area
