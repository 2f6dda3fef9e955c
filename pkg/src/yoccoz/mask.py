"""Rasterized plane regions with exact pixel-area accounting.

Binary layout of a serialized mask (all little-endian)::

    4 x float64   xmin, xmax, ymin, ymax
    2 x uint32    nx (columns), ny (rows)
    ceil(nx*ny/8) bytes of row-major occupancy bits, most significant bit first;
    row 0 is the row at ymin.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

_HEADER = struct.Struct("<4d2I")
FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class PixelGrid:
    """Regular grid of square-ish pixels; pixel (row, col) covers
    [xmin + col*dx, xmin + (col+1)*dx) x [ymin + row*dy, ymin + (row+1)*dy)."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int

    @classmethod
    def square(cls, half_width: float = 2.5, n: int = 2048, center: complex = 0j):
        return cls(center.real - half_width, center.real + half_width,
                   center.imag - half_width, center.imag + half_width, n, n)

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("resolution must be positive")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("empty bounding box")

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / self.nx

    @property
    def dy(self) -> float:
        return (self.ymax - self.ymin) / self.ny

    @property
    def pixel_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.xmax, self.ymin, self.ymax)

    def centers(self) -> np.ndarray:
        # measured from the box center so that symmetric grids give exactly
        # antisymmetric coordinates
        x = 0.5 * (self.xmin + self.xmax) + (np.arange(self.nx) + 0.5 - self.nx / 2) * self.dx
        y = 0.5 * (self.ymin + self.ymax) + (np.arange(self.ny) + 0.5 - self.ny / 2) * self.dy
        return x[None, :] + 1j * y[:, None]

    def center(self, row, col):
        x = 0.5 * (self.xmin + self.xmax) + (np.asarray(col) + 0.5 - self.nx / 2) * self.dx
        y = 0.5 * (self.ymin + self.ymax) + (np.asarray(row) + 0.5 - self.ny / 2) * self.dy
        return x + 1j * y

    def index(self, z):
        """(row, col) of the pixel containing z; -1 entries when z is off the grid."""
        z = np.asarray(z, dtype=complex)
        col = np.floor((z.real - self.xmin) / self.dx)
        row = np.floor((z.imag - self.ymin) / self.dy)
        bad = ~((col >= 0) & (col < self.nx) & (row >= 0) & (row < self.ny))
        col = np.where(bad, -1, col).astype(np.int64)
        row = np.where(bad, -1, row).astype(np.int64)
        return row, col

    @property
    def symmetric(self) -> bool:
        """True when z -> -z maps pixel (r, c) exactly onto (ny-1-r, nx-1-c)."""
        return abs(self.xmin + self.xmax) < 1e-12 * self.dx and abs(self.ymin + self.ymax) < 1e-12 * self.dy

    def subgrid(self, r0: int, r1: int, c0: int, c1: int) -> "PixelGrid":
        return PixelGrid(self.xmin + c0 * self.dx, self.xmin + c1 * self.dx,
                         self.ymin + r0 * self.dy, self.ymin + r1 * self.dy, c1 - c0, r1 - r0)


class RegionMask:
    """A boolean bitmap on a `PixelGrid`."""

    __slots__ = ("grid", "bitmap")

    def __init__(self, grid: PixelGrid, bitmap):
        bitmap = np.asarray(bitmap, dtype=bool)
        if bitmap.shape != grid.shape:
            raise ValueError(f"bitmap shape {bitmap.shape} != grid shape {grid.shape}")
        self.grid = grid
        self.bitmap = bitmap

    @classmethod
    def from_predicate(cls, grid: PixelGrid, pred):
        return cls(grid, pred(grid.centers()))

    @property
    def bbox(self):
        return self.grid.bbox

    @property
    def resolution(self):
        return (self.grid.nx, self.grid.ny)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bitmap))

    @property
    def area(self) -> float:
        return self.count * self.grid.pixel_area

    def __bool__(self):
        return bool(self.bitmap.any())

    def __eq__(self, other):
        return (isinstance(other, RegionMask) and self.grid == other.grid
                and np.array_equal(self.bitmap, other.bitmap))

    def __repr__(self):
        return f"RegionMask(bbox={self.bbox}, resolution={self.resolution}, count={self.count})"

    def contains(self, z) -> np.ndarray:
        row, col = self.grid.index(z)
        ok = row >= 0
        out = np.zeros(np.shape(row), dtype=bool)
        out[ok] = self.bitmap[row[ok], col[ok]]
        return out

    def dilate(self, pixels: int = 1) -> "RegionMask":
        if pixels <= 0:
            return self
        return RegionMask(self.grid, ndimage.binary_dilation(self.bitmap, FOUR, iterations=pixels))

    def erode(self, pixels: int = 1) -> "RegionMask":
        if pixels <= 0:
            return self
        return RegionMask(self.grid, ndimage.binary_erosion(self.bitmap, FOUR, iterations=pixels,
                                                            border_value=0))

    def __and__(self, other):
        self._check(other)
        return RegionMask(self.grid, self.bitmap & other.bitmap)

    def __or__(self, other):
        self._check(other)
        return RegionMask(self.grid, self.bitmap | other.bitmap)

    def __sub__(self, other):
        self._check(other)
        return RegionMask(self.grid, self.bitmap & ~other.bitmap)

    def issubset(self, other) -> bool:
        self._check(other)
        return not np.any(self.bitmap & ~other.bitmap)

    def isdisjoint(self, other) -> bool:
        self._check(other)
        return not np.any(self.bitmap & other.bitmap)

    def _check(self, other):
        if self.grid != other.grid:
            raise ValueError("masks live on different grids")

    def crop(self, pad: int = 2) -> "RegionMask":
        """Smallest sub-grid holding all occupied pixels, plus `pad` pixels of margin."""
        rows = np.nonzero(self.bitmap.any(axis=1))[0]
        cols = np.nonzero(self.bitmap.any(axis=0))[0]
        if rows.size == 0:
            return self
        r0, r1 = rows[0] - pad, rows[-1] + 1 + pad
        c0, c1 = cols[0] - pad, cols[-1] + 1 + pad
        return self.window(r0, r1, c0, c1)

    def window(self, r0, r1, c0, c1) -> "RegionMask":
        """Sub-grid [r0, r1) x [c0, c1); indices outside the grid are padded with False."""
        out = np.zeros((r1 - r0, c1 - c0), dtype=bool)
        sr0, sr1 = max(r0, 0), min(r1, self.grid.ny)
        sc0, sc1 = max(c0, 0), min(c1, self.grid.nx)
        if sr1 > sr0 and sc1 > sc0:
            out[sr0 - r0:sr1 - r0, sc0 - c0:sc1 - c0] = self.bitmap[sr0:sr1, sc0:sc1]
        return RegionMask(self.grid.subgrid(r0, r1, c0, c1), out)

    def components(self) -> tuple[np.ndarray, int]:
        return ndimage.label(self.bitmap, FOUR)

    def diameter(self) -> float:
        """Exact diameter of the union of the occupied (closed) pixel squares."""
        return pixel_set_diameter(self.bitmap, self.grid)

    def to_bytes(self) -> bytes:
        g = self.grid
        bits = np.packbits(self.bitmap.ravel(), bitorder="big")
        return _HEADER.pack(g.xmin, g.xmax, g.ymin, g.ymax, g.nx, g.ny) + bits.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "RegionMask":
        xmin, xmax, ymin, ymax, nx, ny = _HEADER.unpack_from(data)
        bits = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
        flat = np.unpackbits(bits, count=nx * ny, bitorder="big").astype(bool)
        return cls(PixelGrid(xmin, xmax, ymin, ymax, nx, ny), flat.reshape(ny, nx))


def pixel_set_diameter(bitmap: np.ndarray, grid: PixelGrid, offset=(0, 0)) -> float:
    """Diameter of the union of occupied pixel squares of `bitmap`.

    `offset` is the (row, col) of bitmap[0, 0] within `grid`.
    """
    if not bitmap.any():
        return 0.0
    edge = bitmap & ~ndimage.binary_erosion(bitmap, FOUR, border_value=0)
    r, c = np.nonzero(edge)
    r = r + offset[0]
    c = c + offset[1]
    # all four corners of every edge pixel
    xs = grid.xmin + np.concatenate([c, c + 1, c, c + 1]) * grid.dx
    ys = grid.ymin + np.concatenate([r, r, r + 1, r + 1]) * grid.dy
    pts = np.unique(np.column_stack([xs, ys]), axis=0)
    if len(pts) > 64:
        from scipy.spatial import ConvexHull

        try:
            pts = pts[ConvexHull(pts).vertices]
        except Exception:  # degenerate (collinear) point sets
            pass
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())
