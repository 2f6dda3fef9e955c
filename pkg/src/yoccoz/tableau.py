"""Marked grids of the critical orbit, the tableau rules and the tau-function.

Row i is the puzzle level, column j the orbit time: marks[i, j] is True when
V^i(c_j) is the critical piece of level i.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import critical_orbit
from .errors import CriticalOrbitEscaped, DepthExceeded, InsufficientDepth

# verdicts need width >= WIDTH_FLOOR * depth
WIDTH_FLOOR = 2.0 / 3.0


class Source(enum.Enum):
    FROM_DYNAMICS = "FromDynamics"
    SYNTHETIC = "Synthetic"


@dataclass(frozen=True)
class MarkedGrid:
    marks: np.ndarray
    source: Source = Source.SYNTHETIC
    c: Optional[complex] = None

    def __post_init__(self):
        m = np.asarray(self.marks, dtype=bool)
        if m.ndim != 2:
            raise ValueError("marks must be a 2-d array")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "marks", m)

    @property
    def depth(self) -> int:
        return self.marks.shape[0] - 1

    @property
    def width(self) -> int:
        return self.marks.shape[1] - 1

    @classmethod
    def from_rows(cls, rows, source=Source.SYNTHETIC, c=None):
        """Build from strings like "1001" (one per row, row 0 first)."""
        return cls(np.array([[ch == "1" for ch in r] for r in rows], dtype=bool), source, c)

    def rows(self) -> list[str]:
        return ["".join("1" if v else "0" for v in row) for row in self.marks]

    def __eq__(self, other):
        return (isinstance(other, MarkedGrid) and self.source == other.source
                and self.c == other.c and np.array_equal(self.marks, other.marks))

    def __hash__(self):
        return hash((self.marks.tobytes(), self.marks.shape, self.source, self.c))


def marked_grid(puzzle, depth: Optional[int] = None, width: Optional[int] = None,
                search: int = 3) -> MarkedGrid:
    """Marked grid of the critical orbit, rows 0..depth and columns 0..width.

    Rows are filled top-down and c_j is only located at level i when it lies in
    the critical piece of level i-1; otherwise the cell is unmarked by nesting.
    """
    if depth is None:
        depth = puzzle.depth
    if width is None:
        width = 2 * depth
    if depth > puzzle.depth:
        raise DepthExceeded(f"grid depth {depth} > puzzle depth {puzzle.depth}")
    if depth < 0 or width < 0:
        raise ValueError("depth and width must be nonnegative")
    orb = critical_orbit(puzzle.c, width + 1)
    if orb.escaped_at is not None and orb.escaped_at <= width:
        raise CriticalOrbitEscaped(f"critical orbit escapes at step {orb.escaped_at}")
    pts = orb.points[:width + 1]
    marks = np.zeros((depth + 1, width + 1), dtype=bool)
    marks[:, 0] = True
    for i in range(depth + 1):
        crit = puzzle.critical_ids[i]
        for j in range(1, width + 1):
            if i > 0 and not marks[i - 1, j]:
                continue
            pid = puzzle.locate(pts[j], i, search=search)
            if not isinstance(pid, int):
                raise DepthExceeded(f"c_{j} is not resolvable at level {i} ({pid.value}); "
                                    "raise the resolution")
            marks[i, j] = pid == crit
    return MarkedGrid(marks, Source.FROM_DYNAMICS, complex(puzzle.c))


@dataclass(frozen=True)
class Violation:
    rule: str
    cell: tuple
    detail: str = ""


def check_rules(grid: MarkedGrid) -> list[Violation]:
    """Violations of the marked-grid rules (empty list for a valid grid).

    column-0  every cell of column 0 is marked
    nesting   (i, j) marked implies (i-1, j) marked
    T1        (n, j) and (n-i, i) marked imply (n-i, j+i) marked
    T2        (n, j) marked and (n-i, i) unmarked imply (n-i, j+i) unmarked
    T3        (n, j) marked, j >= 1, m the least i >= 1 with (n+1-i, i) marked and
              (n-i, i) unmarked for 0 < i < m: then (n+1, j) is marked exactly
              when (n+1-m, j+m) is
    """
    M = grid.marks
    D, W = grid.depth, grid.width
    out = []
    for i in range(D + 1):
        if not M[i, 0]:
            out.append(Violation("column-0", (i, 0)))
    for i, j in zip(*np.nonzero(M[1:])):
        if not M[i, j]:
            out.append(Violation("nesting", (int(i), int(j)), f"below mark at ({i + 1}, {j})"))
    seen = set()
    for n, j in zip(*np.nonzero(M)):
        n, j = int(n), int(j)
        if j == 0:
            continue
        for i in range(1, n + 1):
            if j + i > W:
                break
            want = bool(M[n - i, i])
            if bool(M[n - i, j + i]) != want and (n - i, j + i) not in seen:
                seen.add((n - i, j + i))
                rule = "T1" if want else "T2"
                out.append(Violation(rule, (n - i, j + i), f"from mark at ({n}, {j})"))
        if n + 1 > D:
            continue
        m = next((i for i in range(1, n + 2) if M[n + 1 - i, i]), None)
        if m is None or j + m > W:
            continue
        if any(M[n - i, i] for i in range(1, m)):
            continue
        if bool(M[n + 1, j]) != bool(M[n + 1 - m, j + m]):
            out.append(Violation("T3", (n + 1, j), f"mark at ({n}, {j}), m={m}"))
    return out


def tau(grid: MarkedGrid, n: int) -> int:
    """Largest m in [0, n-1] with (m, n-m) marked, or -1."""
    if n < 1:
        raise ValueError("tau is defined for n >= 1")
    if n > grid.depth + 1 or n > grid.width:
        raise DepthExceeded(f"tau({n}) needs cells beyond the grid")
    for m in range(min(n - 1, grid.depth), -1, -1):
        if grid.marks[m, n - m]:
            return m
    return -1


def tau_values(grid: MarkedGrid) -> list[int]:
    """tau(1), ..., tau(N) with N = min(depth, width)."""
    return [tau(grid, n) for n in range(1, min(grid.depth, grid.width) + 1)]


class VerdictKind(enum.Enum):
    PERIODIC = "PeriodicTableau"
    NON_RECURRENT = "NonRecurrentAtDepth"
    PERSISTENT = "PersistentlyRecurrentUpToDepth"
    NOT_PERSISTENT = "RecurrentNotPersistentAtDepth"


@dataclass(frozen=True)
class RecurrenceVerdict:
    kind: VerdictKind
    tau_values: tuple
    depth_examined: int
    period: Optional[int] = None
    n0: Optional[int] = None

    def __str__(self):
        if self.kind is VerdictKind.PERIODIC:
            return f"{self.kind.value}({self.period})"
        if self.kind is VerdictKind.NON_RECURRENT:
            return f"{self.kind.value}({self.n0})"
        return self.kind.value


def verdict_from_tau(taus, depth_examined: Optional[int] = None) -> RecurrenceVerdict:
    """Classify a sequence tau(1), ..., tau(N); depends on the values only."""
    t = list(int(v) for v in taus)
    N = len(t)
    if depth_examined is None:
        depth_examined = N
    T = lambda n: t[n - 1]  # noqa: E731
    for p in range(1, N // 2 + 1):
        if all(T(n) == n - p for n in range(p, N + 1)):
            return RecurrenceVerdict(VerdictKind.PERIODIC, tuple(t), depth_examined, period=p)
    # tau stays below n0 from n0 on and has levelled off: the critical orbit
    # does not come back deeper than level n0 - 1
    for n0 in range(1, N // 2 + 1):
        top = max(T(n) for n in range(n0, N + 1))
        if top < n0 and top == max(T(n) for n in range(n0, (n0 + N) // 2 + 1)):
            return RecurrenceVerdict(VerdictKind.NON_RECURRENT, tuple(t), depth_examined, n0=n0)
    w = max(2, N // 4)
    mins = [min(t[k:k + w]) for k in range(0, N - w + 1)]
    if len(mins) >= 2 and all(a <= b for a, b in zip(mins, mins[1:])) and mins[-1] > max(mins[0], 0):
        return RecurrenceVerdict(VerdictKind.PERSISTENT, tuple(t), depth_examined)
    return RecurrenceVerdict(VerdictKind.NOT_PERSISTENT, tuple(t), depth_examined)


def recurrence_verdict(grid: MarkedGrid, width_floor: float = WIDTH_FLOOR) -> RecurrenceVerdict:
    if grid.width < width_floor * grid.depth:
        raise InsufficientDepth(f"width {grid.width} < {width_floor:.3g} x depth {grid.depth}")
    N = min(grid.depth, grid.width)
    if N < 2:
        raise InsufficientDepth("need at least two tau values")
    return verdict_from_tau(tau_values(grid), N)


def longest_univalent_pullback(grid: MarkedGrid) -> int:
    """Longest run of unmarked cells (i+k, j-k), k = 0, 1, ..., with j-k >= 1.

    Such a run is a pull-back of V^i(c_j) along c_{j-L+1}, ..., c_j none of whose
    domains contains the critical point.
    """
    M = grid.marks
    D, W = grid.depth, grid.width
    best = 0
    # run lengths along diagonals, extended down-left
    run = np.zeros((D + 2, W + 2), dtype=int)
    for i in range(D, -1, -1):
        for j in range(1, W + 1):
            if not M[i, j]:
                run[i, j] = 1 + (run[i + 1, j - 1] if j - 1 >= 1 else 0)
                best = max(best, run[i, j])
    return int(best)
