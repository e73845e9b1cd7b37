"""Grid windows on R^(d-r) x T^r and grid-snapped shifts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import _exact as ex
from .cone_lattice import QuotientChart
from .errors import SampleOffGrid, WindowChartMismatch


class GridWindow:
    """Finite grid of cell points in quotient-chart coordinates.

    Along each R axis the points are yLo + h*i for i = 0..n-1, inclusive of
    yHi when it falls on the grid; along each torus axis they are j/M.  Cells
    are ordered lexicographically with the R indices most significant.
    ``yLo``/``yHi``/``h`` are measured in chart coordinates t (coefficients of
    the complement vectors f_a).
    """

    def __init__(self, chart: QuotientChart, yLo, yHi, h, M=8):
        self.chart = chart
        k = chart.dim - chart.rank
        if isinstance(yLo, (int, float, str, Fraction)):
            yLo = [yLo] * k
        if isinstance(yHi, (int, float, str, Fraction)):
            yHi = [yHi] * k
        self.yLo = ex.vec(yLo)
        self.yHi = ex.vec(yHi)
        self.h = ex.as_fraction(h)
        self.M = int(M)
        if len(self.yLo) != k or len(self.yHi) != k:
            raise WindowChartMismatch(f"window needs {k} real axes")
        if self.h <= 0:
            raise ValueError("grid step must be positive")
        if chart.rank and self.M < 2:
            raise ValueError("need at least 2 torus subdivisions")
        for lo, hi in zip(self.yLo, self.yHi):
            if hi - lo < 4 * self.h:
                raise ValueError("window must span at least 4 steps per axis")

    @property
    def nreal(self) -> int:
        return len(self.yLo)

    @property
    def rank(self) -> int:
        return self.chart.rank

    @cached_property
    def counts(self) -> tuple:
        return tuple(math.floor((hi - lo) / self.h) + 1 for lo, hi in zip(self.yLo, self.yHi))

    @cached_property
    def shape(self) -> tuple:
        return self.counts + (self.M,) * self.rank

    @property
    def ncells(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))

    @cached_property
    def extent(self) -> Fraction:
        return max(hi - lo for lo, hi in zip(self.yLo, self.yHi))

    @cached_property
    def cell_volume(self) -> float:
        """Haar measure of one cell: h^(d-r) * prod|f_a| * M^(-r) * covolume(N)."""
        return float(self.h) ** self.nreal * self.chart.jacobian / self.M**self.rank

    @cached_property
    def indices(self):
        """Integer (I, J) index arrays of all cells in canonical order."""
        grids = np.indices(self.shape).reshape(len(self.shape), -1).T.astype(np.int64)
        return np.ascontiguousarray(grids[:, : self.nreal]), np.ascontiguousarray(grids[:, self.nreal :])

    def flat(self, I, J) -> np.ndarray:
        """Flat index of cells (J reduced mod M); -1 where I falls outside the window."""
        I = np.atleast_2d(np.asarray(I, dtype=np.int64))
        J = np.asarray(J, dtype=np.int64).reshape(I.shape[0], self.rank)
        inside = np.all((I >= 0) & (I < np.asarray(self.counts)), axis=1)
        idx = np.concatenate([np.clip(I, 0, np.asarray(self.counts) - 1), J % self.M], axis=1)
        flat = np.ravel_multi_index(tuple(idx.T), self.shape) if len(self.shape) else np.zeros(I.shape[0], np.int64)
        return np.where(inside, flat, -1)

    def cell_coords(self, I, J):
        """Exact (t, u) of a single cell."""
        t = tuple(lo + self.h * int(i) for lo, i in zip(self.yLo, I))
        u = tuple(Fraction(int(j), self.M) for j in J)
        return t, u

    def cell_point(self, I, J):
        t, u = self.cell_coords(I, J)
        return self.chart.to_point(t, u)

    def cell_coords_float(self):
        I, J = self.indices
        t = np.array([float(x) for x in self.yLo])[None, :] + float(self.h) * I
        u = J / self.M
        return t, u

    def compatible(self, chart: QuotientChart) -> bool:
        a, b = self.chart, chart
        return a.dim == b.dim and a.lattice == b.lattice and a.e.parallel(b.e)

    def with_bounds(self, yLo=None, yHi=None, h=None, M=None) -> "GridWindow":
        return GridWindow(
            self.chart,
            self.yLo if yLo is None else yLo,
            self.yHi if yHi is None else yHi,
            self.h if h is None else h,
            self.M if M is None else M,
        )

    def scaled(self, factor) -> "GridWindow":
        """Stretch the upper bounds by ``factor`` about yLo (snapped to the grid)."""
        f = ex.as_fraction(factor)
        yHi = []
        for lo, hi in zip(self.yLo, self.yHi):
            steps = math.floor((hi - lo) * f / self.h)
            yHi.append(lo + steps * self.h)
        return self.with_bounds(yHi=yHi)

    def key(self) -> tuple:
        return (tuple(self.yLo), tuple(self.yHi), self.h, self.M)

    def __eq__(self, other):
        return isinstance(other, GridWindow) and self.key() == other.key() and self.compatible(other.chart)

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        lo = [ex.fmt(x) for x in self.yLo]
        hi = [ex.fmt(x) for x in self.yHi]
        return f"GridWindow(yLo={lo}, yHi={hi}, h={ex.fmt(self.h)}, M={self.M}, cells={self.ncells})"


def window_ladder(base: GridWindow, extents) -> list:
    """Windows sharing yLo, h and M with upper bounds yLo + L for each L."""
    out = []
    for L in extents:
        L = ex.as_fraction(L)
        out.append(base.with_bounds(yHi=[lo + L for lo in base.yLo]))
    return out


@dataclass(frozen=True)
class GridShift:
    """A shift x = h * sum_a s_a f_a + B m / M that maps grid cells to grid cells.

    ``m`` is not reduced mod M: the shift is an element of R^d, not of the
    quotient.
    """

    s: tuple
    m: tuple
    h: Fraction
    M: int
    chart: QuotientChart

    @classmethod
    def from_offsets(cls, window: GridWindow, s, m=()):
        s = tuple(int(v) for v in s)
        m = tuple(int(v) for v in m)
        if len(s) != window.nreal or len(m) != window.rank:
            raise SampleOffGrid("offset lengths do not match the window")
        return cls(s, m, window.h, window.M, window.chart)

    @classmethod
    def from_point(cls, window: GridWindow, x):
        """Snap an exact point to a grid shift; raise SampleOffGrid if it is not on the grid."""
        xv = ex.vec(x)
        chart = window.chart
        if len(xv) != chart.dim:
            raise SampleOffGrid("dimension mismatch")
        s = []
        for f in chart.complement:
            q = ex.dot(xv, f) / ex.dot(f, f) / window.h
            if q.denominator != 1:
                raise SampleOffGrid(f"{[ex.fmt(v) for v in xv]} is not on the grid")
            s.append(int(q))
        m = []
        if chart.rank:
            for c in chart.lattice.coordinates(xv):
                q = c * window.M
                if q.denominator != 1:
                    raise SampleOffGrid(f"{[ex.fmt(v) for v in xv]} is not on the torus grid")
                m.append(int(q))
        out = cls(tuple(s), tuple(m), window.h, window.M, chart)
        if out.vector != xv:
            raise SampleOffGrid("point has a component outside the chart")
        return out

    @cached_property
    def vector(self) -> tuple:
        t = [self.h * v for v in self.s]
        u = [Fraction(v, self.M) for v in self.m]
        return self.chart.to_point(t, u)

    @property
    def offsets(self):
        return np.asarray(self.s, dtype=np.int64), np.asarray(self.m, dtype=np.int64)

    def __add__(self, other: "GridShift") -> "GridShift":
        if (self.h, self.M) != (other.h, other.M):
            raise SampleOffGrid("shifts live on different grids")
        return GridShift(
            tuple(a + b for a, b in zip(self.s, other.s)),
            tuple(a + b for a, b in zip(self.m, other.m)),
            self.h,
            self.M,
            self.chart,
        )

    def __mul__(self, n: int) -> "GridShift":
        n = int(n)
        return GridShift(tuple(n * a for a in self.s), tuple(n * a for a in self.m), self.h, self.M, self.chart)

    __rmul__ = __mul__

    def __repr__(self):
        return f"GridShift(s={self.s}, m={self.m})"

    def __hash__(self):
        return hash((self.s, self.m, self.h, self.M))

    def __eq__(self, other):
        return isinstance(other, GridShift) and (self.s, self.m, self.h, self.M) == (other.s, other.m, other.h, other.M)


def as_shift(window: GridWindow, x) -> GridShift:
    if isinstance(x, GridShift):
        if (x.h, x.M) != (window.h, window.M):
            raise SampleOffGrid("shift was built for a different grid")
        return x
    return GridShift.from_point(window, x)
