"""P-spaces A = union_t phi(P + g_t) in the quotient R^d / N.

Membership is decided exactly: the functional e is constant on N-cosets, so
only the lattice points inside a compact cone slab need to be tested (for
rank one the admissible lattice coefficients even form an explicit interval).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _exact as ex
from . import _kernels
from .cone_lattice import Cone, QuotientChart, in_cone
from .errors import ChartMismatch, DegenerateChart, LadderTooShort, NotInCone, WindowChartMismatch
from .grid import GridShift, GridWindow, as_shift

SLOPE_EPS = 1e-2
MASK_MAGIC = b"CCRLAB1\x00"


class PSpace:
    """A P-invariant closed subset of the quotient, given by cone translates."""

    def __init__(self, chart: QuotientChart, cone: Cone, translates=None):
        if chart.dim != cone.dim:
            raise ChartMismatch(f"chart has dim {chart.dim}, cone has dim {cone.dim}")
        d = chart.dim
        if translates is None:
            translates = [[0] * d]
        self.chart = chart
        self.cone = cone
        self.translates = tuple(ex.vec(g) for g in translates)
        if not self.translates or any(len(g) != d for g in self.translates):
            raise ChartMismatch("translates must be nonempty d-vectors")
        self._masks = {}

    @property
    def dim(self):
        return self.chart.dim

    @property
    def rank(self):
        return self.chart.rank

    @cached_property
    def e_interior(self) -> bool:
        e = self.chart.e
        return all(e.pair(v) > 0 for v in self.cone.rays)

    @cached_property
    def _min_pairing(self) -> float:
        e = self.chart.e
        return min(float(e.pair(v)) / (e.norm * math.sqrt(float(ex.dot(v, v)))) for v in self.cone.rays)

    def _require_slab(self):
        if self.rank >= 2 and not self.e_interior:
            raise DegenerateChart("lattice rank >= 2 needs e strictly inside the dual cone")

    # exact membership -------------------------------------------------------

    def member(self, x) -> bool:
        xv = ex.vec(x)
        if len(xv) != self.dim:
            raise ChartMismatch("point has the wrong dimension")
        return any(self._member_translate(tuple(a - b for a, b in zip(xv, g))) for g in self.translates)

    def _member_translate(self, w) -> bool:
        P, N = self.cone, self.chart.lattice
        if N.rank == 0:
            return in_cone(P, w)
        if N.rank == 1:
            b = N.columns[0]
            lo, hi = -math.inf, math.inf
            for f in P.facets:
                base, slope = ex.dot(f, w), ex.dot(f, b)
                if slope == 0:
                    if base < 0:
                        return False
                elif slope > 0:
                    lo = max(lo, math.ceil(-base / slope))
                else:
                    hi = min(hi, math.floor(base / -slope))
            return lo <= hi
        self._require_slab()
        e = self.chart.e
        c = e.pair(w)
        if c < 0:
            return False
        radius = float(c) / e.norm / self._min_pairing
        centre = [-v for v in N.coordinates(w)]
        ranges = []
        for l, ctr in enumerate(centre):
            reach = radius * math.sqrt(float(N.gram_inverse[l][l]))
            ranges.append(range(math.floor(ctr - reach) - 1, math.ceil(ctr + reach) + 2))
        for n in _product(ranges):
            p = tuple(wi + di for wi, di in zip(w, N.point(n)))
            if in_cone(P, p):
                return True
        return False

    def nonmember_witness(self):
        """A point outside A: far on the negative side of e."""
        e = self.chart.e.direction
        lowest = min(ex.dot(g, e) for g in self.translates)
        scale = (abs(lowest) + 1) / ex.dot(e, e)
        return tuple(-scale * v for v in e)

    # grid masks -------------------------------------------------------------

    def _check_window(self, window: GridWindow):
        if not window.compatible(self.chart):
            raise WindowChartMismatch("window was built for a different chart")

    def kernel_params(self, window: GridWindow):
        """Integer facet data for the mask kernels (see ``_kernels``)."""
        self._check_window(window)
        chart, M, h = self.chart, window.M, window.h
        comp = chart.complement
        cols = chart.lattice.columns
        origin = chart.to_point(window.yLo, [0] * self.rank)
        facets = self.cone.facets
        T, F = len(self.translates), len(facets)
        C0 = np.zeros((T, F), dtype=np.int64)
        A = np.zeros((T, F, window.nreal), dtype=np.int64)
        Bt = np.zeros((T, F, self.rank), dtype=np.int64)
        biggest = 0
        for t, g in enumerate(self.translates):
            shift = tuple(o - gi for o, gi in zip(origin, g))
            for f, nf in enumerate(facets):
                row = [M * ex.dot(nf, shift)] + [M * h * ex.dot(nf, fa) for fa in comp] + [ex.dot(nf, b) for b in cols]
                D = ex.common_denominator(row)
                ints = [int(v * D) for v in row]
                biggest = max(biggest, max(abs(v) for v in ints))
                C0[t, f] = ints[0]
                A[t, f, :] = ints[1 : 1 + window.nreal]
                Bt[t, f, :] = ints[1 + window.nreal :]
        if biggest > 2**40:
            raise OverflowError("facet data too large for exact int64 evaluation")
        extra = None
        if self.rank >= 2:
            self._require_slab()
            e = chart.e
            minp = self._min_pairing
            c0 = np.array([float(ex.dot(origin, e.direction) - ex.dot(g, e.direction)) / e.norm for g in self.translates])
            ca = np.array([[float(h) * float(ex.dot(fa, e.direction)) / e.norm for fa in comp]] * T).reshape(T, window.nreal)
            gamma = np.array([[float(v) for v in chart.lattice.coordinates(g)] for g in self.translates])
            gi = chart.lattice.gram_inverse
            rl = np.array([math.sqrt(float(gi[l][l])) / minp for l in range(self.rank)])
            extra = (c0, ca, gamma, rl)
        return C0, A, Bt, extra

    def mask_at(self, window: GridWindow, I, J) -> np.ndarray:
        """Membership of arbitrary integer cell indices (not restricted to the window)."""
        C0, A, Bt, extra = self.kernel_params(window)
        I = np.asarray(I, dtype=np.int64).reshape(-1, window.nreal)
        J = np.asarray(J, dtype=np.int64).reshape(I.shape[0], window.rank)
        if extra is None:
            return _kernels.mask_linear(I, J, C0, A, Bt, window.M)
        return _kernels.mask_box(I, J, C0, A, Bt, window.M, *extra)

    def mask(self, window: GridWindow) -> np.ndarray:
        """Indicator of member cells in canonical cell order (cached, read-only)."""
        key = window.key()
        if key not in self._masks:
            I, J = window.indices
            m = self.mask_at(window, I, J)
            m.setflags(write=False)
            self._masks[key] = m
        return self._masks[key]

    def shifted_mask(self, window: GridWindow, x) -> np.ndarray:
        """Indicator of p - x in A for every window cell p."""
        x = as_shift(window, x)
        I, J = window.indices
        s, m = x.offsets
        return self.mask_at(window, I - s[None, :], J - m[None, :])

    # float membership for Monte Carlo ----------------------------------------

    @cached_property
    def _float_params(self):
        chart = self.chart
        comp = chart.complement
        cols = chart.lattice.columns
        facets = self.cone.facets
        T, F, k, r = len(self.translates), len(facets), len(comp), self.rank
        c0 = np.zeros((T, F))
        At = np.zeros((T, F, k))
        Bt = np.zeros((T, F, r))
        for t, g in enumerate(self.translates):
            for f, nf in enumerate(facets):
                scale = max(abs(float(v)) for v in nf)
                c0[t, f] = -float(ex.dot(nf, g)) / scale
                At[t, f] = [float(ex.dot(nf, fa)) / scale for fa in comp]
                Bt[t, f] = [float(ex.dot(nf, b)) / scale for b in cols]
        e0 = et = gamma = rl = None
        if r >= 2:
            self._require_slab()
            e = chart.e
            e0 = np.array([-float(ex.dot(g, e.direction)) / e.norm for g in self.translates])
            et = np.array([[float(ex.dot(fa, e.direction)) / e.norm for fa in comp]] * T)
            gamma = np.array([[float(v) for v in chart.lattice.coordinates(g)] for g in self.translates])
            gi = chart.lattice.gram_inverse
            rl = np.array([math.sqrt(float(gi[l][l])) / self._min_pairing for l in range(r)])
        return c0, At, Bt, e0, et, gamma, rl

    def member_float(self, t: np.ndarray, u: np.ndarray) -> np.ndarray:
        c0, At, Bt, e0, et, gamma, rl = self._float_params
        return _kernels.mask_float(np.atleast_2d(t), np.asarray(u).reshape(len(t), self.rank), c0, At, Bt, e0, et, gamma, rl)

    def __repr__(self):
        g = [[ex.fmt(v) for v in t] for t in self.translates]
        return f"PSpace(dim={self.dim}, rank={self.rank}, translates={g})"


def _product(ranges):
    if not ranges:
        yield ()
        return
    for head in ranges[0]:
        for tail in _product(ranges[1:]):
            yield (head,) + tail


def member(A: PSpace, x) -> bool:
    return A.member(x)


@dataclass(frozen=True)
class BoundaryVerdict:
    compact: bool
    d_eff: int
    reason: str

    def __bool__(self):
        return self.compact

    def text(self) -> str:
        return f"compact: {'true' if self.compact else 'false'} ({self.reason})"


def boundary_compact(A: PSpace) -> BoundaryVerdict:
    """Compactness of the boundary of A, decided from the shape of the quotient.

    The quotient is R^(d-r) x T^r, an abelian group.  For abelian groups the
    boundary is compact exactly when the real factor is one-dimensional; a
    real factor of dimension >= 2 also violates the necessary condition
    dim(G/K) = 1 that holds for any group.
    """
    d_eff = A.dim - A.rank
    if d_eff == 1:
        reason = f"abelian criterion, d_eff=1: quotient R x T^{A.rank}"
        return BoundaryVerdict(True, 1, reason)
    reason = (
        f"abelian criterion, d_eff={d_eff}; necessary condition fails: "
        f"quotient has a real factor R^{d_eff} with d_eff >= 2"
    )
    return BoundaryVerdict(False, d_eff, reason)


def _check_in_cone(A: PSpace, x: GridShift):
    if not in_cone(A.cone, x.vector):
        raise NotInCone(f"shift {[ex.fmt(v) for v in x.vector]} is not in P")


def diff_count(A: PSpace, x, window: GridWindow) -> int:
    """Number of window cells p with p in A and p - x not in A."""
    x = as_shift(window, x)
    _check_in_cone(A, x)
    m = A.mask(window)
    return int(np.count_nonzero(m & ~A.shifted_mask(window, x)))


def diff_measure(A: PSpace, x, window: GridWindow) -> float:
    """Grid quadrature of the Haar measure of (A minus (x + A)) inside the window."""
    return diff_count(A, x, window) * window.cell_volume


def rng_for(seed: int, task: int) -> np.random.Generator:
    """Deterministic per-task stream, independent of how tasks are scheduled."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(task)]))


def diff_measure_mc(A: PSpace, x, window: GridWindow, n_samples=100_000, seed=0, task=0):
    """Monte Carlo estimate of ``diff_measure`` over the region the grid cells tile.

    Each grid point stands for the cell centred on it, so the sampled region is
    the window widened by half a cell on every side.  Returns (estimate,
    standard error).
    """
    x = as_shift(window, x)
    _check_in_cone(A, x)
    rng = rng_for(seed, task)
    lo = np.array([float(v) for v in window.yLo]) - 0.5 * float(window.h)
    width = np.array(window.counts, dtype=float) * float(window.h)
    t = lo + rng.random((n_samples, window.nreal)) * width
    u = rng.random((n_samples, window.rank)) - 0.5 / window.M
    s, m = x.offsets
    inside = A.member_float(t, u)
    shifted = A.member_float(t - float(window.h) * s[None, :], u - m[None, :] / window.M)
    hits = (inside & ~shifted).astype(float)
    vol = float(np.prod(width)) * window.chart.jacobian
    return vol * hits.mean(), vol * hits.std(ddof=1) / math.sqrt(n_samples)


@dataclass(frozen=True)
class GrowthProfile:
    kind: str  # "Bounded" or "Linear"
    slope: float
    extents: tuple = field(default=())
    measures: tuple = field(default=())

    @property
    def bounded(self) -> bool:
        return self.kind == "Bounded"


def growth_profile(A: PSpace, a, ladder) -> GrowthProfile:
    """Fit mu(A minus (a + A)) against the window extent and classify the growth."""
    ladder = list(ladder)
    if len(ladder) < 4:
        raise LadderTooShort(f"need at least 4 windows, got {len(ladder)}")
    ext = [w.extent for w in ladder]
    if any(b <= a_ for a_, b in zip(ext, ext[1:])):
        raise LadderTooShort("window extents must be strictly increasing")
    mus = [diff_measure(A, as_shift(w, a), w) for w in ladder]
    L = np.array([float(v) for v in ext])
    mu = np.array(mus)
    slope = float(np.polyfit(L, mu, 1)[0])
    bound = SLOPE_EPS * float(mu.max()) / float(L.max())
    kind = "Bounded" if slope <= bound else "Linear"
    return GrowthProfile(kind, slope, tuple(float(v) for v in L), tuple(mus))


# mask cache ------------------------------------------------------------------


def save_mask(path, window: GridWindow, mask: np.ndarray):
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if mask.size != window.ncells:
        raise ValueError("mask size does not match window")
    d = window.chart.dim
    parts = [MASK_MAGIC, struct.pack("<III", d, window.rank, window.M)]
    for lo, hi in zip(window.yLo, window.yHi):
        parts.append(struct.pack("<dd", float(lo), float(hi)))
    parts.append(struct.pack("<d", float(window.h)))
    parts.append(struct.pack(f"<{window.nreal}I", *window.counts))
    parts.append(np.packbits(mask.astype(np.uint8), bitorder="little").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_mask(path):
    """Read a mask cache file.  Returns (header dict, flat bool mask)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MASK_MAGIC:
        raise ValueError("not a ccrlab mask file")
    d, r, M = struct.unpack_from("<III", raw, 8)
    off = 20
    k = d - r
    bounds = []
    for _ in range(k):
        bounds.append(struct.unpack_from("<dd", raw, off))
        off += 16
    (h,) = struct.unpack_from("<d", raw, off)
    off += 8
    counts = struct.unpack_from(f"<{k}I", raw, off)
    off += 4 * k
    n = int(np.prod(counts, dtype=np.int64)) * M**r
    bits = np.unpackbits(np.frombuffer(raw[off:], dtype=np.uint8), bitorder="little")[:n].astype(bool)
    header = {"d": d, "r": r, "M": M, "yLo": [b[0] for b in bounds], "yHi": [b[1] for b in bounds], "h": h, "counts": list(counts)}
    return header, bits
