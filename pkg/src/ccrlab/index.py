"""Covariance kernel of units and the GNS Gram rank (index) at desk scale."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _exact as ex
from .cone_lattice import in_cone
from .errors import NotConditionallyPSD, UnsafeInteriorPoint
from .grid import GridWindow, as_shift
from .pspace import PSpace, diff_count, growth_profile, rng_for

EIG_RTOL = 1e-9


@dataclass(frozen=True)
class UnitParams:
    """A unit with canonical cocycle: character exponent lam in C^d, coefficient in C^k."""

    lam: np.ndarray
    coef: np.ndarray

    @classmethod
    def of(cls, u):
        if isinstance(u, UnitParams):
            return u
        if hasattr(u, "lam") and hasattr(u, "cocycle"):
            return cls(np.asarray(u.lam, dtype=complex), np.asarray(u.coefficient, dtype=complex))
        lam, coef = u
        return cls(np.atleast_1d(np.asarray(lam, dtype=complex)), np.atleast_1d(np.asarray(coef, dtype=complex)))


def _interior_safe(A: PSpace, a, window: GridWindow):
    """Check a is strictly inside P and A minus (a + A) stays inside the window."""
    if not in_cone(A.cone, a.vector, strict=True):
        raise UnsafeInteriorPoint(f"{a} is not an interior point of P")
    m = A.mask(window)
    diff = m & ~A.shifted_mask(window, a)
    I, _ = window.indices
    edge = np.any((I == 0) | (I == np.asarray(window.counts) - 1), axis=1)
    if np.any(diff & edge):
        raise UnsafeInteriorPoint(f"A minus (a + A) is cut by the window for a = {a}")


@dataclass
class CovMatrix:
    units: list
    point: object
    entries: np.ndarray
    measure: float
    cell_volume: float

    @property
    def size(self) -> int:
        return len(self.units)

    def gram(self) -> np.ndarray:
        c = self.entries
        K = c.shape[0]
        g = c[:-1, :-1] - c[:-1, K - 1][:, None] - c[K - 1, :-1][None, :] + c[K - 1, K - 1]
        return 0.5 * (g + g.conj().T)

    def scale(self) -> float:
        return float(max(np.abs(self.entries).max(), np.abs(self.gram()).max(), 1e-300))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.gram())

    def check_psd(self):
        # relative to the kernel entries: a null Gram is pure round-off
        ev = self.eigenvalues()
        if ev.size and ev.min() < -EIG_RTOL * self.scale():
            raise NotConditionallyPSD(f"Gram matrix has eigenvalue {ev.min():.3e}")
        return ev

    def seminorm_sq(self, f) -> float:
        """sum f(u) conj(f(v)) c(u, v) for a sum-zero weight vector f."""
        f = np.asarray(f, dtype=complex)
        if abs(f.sum()) > 1e-9 * max(1.0, np.abs(f).max()):
            raise ValueError("weights must sum to zero")
        return float(np.real(f @ self.entries @ f.conj()))


def covariance(units, a, A: PSpace, window: GridWindow) -> CovMatrix:
    """c_a(u_i, u_j) = <lam_i|a> + conj(<lam_j|a>) + <coef_i, coef_j> mu(A minus (a + A))."""
    a = as_shift(window, a)
    _interior_safe(A, a, window)
    params = [UnitParams.of(u) for u in units]
    if len(params) < 2:
        raise ValueError("need at least two units")
    av = ex.to_float(a.vector)
    count = diff_count(A, a, window)
    mu = count * window.cell_volume
    lam = np.array([p.lam for p in params])
    coef = np.array([p.coef for p in params])
    la = lam @ av
    entries = la[:, None] + la.conj()[None, :] + (coef @ coef.conj().T) * mu
    return CovMatrix(params, a, entries, mu, window.cell_volume)


def gns_rank(C: CovMatrix) -> int:
    ev = C.check_psd()
    return int(np.count_nonzero(ev > EIG_RTOL * C.scale()))


def random_units(count, d, k, rng, vacuum=False) -> list:
    out = []
    for _ in range(count):
        lam = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        coef = np.zeros(k, dtype=complex) if vacuum else rng.standard_normal(k) + 1j * rng.standard_normal(k)
        out.append(UnitParams(lam, coef))
    return out


@dataclass
class IndexReport:
    index: int
    independence: bool
    pointA: list
    pointB: list
    eigenvalues: list
    cellVolume: float
    ranksA: dict = field(default_factory=dict)
    ranksB: dict = field(default_factory=dict)
    stabilized: bool = True
    degenerate: bool = False
    refused: bool = False
    growth: str = "Bounded"
    cocycleDim: int | None = None

    def as_dict(self):
        return {
            "index": self.index,
            "independenceCheck": "pass" if self.independence else "fail",
            "pointA": self.pointA,
            "pointB": self.pointB,
            "eigenvalues": self.eigenvalues,
            "cellVolume": self.cellVolume,
            "ranksA": {str(k): v for k, v in self.ranksA.items()},
            "ranksB": {str(k): v for k, v in self.ranksB.items()},
            "stabilized": self.stabilized,
            "degenerate": self.degenerate,
            "refused": self.refused,
            "growth": self.growth,
            "cocycleDim": self.cocycleDim,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def index_of(scenario, a=None, b=None, sizes=None, with_cocycles=True) -> IndexReport:
    """Gram rank of a random unit set at two interior points.

    ``scenario`` provides pspace, window, ladder, k, seed and default interior
    points.  If the growth of mu(A minus (a + A)) is not bounded over the
    ladder, no cocycle is square-integrable and the index-zero path is taken.
    """
    A, window, k = scenario.pspace, scenario.window, scenario.k
    a = as_shift(window, scenario.point_a if a is None else a)
    b = as_shift(window, scenario.point_b if b is None else b)
    d = A.dim
    if sizes is None:
        # the rank is at most K - 1, so the smallest set needs K - 1 >= k
        sizes = tuple(s + max(0, k - 2) for s in (3, 6, 10))
    pa = [str(ex.fmt(v)) for v in a.vector]
    pb = [str(ex.fmt(v)) for v in b.vector]
    prof = growth_profile(A, a, scenario.ladder)
    cdim = None
    if with_cocycles:
        from .shiftrep import ShiftRep, cocycle_space_dim

        cdim = cocycle_space_dim(ShiftRep(A, window, k), scenario.generators(), scenario.ladder)
    if not prof.bounded:
        return IndexReport(0, True, pa, pb, [], window.cell_volume, refused=True, growth=prof.kind, cocycleDim=cdim)
    rng = rng_for(scenario.seed, 1)
    pool = random_units(max(sizes), d, k, rng)
    ranks_a, ranks_b, eig = {}, {}, []
    for K in sizes:
        ca = covariance(pool[:K], a, A, window)
        cb = covariance(pool[:K], b, A, window)
        ranks_a[K] = gns_rank(ca)
        ranks_b[K] = gns_rank(cb)
        eig = [float(v) for v in ca.eigenvalues()]
    final_a = ranks_a[max(sizes)]
    final_b = ranks_b[max(sizes)]
    stab = len(set(ranks_a.values())) == 1 and len(set(ranks_b.values())) == 1
    return IndexReport(
        index=final_a,
        independence=final_a == final_b,
        pointA=pa,
        pointB=pb,
        eigenvalues=eig,
        cellVolume=window.cell_volume,
        ranksA=ranks_a,
        ranksB=ranks_b,
        stabilized=stab,
        degenerate=a == b,
        growth=prof.kind,
        cocycleDim=cdim,
    )
