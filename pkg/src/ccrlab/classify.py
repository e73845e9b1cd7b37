"""Scenarios of the lattice-quotient family and their exact classification.

Equivalence of two scenarios (same cone and functional) is decided by lattice
equality.  Inequality is certified by a lattice vector x whose spectrum
closure{exp(i<x|w>) : w in N-perp} is trivial for one lattice and not for the
other.  All of this is rational arithmetic with 2*pi kept symbolic.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from . import _exact as ex
from .cone_lattice import (
    Cone,
    Functional,
    Lattice,
    QuotientChart,
    dual_cone,
    dual_lattice,
    in_cone,
    interior_unit,
    lattice_equal,
    orthant,
)
from .errors import (
    CCRLabError,
    IncomparableScenarios,
    IrrationalInput,
    LatticeNotOrthogonal,
    NotInteriorFunctional,
    RankWarning,
    ZeroDirection,
)
from .grid import GridShift, GridWindow, as_shift, window_ladder
from .pspace import PSpace, boundary_compact, diff_measure


@dataclass(frozen=True)
class GridSpec:
    yLo: tuple
    yHi: tuple
    h: Fraction
    M: int
    ladder: tuple  # extents L; window i is [yLo, yLo + L_i]


class Scenario:
    """Cone P, functional e, lattice N, P-space A (default phi(P)), multiplicity and grid."""

    def __init__(self, cone: Cone, e, lattice: Lattice, translates=None, k=1, grid: GridSpec | None = None,
                 seed=0, point_a=None, point_b=None, h=None, M=None, check=True):
        self.cone = cone
        self.e = e if isinstance(e, Functional) else Functional(e)
        self.lattice = lattice
        self.translates = translates
        self.k = int(k)
        self.seed = int(seed)
        self._grid = grid
        self._h = ex.as_fraction(h) if h is not None else Fraction(1, 4)
        self._M = int(M) if M is not None else 8
        self._pa = point_a
        self._pb = point_b
        if check:
            self.check()

    # invariants ---------------------------------------------------------------

    def check(self):
        d = self.cone.dim
        if self.e.dim != d or self.lattice.dim != d:
            raise LatticeNotOrthogonal("cone, functional and lattice dimensions differ")
        if any(self.e.pair(c) != 0 for c in self.lattice.columns):
            raise LatticeNotOrthogonal("lattice is not contained in the orthogonal complement of e")
        if not all(self.e.pair(v) > 0 for v in self.cone.rays):
            raise NotInteriorFunctional("e is not in the interior of the dual cone")
        if self.lattice.twopi_power != 0:
            raise IrrationalInput("scenario lattices must be rational")
        # P meets N only in 0: small lattice points are checked exactly
        r = self.lattice.rank
        for coeffs in _box(r, 3):
            if any(coeffs) and in_cone(self.cone, self.lattice.point(coeffs)):
                raise LatticeNotOrthogonal("lattice meets the cone outside the origin")

    @property
    def dim(self) -> int:
        return self.cone.dim

    @cached_property
    def chart(self) -> QuotientChart:
        return QuotientChart(self.lattice, self.e)

    @cached_property
    def pspace(self) -> PSpace:
        return PSpace(self.chart, self.cone, self.translates)

    def boundary(self):
        return boundary_compact(self.pspace)

    # grid ---------------------------------------------------------------------

    @cached_property
    def grid(self) -> GridSpec:
        return self._grid if self._grid is not None else self._auto_grid()

    @cached_property
    def window(self) -> GridWindow:
        g = self.grid
        return GridWindow(self.chart, g.yLo, g.yHi, g.h, g.M)

    @cached_property
    def ladder(self) -> list:
        return window_ladder(self.window, self.grid.ladder)

    def _probe_window(self, h, M):
        k = self.dim - self.lattice.rank
        return GridWindow(self.chart, [0] * k, [4 * h] * k, h, M)

    def generators(self) -> list:
        from .shiftrep import default_generators

        return default_generators(self.window, self.pspace)

    def _interior_points(self, window):
        from .shiftrep import grid_shifts_in_P

        for reach in range(1, 7):
            pts = grid_shifts_in_P(window, self.pspace, reach, strict=True)
            if len(pts) >= 2:
                return pts
        raise ValueError("no interior grid points found; refine the grid")

    @property
    def point_a(self) -> GridShift:
        if self._pa is not None:
            return GridShift.from_point(self.window, self._pa)
        return self._auto_points(self.window)[0]

    @property
    def point_b(self) -> GridShift:
        if self._pb is not None:
            return GridShift.from_point(self.window, self._pb)
        return self._auto_points(self.window)[1]

    def _auto_points(self, window):
        pts = self._interior_points(window)
        a = pts[0]
        b = next((p for p in pts[1:] if p != a), a * 2)
        return a, a + b

    def _auto_grid(self) -> GridSpec:
        """yLo sits below every translate by the largest step used; extents adapt to the boundary."""
        from .shiftrep import default_generators

        h, M = self._h, self._M
        probe = self._probe_window(h, M)
        k = probe.nreal
        gens = default_generators(probe, self.pspace)
        a, b = self._auto_points(probe)
        steps = max(max(abs(v) for v in g.s) for g in gens + [a, b])
        margin = (steps + 1) * h
        comp = self.chart.complement
        yLo = []
        for ax, f in enumerate(comp):
            tmin = min(ex.dot(g, f) / ex.dot(f, f) for g in self.pspace.translates)
            yLo.append(_snap_down(tmin - margin, h))
        yLo = tuple(yLo)
        if k == 1:
            S = 8 * h
            for _ in range(12):
                w = GridWindow(self.chart, yLo, [lo + S for lo in yLo], h, M)
                if self._fits(w, a) and self._fits(w, b) and self._fits(w, a + b):
                    break
                S *= 2
            else:
                raise ValueError("could not fit the boundary region in a window")
        else:
            S = max(8 * h, 4 * margin)
        ladder = (S, 2 * S, 3 * S, 4 * S)
        return GridSpec(yLo, tuple(lo + ladder[0] for lo in yLo), h, M, tuple(ladder))

    def _fits(self, w: GridWindow, a) -> bool:
        import numpy as np

        A = self.pspace
        m = A.mask(w)
        diff = m & ~A.shifted_mask(w, GridShift.from_offsets(w, a.s, a.m))
        I, _ = w.indices
        edge = np.any((I == 0) | (I == np.asarray(w.counts) - 1), axis=1)
        return not np.any(diff & edge)

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "cone": [[ex.fmt(v) for v in g] for g in self.cone.rays],
            "e": [ex.fmt(v) for v in self.e.direction],
            "lattice": [[ex.fmt(v) for v in c] for c in self.lattice.columns],
            "hnf": [[ex.fmt(v) for v in c] for c in self.lattice.hnf],
            "k": self.k,
            "seed": self.seed,
        }

    def __repr__(self):
        return f"Scenario(d={self.dim}, rank={self.lattice.rank}, k={self.k})"


def _snap_down(x: Fraction, h: Fraction) -> Fraction:
    return math.floor(x / h) * h


def _box(r, reach):
    if r == 0:
        yield ()
        return
    for head in range(-reach, reach + 1):
        for tail in _box(r - 1, reach):
            yield (head,) + tail


def _cone_from_spec(d, spec) -> Cone:
    if isinstance(spec, Cone):
        return spec
    if spec is None or spec == "orthant":
        return orthant(d)
    return Cone(spec)


def generate_family(d, coneSpec=None, latticeSpec=(), e=None, **kwargs) -> Scenario:
    """Build and validate a scenario; warns when rank N != d - 1."""
    cone = _cone_from_spec(d, coneSpec)
    if cone.dim != d:
        raise ValueError("cone dimension does not match d")
    e = interior_unit(dual_cone(cone), hint=e) if e is None or not isinstance(e, Functional) else e
    lattice = latticeSpec if isinstance(latticeSpec, Lattice) else Lattice(list(latticeSpec), dim=d)
    if lattice.rank != d - 1:
        warnings.warn(f"lattice rank {lattice.rank} differs from d - 1 = {d - 1}", RankWarning, stacklevel=2)
    return Scenario(cone, e, lattice, **kwargs)


# spectra ------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumType:
    kind: str  # Trivial | Cyclic | Dense
    order: int | None = None

    def __str__(self):
        return f"Cyclic({self.order})" if self.kind == "Cyclic" else self.kind

    @property
    def trivial(self) -> bool:
        return self.kind == "Trivial"


TRIVIAL = SpectrumType("Trivial")
DENSE = SpectrumType("Dense")


def _rational_vector(x):
    try:
        return ex.vec(x, allow_float=False)
    except IrrationalInput:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        raise IrrationalInput(str(exc)) from exc


def spectrum_type(x, N: Lattice, e=None) -> SpectrumType:
    """Closure of {exp(i<x|w>) : w in N-perp} for rational x.

    N-perp = L* + span(N)^perp.  Any component of x outside span(N) makes the
    pairing sweep a line, so the closure is the circle.  Otherwise the pairings
    with the basis of L* are 2*pi times rationals q_j and the spectrum is the
    group of m-th roots of unity, m = lcm of the denominators of q_j.
    """
    xv = _rational_vector(x)
    if N.twopi_power != 0:
        raise IrrationalInput("spectrum_type needs a rational lattice")
    if len(xv) != N.dim:
        raise ValueError("dimension mismatch")
    if e is not None:
        e = e if isinstance(e, Functional) else Functional(e)
        if e.pair(xv) != 0:
            return DENSE
    if not N.in_span(xv):
        return DENSE
    if N.rank == 0:
        return TRIVIAL
    dual_cols = [tuple(v) for v in ex.transpose(ex.matmul(N.basis_matrix, N.gram_inverse))]
    q = [ex.dot(xv, w) for w in dual_cols]
    m = 1
    for v in q:
        m = m * v.denominator // math.gcd(m, v.denominator)
    return TRIVIAL if m == 1 else SpectrumType("Cyclic", m)


# equivalence ----------------------------------------------------------------------


@dataclass
class Certificate:
    equivalent: bool
    witness: tuple | None
    spectrumA: SpectrumType | None
    spectrumB: SpectrumType | None
    hnfA: tuple
    hnfB: tuple

    def valid(self) -> bool:
        if self.equivalent:
            return self.witness is None
        return self.spectrumA is not None and self.spectrumA != self.spectrumB and (
            self.spectrumA.trivial or self.spectrumB.trivial
        )

    def as_dict(self):
        def fmt_v(v):
            return [ex.fmt(c) for c in v]

        return {
            "equivalent": self.equivalent,
            "witness": fmt_v(self.witness) if self.witness is not None else None,
            "spectrumA": str(self.spectrumA) if self.spectrumA else None,
            "spectrumB": str(self.spectrumB) if self.spectrumB else None,
            "hnfA": [fmt_v(r) for r in self.hnfA],
            "hnfB": [fmt_v(r) for r in self.hnfB],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def _lattice_of(s):
    return s.lattice if isinstance(s, Scenario) else s


def equivalent(S1, S2) -> Certificate:
    """Lattice-equality decision with a spectral witness when the lattices differ."""
    if isinstance(S1, Scenario) and isinstance(S2, Scenario):
        if S1.dim != S2.dim or not S1.cone.same_set(S2.cone) or not S1.e.parallel(S2.e):
            raise IncomparableScenarios("scenarios differ in dimension, cone or functional")
        e = S1.e
    else:
        e = None
    N1, N2 = _lattice_of(S1), _lattice_of(S2)
    if N1.dim != N2.dim:
        raise IncomparableScenarios("lattices live in different dimensions")
    if lattice_equal(N1, N2):
        return Certificate(True, None, None, None, N1.hnf, N2.hnf)
    for x in N1.hnf:
        if not N2.contains(x):
            return Certificate(False, x, spectrum_type(x, N1, e), spectrum_type(x, N2, e), N1.hnf, N2.hnf)
    for x in N2.hnf:
        if not N1.contains(x):
            return Certificate(False, x, spectrum_type(x, N1, e), spectrum_type(x, N2, e), N1.hnf, N2.hnf)
    raise AssertionError("unequal lattices must have a separating basis vector")  # pragma: no cover


def profile_corroboration(S1: Scenario, S2: Scenario, multiples=(1, 2, 3)) -> dict:
    """Heuristic cross-check: mu(A minus (n a + A)) in both scenarios along one ray.

    Differing profiles are consistent with inequivalence.  Equal profiles prove
    nothing, and the decision itself never uses this.
    """
    a = S1.point_a.vector
    out = {"heuristic": True, "ray": [ex.fmt(v) for v in a], "multiples": list(multiples)}
    profiles = []
    for S in (S1, S2):
        w = S.ladder[-1]
        try:
            profiles.append([diff_measure(S.pspace, as_shift(w, [n * v for v in a]), w) for n in multiples])
        except CCRLabError as exc:
            out.update({"profileA": None, "profileB": None, "differ": None, "reason": str(exc)})
            return out
    tol = S1.ladder[-1].cell_volume + S2.ladder[-1].cell_volume
    out.update({
        "profileA": profiles[0],
        "profileB": profiles[1],
        "differ": any(abs(x - y) > tol for x, y in zip(*profiles)),
    })
    return out


# pullbacks ----------------------------------------------------------------------


@dataclass
class Obstruction:
    mu: tuple
    witness: tuple
    spectrum: SpectrumType
    one_parameter: SpectrumType

    def valid(self) -> bool:
        return ex.dot(self.mu, self.witness) == 0 and self.spectrum != self.one_parameter

    def as_dict(self):
        return {
            "mu": [ex.fmt(v) for v in self.mu],
            "witness": [ex.fmt(v) for v in self.witness],
            "spectrum": str(self.spectrum),
            "oneParameterSpectrum": str(self.one_parameter),
        }


def pullback_obstruction(S, mu) -> Obstruction:
    """A rational w orthogonal to mu with w outside N.

    A pullback along mu would have spectrum closure{exp(i t <w|mu>)} = {1} at
    w, while the lattice spectrum at w is non-trivial because w is not in N.
    """
    N = _lattice_of(S)
    e = S.e if isinstance(S, Scenario) else None
    muv = _rational_vector(mu)
    if all(v == 0 for v in muv):
        raise ZeroDirection("mu must be nonzero")
    if len(muv) < 2:
        raise ZeroDirection("need d >= 2 for a nonzero orthogonal direction")
    perp = ex.nullspace([list(muv)], ncols=len(muv))
    w0 = perp[0]
    q = 1
    w = w0
    while N.contains(w):
        q += 1
        w = tuple(v / q for v in w0)
    one = TRIVIAL  # <w|mu> = 0
    return Obstruction(muv, w, spectrum_type(w, N, e), one)


# type I --------------------------------------------------------------------------


def type_one_report(S: Scenario, commutant_window: GridWindow | None = None) -> dict:
    """Nonzero cocycle + commutant check.

    For k = 1 a trivial commutant together with a nonzero cocycle gives type I.
    For k > 1 the commutant is M_k (the multiplicity space) and type I follows
    by tensoring the multiplicity-one flow with the identity on C^k.
    """
    from .shiftrep import ShiftRep, cocycle_space_dim, commutant_dim

    A, k = S.pspace, S.k
    cdim = cocycle_space_dim(ShiftRep(A, S.window, k), S.generators(), S.ladder)
    cw = commutant_window if commutant_window is not None else S.window
    comm = commutant_dim(ShiftRep(A, cw, k))
    has = cdim >= 1
    is_mk = comm == k * k
    if k == 1:
        type_i = has and comm == 1
        basis = "irreducible with nonzero cocycle" if type_i else "criterion not met"
    else:
        type_i = has and is_mk
        basis = "by multiplicity tensoring" if type_i else "criterion not met"
    return {
        "hasNonzeroCocycle": has,
        "cocycleDim": cdim,
        "commutantDim": comm,
        "irreducible": is_mk,
        "commutantIsScalar": comm == 1,
        "typeI": type_i,
        "typeIBasis": basis,
        "k": k,
    }


def dual_data(S: Scenario) -> Lattice:
    return dual_lattice(S.lattice, S.e)
