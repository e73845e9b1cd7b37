"""Exact rational geometry: polyhedral cones, lattices, duals and quotient charts.

All set-theoretic decisions (cone membership, lattice equality, orthogonality)
are made in exact rational arithmetic.  Floats only appear in metric
quantities such as unit vectors and slab radii.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import _exact as ex
from .errors import (
    DimensionTooLarge,
    EmptyInterior,
    FunctionalNotOrthogonal,
    NotInteriorFunctional,
    NotPointed,
    NotSpanning,
)

#: Largest dimension for which V- and H-representations are converted.
MAX_VREP_DIM = 4


def _enumerate_facets(rays, d):
    """Facet normals (primitive, inward) of the cone generated by ``rays``.

    Every facet of a spanning polyhedral cone is spanned by d-1 linearly
    independent generators, so scanning all (d-1)-subsets finds them all.
    """
    if d > MAX_VREP_DIM:
        raise DimensionTooLarge(f"representation conversion supported for d <= {MAX_VREP_DIM}, got d={d}")
    normals = set()
    for combo in itertools.combinations(rays, d - 1):
        ns = ex.nullspace([list(v) for v in combo], ncols=d)
        if len(ns) != 1:
            continue
        n = ns[0]
        vals = [ex.dot(n, v) for v in rays]
        if all(x >= 0 for x in vals):
            normals.add(ex.primitive(n))
        elif all(x <= 0 for x in vals):
            normals.add(ex.primitive(tuple(-x for x in n)))
    return tuple(sorted(normals))


def _extreme_rays(rays, facets, d):
    """Drop generators that are not extreme (lie on fewer than d-1 independent facets)."""
    keep = []
    for v in rays:
        if all(x == 0 for x in v):
            continue
        tight = [f for f in facets if ex.dot(f, v) == 0]
        if ex.rank([list(f) for f in tight]) == d - 1:
            p = ex.primitive(v)
            if p not in keep:
                keep.append(p)
    return tuple(sorted(keep))


class Cone:
    """Pointed, spanning polyhedral cone in R^d with rational data.

    Build from generators (``Cone([[1, 0], [1, 1]])``) or from inward facet
    normals (``Cone.from_facets(...)``); the other representation is derived
    on demand.
    """

    def __init__(self, generators=None, *, facets=None, check=True):
        if generators is None and facets is None:
            raise ValueError("need generators or facets")
        self._gens = None if generators is None else tuple(ex.vec(g) for g in generators)
        self._facets = None if facets is None else tuple(ex.vec(f) for f in facets)
        ref = self._gens if self._gens is not None else self._facets
        if not ref:
            raise NotSpanning("empty cone description")
        self.dim = len(ref[0])
        if any(len(v) != self.dim for v in ref):
            raise ValueError("ragged vectors in cone description")
        if check:
            self._check()

    @classmethod
    def from_facets(cls, facets, check=True):
        return cls(facets=facets, check=check)

    def _check(self):
        d = self.dim
        if self._gens is not None:
            if ex.rank([list(g) for g in self._gens]) < d:
                raise NotSpanning("generators do not span R^%d" % d)
            if ex.rank([list(f) for f in self.facets]) < d:
                raise NotPointed("cone contains a line")
        else:
            if ex.rank([list(f) for f in self._facets]) < d:
                raise NotPointed("facet normals do not span: cone contains a line")
            if ex.rank([list(g) for g in self.generators]) < d:
                raise NotSpanning("H-representation describes a lower-dimensional cone")

    @cached_property
    def facets(self):
        if self._facets is not None:
            return self._facets
        return _enumerate_facets(self._gens, self.dim)

    @cached_property
    def generators(self):
        if self._gens is not None:
            return self._gens
        # extreme rays of {y : <f|y> >= 0} are the facets of cone(f)
        return _enumerate_facets(self._facets, self.dim)

    @cached_property
    def rays(self):
        """Irredundant (extreme) generators as primitive integer vectors."""
        return _extreme_rays(self.generators, self.facets, self.dim)

    @cached_property
    def facet_matrix(self) -> np.ndarray:
        """Integer facet matrix (rows primitive), as int64."""
        return np.array([[int(x) for x in ex.primitive(f)] for f in self.facets], dtype=np.int64)

    def contains(self, x, strict=False) -> bool:
        return in_cone(self, x, strict)

    def same_set(self, other: "Cone") -> bool:
        """Set equality, by mutual generator membership."""
        return (
            self.dim == other.dim
            and all(in_cone(other, g) for g in self.generators)
            and all(in_cone(self, g) for g in other.generators)
        )

    def __repr__(self):
        gens = [[ex.fmt(x) for x in g] for g in self.rays]
        return f"Cone(dim={self.dim}, rays={gens})"


def orthant(d) -> Cone:
    eye = [[int(i == j) for j in range(d)] for i in range(d)]
    return Cone(eye, facets=eye)


def dual_cone(P: Cone, vrep=True) -> Cone:
    """Dual cone P* = {y : <x|y> >= 0 for all x in P}.

    The facets of P generate P*, and the generators of P are (redundant)
    facet normals of P*.  With ``vrep=False`` an H-only cone is returned,
    which works in any dimension.
    """
    if vrep and P.dim > MAX_VREP_DIM:
        raise DimensionTooLarge(f"V-representation of the dual needs d <= {MAX_VREP_DIM}")
    if not vrep:
        return Cone(facets=P.generators, check=False)
    return Cone(P.facets, facets=P.rays, check=True)


def in_cone(P: Cone, x, strict=False) -> bool:
    """Exact membership test against all facet inequalities."""
    xv = ex.vec(x)
    if strict:
        return all(ex.dot(f, xv) > 0 for f in P.facets)
    return all(ex.dot(f, xv) >= 0 for f in P.facets)


@dataclass(frozen=True)
class Functional:
    """A linear functional on R^d kept as an exact rational direction.

    Only the ray matters for orthogonality and positivity decisions; ``unit``
    is the normalized float vector used in metric formulas.
    """

    direction: tuple

    def __post_init__(self):
        object.__setattr__(self, "direction", ex.vec(self.direction))
        if all(x == 0 for x in self.direction):
            raise ValueError("zero functional")

    @property
    def dim(self):
        return len(self.direction)

    @cached_property
    def norm(self) -> float:
        return math.sqrt(float(ex.dot(self.direction, self.direction)))

    @cached_property
    def unit(self) -> np.ndarray:
        return ex.to_float(self.direction) / self.norm

    def pair(self, x) -> Fraction:
        """Exact pairing with the (unnormalized) direction."""
        return ex.dot(self.direction, ex.vec(x))

    def parallel(self, other: "Functional") -> bool:
        return ex.primitive(self.direction) == ex.primitive(other.direction) and self.dim == other.dim


def interior_unit(PStar: Cone, hint=None) -> Functional:
    """A unit functional strictly inside ``PStar``.

    ``PStar`` is the dual of P, so its facets are the generators of P; the
    returned functional is strictly positive on every one of them.  Without a
    hint this is the normalized sum of the generators of ``PStar``.
    """
    primal_gens = PStar.facets
    if hint is not None:
        e = hint if isinstance(hint, Functional) else Functional(hint)
        if not all(e.pair(v) > 0 for v in primal_gens):
            raise NotInteriorFunctional("hint is not in the interior of the dual cone")
        return e
    total = tuple(sum(col, Fraction(0)) for col in zip(*PStar.rays))
    if all(x == 0 for x in total) or not all(ex.dot(total, v) > 0 for v in primal_gens):
        raise EmptyInterior("dual cone has empty interior")
    return Functional(total)


def slab_radius(P: Cone, e, c) -> float:
    """Radius R with {y in P : <y|e> <= c} inside the closed ball B(0, R).

    For y = sum a_j v_j (unit generators, a_j >= 0) we have
    <y|e> >= min_j <v_j|e> * sum a_j >= min_j <v_j|e> * |y|.
    """
    e = e if isinstance(e, Functional) else Functional(e)
    if not all(e.pair(v) > 0 for v in P.rays):
        raise NotInteriorFunctional("functional is not strictly positive on the cone")
    c = float(c)
    if c < 0:
        raise ValueError("slab level must be nonnegative")
    pairings = [float(e.pair(v)) / (e.norm * math.sqrt(float(ex.dot(v, v)))) for v in P.rays]
    return c / min(pairings)


class Lattice:
    """Discrete subgroup of R^d given by a rational basis (columns).

    ``twopi_power`` carries a symbolic factor (2*pi)**p multiplying the
    rational basis, so dual lattices stay exact.
    """

    def __init__(self, columns, dim=None, twopi_power=0):
        cols = tuple(ex.vec(c) for c in columns)
        if dim is None:
            if not cols:
                raise ValueError("rank-0 lattice needs an explicit dim")
            dim = len(cols[0])
        self.dim = int(dim)
        self.columns = cols
        self.twopi_power = int(twopi_power)
        if any(len(c) != self.dim for c in cols):
            raise ValueError("basis vectors have the wrong length")
        if cols and ex.rank([list(c) for c in cols]) != len(cols):
            raise ValueError("lattice basis is not linearly independent")
        if len(cols) > self.dim:
            raise ValueError("rank exceeds dimension")

    @classmethod
    def zero(cls, d):
        return cls((), dim=d)

    @property
    def rank(self) -> int:
        return len(self.columns)

    @cached_property
    def basis_matrix(self):
        """d x r rational matrix (list of rows)."""
        return [[c[i] for c in self.columns] for i in range(self.dim)]

    @cached_property
    def gram(self):
        return [[ex.dot(a, b) for b in self.columns] for a in self.columns]

    @cached_property
    def gram_inverse(self):
        return ex.inverse(self.gram) if self.rank else []

    @cached_property
    def covolume(self) -> float:
        """sqrt(det(B^T B)) of the rational part (ignores the 2*pi tag)."""
        return math.sqrt(float(ex.det(self.gram))) if self.rank else 1.0

    @cached_property
    def hnf(self) -> tuple:
        return _rational_hnf(self.columns)

    def coordinates(self, x):
        """Exact coefficients c with B c = projection of x onto span(B)."""
        xv = ex.vec(x)
        bt_x = [ex.dot(c, xv) for c in self.columns]
        return ex.matvec(self.gram_inverse, bt_x)

    def in_span(self, x) -> bool:
        xv = ex.vec(x)
        if not self.rank:
            return all(v == 0 for v in xv)
        c = self.coordinates(xv)
        back = tuple(sum((ci * col[i] for ci, col in zip(c, self.columns)), Fraction(0)) for i in range(self.dim))
        return back == xv

    def contains(self, x) -> bool:
        """Exact lattice membership (rational part)."""
        xv = ex.vec(x)
        if not self.in_span(xv):
            return False
        return not self.rank or ex.is_integral(self.coordinates(xv))

    def point(self, coeffs):
        return tuple(
            sum((Fraction(int(k)) * col[i] for k, col in zip(coeffs, self.columns)), Fraction(0)) for i in range(self.dim)
        )

    def scaled(self, factor) -> "Lattice":
        f = ex.as_fraction(factor)
        return Lattice([[f * x for x in c] for c in self.columns], dim=self.dim, twopi_power=self.twopi_power)

    def __eq__(self, other):
        return isinstance(other, Lattice) and lattice_equal(self, other)

    def __hash__(self):
        return hash((self.dim, self.twopi_power, self.hnf))

    def __repr__(self):
        cols = [[ex.fmt(x) for x in c] for c in self.columns]
        tag = f", twopi_power={self.twopi_power}" if self.twopi_power else ""
        return f"Lattice(dim={self.dim}, basis={cols}{tag})"


def _integer_row_hnf(rows):
    """Row-style Hermite normal form of an integer matrix with independent rows."""
    a = [list(r) for r in rows]
    nrows = len(a)
    if not nrows:
        return []
    ncols = len(a[0])
    row = 0
    for col in range(ncols):
        if row == nrows:
            break
        while True:
            nz = [i for i in range(row, nrows) if a[i][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(a[i][col]))
            a[row], a[piv] = a[piv], a[row]
            clean = True
            for i in range(row + 1, nrows):
                if a[i][col]:
                    q = a[i][col] // a[row][col]
                    a[i] = [x - q * y for x, y in zip(a[i], a[row])]
                    if a[i][col]:
                        clean = False
            if clean:
                break
        if not any(a[i][col] for i in range(row, nrows)):
            continue
        if a[row][col] < 0:
            a[row] = [-x for x in a[row]]
        p = a[row][col]
        for i in range(row):
            q = a[i][col] // p
            if q:
                a[i] = [x - q * y for x, y in zip(a[i], a[row])]
        row += 1
    return a[:row]


def _rational_hnf(columns):
    """Canonical basis of the lattice spanned by ``columns``.

    Row-HNF commutes with positive integer scaling, so HNF(D*B)/D does not
    depend on the common denominator D chosen.
    """
    if not columns:
        return ()
    d = ex.common_denominator([x for c in columns for x in c])
    ints = [[int(x * d) for x in c] for c in columns]
    h = _integer_row_hnf(ints)
    return tuple(tuple(Fraction(x, d) for x in r) for r in h)


def hnf(N: Lattice) -> tuple:
    return N.hnf


def lattice_equal(N1: Lattice, N2: Lattice) -> bool:
    if N1.dim != N2.dim or N1.rank != N2.rank:
        return False
    if N1.twopi_power != N2.twopi_power and N1.rank:
        return False
    return N1.hnf == N2.hnf


def dual_lattice(N: Lattice, e) -> Lattice:
    """The rank-r part of N-perp: 2*pi * B (B^T B)^{-1} Z^r.

    ``N-perp`` itself is this lattice plus the orthogonal complement of
    span(N) (the line through ``e`` when rank N = d - 1).
    """
    e = e if isinstance(e, Functional) else Functional(e)
    if e.dim != N.dim:
        raise FunctionalNotOrthogonal("dimension mismatch between functional and lattice")
    if any(e.pair(c) != 0 for c in N.columns):
        raise FunctionalNotOrthogonal("functional is not orthogonal to the lattice")
    if not N.rank:
        return Lattice.zero(N.dim)
    b = N.basis_matrix
    dual_b = ex.matmul(b, N.gram_inverse)
    cols = ex.transpose(dual_b)
    return Lattice(cols, dim=N.dim, twopi_power=1 - N.twopi_power)


def _project_off(v, columns, gram_inv):
    if not columns:
        return tuple(v)
    bt = [ex.dot(c, v) for c in columns]
    coef = ex.matvec(gram_inv, bt)
    return tuple(v[i] - sum((k * c[i] for k, c in zip(coef, columns)), Fraction(0)) for i in range(len(v)))


@dataclass(frozen=True)
class QuotientChart:
    """Coordinates on R^d / N = R^(d-r) x T^r.

    A point is written x = sum_a t_a f_a + B u with rational, mutually
    orthogonal complement vectors f_a (the first one is ``e``'s direction when
    r > 0) and u taken mod 1.  The f_a are not normalized so grid points stay
    rational; ``jacobian`` converts dt du to Haar measure.
    """

    lattice: Lattice
    e: Functional
    complement: tuple = field(init=False)

    def __post_init__(self):
        N, e = self.lattice, self.e
        if not isinstance(e, Functional):
            e = Functional(e)
            object.__setattr__(self, "e", e)
        if any(e.pair(c) != 0 for c in N.columns):
            raise FunctionalNotOrthogonal("e must be orthogonal to every lattice basis vector")
        d, r = N.dim, N.rank
        if r == 0:
            comp = tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d))
        else:
            candidates = [e.direction] + [tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)]
            comp = []
            for v in candidates:
                w = _project_off(v, N.columns, N.gram_inverse)
                for f in comp:
                    w = tuple(a - ex.dot(w, f) / ex.dot(f, f) * b for a, b in zip(w, f))
                if any(x != 0 for x in w):
                    comp.append(w)
                if len(comp) == d - r:
                    break
            comp = tuple(comp)
        object.__setattr__(self, "complement", comp)

    @property
    def dim(self):
        return self.lattice.dim

    @property
    def rank(self):
        return self.lattice.rank

    @cached_property
    def complement_norms(self) -> np.ndarray:
        return np.array([math.sqrt(float(ex.dot(f, f))) for f in self.complement])

    @cached_property
    def jacobian(self) -> float:
        """Haar density of dt du: covolume(N) * prod |f_a|."""
        return float(self.lattice.covolume * np.prod(self.complement_norms))

    @cached_property
    def complement_float(self) -> np.ndarray:
        return np.array([ex.to_float(f) for f in self.complement]).reshape(len(self.complement), self.dim)

    @cached_property
    def basis_float(self) -> np.ndarray:
        """d x r float basis matrix."""
        return np.array([[float(x) for x in c] for c in self.lattice.columns]).T.reshape(self.dim, self.rank)

    def to_point(self, t, u):
        """Exact inverse chart (for rational t, u)."""
        tv, uv = ex.vec(t), ex.vec(u)
        x = [Fraction(0)] * self.dim
        for ta, f in zip(tv, self.complement):
            for i in range(self.dim):
                x[i] += ta * f[i]
        for ul, c in zip(uv, self.lattice.columns):
            for i in range(self.dim):
                x[i] += ul * c[i]
        return tuple(x)

    def coords(self, x):
        """Return (t, u) with x - (sum t_a f_a + B u) in N and u in [0, 1)^r."""
        xv = ex.vec(x)
        t = tuple(ex.dot(xv, f) / ex.dot(f, f) for f in self.complement)
        if self.rank:
            ut = self.lattice.coordinates(xv)
            u = tuple(c - math.floor(c) for c in ut)
        else:
            u = ()
        return t, u

    def coords_float(self, x: np.ndarray):
        """Vectorized float version of ``coords`` for arrays of shape (n, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        comp = self.complement_float
        t = (x @ comp.T) / (self.complement_norms**2)
        if self.rank:
            b = self.basis_float
            ut = np.linalg.solve(b.T @ b, b.T @ x.T).T
            u = ut - np.floor(ut)
        else:
            u = np.zeros((x.shape[0], 0))
        return t, u


def quotient_coords(chart: QuotientChart, x):
    return chart.coords(x)
