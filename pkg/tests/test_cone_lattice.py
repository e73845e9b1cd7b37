import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from ccrlab import _exact as ex
from ccrlab.cone_lattice import (
    Cone,
    Functional,
    Lattice,
    QuotientChart,
    dual_cone,
    dual_lattice,
    hnf,
    in_cone,
    interior_unit,
    lattice_equal,
    orthant,
    quotient_coords,
    slab_radius,
)
from ccrlab.errors import (
    DimensionTooLarge,
    FunctionalNotOrthogonal,
    NotInteriorFunctional,
    NotPointed,
    NotSpanning,
)

ints = st.integers(-5, 5)


def vectors(d):
    return st.lists(ints, min_size=d, max_size=d)


@st.composite
def simplicial_cones(draw, d):
    gens = draw(st.lists(vectors(d), min_size=d, max_size=d))
    assume(ex.rank(gens) == d)
    return Cone(gens)


@st.composite
def unimodular(draw, n):
    """Product of random elementary integer row operations."""
    u = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(draw(st.integers(0, 6))):
        i, j = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
        if i == j:
            continue
        k = draw(st.integers(-3, 3))
        u[i] = [a + k * b for a, b in zip(u[i], u[j])]
    if draw(st.booleans()):
        u[0] = [-a for a in u[0]]
    return u


# dual cones -------------------------------------------------------------------


@pytest.mark.parametrize("d", [2, 3])
def test_orthant_is_self_dual(d):
    assert dual_cone(orthant(d)).same_set(orthant(d))


def test_dual_of_skew_cone():
    P = Cone([(1, 0), (1, 1)])
    assert dual_cone(P).same_set(Cone([(0, 1), (1, -1)]))


def test_dual_of_skew_cone_by_sampling():
    # both H-representations agree on a grid of rational points
    Pd = dual_cone(Cone([(1, 0), (1, 1)]))
    ref = Cone([(0, 1), (1, -1)])
    for a in range(-4, 5):
        for b in range(-4, 5):
            x = (F(a, 2), F(b, 3))
            assert in_cone(Pd, x) == in_cone(ref, x)


@given(simplicial_cones(2))
def test_double_dual_2d(P):
    assert dual_cone(dual_cone(P)).same_set(P)


@given(simplicial_cones(3))
def test_double_dual_3d(P):
    assert dual_cone(dual_cone(P)).same_set(P)


def test_non_simplicial_double_dual():
    P = Cone([(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1)])
    assert len(P.facets) == 4
    assert dual_cone(dual_cone(P)).same_set(P)


def test_vrep_dimension_limit():
    P = orthant(5)
    with pytest.raises(DimensionTooLarge):
        dual_cone(P)
    H = dual_cone(P, vrep=False)
    assert in_cone(H, (1, 2, 3, 4, 5)) and not in_cone(H, (1, 2, 3, 4, -5))


def test_invalid_cones():
    with pytest.raises(NotSpanning):
        Cone([(1, 0), (2, 0)])
    with pytest.raises(NotPointed):
        Cone([(1, 0), (-1, 0), (0, 1)])


# membership and functionals ----------------------------------------------------


def test_in_cone_examples():
    assert in_cone(orthant(2), (0, 0))
    assert not in_cone(orthant(2), (0, 1), strict=True)
    assert in_cone(Cone([(1, 0), (1, 1)]), (2, 1), strict=True)


@given(simplicial_cones(2), vectors(2), vectors(2), vectors(2))
def test_cone_order_is_partial(P, a, b, c):
    le = lambda x, y: in_cone(P, [q - p for p, q in zip(x, y)])  # noqa: E731
    assert le(a, a)
    if le(a, b) and le(b, c):
        assert le(a, c)
    if le(a, b) and le(b, a):
        assert a == b


def test_interior_unit_examples():
    e = interior_unit(dual_cone(orthant(2)))
    assert np.allclose(e.unit, np.array([1, 1]) / math.sqrt(2))
    e = interior_unit(Cone([(0, 1), (1, -1)]))
    assert np.allclose(e.unit, [1, 0])
    e = interior_unit(dual_cone(orthant(2)), hint=(2, 1))
    assert e.parallel(Functional((2, 1)))


def test_interior_unit_rejects_boundary_hint():
    with pytest.raises(NotInteriorFunctional):
        interior_unit(dual_cone(orthant(2)), hint=(1, 0))


def test_slab_radius_examples():
    assert slab_radius(orthant(2), (1, 1), 1) == pytest.approx(math.sqrt(2))
    assert slab_radius(orthant(3), (1, 1, 1), 3) == pytest.approx(3 * math.sqrt(3))
    assert slab_radius(Cone([(1, 0), (1, 1)]), (1, 0), 0) == 0


@given(simplicial_cones(3), st.integers(1, 5))
def test_slab_compactness(P, c):
    e = interior_unit(dual_cone(P))
    R = slab_radius(P, e, c)
    rng = np.random.default_rng(0)
    gens = np.array([[float(x) for x in g] for g in P.rays])
    eu = e.unit
    pts = rng.uniform(0, 1, size=(2000, len(gens))) @ gens
    scale = (pts @ eu).max()
    pts *= 2 * c / scale
    kept = pts[pts @ eu <= c]
    assert len(kept) > 0
    assert np.linalg.norm(kept, axis=1).max() <= R * (1 + 1e-12)


# lattices ----------------------------------------------------------------------


def test_hnf_same_lattice_changed_basis():
    N1 = Lattice([(1, -1, 0), (0, 1, -1)])
    N2 = Lattice([(1, 0, -1), (0, 1, -1)])
    assert lattice_equal(N1, N2)
    assert not lattice_equal(N1, N1.scaled(2))
    assert lattice_equal(N1, N1)


@given(st.lists(vectors(3), min_size=2, max_size=2), unimodular(2))
def test_hnf_basis_change_invariant(cols, U):
    assume(ex.rank(cols) == 2)
    N = Lattice(cols)
    new = [tuple(sum(U[j][i] * cols[j][k] for j in range(2)) for k in range(3)) for i in range(2)]
    assert hnf(Lattice(new)) == hnf(N)


@given(st.lists(vectors(3), min_size=2, max_size=2), st.integers(1, 4))
def test_hnf_rational_scaling(cols, q):
    assume(ex.rank(cols) == 2)
    N = Lattice(cols).scaled(F(1, q))
    assert N.contains(N.columns[0]) and N.contains(N.hnf[0])
    assert lattice_equal(N, Lattice(N.hnf))


def test_dual_lattice_examples():
    D = dual_lattice(Lattice([(0, 1)]), (1, 0))
    assert D.twopi_power == 1 and lattice_equal(D, Lattice([(0, 1)], twopi_power=1))
    D = dual_lattice(Lattice([(0, 3)]), (1, 0))
    assert lattice_equal(D, Lattice([(0, F(1, 3))], twopi_power=1))
    D = dual_lattice(Lattice([(0, 1, 0), (0, 0, 2)]), (1, 0, 0))
    assert lattice_equal(D, Lattice([(0, 1, 0), (0, 0, F(1, 2))], twopi_power=1))
    assert not lattice_equal(D, Lattice([(0, 1, 0), (0, 0, F(1, 2))]))


def test_dual_lattice_needs_orthogonal_functional():
    with pytest.raises(FunctionalNotOrthogonal):
        dual_lattice(Lattice([(1, -1)]), (1, 0))


@given(st.lists(vectors(3), min_size=2, max_size=2))
def test_dual_lattice_pairing_in_2pi_z(cols):
    assume(ex.rank(cols) == 2)
    N = Lattice(cols)
    normal = ex.nullspace([list(c) for c in N.columns], ncols=3)[0]
    D = dual_lattice(N, normal)
    # pairings are 2*pi times these rationals
    for n in N.columns:
        for w in D.columns:
            assert ex.dot(n, w).denominator == 1



@given(st.lists(vectors(3), min_size=2, max_size=2))
def test_dual_lattice_is_an_involution(cols):
    assume(ex.rank(cols) == 2)
    N = Lattice(cols)
    normal = ex.nullspace([list(c) for c in N.columns], ncols=3)[0]
    D = dual_lattice(N, normal)
    assert D.twopi_power == 1
    assert lattice_equal(dual_lattice(D, normal), N)

# quotient chart ------------------------------------------------------------------


def test_quotient_coords_example():
    chart = QuotientChart(Lattice([(0, 1)]), Functional((1, 0)))
    t, u = quotient_coords(chart, (F(7, 2), F(9, 4)))
    assert t == (F(7, 2),) and u == (F(1, 4),)
    assert quotient_coords(chart, (0, 5)) == ((0,), (0,))


@given(vectors(3), st.integers(-4, 4), st.integers(-4, 4))
def test_quotient_coords_well_defined(x, a, b):
    N = Lattice([(1, -1, 0), (0, 1, -1)])
    chart = QuotientChart(N, Functional((1, 1, 1)))
    x = tuple(F(v, 3) for v in x)
    n = N.point((a, b))
    assert chart.coords(x) == chart.coords(tuple(p + q for p, q in zip(x, n)))
    t, u = chart.coords(x)
    y = chart.to_point(t, u)
    assert N.contains(tuple(p - q for p, q in zip(x, y)))
    assert all(0 <= v < 1 for v in u)


def test_coords_float_matches_exact():
    N = Lattice([(1, -1, 0)])
    chart = QuotientChart(N, Functional((1, 1, 1)))
    pts = [(F(1, 3), F(5, 7), F(-2, 5)), (3, 1, 2), (F(-9, 4), 0, 1)]
    tf, uf = chart.coords_float(np.array([[float(v) for v in p] for p in pts]))
    for i, p in enumerate(pts):
        t, u = chart.coords(p)
        assert np.allclose(tf[i], [float(v) for v in t])
        assert np.allclose(uf[i], [float(v) for v in u])
