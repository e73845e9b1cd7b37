import numpy as np
import pytest
from hypothesis import given, strategies as st

from ccrlab.errors import NotConditionallyPSD, UnsafeInteriorPoint
from ccrlab.grid import as_shift
from ccrlab.index import CovMatrix, UnitParams, covariance, gns_rank, index_of, random_units
from ccrlab.pspace import diff_count, rng_for

from conftest import family


def _point(S, *coords):
    return as_shift(S.window, coords)


def test_lattice_quotient_has_index_one(q2):
    rep = index_of(q2)
    assert rep.index == 1 and rep.independence and rep.stabilized
    assert rep.cocycleDim == 1
    assert not rep.degenerate


@pytest.mark.parametrize("k", [2, 3])
def test_index_tracks_multiplicity(k):
    S = family(2, [(1, -1)], e=(1, 1), k=k)
    rep = index_of(S)
    assert rep.index == rep.cocycleDim == k


def test_character_only_units_have_rank_zero(q2):
    units = random_units(8, 2, 1, rng_for(0, 20), vacuum=True)
    C = covariance(units, q2.point_a, q2.pspace, q2.window)
    assert gns_rank(C) == 0


def test_duplicate_units_do_not_change_rank(q2):
    units = random_units(5, 2, 1, rng_for(0, 21))
    C1 = covariance(units, q2.point_a, q2.pspace, q2.window)
    C2 = covariance(units + units[:3], q2.point_a, q2.pspace, q2.window)
    assert gns_rank(C1) == gns_rank(C2) == 1


def test_covariance_entry_formula(q2):
    u = UnitParams(np.array([1 + 2j, -1j]), np.array([0.5 + 0.5j]))
    v = UnitParams(np.array([0.3, 0.2]), np.array([-1.0]))
    C = covariance([u, v], q2.point_a, q2.pspace, q2.window)
    a = np.array([float(c) for c in q2.point_a.vector])
    want = u.lam @ a + np.conj(v.lam @ a) + u.coef[0] * np.conj(v.coef[0]) * C.measure
    assert C.entries[0, 1] == pytest.approx(want, abs=1e-12)


def test_scaling_law(q2):
    # c_{na} restricted to sum-zero weights scales like n
    a = q2.point_a
    mu1 = diff_count(q2.pspace, a, q2.window) * q2.window.cell_volume
    for n in (2, 3):
        na = as_shift(q2.window, [n * c for c in a.vector])
        mun = diff_count(q2.pspace, na, q2.window) * q2.window.cell_volume
        assert abs(mun - n * mu1) <= q2.window.cell_volume


def test_norm_sandwich(q2):
    a = q2.point_a
    b = q2.point_b
    A, w = q2.pspace, q2.window
    units = random_units(6, 2, 1, rng_for(0, 22))
    Ca, Cb = covariance(units, a, A, w), covariance(units, b, A, w)
    ba = as_shift(w, [y - x for x, y in zip(a.vector, b.vector)])
    mu_ba = diff_count(A, ba, w) * w.cell_volume
    coef = np.array([u.coef[0] for u in units])
    rng = rng_for(0, 23)
    for _ in range(10):
        f = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        f -= f.mean()
        na, nb = Ca.seminorm_sq(f), Cb.seminorm_sq(f)
        assert na == pytest.approx(abs(f @ coef) ** 2 * Ca.measure, rel=1e-9)
        assert na <= nb * (1 + 1e-12)
        assert nb <= na * (1 + mu_ba / Ca.measure) * (1 + 1e-12)


def test_seminorm_rejects_nonzero_sum(q2):
    C = covariance(random_units(3, 2, 1, rng_for(0, 24)), q2.point_a, q2.pspace, q2.window)
    with pytest.raises(ValueError):
        C.seminorm_sq([1, 0, 0])


def test_degenerate_points_are_flagged(q2):
    rep = index_of(q2, a=q2.point_a, b=q2.point_a)
    assert rep.degenerate and rep.index == 1


def test_boundary_point_is_refused(q2):
    with pytest.raises(UnsafeInteriorPoint):
        covariance(random_units(3, 2, 1, rng_for(0, 25)), _point(q2, 1, 0), q2.pspace, q2.window)


def test_orthant_refuses_with_index_zero():
    S = family(2, [], e=(1, 1))
    rep = index_of(S)
    assert rep.refused and rep.index == 0 and rep.growth == "Linear"
    assert rep.cocycleDim == 0


def test_non_psd_is_reported():
    C = CovMatrix([None] * 3, None, np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex), 1.0, 1.0)
    with pytest.raises(NotConditionallyPSD):
        gns_rank(C)


@given(st.integers(0, 10_000))
def test_gram_is_psd_for_random_units(seed):
    from ccrlab.pspace import PSpace
    from ccrlab.cone_lattice import Cone, Functional, Lattice, QuotientChart
    from ccrlab.grid import GridWindow
    from fractions import Fraction as F

    chart = QuotientChart(Lattice([(1, -1)]), Functional((1, 1)))
    A = PSpace(chart, Cone([(1, 0), (0, 1)]))
    w = GridWindow(chart, [F(-3, 4)], [F(5, 4)], F(1, 4), 8)
    units = random_units(5, 2, 2, rng_for(seed, 0))
    C = covariance(units, (F(1, 4), F(1, 4)), A, w)
    assert C.eigenvalues().min() >= -1e-9 * C.scale()
    assert gns_rank(C) <= 2
