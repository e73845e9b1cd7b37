import itertools
import json
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from ccrlab.classify import (
    DENSE,
    TRIVIAL,
    Scenario,
    SpectrumType,
    equivalent,
    generate_family,
    pullback_obstruction,
    spectrum_type,
    type_one_report,
)
from ccrlab.cone_lattice import Cone, Functional, Lattice, lattice_equal, orthant
from ccrlab.errors import (
    IncomparableScenarios,
    IrrationalInput,
    LatticeNotOrthogonal,
    NotInteriorFunctional,
    RankWarning,
    ZeroDirection,
)
from ccrlab.pspace import rng_for

from conftest import family, random_lattices, same_lattice_oracle


def test_equal_lattices_are_equivalent():
    A = family(2, [(2, -2)], e=(1, 1))
    B = family(2, [(-2, 2)], e=(1, 1))
    cert = equivalent(A, B)
    assert cert.equivalent and cert.valid() and cert.witness is None


def test_sublattice_gives_cyclic_witness():
    cert = equivalent(family(2, [(1, -1)], e=(1, 1)), family(2, [(2, -2)], e=(1, 1)))
    assert not cert.equivalent and cert.valid()
    assert cert.witness == (1, -1)
    assert cert.spectrumA == TRIVIAL
    assert cert.spectrumB == SpectrumType("Cyclic", 2)
    doc = json.loads(cert.to_json())
    assert doc["spectrumB"] == "Cyclic(2)"


def test_incomparable_scenarios():
    with pytest.raises(IncomparableScenarios):
        equivalent(family(2, [(1, -1)], e=(1, 1)), family(2, [(1, -2)], e=(2, 1)))
    with pytest.raises(IncomparableScenarios):
        equivalent(Lattice([(1, -1)]), Lattice([(1, -1, 0)]))


def test_spectrum_types():
    N = Lattice([(1, -1)])
    assert spectrum_type((1, -1), N) == TRIVIAL
    assert spectrum_type((F(1, 3), F(-1, 3)), N) == SpectrumType("Cyclic", 3)
    assert spectrum_type((1, 0), N) == DENSE
    assert spectrum_type((0, 0), N) == TRIVIAL
    assert spectrum_type((1, 1), Lattice.zero(2)) == DENSE
    with pytest.raises(IrrationalInput):
        spectrum_type((0.1, -0.1), N)


@given(st.integers(-12, 12), st.integers(1, 12), st.integers(1, 6))
def test_spectrum_order_is_denominator(p, q, s):
    # x = (p/q) (1,-1) against N = Z s(1,-1): pairing with the dual basis is p/(q s)
    N = Lattice([(s, -s)])
    x = (F(p, q), F(-p, q))
    order = F(p, q * s).denominator
    st_ = spectrum_type(x, N)
    assert st_ == (TRIVIAL if order == 1 else SpectrumType("Cyclic", order))


@pytest.mark.parametrize("d", [2, 3])
def test_classes_match_independent_oracle(d):
    lats = random_lattices(rng_for(5, d), d, 12, bases=4)
    e = (1,) * d
    S = [Scenario(orthant(d), e, N) for N in lats]
    for i, j in itertools.combinations(range(len(S)), 2):
        cert = equivalent(S[i], S[j])
        assert cert.valid()
        assert cert.equivalent == same_lattice_oracle(lats[i], lats[j]) == lattice_equal(lats[i], lats[j])


def test_family_is_pairwise_inequivalent():
    lats = [Lattice([(1 + F(j, 7), -1 - F(j, 7))]) for j in range(12)]
    for N1, N2 in itertools.combinations(lats, 2):
        cert = equivalent(N1, N2)
        assert not cert.equivalent and cert.valid()


@pytest.mark.parametrize("d,basis", [(2, [(1, -1)]), (3, [(1, -1, 0), (0, 1, -1)]), (3, [(2, -1, -1), (0, 3, -3)])])
def test_pullback_obstruction(d, basis):
    S = family(d, basis, e=(1,) * d)
    rng = rng_for(1, d)
    for _ in range(10):
        mu = [int(v) for v in rng.integers(-4, 5, size=d)]
        if not any(mu):
            continue
        ob = pullback_obstruction(S, mu)
        assert ob.valid()
        assert sum(F(a) * b for a, b in zip(mu, ob.witness)) == 0
        assert not S.lattice.contains(ob.witness)
        assert not ob.spectrum.trivial


def test_pullback_zero_direction(q2):
    with pytest.raises(ZeroDirection):
        pullback_obstruction(q2, [0, 0])


def test_type_one(q2):
    rep = type_one_report(q2)
    assert rep["typeI"] and rep["irreducible"] and rep["commutantIsScalar"]
    assert rep["hasNonzeroCocycle"] and rep["cocycleDim"] == 1


def test_type_one_multiplicity_two():
    rep = type_one_report(family(2, [(1, -1)], e=(1, 1), k=2))
    assert rep["typeI"] and rep["commutantDim"] == 4 and not rep["commutantIsScalar"]


def test_orthant_has_no_cocycle():
    rep = type_one_report(family(2, [], e=(1, 1)))
    assert not rep["hasNonzeroCocycle"] and not rep["typeI"]


def test_scenario_validation():
    with pytest.raises(LatticeNotOrthogonal):
        Scenario(orthant(2), (1, 1), Lattice([(1, 0)]))
    with pytest.raises(NotInteriorFunctional):
        Scenario(orthant(2), (1, -1), Lattice([(1, 1)]))
    with pytest.raises(IrrationalInput):
        Scenario(orthant(2), (1, 1), Lattice([(1, -1)], twopi_power=1))
    with pytest.raises(RankWarning):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            generate_family(2, "orthant", [], e=Functional((1, 1)))


def test_auto_points_are_interior_and_ordered(q2):
    a, b = q2.point_a, q2.point_b
    assert all(v > 0 for v in a.vector)
    assert all(y >= x for x, y in zip(a.vector, b.vector)) and a != b


def test_lattice_examples_without_functional():
    N1, N2 = Lattice([(0, 1)]), Lattice([(0, F(1, 2))])
    cert = equivalent(N1, N2)
    assert not cert.equivalent and cert.valid()
    assert cert.witness == (0, F(1, 2))
    assert {str(cert.spectrumA), str(cert.spectrumB)} == {"Trivial", "Cyclic(2)"}
    ob = pullback_obstruction(N1, (1, 0))
    assert ob.witness == (0, F(1, 2)) and ob.valid()
    assert str(ob.spectrum) == "Cyclic(2)" and ob.one_parameter == TRIVIAL


def test_rank_one_classes_match_normal_forms():
    lats = random_lattices(rng_for(8, 0), 2, 100, bases=12)
    for N1, N2 in itertools.combinations(lats, 2):
        cert = equivalent(N1, N2)
        assert cert.equivalent == (N1.hnf == N2.hnf)
        assert cert.valid()


def test_equivalence_is_an_equivalence_relation():
    lats = random_lattices(rng_for(9, 0), 3, 9, bases=3)
    eq = {(i, j): equivalent(lats[i], lats[j]).equivalent for i in range(9) for j in range(9)}
    for i in range(9):
        assert eq[i, i]
    for i, j, k in itertools.product(range(9), repeat=3):
        assert eq[i, j] == eq[j, i]
        if eq[i, j] and eq[j, k]:
            assert eq[i, k]


@given(st.integers(-20, 20), st.integers(1, 9), st.integers(-5, 5), st.integers(-5, 5))
def test_spectrum_is_lattice_periodic(p, q, n1, n2):
    N = Lattice([(1, -1, 0), (0, 2, -2)])
    x = (F(p, q), F(-p, q) + F(1, 3), F(-1, 3))
    shifted = tuple(a + b for a, b in zip(x, N.point((n1, n2))))
    assert spectrum_type(shifted, N) == spectrum_type(x, N)


def test_profile_corroboration_is_labelled():
    from ccrlab.classify import profile_corroboration

    A = family(2, [(1, -1)], e=(1, 1))
    B = family(2, [(2, -2)], e=(1, 1))
    rep = profile_corroboration(A, B)
    assert rep["heuristic"] and rep["differ"]
    # doubling the lattice doubles the quotient measure
    assert rep["profileB"] == pytest.approx([2 * v for v in rep["profileA"]])
    assert not profile_corroboration(B, family(2, [(-2, 2)], e=(1, 1)))["differ"]


def test_spectrum_third():
    assert spectrum_type((0, F(1, 3)), Lattice([(0, 1)])) == SpectrumType("Cyclic", 3)
    assert spectrum_type((1, 0), Lattice([(1, -1)]), e=(1, 1)) == DENSE
