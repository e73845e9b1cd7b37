import os
import warnings
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ccrlab.classify import generate_family
from ccrlab.cone_lattice import Cone, Functional, Lattice, QuotientChart, orthant
from ccrlab.grid import GridWindow
from ccrlab.pspace import PSpace

settings.register_profile(
    "ccrlab",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ccrlab"))


def family(d, basis, e=None, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return generate_family(d, None, basis, e=e, **kw)


@pytest.fixture(scope="session")
def q2():
    """Quarter plane modulo Z(1,-1) with the auto grid."""
    return family(2, [(1, -1)], e=(1, 1))


@pytest.fixture(scope="session")
def q2_chart():
    return QuotientChart(Lattice([(1, -1)]), Functional((1, 1)))


@pytest.fixture(scope="session")
def q2_window(q2_chart):
    return GridWindow(q2_chart, [F(-3, 4)], [F(5, 4)], F(1, 4), 8)


@pytest.fixture(scope="session")
def q2_space(q2_chart):
    return PSpace(q2_chart, orthant(2))


@pytest.fixture(scope="session")
def half_line():
    """A = [0, oo) in R on the integer grid [0, 7] (8 cells)."""
    chart = QuotientChart(Lattice.zero(1), Functional((1,)))
    A = PSpace(chart, Cone([(1,)]))
    return A, GridWindow(chart, [0], [7], 1, 1)


def _unimodular(rng, r):
    U = np.eye(r, dtype=int)
    for _ in range(3):
        i, j = rng.choice(r, size=2, replace=False) if r > 1 else (0, 0)
        if i != j:
            U[i] += int(rng.integers(-2, 3)) * U[j]
    if rng.random() < 0.5:
        U[0] = -U[0]
    return U


def random_lattices(rng, d, count, bases=None):
    """Rank d-1 rational lattices inside the plane orthogonal to (1, ..., 1).

    Draws ``bases`` distinct coefficient matrices and re-expresses each of the
    ``count`` outputs through a random unimodular change of basis, so equal
    lattices show up with different generators.
    """
    r = d - 1
    perp = np.zeros((r, d), dtype=int)
    for i in range(r):
        perp[i, i], perp[i, i + 1] = 1, -1
    bases = bases or max(2, count // 3)
    coeffs = []
    while len(coeffs) < bases:
        C = rng.integers(-3, 4, size=(r, r))
        if round(np.linalg.det(C)) != 0:
            coeffs.append((C, F(int(rng.choice([1, 1, 2, 3])), int(rng.choice([1, 2, 3])))))
    out = []
    for _ in range(count):
        C, s = coeffs[int(rng.integers(len(coeffs)))]
        rows = _unimodular(rng, r) @ C @ perp
        out.append(Lattice([tuple(s * int(v) for v in row) for row in rows], dim=d))
    return out


def same_lattice_oracle(N1, N2):
    """Mutual integral containment solved with sympy, without normal forms."""
    import sympy

    def inside(A, B):
        if B.rank == 0:
            return A.rank == 0
        Bm = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in c] for c in B.columns]).T
        for c in A.columns:
            x = sympy.Matrix([sympy.Rational(v.numerator, v.denominator) for v in c])
            sol = (Bm.T * Bm).inv() * Bm.T * x
            if Bm * sol != x or any(not v.is_integer for v in sol):
                return False
        return True

    return N1.dim == N2.dim and inside(N1, N2) and inside(N2, N1)


# acceptance summary ----------------------------------------------------------------

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
