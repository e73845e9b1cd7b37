"""Small exact linear algebra over the rationals (``fractions.Fraction``).

Matrices are lists of rows; vectors are tuples.  Everything here is meant for
the tiny systems that show up in cone and lattice bookkeeping (d <= ~6), so
clarity wins over speed.
"""

from __future__ import annotations

import math
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from numbers import Integral, Rational

import numpy as np

from .errors import IrrationalInput


def as_fraction(value, allow_float=True) -> Fraction:
    """Convert ``value`` to a Fraction.

    Accepts ints, Fractions, strings like ``"3/4"``, ``"-2"`` or ``"0.125"``
    and (unless ``allow_float`` is false) binary floats, converted exactly.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise IrrationalInput(f"boolean is not a rational number: {value!r}")
    if isinstance(value, (Integral, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        s = value.strip()
        try:
            if "/" in s:
                p, q = s.split("/")
                return Fraction(int(p), int(q))
            return Fraction(Decimal(s))
        except (ValueError, ZeroDivisionError, InvalidOperation) as exc:
            raise IrrationalInput(f"cannot parse rational from {value!r}") from exc
    if isinstance(value, (float, np.floating)):
        if not allow_float:
            raise IrrationalInput(f"inexact float input {value!r}; pass a rational")
        if not math.isfinite(value):
            raise IrrationalInput(f"non-finite value {value!r}")
        return Fraction(float(value))
    raise IrrationalInput(f"unsupported numeric type {type(value).__name__}")


def vec(values, allow_float=True) -> tuple:
    return tuple(as_fraction(v, allow_float) for v in values)


def mat(rows, allow_float=True) -> list:
    return [list(vec(r, allow_float)) for r in rows]


def dot(u, v) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def transpose(a):
    return [list(col) for col in zip(*a)] if a else []


def matmul(a, b):
    bt = transpose(b)
    return [[dot(row, col) for col in bt] for row in a]


def matvec(a, v):
    return tuple(dot(row, v) for row in a)


def rref(a):
    """Reduced row echelon form.  Returns ``(R, pivot_columns)``."""
    m = mat(a)
    if not m:
        return m, []
    nrows, ncols = len(m), len(m[0])
    pivots = []
    row = 0
    for col in range(ncols):
        piv = next((i for i in range(row, nrows) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        p = m[row][col]
        m[row] = [x / p for x in m[row]]
        for i in range(nrows):
            if i != row and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[row])]
        pivots.append(col)
        row += 1
        if row == nrows:
            break
    return m, pivots


def rank(a) -> int:
    if not a:
        return 0
    return len(rref(a)[1])


def nullspace(a, ncols=None):
    """Basis of {x : a x = 0} as a list of tuples."""
    if not a:
        return [tuple(Fraction(int(i == j)) for i in range(ncols)) for j in range(ncols)]
    r, pivots = rref(a)
    n = len(a[0])
    free = [j for j in range(n) if j not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * n
        x[f] = Fraction(1)
        for i, p in enumerate(pivots):
            x[p] = -r[i][f]
        basis.append(tuple(x))
    return basis


def solve(a, b):
    """Solve ``a x = b`` exactly.  Returns a solution tuple or None if inconsistent.

    For underdetermined systems the free variables are set to zero.
    """
    n = len(a[0])
    aug = [list(row) + [bi] for row, bi in zip(mat(a), vec(b))]
    r, pivots = rref(aug)
    if n in pivots:
        return None
    x = [Fraction(0)] * n
    for i, p in enumerate(pivots):
        x[p] = r[i][n]
    return tuple(x)


def inverse(a):
    n = len(a)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat(a))]
    r, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in r]


def det(a) -> Fraction:
    m = mat(a)
    n = len(m)
    out = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            out = -out
        out *= m[c][c]
        for i in range(c + 1, n):
            f = m[i][c] / m[c][c]
            if f:
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return out


def common_denominator(values) -> int:
    d = 1
    for v in values:
        d = d * v.denominator // math.gcd(d, v.denominator)
    return d


def primitive(v) -> tuple:
    """Scale a rational vector to the primitive integer vector on the same ray."""
    d = common_denominator(v)
    ints = [int(x * d) for x in v]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    if g == 0:
        return tuple(Fraction(0) for _ in v)
    return tuple(Fraction(x // g) for x in ints)


def is_integral(v) -> bool:
    return all(x.denominator == 1 for x in v)


def to_float(v) -> np.ndarray:
    return np.array([float(x) for x in v], dtype=float)


def fmt(x: Fraction) -> str:
    """Canonical ``p/q`` string used by serializers."""
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
