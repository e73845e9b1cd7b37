"""Symmetric Fock space: exponential vectors, Weyl operators and units.

Inner products are linear in the first argument: <f|g> = sum f_i conj(g_i).
With this convention

    W(xi) e(eta) = exp(-|xi|^2/2 - <eta|xi>) e(xi + eta)
    W(xi) W(eta) = exp(i Im<xi|eta>) W(xi + eta).

Two independent paths are provided.  The kernel path evaluates identities on
exponential vectors through <e(f)|e(g)> = exp(<f|g>) and never truncates.  The
matrix path builds a† and a on the span of multi-indices of total degree <= n
and is used to validate the Weyl calculus itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.special import gammainc, gammaln

from .errors import TruncationGuard, UnsafeShift
from .shiftrep import AdditiveCocycle, ShiftRep

KERNEL_RTOL = 1e-10


def inner(f, g, weight=1.0) -> complex:
    return complex(np.vdot(np.asarray(g), np.asarray(f))) * weight


def exp_inner(f, g, weight=1.0) -> complex:
    """<e(f)|e(g)> = exp(<f|g>)."""
    return complex(np.exp(inner(f, g, weight)))


def tail_bound(norm_sq: float, n: int) -> float:
    """sum_{j > n} x^j / j! for x = |xi|^2, i.e. |e(xi) - e_n(xi)|^2."""
    x = float(norm_sq)
    if x == 0:
        return 0.0
    return float(math.exp(x) * gammainc(n + 1, x))


class TruncatedFock:
    """Multi-indices alpha in N^m with |alpha| <= n, ordered by degree then lexicographically."""

    def __init__(self, m: int, n: int):
        if m < 1 or n < 0:
            raise ValueError("need m >= 1 and n >= 0")
        self.m, self.n = int(m), int(n)

    @cached_property
    def basis(self) -> list:
        out = []
        for deg in range(self.n + 1):
            for combo in itertools.combinations_with_replacement(range(self.m), deg):
                alpha = [0] * self.m
                for i in combo:
                    alpha[i] += 1
                out.append(tuple(alpha))
        return out

    @cached_property
    def index(self) -> dict:
        return {a: i for i, a in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    @staticmethod
    def expected_dim(m, n) -> int:
        return sum(math.comb(m + j - 1, j) for j in range(n + 1))

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([sum(a) for a in self.basis])

    @cached_property
    def creation(self) -> list:
        """a†_i as sparse matrices (states pushed past level n are dropped)."""
        mats = []
        for i in range(self.m):
            rows, cols, vals = [], [], []
            for col, alpha in enumerate(self.basis):
                if sum(alpha) == self.n:
                    continue
                beta = list(alpha)
                beta[i] += 1
                rows.append(self.index[tuple(beta)])
                cols.append(col)
                vals.append(math.sqrt(alpha[i] + 1))
            mats.append(sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim)))
        return mats

    @cached_property
    def annihilation(self) -> list:
        return [a.T.tocsr() for a in self.creation]

    def sub_block(self, level: int) -> np.ndarray:
        return np.nonzero(self.degrees <= level)[0]

    def guard(self, xi):
        nsq = float(np.vdot(xi, xi).real)
        if nsq > self.n / 3:
            raise TruncationGuard(f"|xi|^2 = {nsq:.3g} exceeds n/3 = {self.n / 3:.3g}")
        return nsq

    def __repr__(self):
        return f"TruncatedFock(m={self.m}, n={self.n}, dim={self.dim})"


def _as_vec(F: TruncatedFock, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    if xi.shape != (F.m,):
        raise ValueError(f"one-particle vector must have length {F.m}")
    return xi


def exp_vector(F: TruncatedFock, xi) -> np.ndarray:
    """Truncated exponential vector with components xi^alpha / sqrt(alpha!)."""
    xi = _as_vec(F, xi)
    F.guard(xi)
    out = np.empty(F.dim, dtype=complex)
    for k, alpha in enumerate(F.basis):
        v = complex(1.0)
        for x, a in zip(xi, alpha):
            if a:
                v *= x**a
        lf = sum(gammaln(a + 1) for a in alpha)
        out[k] = v * math.exp(-0.5 * lf)
    return out


def generator(F: TruncatedFock, xi) -> sp.csr_matrix:
    """a†(xi) - a(xi) with a†(xi) = sum xi_i a†_i and a(xi) = sum conj(xi_i) a_i."""
    xi = _as_vec(F, xi)
    g = sp.csr_matrix((F.dim, F.dim), dtype=complex)
    for x, ad, a in zip(xi, F.creation, F.annihilation):
        g = g + x * ad - np.conj(x) * a
    return g


def weyl_matrix(F: TruncatedFock, xi) -> np.ndarray:
    xi = _as_vec(F, xi)
    F.guard(xi)
    return scipy.linalg.expm(generator(F, xi).toarray())


@dataclass
class WeylReport:
    action: float
    ccr: float
    unitarity: float
    bound: float
    block_bound: float
    phase: complex

    def within(self, factor=10.0) -> bool:
        return (
            self.action <= factor * self.bound
            and self.ccr <= factor * self.block_bound
            and self.unitarity <= factor * self.block_bound
        )

    def as_dict(self):
        return {
            "actionResidual": self.action,
            "ccrResidual": self.ccr,
            "unitarityResidual": self.unitarity,
            "tailBound": self.bound,
            "blockTailBound": self.block_bound,
            "phase": [self.phase.real, self.phase.imag],
        }


def action_residual(F: TruncatedFock, xi, eta, level=None):
    """Max-norm of W(xi)e(eta) - exp(-|xi|^2/2 - <eta|xi>) e(xi+eta) on degrees <= level.

    Returns (residual, combined tail bound).
    """
    xi, eta = _as_vec(F, xi), _as_vec(F, eta)
    level = F.n if level is None else level
    W = weyl_matrix(F, xi)
    lhs = W @ exp_vector(F, eta)
    coef = np.exp(-0.5 * np.vdot(xi, xi).real - inner(eta, xi))
    rhs = coef * exp_vector(F, xi + eta)
    idx = F.sub_block(level)
    res = float(np.abs(lhs[idx] - rhs[idx]).max())
    return res, combined_bound(F, xi, eta)


def combined_bound(F: TruncatedFock, xi, eta, level=None) -> float:
    """Sum of the tail norms of e(xi), e(eta), e(xi+eta) past ``level`` (default n)."""
    level = F.n if level is None else level
    xi, eta = np.asarray(xi), np.asarray(eta)
    parts = [tail_bound(np.vdot(v, v).real, level) for v in (xi, eta, xi + eta)]
    return float(sum(math.sqrt(p) for p in parts))


def block_bound(F: TruncatedFock, xi, eta) -> float:
    """Tail bound for matrix entries between states of degree <= n/2.

    Such states only have n - n/2 levels of headroom before the cut, so the
    exponential tails are taken past that headroom.
    """
    return combined_bound(F, xi, eta, level=F.n - F.n // 2)


def verify_weyl(F: TruncatedFock, xi, eta) -> WeylReport:
    """CCR and unitarity residuals on the sub-block of degrees <= n/2."""
    xi, eta = _as_vec(F, xi), _as_vec(F, eta)
    for v in (xi, eta, xi + eta):
        F.guard(v)
    Wx, We, Ws = weyl_matrix(F, xi), weyl_matrix(F, eta), weyl_matrix(F, xi + eta)
    phase = complex(np.exp(1j * inner(xi, eta).imag))
    idx = F.sub_block(F.n // 2)
    blk = np.ix_(idx, idx)
    ccr = float(np.abs((Wx @ We)[blk] - phase * Ws[blk]).max())
    uni = float(np.abs((Wx.conj().T @ Wx)[blk] - np.eye(len(idx))).max())
    act, bound = action_residual(F, xi, eta)
    return WeylReport(act, ccr, uni, bound, block_bound(F, xi, eta), phase)


# units -------------------------------------------------------------------------


@dataclass
class UnitSpec:
    """A unit x -> chi(x) T_{e(xi_x)} given by a character exponent and a cocycle.

    ``character`` and ``cocycle`` may be overridden by arbitrary callables for
    negative controls.
    """

    lam: np.ndarray
    cocycle: Callable
    character: Optional[Callable] = field(default=None)

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=complex).reshape(-1)

    def chi(self, x) -> complex:
        if self.character is not None:
            return complex(self.character(x))
        v = np.array([float(c) for c in x.vector], dtype=float)
        return complex(np.exp(np.dot(self.lam, v)))

    @property
    def coefficient(self) -> np.ndarray:
        if isinstance(self.cocycle, AdditiveCocycle):
            return self.cocycle.coefficient
        raise AttributeError("custom cocycle has no coefficient vector")


def vacuum_unit(R: ShiftRep, lam=None) -> UnitSpec:
    from .shiftrep import canonical_cocycle

    lam = np.zeros(R.pspace.dim) if lam is None else lam
    return UnitSpec(lam, canonical_cocycle(R, np.zeros(R.k)))


@dataclass
class UnitCheckReport:
    semigroup: float
    intertwining: float
    probes: int

    def as_dict(self):
        return {"semigroupResidual": self.semigroup, "intertwiningResidual": self.intertwining, "probes": self.probes}


def _rel(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def probe_support(R: ShiftRep, x, y) -> np.ndarray:
    """Member cells where probes keep every identity inside the window."""
    return R.mask & R.forward_safe(x) & R.forward_safe(y) & R.forward_safe(x + y)


def random_probes(R: ShiftRep, x, y, count, rng, scale=1.0) -> list:
    """Random complex probes supported on ``probe_support`` with |f|^2 ~ scale."""
    cells = R.expand(probe_support(R, x, y))
    out = []
    for _ in range(count):
        v = (rng.standard_normal(R.dim) + 1j * rng.standard_normal(R.dim)) * cells
        nrm = math.sqrt(max(np.vdot(v, v).real * R.window.cell_volume, 1e-300))
        out.append(v * math.sqrt(scale) / nrm)
    return out


def unit_weak_check(R: ShiftRep, u: UnitSpec, x, y, probes) -> UnitCheckReport:
    """Semigroup law and intertwining of a unit, tested on exponential vectors.

    u_x e(eta) = chi(x) e(xi_x + V_x eta) and
    W(zeta) e(eta) = exp(-|zeta|^2/2 - <eta|zeta>) e(zeta + eta).
    """
    x, y = R.snap(x), R.snap(y)
    s = x + y
    allowed = R.expand(probe_support(R, x, y))
    for p in probes:
        if np.any(np.asarray(p)[~allowed] != 0):
            raise UnsafeShift("probe has support outside the jointly safe cells")
    vol = R.window.cell_volume
    Vx, Vy, Vs = R.shift(x), R.shift(y), R.shift(s)
    xi_x, xi_y, xi_s = u.cocycle(x), u.cocycle(y), u.cocycle(s)
    chi_x, chi_y, chi_s = u.chi(x), u.chi(y), u.chi(s)

    semi = 0.0
    for eta, zeta in itertools.product(probes, repeat=2):
        lhs = chi_s * exp_inner(xi_s + Vs @ eta, zeta, vol)
        rhs = chi_x * chi_y * exp_inner(xi_x + Vx @ (xi_y + Vy @ eta), zeta, vol)
        semi = max(semi, _rel(lhs, rhs))

    inter = 0.0
    for eta, zeta, rho in itertools.product(probes, repeat=3):
        vz = Vx @ zeta
        a = xi_x + Vx @ eta
        lhs = chi_x * np.exp(-0.5 * inner(vz, vz, vol).real - inner(a, vz, vol)) * exp_inner(vz + a, rho, vol)
        rhs = (
            np.exp(-0.5 * inner(zeta, zeta, vol).real - inner(eta, zeta, vol))
            * chi_x
            * exp_inner(xi_x + Vx @ (zeta + eta), rho, vol)
        )
        inter = max(inter, _rel(complex(lhs), complex(rhs)))
    return UnitCheckReport(semi, inter, len(probes))
