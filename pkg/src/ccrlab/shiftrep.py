"""Grid discretization of the shift isometries (V_x f)(p) = f(p - x) 1_A(p - x).

Real directions are truncated at the window edge, so every operator identity
is checked only on the cells whose preimages stay inside the window ("safe"
cells).  On those cells the matrices are exact 0/1 partial permutations and
the identities hold bit for bit.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _exact as ex
from .cone_lattice import in_cone
from .errors import InfiniteMultiplicity, SampleOffGrid, Unstable, WindowChartMismatch
from .grid import GridShift, GridWindow, as_shift, window_ladder
from .pspace import PSpace

SVD_RTOL = 1e-9
GROWTH_KEEP = 0.5
DENSE_SYLVESTER_MAX = 1024

__all__ = [
    "GridWindow",
    "GridShift",
    "window_ladder",
    "ShiftRep",
    "build_rep",
    "verify_rep",
    "AdditiveCocycle",
    "canonical_cocycle",
    "cocycle_residual",
    "cocycle_space_dim",
    "commutant_dim",
    "default_generators",
    "export_coo",
]


class ShiftRep:
    """Shift isometries of a P-space on a grid window, with multiplicity ``k``.

    Vectors live on all window cells (cell-major, multiplicity index minor);
    functions of L^2(A) are the ones supported on member cells.
    """

    def __init__(self, pspace: PSpace, window: GridWindow, k=1):
        if isinstance(k, str) or (isinstance(k, float) and math.isinf(k)):
            raise InfiniteMultiplicity("only finite multiplicity is supported")
        if int(k) != k or k < 1:
            raise ValueError("multiplicity must be a positive integer")
        if not window.compatible(pspace.chart):
            raise WindowChartMismatch("window chart differs from the P-space chart")
        self.pspace = pspace
        self.window = window
        self.k = int(k)
        self._cache = {}

    @property
    def ncells(self) -> int:
        return self.window.ncells

    @property
    def dim(self) -> int:
        return self.window.ncells * self.k

    @property
    def mask(self) -> np.ndarray:
        return self.pspace.mask(self.window)

    def snap(self, x) -> GridShift:
        return as_shift(self.window, x)

    def in_P(self, x) -> bool:
        return in_cone(self.pspace.cone, self.snap(x).vector)

    def preimage(self, x):
        """Flat index of p - x for every cell p (-1 when it leaves the window)."""
        x = self.snap(x)
        I, J = self.window.indices
        s, m = x.offsets
        return self.window.flat(I - s[None, :], J - m[None, :])

    def image(self, x):
        """Flat index of q + x for every cell q (-1 when it leaves the window)."""
        x = self.snap(x)
        I, J = self.window.indices
        s, m = x.offsets
        return self.window.flat(I + s[None, :], J + m[None, :])

    def safe_region(self, x) -> np.ndarray:
        """Cells p with p - x inside the window."""
        return self.preimage(x) >= 0

    def forward_safe(self, x) -> np.ndarray:
        """Cells q with q + x inside the window."""
        return self.image(x) >= 0

    def shifted_mask(self, x) -> np.ndarray:
        return self.pspace.shifted_mask(self.window, self.snap(x))

    def base_shift(self, x) -> sp.csr_matrix:
        """Multiplicity-one shift matrix."""
        x = self.snap(x)
        key = (x.s, x.m)
        if key not in self._cache:
            pre = self.preimage(x)
            ok = pre >= 0
            ok[ok] = self.mask[pre[ok]]
            rows = np.nonzero(ok)[0]
            cols = pre[ok]
            n = self.ncells
            mat = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
            self._cache[key] = mat
        return self._cache[key]

    def shift(self, x) -> sp.csr_matrix:
        base = self.base_shift(x)
        if self.k == 1:
            return base
        return sp.kron(base, sp.identity(self.k, format="csr"), format="csr")

    def expand(self, cell_values: np.ndarray) -> np.ndarray:
        """Cell indicator/weights -> vector on cells x multiplicity."""
        return np.repeat(np.asarray(cell_values), self.k)

    def inner(self, f, g) -> complex:
        """Grid L^2 inner product, linear in the first argument."""
        return complex(np.vdot(g, f)) * self.window.cell_volume

    def __repr__(self):
        return f"ShiftRep({self.pspace!r}, {self.window!r}, k={self.k})"


def build_rep(A: PSpace, window: GridWindow, k=1) -> ShiftRep:
    return ShiftRep(A, window, k)


def _max_abs(m) -> float:
    if sp.issparse(m):
        m = m.tocoo()
        return float(np.abs(m.data).max()) if m.nnz else 0.0
    m = np.asarray(m)
    return float(np.abs(m).max()) if m.size else 0.0


def _rows(mask: np.ndarray):
    return sp.diags(mask.astype(float), format="csr")


@dataclass
class RepDiagnostics:
    isometry: float = 0.0
    semigroup: float = 0.0
    range_projection: float = 0.0
    purity_trace: list = field(default_factory=list)
    purity_hit: int | None = None
    purity_monotone: bool = True
    checked_pairs: int = 0

    @property
    def exact(self) -> bool:
        return self.isometry == 0 and self.semigroup == 0 and self.range_projection == 0

    def as_dict(self):
        return {
            "isometryResidual": self.isometry,
            "semigroupResidual": self.semigroup,
            "rangeProjectionResidual": self.range_projection,
            "purityTrace": list(self.purity_trace),
            "purityHit": self.purity_hit,
            "purityMonotone": self.purity_monotone,
            "checkedPairs": self.checked_pairs,
        }


def _isometry_residual(R: ShiftRep, x) -> float:
    V = R.base_shift(x)
    cols = R.forward_safe(x)
    gram = (V.T @ V).tocsr()
    target = _rows(R.mask)
    return _max_abs((gram - target) @ _rows(cols))


def _semigroup_residual(R: ShiftRep, x, y) -> float:
    rows = R.safe_region(x) & R.safe_region(x + y)
    lhs = R.base_shift(x) @ R.base_shift(y)
    rhs = R.base_shift(x + y)
    return _max_abs(_rows(rows) @ (lhs - rhs))


def _range_residual(R: ShiftRep, x) -> float:
    V = R.base_shift(x)
    E = (V @ V.T).tocsr()
    rows = R.safe_region(x)
    direct = R.mask & R.shifted_mask(x)
    return _max_abs(_rows(rows) @ (E - _rows(direct)))


def purity_trace(R: ShiftRep, a, cell=None, max_steps=None):
    """Norms of E_{na} f for f the indicator of one member cell.

    Stops after the norm reaches 0 or when n*a would leave the window.
    Returns (trace, first n with zero norm or None).
    """
    a = R.snap(a)
    if cell is None:
        members = np.nonzero(R.mask)[0]
        cell = int(members[len(members) // 2])
    I, J = R.window.indices
    i0, j0 = I[cell], J[cell]
    s, m = a.offsets
    trace = []
    n = 0
    while max_steps is None or n <= max_steps:
        Ip = (i0 - n * s)[None, :]
        if np.any(Ip < 0) or np.any(Ip >= np.asarray(R.window.counts)):
            break
        inside = bool(R.pspace.mask_at(R.window, Ip, (j0 - n * m)[None, :])[0])
        trace.append(1.0 if inside else 0.0)
        if not inside:
            return trace, n
        n += 1
    return trace, None


def verify_rep(R: ShiftRep, samples, purity_shift=None) -> RepDiagnostics:
    shifts = []
    for x in samples:
        try:
            g = R.snap(x)
        except SampleOffGrid:
            raise
        if not in_cone(R.pspace.cone, g.vector):
            raise SampleOffGrid(f"sample {g} is not in P")
        shifts.append(g)
    diag = RepDiagnostics()
    for x in shifts:
        diag.isometry = max(diag.isometry, _isometry_residual(R, x))
        diag.range_projection = max(diag.range_projection, _range_residual(R, x))
    for x, y in itertools.product(shifts, repeat=2):
        diag.semigroup = max(diag.semigroup, _semigroup_residual(R, x, y))
        diag.checked_pairs += 1
    a = purity_shift if purity_shift is not None else (shifts[0] if shifts else None)
    if a is not None:
        trace, hit = purity_trace(R, a)
        diag.purity_trace = trace
        diag.purity_hit = hit
        diag.purity_monotone = all(u >= v for u, v in zip(trace, trace[1:]))
    return diag


# additive cocycles -------------------------------------------------------------


@dataclass(frozen=True)
class AdditiveCocycle:
    """x -> lambda (x) 1_{A minus (x + A)} on the grid."""

    rep: ShiftRep
    coefficient: np.ndarray

    def support(self, x) -> np.ndarray:
        return self.rep.mask & ~self.rep.shifted_mask(x)

    def __call__(self, x) -> np.ndarray:
        ind = self.support(x).astype(complex)
        return np.kron(ind, self.coefficient)

    def __add__(self, other: "AdditiveCocycle") -> "AdditiveCocycle":
        return AdditiveCocycle(self.rep, self.coefficient + other.coefficient)


def canonical_cocycle(R: ShiftRep, lam) -> AdditiveCocycle:
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if lam.shape != (R.k,):
        raise ValueError(f"coefficient must have length k={R.k}")
    return AdditiveCocycle(R, lam)


def cocycle_residual(c: AdditiveCocycle, x, y) -> float:
    """max |xi_{x+y} - xi_x - V_x xi_y| over cells where every term is defined."""
    R = c.rep
    x, y = R.snap(x), R.snap(y)
    rows = R.expand(R.safe_region(x) & R.safe_region(x + y))
    diff = c(x + y) - c(x) - R.shift(x) @ c(y)
    diff = diff[rows]
    return float(np.abs(diff).max()) if diff.size else 0.0


def grid_shifts_in_P(window: GridWindow, A: PSpace, reach: int, strict=False) -> list:
    """Nonzero grid shifts with |s_a| <= reach and |m_l| <= M lying in P, shortest first."""
    k, r, M = window.nreal, window.rank, window.M
    out = []
    for s in itertools.product(range(-reach, reach + 1), repeat=k):
        for m in itertools.product(range(-M, M + 1), repeat=r):
            if not any(s) and not any(m):
                continue
            g = GridShift.from_offsets(window, s, m)
            if in_cone(A.cone, g.vector, strict=strict):
                out.append(g)
    out.sort(key=lambda g: (float(sum(v * v for v in g.vector)), g.s, g.m))
    return out


def default_generators(window: GridWindow, A: PSpace, count_min=2, max_reach=6) -> list:
    """Small grid shifts in P generating the grid group Z^(d-r) x (Z/M)^r."""
    k, r, M = window.nreal, window.rank, window.M
    torus = [[0] * k + [M * int(i == j) for j in range(r)] for i in range(r)]

    def index(gs):
        return _group_index([list(g.s) + list(g.m) for g in gs] + torus, k + r)

    for reach in range(1, max_reach + 1):
        cands = grid_shifts_in_P(window, A, reach)
        chosen = []
        for g in cands:
            if index(chosen + [g]) < index(chosen):
                chosen.append(g)
            if index(chosen) == (0, 1):
                break
        if index(chosen) == (0, 1):
            for g in cands:
                if len(chosen) >= count_min:
                    break
                if g not in chosen:
                    chosen.append(g)
            return chosen
    raise ValueError("no generating set of grid shifts found; refine the grid")


def _group_index(rows, n):
    """(rank deficiency, index) of the subgroup of Z^n spanned by ``rows``; (0, 1) means everything."""
    from .cone_lattice import _integer_row_hnf

    h = _integer_row_hnf(rows) if rows else []
    if len(h) < n:
        return (n - len(h), 0)
    out = 1
    for i in range(n):
        out *= h[i][i]
    return (0, abs(out))


def _cocycle_system(R: ShiftRep, gens):
    """Assemble the compatibility system; returns (matrix, unknown cells, offsets)."""
    cells = []
    offsets = [0]
    supports = []
    for g in gens:
        sup = np.nonzero(R.mask & ~R.shifted_mask(g))[0]
        supports.append(sup)
        cells.append(sup)
        offsets.append(offsets[-1] + len(sup))
    n = R.ncells
    col_of = []
    for j, sup in enumerate(supports):
        lut = np.full(n, -1, dtype=np.int64)
        lut[sup] = offsets[j] + np.arange(len(sup))
        col_of.append(lut)
    blocks = []
    for i, j in itertools.combinations(range(len(gens)), 2):
        gi, gj = gens[i], gens[j]
        rows = np.nonzero(R.safe_region(gi) & R.safe_region(gj))[0]
        pre_i, pre_j = R.preimage(gi)[rows], R.preimage(gj)[rows]
        ridx, cidx, vals = [], [], []
        local = np.arange(len(rows))
        # xi_i(p) + xi_j(p - g_i) - xi_j(p) - xi_i(p - g_j) = 0
        for lut, src, sign in ((col_of[i], rows, 1.0), (col_of[j], pre_i, 1.0), (col_of[j], rows, -1.0), (col_of[i], pre_j, -1.0)):
            c = lut[src]
            keep = c >= 0
            ridx.append(local[keep])
            cidx.append(c[keep])
            vals.append(np.full(int(keep.sum()), sign))
        blk = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(ridx), np.concatenate(cidx))), shape=(len(rows), offsets[-1])
        )
        blocks.append(blk)
    mat = sp.vstack(blocks, format="csr") if blocks else sp.csr_matrix((0, offsets[-1]))
    if R.k > 1:
        mat = sp.kron(mat, sp.identity(R.k), format="csr")
    return mat, cells, offsets


def _nullspace(mat) -> np.ndarray:
    """Orthonormal nullspace basis (columns).

    The compatibility equations are local, so the system splits into blocks of
    columns linked through shared rows; each block gets its own dense SVD.
    """
    mat = sp.csr_matrix(mat)
    ncols = mat.shape[1]
    if ncols == 0:
        return np.zeros((0, 0))
    mat = mat[mat.getnnz(axis=1) > 0]
    if mat.shape[0] == 0:
        return np.eye(ncols)
    pattern = abs(mat).astype(bool).astype(np.int8)
    ncomp, label = connected_components(pattern.T @ pattern, directed=False)
    blocks = []
    smax = 0.0
    for c in range(ncomp):
        cols = np.nonzero(label == c)[0]
        sub = mat[:, cols]
        sub = sub[sub.getnnz(axis=1) > 0].toarray()
        if sub.shape[0] == 0:
            blocks.append((cols, np.zeros(0), np.eye(len(cols))))
            continue
        _, sv, vh = np.linalg.svd(sub, full_matrices=True)
        smax = max(smax, float(sv.max()))
        blocks.append((cols, sv, vh))
    tol = SVD_RTOL * smax
    pieces = []
    for cols, sv, vh in blocks:
        rank = int(np.count_nonzero(sv > tol))
        if rank < len(cols):
            pieces.append((cols, vh[rank:].conj().T))
    nullity = sum(p.shape[1] for _, p in pieces)
    out = np.zeros((ncols, nullity), dtype=mat.dtype)
    at = 0
    for cols, p in pieces:
        out[cols, at : at + p.shape[1]] = p
        at += p.shape[1]
    return out


@dataclass
class CocycleDimReport:
    dim: int
    raw_dims: list
    retention: list
    windows: int

    def as_dict(self):
        return {"dim": self.dim, "rawDims": self.raw_dims, "retention": self.retention, "windows": self.windows}


def cocycle_space_dim(R: ShiftRep, generators=None, ladder=None, report=False):
    """Dimension of the space of additive cocycles that stay square-integrable.

    For every window of the ladder the compatibility system
    xi_i + V_{g_i} xi_j = xi_j + V_{g_j} xi_i (on jointly safe cells), with each
    xi_j supported in A minus (g_j + A), is solved by SVD.  The raw nullity
    must agree across the ladder.  A null direction is kept only if its weight
    on the cells of the smallest window does not dilute as the window grows:
    a square-integrable cocycle is localized, a formal solution with infinite
    norm spreads over the whole window.
    """
    A, k = R.pspace, R.k
    if ladder is None:
        ladder = [R.window]
    ladder = list(ladder)
    if len(ladder) < 3:
        raise Unstable("cocycle dimension needs a ladder of at least 3 windows", {"windows": len(ladder)})
    if generators is None:
        generators = default_generators(ladder[0], A)
    if len(generators) < 2:
        raise ValueError("need at least two generators")
    core_w = ladder[0]
    core_I, core_J = core_w.indices
    raw, rho = [], []
    for w in ladder:
        rep = ShiftRep(A, w, k)
        gens = [as_shift(w, GridShift.from_offsets(w, g.s, g.m) if isinstance(g, GridShift) else g) for g in generators]
        mat, cells, offsets = _cocycle_system(rep, gens)
        null = _nullspace(mat)
        raw.append(null.shape[1])
        # unknown rows whose cell lies in the core window
        in_core = np.zeros(offsets[-1], dtype=bool)
        I, J = w.indices
        for j, sup in enumerate(cells):
            ok = np.all(I[sup] < np.asarray(core_w.counts), axis=1)
            in_core[offsets[j] : offsets[j + 1]] = ok
        in_core = np.repeat(in_core, k)
        if null.shape[1]:
            sv = np.linalg.svd(null[in_core], compute_uv=False)
            rho.append(np.sort(sv**2)[::-1][: null.shape[1]])
        else:
            rho.append(np.zeros(0))
    if len(set(raw)) != 1:
        raise Unstable("cocycle nullity changes across the window ladder", {"rawDims": raw})
    first, last = rho[0], rho[-1]
    if first.size < raw[0]:
        first = np.pad(first, (0, raw[0] - first.size))
    if last.size < raw[0]:
        last = np.pad(last, (0, raw[0] - last.size))
    retention = [float(b / a) if a > 0 else 0.0 for a, b in zip(first, last)]
    dim = int(sum(1 for q in retention if q >= GROWTH_KEEP))
    if report:
        return CocycleDimReport(dim, raw, retention, len(ladder))
    return dim


# commutant ----------------------------------------------------------------------


def _member_restricted(R: ShiftRep, x):
    idx = np.nonzero(R.expand(R.mask))[0]
    V = R.shift(x).tocsr()[idx][:, idx]
    return V.tocsr()


def _sylvester_dense(mats) -> int:
    n = mats[0].shape[0]
    eye = np.eye(n)
    blocks = []
    for V in mats:
        V = V.toarray()
        for W in (V, V.conj().T):
            blocks.append(np.kron(W.T, eye) - np.kron(eye, W))
    stacked = np.vstack(blocks)
    sv = np.linalg.svd(stacked, compute_uv=False)
    smax = sv.max() if sv.size else 0.0
    rank = int(np.count_nonzero(sv > SVD_RTOL * smax)) if smax > 0 else 0
    return n * n - rank


def _sylvester_graph(mats) -> int:
    """Exact commutant dimension for partial permutation matrices.

    Each entry equation of X W = W X reads X[a, c] = X[r, b], or forces one
    side to vanish when W has no entry in that row/column.  The solution space
    is spanned by indicator matrices of the connected classes of entries that
    are never forced to zero.
    """
    n = mats[0].shape[0]
    zero = n * n
    src, dst = [], []
    a = np.repeat(np.arange(n), n)
    b = np.tile(np.arange(n), n)
    for V in mats:
        for W in (V.tocoo(), V.T.tocoo()):
            if np.any(W.data != 1):
                raise ValueError("graph method needs 0/1 partial permutations")
            row_of_col = np.full(n, -1)
            col_of_row = np.full(n, -1)
            row_of_col[W.col] = W.row
            col_of_row[W.row] = W.col
            c = row_of_col[b]
            r = col_of_row[a]
            # (X W)[a, b] = X[a, c];  (W X)[a, b] = X[r, b]
            left = np.where(c >= 0, a * n + c, zero)
            right = np.where(r >= 0, r * n + b, zero)
            keep = (left != zero) | (right != zero)
            src.append(left[keep])
            dst.append(right[keep])
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    graph = sp.coo_matrix((np.ones(len(src)), (src, dst)), shape=(zero + 1, zero + 1))
    ncomp, labels = connected_components(graph, directed=False)
    return int(ncomp - 1)


def commutant_dim(R: ShiftRep, samples=None, method="auto") -> int:
    """Dimension of {X : X V_x = V_x X and X V_x* = V_x* X for all samples} on member cells."""
    if samples is None:
        samples = default_generators(R.window, R.pspace)
    mats = [_member_restricted(R, x) for x in samples]
    n = mats[0].shape[0]
    if method == "auto":
        method = "dense" if n * n <= DENSE_SYLVESTER_MAX else "graph"
    if method == "dense":
        return _sylvester_dense(mats)
    if method == "graph":
        return _sylvester_graph(mats)
    raise ValueError(f"unknown method {method!r}")


def export_coo(matrix, path):
    """Write a sparse matrix as CSV with columns row, col, re, im (path or text stream)."""
    m = sp.coo_matrix(matrix)
    if hasattr(path, "write"):
        _write_coo(m, path)
        return
    with open(path, "w", newline="") as fh:
        _write_coo(m, fh)


def _write_coo(m, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["row", "col", "re", "im"])
    for i, j, v in zip(m.row, m.col, m.data):
        v = complex(v)
        w.writerow([int(i), int(j), repr(v.real), repr(v.imag)])
