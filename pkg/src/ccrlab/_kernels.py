"""Hot loops for grid membership masks.

Each kernel decides, for a batch of integer cell indices, whether the cell
point lies in A = union_t phi(P + g_t).  Facet values are scaled to int64 so
the decision is exact:

    V[t, f] = C0[t, f] + sum_a A[t, f, a] * I[p, a] + sum_l Bt[t, f, l] * (J[p, l] + M * n_l)

and the cell is a member iff for some translate t there is n in Z^r with all
V[t, f] >= 0.  Torus indices J need not be reduced mod M.

The numba versions are used unless the environment variable
``CCRLAB_DISABLE_NUMBA`` is set to a true-ish value (or numba is missing);
the numpy versions are the reference implementation.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_BIG = np.int64(2**62)


def numba_enabled() -> bool:
    flag = os.environ.get("CCRLAB_DISABLE_NUMBA", "").strip().lower()
    return HAVE_NUMBA and flag in ("", "0", "false", "no")


def backend_name() -> str:
    return "numba" if numba_enabled() else "numpy"


# numpy reference -------------------------------------------------------------


def _facet_base_np(I, J, C0, A, Bt):
    # (n, T, F)
    base = C0[None, :, :] + np.einsum("tfa,pa->ptf", A, I)
    if Bt.shape[2]:
        base = base + np.einsum("tfl,pl->ptf", Bt, J)
    return base


def mask_linear_np(I, J, C0, A, Bt, M):
    """r <= 1: the admissible n form an interval, computed in integers."""
    base = _facet_base_np(I, J, C0, A, Bt)
    if Bt.shape[2] == 0:
        return np.any(np.all(base >= 0, axis=2), axis=1)
    b = Bt[:, :, 0] * M  # (T, F)
    b = np.broadcast_to(b[None], base.shape)
    lo = np.full(base.shape, -_BIG, dtype=np.int64)
    hi = np.full(base.shape, _BIG, dtype=np.int64)
    pos, neg, zero = b > 0, b < 0, b == 0
    # b*n + base >= 0
    lo[pos] = -((base[pos]) // b[pos])
    hi[neg] = base[neg] // (-b[neg])
    bad_zero = zero & (base < 0)
    lo_t = lo.max(axis=2)
    hi_t = hi.min(axis=2)
    ok = (lo_t <= hi_t) & ~bad_zero.any(axis=2)
    return ok.any(axis=1)


def _box_bounds(I, J, M, c0, ca, gamma, rl):
    """Per-cell integer box for n (float bounds widened by one)."""
    c = c0[None, :] + I.astype(float) @ ca.T  # (n, T)
    reach = np.maximum(c, 0.0)[:, :, None] * rl[None, None, :]  # (n, T, r)
    centre = gamma[None, :, :] - J.astype(float)[:, None, :] / M
    lo = np.floor(centre - reach).astype(np.int64) - 1
    hi = np.ceil(centre + reach).astype(np.int64) + 1
    return c, lo, hi


def mask_box_np(I, J, C0, A, Bt, M, c0, ca, gamma, rl):
    """r >= 2: enumerate lattice points inside the compact slab."""
    n = I.shape[0]
    T = C0.shape[0]
    r = Bt.shape[2]
    out = np.zeros(n, dtype=bool)
    if n == 0:
        return out
    base = _facet_base_np(I, J, C0, A, Bt)
    c, lo, hi = _box_bounds(I, J, M, c0, ca, gamma, rl)
    for t in range(T):
        live = c[:, t] >= -1e-9
        if not live.any():
            continue
        width = (hi[live, t] - lo[live, t]).max(axis=0) + 1
        for off in np.ndindex(*width):
            nvec = lo[:, t, :] + np.asarray(off, dtype=np.int64)[None, :]
            inside = live & np.all(nvec <= hi[:, t, :], axis=1)
            vals = base[:, t, :] + (nvec @ (Bt[t].T * M))
            out |= inside & np.all(vals >= 0, axis=1)
    return out


# numba versions --------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _mask_linear_nb(I, J, C0, A, Bt, M, out):
        n, k = I.shape
        T, F = C0.shape
        r = Bt.shape[2]
        big = np.int64(2**62)
        for p in range(n):
            hit = False
            for t in range(T):
                lo = -big
                hi = big
                ok = True
                for f in range(F):
                    base = C0[t, f]
                    for a in range(k):
                        base += A[t, f, a] * I[p, a]
                    if r == 0:
                        if base < 0:
                            ok = False
                            break
                        continue
                    base += Bt[t, f, 0] * J[p, 0]
                    b = Bt[t, f, 0] * M
                    if b == 0:
                        if base < 0:
                            ok = False
                            break
                    elif b > 0:
                        v = -(base // b)
                        if v > lo:
                            lo = v
                    else:
                        v = base // (-b)
                        if v < hi:
                            hi = v
                if ok and lo <= hi:
                    hit = True
                    break
            out[p] = hit
        return out

    @njit(cache=True)
    def _mask_box_nb(I, J, C0, A, Bt, M, c0, ca, gamma, rl, out):
        n, k = I.shape
        T, F = C0.shape
        r = Bt.shape[2]
        base = np.empty(F, dtype=np.int64)
        lo = np.empty(r, dtype=np.int64)
        hi = np.empty(r, dtype=np.int64)
        cur = np.empty(r, dtype=np.int64)
        for p in range(n):
            hit = False
            for t in range(T):
                c = c0[t]
                for a in range(k):
                    c += ca[t, a] * I[p, a]
                if c < -1e-9:
                    continue
                if c < 0.0:
                    c = 0.0
                for l in range(r):
                    centre = gamma[t, l] - J[p, l] / M
                    lo[l] = np.int64(np.floor(centre - c * rl[l])) - 1
                    hi[l] = np.int64(np.ceil(centre + c * rl[l])) + 1
                    cur[l] = lo[l]
                for f in range(F):
                    s = C0[t, f]
                    for a in range(k):
                        s += A[t, f, a] * I[p, a]
                    for l in range(r):
                        s += Bt[t, f, l] * J[p, l]
                    base[f] = s
                while True:
                    ok = True
                    for f in range(F):
                        s = base[f]
                        for l in range(r):
                            s += Bt[t, f, l] * M * cur[l]
                        if s < 0:
                            ok = False
                            break
                    if ok:
                        hit = True
                        break
                    # odometer step
                    l = 0
                    while l < r:
                        cur[l] += 1
                        if cur[l] <= hi[l]:
                            break
                        cur[l] = lo[l]
                        l += 1
                    if l == r:
                        break
                if hit:
                    break
            out[p] = hit
        return out


def mask_linear(I, J, C0, A, Bt, M):
    I = np.ascontiguousarray(I, dtype=np.int64)
    J = np.ascontiguousarray(J, dtype=np.int64)
    if numba_enabled():
        out = np.empty(I.shape[0], dtype=np.bool_)
        return _mask_linear_nb(I, J, C0, A, Bt, np.int64(M), out)
    return mask_linear_np(I, J, C0, A, Bt, M)


def mask_box(I, J, C0, A, Bt, M, c0, ca, gamma, rl):
    I = np.ascontiguousarray(I, dtype=np.int64)
    J = np.ascontiguousarray(J, dtype=np.int64)
    if numba_enabled():
        out = np.empty(I.shape[0], dtype=np.bool_)
        return _mask_box_nb(I, J, C0, A, Bt, np.int64(M), c0, ca, gamma, rl, out)
    return mask_box_np(I, J, C0, A, Bt, M, c0, ca, gamma, rl)


def mask_float(T, U, c0, At, Bt, e0, et, gamma, rl):
    """Float membership for continuous chart samples (t, u); used by the Monte Carlo oracle."""
    T = np.ascontiguousarray(T, dtype=np.float64)
    U = np.ascontiguousarray(U, dtype=np.float64)
    if Bt.shape[2] >= 2 and numba_enabled():
        out = np.zeros(T.shape[0], dtype=np.bool_)
        return _mask_float_box_nb(T, U, c0, At, Bt, e0, et, gamma, rl, out)
    return mask_float_np(T, U, c0, At, Bt, e0, et, gamma, rl)


def mask_float_np(T, U, c0, At, Bt, e0, et, gamma, rl):
    """Reference float membership.

    c0: (T, F), At: (T, F, k), Bt: (T, F, r) real facet data for translate
    ``t`` in chart coordinates.  For r >= 2 the slab box uses e0 + et.t.
    """
    n = T.shape[0]
    ntr = c0.shape[0]
    r = Bt.shape[2]
    out = np.zeros(n, dtype=bool)
    for t in range(ntr):
        base = c0[t][None, :] + T @ At[t].T + (U @ Bt[t].T if r else 0.0)
        if r == 0:
            out |= np.all(base >= 0, axis=1)
        elif r == 1:
            b = Bt[t, :, 0]
            lo = np.full(n, -np.inf)
            hi = np.full(n, np.inf)
            for f in range(base.shape[1]):
                if b[f] > 0:
                    lo = np.maximum(lo, np.ceil(-base[:, f] / b[f]))
                elif b[f] < 0:
                    hi = np.minimum(hi, np.floor(base[:, f] / -b[f]))
                else:
                    hi = np.where(base[:, f] < 0, -np.inf, hi)
            out |= lo <= hi
        else:
            c = e0[t] + T @ et[t]
            live = c >= 0
            reach = np.maximum(c, 0)[:, None] * rl[None, :]
            centre = gamma[t][None, :] - U
            lo = np.floor(centre - reach).astype(np.int64) - 1
            hi = np.ceil(centre + reach).astype(np.int64) + 1
            width = (hi - lo)[live].max(axis=0) + 1 if live.any() else np.zeros(r, dtype=np.int64)
            for off in np.ndindex(*width):
                nvec = lo + np.asarray(off)[None, :]
                inside = live & np.all(nvec <= hi, axis=1)
                vals = base + nvec @ Bt[t].T
                out |= inside & np.all(vals >= 0, axis=1)
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _mask_float_box_nb(T, U, c0, At, Bt, e0, et, gamma, rl, out):
        n, k = T.shape
        ntr, F = c0.shape
        r = Bt.shape[2]
        base = np.empty(F)
        lo = np.empty(r, dtype=np.int64)
        hi = np.empty(r, dtype=np.int64)
        cur = np.empty(r, dtype=np.int64)
        for p in range(n):
            hit = False
            for t in range(ntr):
                c = e0[t]
                for a in range(k):
                    c += et[t, a] * T[p, a]
                if c < 0.0:
                    continue
                for l in range(r):
                    centre = gamma[t, l] - U[p, l]
                    lo[l] = np.int64(np.floor(centre - c * rl[l])) - 1
                    hi[l] = np.int64(np.ceil(centre + c * rl[l])) + 1
                    cur[l] = lo[l]
                for f in range(F):
                    s = c0[t, f]
                    for a in range(k):
                        s += At[t, f, a] * T[p, a]
                    for l in range(r):
                        s += Bt[t, f, l] * U[p, l]
                    base[f] = s
                while True:
                    ok = True
                    for f in range(F):
                        s = base[f]
                        for l in range(r):
                            s += Bt[t, f, l] * cur[l]
                        if s < 0.0:
                            ok = False
                            break
                    if ok:
                        hit = True
                        break
                    l = 0
                    while l < r:
                        cur[l] += 1
                        if cur[l] <= hi[l]:
                            break
                        cur[l] = lo[l]
                        l += 1
                    if l == r:
                        break
                if hit:
                    break
            out[p] = hit
        return out
