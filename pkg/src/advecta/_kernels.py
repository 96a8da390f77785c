"""Hot numerical kernels with numba-accelerated and pure-numpy twins.

The active backend is chosen once at import from the ADVECTA_BACKEND
environment variable ("numba" or "numpy"); it defaults to numba when
importable and can be switched at runtime with set_backend / use_backend.
Both implementations follow the same arithmetic so results agree to
rounding; tests assert parity between the two paths.
"""

import contextlib
import os
import warnings

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except Exception:  # pragma: no cover - exercised only when numba is absent
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


_env = os.environ.get("ADVECTA_BACKEND", "").strip().lower()
if _env == "numpy":
    _BACKEND = "numpy"
elif _env == "numba":
    if NUMBA_AVAILABLE:
        _BACKEND = "numba"
    else:
        warnings.warn("ADVECTA_BACKEND=numba requested but numba is not importable; "
                      "falling back to numpy kernels")
        _BACKEND = "numpy"
elif _env:
    raise ValueError("ADVECTA_BACKEND must be 'numba' or 'numpy', got %r" % _env)
else:
    _BACKEND = "numba" if NUMBA_AVAILABLE else "numpy"


def get_backend():
    """Return the name of the active kernel backend."""
    return _BACKEND


def set_backend(name):
    """Select the kernel backend ('numba' or 'numpy') for subsequent calls."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError("backend must be 'numba' or 'numpy', got %r" % name)
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not importable")
    _BACKEND = name


@contextlib.contextmanager
def use_backend(name):
    """Context manager that temporarily selects a kernel backend."""
    previous = _BACKEND
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


# ---------------------------------------------------------------------------
# Piecewise-parabolic sweep: long time-step fluxes for many rows at once.
#
# q has shape (rows, n) of cell means, u has shape (rows, n+1) of face
# velocities; the returned array holds the time-averaged flux u*q at every
# face.  The profile is padded by g ghost cells (wrapped when periodic,
# zero-gradient otherwise) so departure cells and their edge-value stencils
# always index into the padded arrays.
# ---------------------------------------------------------------------------


def _ppm_pad_width(cn, n):
    gmax = int(np.max(np.abs(cn))) if cn.size else 0
    if gmax >= n:
        raise ValueError("Courant number exceeds the row length: integer part "
                         "%d with only %d cells" % (gmax, n))
    return gmax + 3


def _ppm_sweep_numpy(q, u, dt, dx, periodic):
    rows, n = q.shape
    c = u * (dt / dx)
    cn = np.trunc(c).astype(np.int64)
    cr = np.abs(c - cn)
    g = _ppm_pad_width(cn, n)

    if periodic:
        qe = np.concatenate([q[:, n - g:], q, q[:, :g]], axis=1)
    else:
        qe = np.concatenate([np.repeat(q[:, :1], g, axis=1), q,
                             np.repeat(q[:, -1:], g, axis=1)], axis=1)

    m = np.zeros((rows, n + 2 * g + 1))
    np.cumsum(qe * dx, axis=1, out=m[:, 1:])

    pe = np.zeros((rows, n + 2 * g + 1))
    pe[:, 2:n + 2 * g - 1] = (7.0 / 12.0) * (qe[:, 1:n + 2 * g - 2] + qe[:, 2:n + 2 * g - 1]) \
        - (1.0 / 12.0) * (qe[:, 3:n + 2 * g] + qe[:, :n + 2 * g - 3])

    kp = np.arange(n + 1) + g
    dep = kp[None, :] - cn - (u > 0.0)
    mint = m[:, kp] - np.take_along_axis(m, kp[None, :] - cn, axis=1)

    pl = np.take_along_axis(pe, dep, axis=1)
    pr = np.take_along_axis(pe, dep + 1, axis=1)
    qd = np.take_along_axis(qe, dep, axis=1)
    dp = pr - pl
    q6 = 6.0 * (qd - 0.5 * (pl + pr))
    shape = 1.0 - (2.0 / 3.0) * cr
    frac_pos = cr * dx * (pr - 0.5 * cr * (dp - q6 * shape))
    frac_neg = cr * dx * (pl + 0.5 * cr * (dp + q6 * shape))
    frac = np.where(u > 0.0, frac_pos, -frac_neg)

    return (mint + frac) / dt


@njit(cache=True)
def _ppm_sweep_numba(q, u, dt, dx, periodic):  # pragma: no cover - jitted
    rows, n = q.shape
    gmax = 0
    cn = np.empty((rows, n + 1), dtype=np.int64)
    cr = np.empty((rows, n + 1))
    for r in range(rows):
        for k in range(n + 1):
            c = u[r, k] * dt / dx
            ci = np.int64(np.trunc(c))
            cn[r, k] = ci
            cr[r, k] = abs(c - ci)
            ai = abs(ci)
            if ai > gmax:
                gmax = int(ai)
    if gmax >= n:
        raise ValueError("Courant number exceeds the row length")
    g = gmax + 3

    ne = n + 2 * g
    out = np.empty((rows, n + 1))
    qe = np.empty(ne)
    m = np.empty(ne + 1)
    pe = np.zeros(ne + 1)
    for r in range(rows):
        if periodic:
            for k in range(g):
                qe[k] = q[r, n - g + k]
                qe[n + g + k] = q[r, k]
        else:
            for k in range(g):
                qe[k] = q[r, 0]
                qe[n + g + k] = q[r, n - 1]
        for k in range(n):
            qe[g + k] = q[r, k]

        m[0] = 0.0
        for k in range(ne):
            m[k + 1] = m[k] + qe[k] * dx
        for k in range(2, ne - 1):
            pe[k] = (7.0 / 12.0) * (qe[k - 1] + qe[k]) \
                - (1.0 / 12.0) * (qe[k + 1] + qe[k - 2])

        for k in range(n + 1):
            kp = k + g
            ci = cn[r, k]
            f = cr[r, k]
            if u[r, k] > 0.0:
                d = kp - ci - 1
            else:
                d = kp - ci
            pl = pe[d]
            pr = pe[d + 1]
            dp = pr - pl
            q6 = 6.0 * (qe[d] - 0.5 * (pl + pr))
            shape = 1.0 - (2.0 / 3.0) * f
            if u[r, k] > 0.0:
                frac = f * dx * (pr - 0.5 * f * (dp - q6 * shape))
            else:
                frac = -f * dx * (pl + 0.5 * f * (dp + q6 * shape))
            out[r, k] = (m[kp] - m[kp - ci] + frac) / dt
    return out


def ppm_sweep(q, u, dt, dx, periodic):
    """Long time-step piecewise-parabolic fluxes u*q at faces, row by row."""
    q = np.ascontiguousarray(q, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    if _BACKEND == "numba":
        return _ppm_sweep_numba(q, u, float(dt), float(dx), periodic)
    return _ppm_sweep_numpy(q, u, float(dt), float(dx), periodic)


# ---------------------------------------------------------------------------
# Weighted stencil gather: per-face dot products sum_k w[f, k] * phi[idx[f, k]].
# ---------------------------------------------------------------------------


def _stencil_gather_numpy(phi, idx, w):
    return np.einsum("fk,fk->f", phi[idx], w)


@njit(cache=True)
def _stencil_gather_numba(phi, idx, w):  # pragma: no cover - jitted
    nf, k = idx.shape
    out = np.empty(nf)
    for f in range(nf):
        acc = 0.0
        for j in range(k):
            acc += w[f, j] * phi[idx[f, j]]
        out[f] = acc
    return out


def stencil_gather(phi, idx, w):
    """Apply per-face stencil weights to a flat cell field."""
    if _BACKEND == "numba":
        return _stencil_gather_numba(phi, idx, w)
    return _stencil_gather_numpy(phi, idx, w)


# ---------------------------------------------------------------------------
# CSR matrix-vector product and DILU preconditioner sweeps.
# ---------------------------------------------------------------------------


def _csr_matvec_numpy(indptr, indices, data, x):
    prod = data * x[indices]
    return np.add.reduceat(prod, indptr[:-1])


@njit(cache=True)
def _csr_matvec_numba(indptr, indices, data, x):  # pragma: no cover - jitted
    n = indptr.shape[0] - 1
    y = np.empty(n)
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * x[indices[p]]
        y[i] = acc
    return y


def csr_matvec(indptr, indices, data, x):
    """Multiply a CSR matrix by a vector."""
    if _BACKEND == "numba":
        return _csr_matvec_numba(indptr, indices, data, x)
    return _csr_matvec_numpy(indptr, indices, data, x)


@njit(cache=True)
def _dilu_factor_numba(indptr, indices, data):  # pragma: no cover - jitted
    n = indptr.shape[0] - 1
    rd = np.zeros(n)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                rd[i] = data[p]
    for i in range(n):
        di = rd[i]
        if di == 0.0:
            raise ValueError("zero modified diagonal in DILU factorisation")
        inv = 1.0 / di
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j > i:
                aji = 0.0
                for pp in range(indptr[j], indptr[j + 1]):
                    if indices[pp] == i:
                        aji = data[pp]
                        break
                if aji != 0.0:
                    rd[j] -= aji * inv * data[p]
    return rd


def _dilu_factor_numpy(indptr, indices, data):
    n = indptr.shape[0] - 1
    rd = np.zeros(n)
    for i in range(n):
        row = slice(indptr[i], indptr[i + 1])
        cols = indices[row]
        vals = data[row]
        hit = np.nonzero(cols == i)[0]
        if hit.size:
            rd[i] = vals[hit[0]]
    for i in range(n):
        di = rd[i]
        if di == 0.0:
            raise ValueError("zero modified diagonal in DILU factorisation")
        inv = 1.0 / di
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j > i:
                jrow = slice(indptr[j], indptr[j + 1])
                hit = np.nonzero(indices[jrow] == i)[0]
                if hit.size:
                    rd[j] -= data[jrow][hit[0]] * inv * data[p]
    return rd


def dilu_factor(indptr, indices, data):
    """Modified diagonal of the DILU factorisation of a CSR matrix."""
    if _BACKEND == "numba":
        return _dilu_factor_numba(indptr, indices, data)
    return _dilu_factor_numpy(indptr, indices, data)


@njit(cache=True)
def _dilu_apply_numba(indptr, indices, data, rdinv, r):  # pragma: no cover
    n = indptr.shape[0] - 1
    z = np.empty(n)
    for i in range(n):
        acc = r[i]
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j < i:
                acc -= data[p] * z[j]
        z[i] = acc * rdinv[i]
    for i in range(n - 1, -1, -1):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j > i:
                acc += data[p] * z[j]
        z[i] -= acc * rdinv[i]
    return z


def _dilu_apply_numpy(indptr, indices, data, rdinv, r):
    n = indptr.shape[0] - 1
    z = np.empty(n)
    for i in range(n):
        acc = r[i]
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j < i:
                acc -= data[p] * z[j]
        z[i] = acc * rdinv[i]
    for i in range(n - 1, -1, -1):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j > i:
                acc += data[p] * z[j]
        z[i] -= acc * rdinv[i]
    return z


def dilu_apply(indptr, indices, data, rdinv, r):
    """Forward/backward DILU sweeps: solve (D+L) D^-1 (D+U) z = r."""
    if _BACKEND == "numba":
        return _dilu_apply_numba(indptr, indices, data, rdinv, r)
    return _dilu_apply_numpy(indptr, indices, data, rdinv, r)
