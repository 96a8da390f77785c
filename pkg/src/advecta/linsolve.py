"""Upwind-implicit matrix assembly and DILU-preconditioned bi-CG solution.

The implicit advection matrix is I + theta*dt*D_up where D_up is the
first-order upwind flux divergence.  Every row is strictly diagonally
dominant with margin 1 for divergence-free fluxes, so the DILU recurrence
and the bi-conjugate gradient iteration are well posed for any time-step.

Residual convention (fixed; the literature leaves it open): residuals are
scaled l1 norms, res = sum|b - A x| / normFactor with
normFactor = sum|A x0 - w| + sum|b - w| + 1e-20 and w = mean(x0) * (A 1).
The absolute l2 residual is reported alongside in SolveReport.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import csr_matvec, dilu_apply, dilu_factor


class AssemblyError(ValueError):
    """Raised when the assembled matrix violates diagonal dominance."""


class SolverError(RuntimeError):
    """Raised on bi-CG breakdown or non-convergence; carries the report."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass
class SolveReport:
    """Iteration count and final scaled/absolute residuals of one solve."""

    iterations: int
    final_residual: float
    residual_l2: float
    converged: bool


def _coo_to_csr(n, rows, cols, vals):
    key = rows.astype(np.int64) * n + cols
    order = np.argsort(key, kind="stable")
    key = key[order]
    vals = vals[order]
    first = np.ones(key.size, dtype=bool)
    first[1:] = key[1:] != key[:-1]
    starts = np.nonzero(first)[0]
    data = np.add.reduceat(vals, starts) if starts.size else vals[:0]
    ukey = key[starts]
    urows = (ukey // n).astype(np.int64)
    ucols = (ukey % n).astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(urows, minlength=n), out=indptr[1:])
    return indptr, ucols, data


class SparseSystem:
    """Square CSR matrix with a cached transpose and diagonal."""

    def __init__(self, n, rows, cols, vals):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        self.n = n
        self.indptr, self.indices, self.data = _coo_to_csr(n, rows, cols, vals)
        self.t_indptr, self.t_indices, self.t_data = _coo_to_csr(
            n, cols, rows, vals)
        row_of = np.repeat(np.arange(n), np.diff(self.indptr))
        hit = self.indices == row_of
        self.diag = np.zeros(n)
        self.diag[row_of[hit]] = self.data[hit]

    def matvec(self, x):
        return csr_matvec(self.indptr, self.indices, self.data, x)

    def matvec_t(self, x):
        return csr_matvec(self.t_indptr, self.t_indices, self.t_data, x)

    def offdiag_abs_rowsum(self):
        row_of = np.repeat(np.arange(self.n), np.diff(self.indptr))
        mask = self.indices != row_of
        return np.bincount(row_of[mask], weights=np.abs(self.data[mask]),
                           minlength=self.n)

    def dense(self):
        out = np.zeros((self.n, self.n))
        row_of = np.repeat(np.arange(self.n), np.diff(self.indptr))
        out[row_of, self.indices] = self.data
        return out


def _face_entries(left, right, up, flux, vol, theta_dt, rows, cols, vals):
    # divergence rows: +F*phi_up/V_left out of the left cell, mirrored into
    # the right cell; 'up' is the donor column for each face
    rows.append(left)
    cols.append(up)
    vals.append(theta_dt * flux / vol[left])
    rows.append(right)
    cols.append(up)
    vals.append(-theta_dt * flux / vol[right])


def assemble(mesh, fluxes, dt, theta=0.5, bc_value=0.0):
    """Build I + theta*dt*D_up and the boundary inflow load vector."""
    grid = mesh.grid
    nx, ny = grid.nx, grid.ny
    nc = nx * ny
    vol = mesh.cell_volumes.ravel()
    theta_dt = theta * dt
    rows = [np.arange(nc)]
    cols = [np.arange(nc)]
    vals = [np.ones(nc)]
    load = np.zeros(nc)

    cell = np.arange(nc).reshape(nx, ny)
    fx = fluxes.flux_x
    fy = fluxes.flux_y

    def add_interior(left, right, flux):
        left = left.ravel()
        right = right.ravel()
        flux = flux.ravel()
        up = np.where(flux >= 0.0, left, right)
        _face_entries(left, right, up, flux, vol, theta_dt, rows, cols, vals)

    def add_boundary(cells, flux, inward):
        # inward: +1 when positive flux enters the cell (west/south faces)
        cells = cells.ravel()
        fin = flux.ravel() * inward
        outflow = fin < 0.0
        c = cells[outflow]
        rows.append(c)
        cols.append(c)
        vals.append(theta_dt * (-fin[outflow]) / vol[c])
        inflow = ~outflow
        load[cells[inflow]] += theta_dt * fin[inflow] * bc_value \
            / vol[cells[inflow]]

    if grid.periodic_x:
        add_interior(np.roll(cell, 1, axis=0), cell, fx[:nx, :])
    else:
        add_interior(cell[:-1, :], cell[1:, :], fx[1:nx, :])
        add_boundary(cell[0, :], fx[0, :], 1.0)
        add_boundary(cell[-1, :], fx[nx, :], -1.0)

    if grid.periodic_y:
        add_interior(np.roll(cell, 1, axis=1), cell, fy[:, :ny])
    else:
        add_interior(cell[:, :-1], cell[:, 1:], fy[:, 1:ny])
        add_boundary(cell[:, 0], fy[:, 0], 1.0)
        add_boundary(cell[:, -1], fy[:, ny], -1.0)

    system = SparseSystem(nc, np.concatenate(rows), np.concatenate(cols),
                          np.concatenate(vals))
    margin = system.diag - system.offdiag_abs_rowsum()
    if margin.min() < 0.5:
        raise AssemblyError("upwind matrix lost diagonal dominance: margin "
                            "%.3e" % margin.min())
    return system, load


class DILUPreconditioner:
    """Forward/backward sweeps with the DILU modified diagonal."""

    def __init__(self, system):
        self.system = system
        rd = dilu_factor(system.indptr, system.indices, system.data)
        self.rdinv = 1.0 / rd

    def apply(self, r):
        s = self.system
        return dilu_apply(s.indptr, s.indices, s.data, self.rdinv, r)

    def apply_transpose(self, r):
        s = self.system
        return dilu_apply(s.t_indptr, s.t_indices, s.t_data, self.rdinv, r)


_BREAKDOWN = 1e-300


def bicg_solve(system, precond, b, x0=None, tol=1e-8, maxiter=1000):
    """Solve A x = b by preconditioned bi-CG with scaled l1 residuals."""
    x = np.zeros(system.n) if x0 is None else np.array(x0, dtype=np.float64)
    ax = system.matvec(x)
    w = float(np.mean(x)) * system.matvec(np.ones(system.n))
    norm_factor = np.sum(np.abs(ax - w)) + np.sum(np.abs(b - w)) + 1e-20
    r = b - ax

    def scaled(res):
        return float(np.sum(np.abs(res)) / norm_factor)

    res = scaled(r)
    if res <= tol:
        return x, SolveReport(0, res, float(np.linalg.norm(r)), True)

    rt = r.copy()
    pa = pt = None
    rho_old = 0.0
    restarted = False
    iters = 0
    while iters < maxiter:
        za = precond.apply(r)
        zt = precond.apply_transpose(rt)
        rho = float(np.dot(za, rt))
        if abs(rho) < _BREAKDOWN:
            if restarted:
                report = SolveReport(iters, res, float(np.linalg.norm(r)),
                                     False)
                raise SolverError("bi-CG breakdown (rho ~ 0) after restart",
                                  report)
            # restart from the current residual with a fresh shadow system
            rt = r.copy()
            pa = pt = None
            restarted = True
            continue
        if pa is None:
            pa = za.copy()
            pt = zt.copy()
        else:
            beta = rho / rho_old
            pa = za + beta * pa
            pt = zt + beta * pt
        qa = system.matvec(pa)
        qt = system.matvec_t(pt)
        sigma = float(np.dot(qa, pt))
        if abs(sigma) < _BREAKDOWN:
            report = SolveReport(iters, res, float(np.linalg.norm(r)), False)
            raise SolverError("bi-CG breakdown (p'Ap ~ 0)", report)
        alpha = rho / sigma
        x += alpha * pa
        r -= alpha * qa
        rt -= alpha * qt
        rho_old = rho
        iters += 1
        res = scaled(r)
        if res <= tol:
            return x, SolveReport(iters, res, float(np.linalg.norm(r)), True)
    report = SolveReport(iters, res, float(np.linalg.norm(r)), False)
    raise SolverError("bi-CG failed to converge in %d iterations "
                      "(residual %.3e)" % (maxiter, res), report)
