"""Two-dimensional advection by COSMIC splitting of the 1D PPM engine.

Each direction runs the plain 1D long time-step scheme on computational
coordinates using contravariant face velocities.  Mesh distortion enters
twice: face |J|^-1 factors weight the sweep fluxes inside the conservative
and advective operators, and the cell |J| scales the two-stage update

    phi(n+1) = phi + |J| X_C(phi + |J|/2 Y_A(phi))
                   + |J| Y_C(phi + |J|/2 X_A(phi)).

All operators return dimensionless per-step increments (dt is folded in),
so uniform fields are fixed points of divergence-free fluxes to round-off.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import ppm_sweep


class SchemeDivergedError(RuntimeError):
    """Raised when an update produces non-finite tracer values."""


@dataclass
class SplitState2D:
    """Tracer field plus the mesh Jacobian factors the sweeps need."""

    phi: np.ndarray
    grid: object
    jac_inv_cell: np.ndarray
    jac_inv_face_x: np.ndarray
    jac_inv_face_y: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.phi.shape != (self.grid.nx, self.grid.ny):
            raise ValueError("phi shape does not match the grid")
        for jac in (self.jac_inv_cell, self.jac_inv_face_x,
                    self.jac_inv_face_y):
            if not np.all(jac > 0.0):
                raise ValueError("Jacobian factors must be positive")

    def with_phi(self, phi):
        return SplitState2D(phi, self.grid, self.jac_inv_cell,
                            self.jac_inv_face_x, self.jac_inv_face_y)


def make_split_state(phi, mesh):
    """Bundle a tracer field with the Jacobian factors of a mesh."""
    return SplitState2D(phi, mesh.grid, mesh.jac_inv_cell,
                        mesh.jac_inv_face_x, mesh.jac_inv_face_y)


def contravariant_velocities(state, fluxes):
    """Computational-space face velocities recovered from physical fluxes."""
    grid = state.grid
    u = fluxes.flux_x / (state.jac_inv_face_x * grid.dy)
    v = fluxes.flux_y / (state.jac_inv_face_y * grid.dx)
    return u, v


def _ops_x(state, phi, u, dt):
    grid = state.grid
    flux = ppm_sweep(phi.T, u.T, dt, grid.dx, grid.periodic_x).T
    jf = state.jac_inv_face_x
    weighted = jf * flux
    cons = -(dt / grid.dx) * (weighted[1:, :] - weighted[:-1, :])
    mass_div = jf * u
    adv = cons + phi * (dt / grid.dx) * (mass_div[1:, :] - mass_div[:-1, :])
    return cons, adv


def _ops_y(state, phi, v, dt):
    grid = state.grid
    flux = ppm_sweep(phi, v, dt, grid.dy, grid.periodic_y)
    jf = state.jac_inv_face_y
    weighted = jf * flux
    cons = -(dt / grid.dy) * (weighted[:, 1:] - weighted[:, :-1])
    mass_div = jf * v
    adv = cons + phi * (dt / grid.dy) * (mass_div[:, 1:] - mass_div[:, :-1])
    return cons, adv


def conservative_ops(state, fluxes, dt):
    """Per-step conservative increments (X_C, Y_C) of the current field."""
    u, v = contravariant_velocities(state, fluxes)
    xc, _ = _ops_x(state, state.phi, u, dt)
    yc, _ = _ops_y(state, state.phi, v, dt)
    return xc, yc


def advective_ops(state, fluxes, dt):
    """Per-step advective increments (X_A, Y_A) of the current field."""
    u, v = contravariant_velocities(state, fluxes)
    _, xa = _ops_x(state, state.phi, u, dt)
    _, ya = _ops_y(state, state.phi, v, dt)
    return xa, ya


def cosmic_step(state, fluxes, dt):
    """Advance one time-step with cross-coupled inner half-updates."""
    u, v = contravariant_velocities(state, fluxes)
    phi = state.phi
    _, xa = _ops_x(state, phi, u, dt)
    _, ya = _ops_y(state, phi, v, dt)
    jac = 1.0 / state.jac_inv_cell
    xc, _ = _ops_x(state, phi + 0.5 * jac * ya, u, dt)
    yc, _ = _ops_y(state, phi + 0.5 * jac * xa, v, dt)
    phi_new = phi + jac * (xc + yc)
    if not np.all(np.isfinite(phi_new)):
        raise SchemeDivergedError("split scheme produced non-finite values")
    return state.with_phi(phi_new)


def tracer_mass(state):
    """Domain integral of |J|^-1 phi on the computational grid."""
    grid = state.grid
    return float(np.sum(state.jac_inv_cell * state.phi) * grid.dx * grid.dy)
