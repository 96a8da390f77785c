"""End-to-end acceptance: one test per advertised behaviour criterion.

Run with ``pytest -v tests/test_acceptance.py`` for one pass/fail line per
criterion.  Criteria 6 (implicit-scheme deformational slope) and 7 (Courant
bookkeeping pins) are asserted at their stated thresholds and are expected
to fail; the failure messages carry the measured values and the README
documents the shortfall.
"""

import time

import numpy as np
import pytest

from advecta.cosmic import cosmic_step, make_split_state, tracer_mass
from advecta.harness import (RunConfig, convergence_slope, make_case,
                             multiply_count, run_case)
from advecta.linsolve import DILUPreconditioner, assemble, bicg_solve
from advecta.mesh import (ComputationalGrid, build_mesh, face_closure_residual,
                          make_mapping)
from advecta.mol import MOLScheme
from advecta.ppm1d import Profile1D, advect_step_1d
from advecta.velocity import FaceFluxField, face_fluxes, flux_divergence

SOLID_SERIES = [(50, 2.0), (100, 1.0), (200, 0.5)]      # nx, dt at max c ~ 1
DEFORM_GRIDS = [(120, 60), (240, 120), (480, 240)]
DEFORM_DT_C1 = (0.0136, 0.0068, 0.0034)                 # orthogonal max c = 1.00
DEFORM_DT_C10 = (0.1, 0.05, 0.025)


def solid_points(scheme, mesh):
    points = {}
    for nx, dt in SOLID_SERIES:
        r = run_case(RunConfig("solid_body", scheme, nx, nx, dt, mesh=mesh))
        assert r.completed, r.status
        points[nx] = (1e4 / nx, r.l2)
    return points


def deform_points(scheme, mesh, dts):
    points = []
    for (nx, ny), dt in zip(DEFORM_GRIDS, dts):
        r = run_case(RunConfig("deform", scheme, nx, ny, dt, mesh=mesh))
        assert r.completed, r.status
        points.append((2 * np.pi / nx, r.l2))
    return points


def test_criterion_1_one_dimensional_third_order():
    # periodic Gaussian returns after one revolution at c = 0.5
    start = time.perf_counter()
    points = []
    for n in (50, 100, 200, 400):
        dx = 1.0 / n
        x = (np.arange(n) + 0.5) * dx
        prof = Profile1D(np.exp(-((x - 0.5) / 0.1) ** 2), dx)
        exact = prof.values.copy()
        u = np.full(n + 1, 1.0)
        for _ in range(2 * n):
            prof = advect_step_1d(prof, u, dt=0.5 * dx)
        points.append((dx, float(np.sqrt(np.mean((prof.values - exact) ** 2)))))
    assert convergence_slope(points) >= 3.0, points
    assert time.perf_counter() - start < 10.0


def test_criterion_2_solid_body_split_convergence():
    start = time.perf_counter()
    orth = list(solid_points("split", "orthogonal").values())
    dist = list(solid_points("split", "distorted").values())
    assert convergence_slope(orth) >= 2.5, orth
    assert convergence_slope(dist) >= 1.7, dist
    assert time.perf_counter() - start < 300.0


def test_criterion_3_solid_body_implicit_mesh_insensitivity():
    orth = solid_points("mol-implicit", "orthogonal")
    dist = solid_points("mol-implicit", "distorted")
    for points in (orth, dist):
        pair = [points[100], points[200]]
        assert convergence_slope(pair) >= 1.7, points
    # distortion moves the finest-mesh error by far less than 25%
    assert dist[200][1] <= 1.25 * orth[200][1], (orth[200], dist[200])


def test_criterion_4_long_time_step_error_ordering():
    def split_l2(dt):
        r = run_case(RunConfig("solid_body", "split", 100, 100, dt))
        assert r.completed, r.status
        return r.l2

    # the split scheme is *more* accurate with fewer, larger steps
    assert split_l2(2.0) < split_l2(0.25)

    errors = []
    for dt in (0.25, 0.5, 1.0, 2.0, 5.0, 10.0):
        r = run_case(RunConfig("solid_body", "mol-implicit", 100, 100, dt))
        assert r.completed, r.status
        errors.append(r.l2)
    # the implicit scheme degrades monotonically as the step grows
    assert all(a <= b for a, b in zip(errors, errors[1:])), errors


def test_criterion_5_orography_stability_dichotomy():
    def orog(scheme, dt):
        return run_case(RunConfig("orography", scheme, 300, 50, dt,
                                  mesh="distorted"))

    split_small = orog("split", 25.0)        # horizontal c = 0.25
    mol_small = orog("mol-implicit", 25.0)
    assert split_small.completed and mol_small.completed
    assert np.isfinite(split_small.l2) and np.isfinite(mol_small.l2)
    assert split_small.l2 <= 1.5 * mol_small.l2, (split_small.l2, mol_small.l2)

    split_big = orog("split", 1000.0)        # horizontal c = 10
    assert split_big.status.startswith("diverged"), split_big.status
    assert split_big.max_deformational > 1.0
    mol_big = orog("mol-implicit", 1000.0)
    assert mol_big.completed, mol_big.status
    assert np.abs(mol_big.phi).max() <= 1.2


def test_criterion_6_deformational_convergence():
    # every clause runs before the verdict so a single shortfall cannot
    # mask the state of the others
    start = time.perf_counter()
    problems = []

    # max c ~ 1: the coarsest mesh sits in the error-saturation regime, so
    # slopes are taken on the resolved pair (240 -> 480)
    split_c1 = deform_points("split", "orthogonal", DEFORM_DT_C1)
    slope = convergence_slope(split_c1, skip_coarsest=True)
    if not slope >= 2.5:
        problems.append("split c~1 slope %.3f < 2.5 %s" % (slope, split_c1))

    # known shortfall: the implicit scheme's slope keeps rising with
    # resolution (1.04 -> 1.25 -> 1.70 per octave up to 960 cells) but has
    # not reached 1.7 by 480; asserted at the stated threshold regardless
    mol_c1 = deform_points("mol-implicit", "orthogonal", DEFORM_DT_C1)
    slope = convergence_slope(mol_c1, skip_coarsest=True)
    if not slope >= 1.7:
        problems.append("implicit c~1 finest-pair slope %.3f < 1.7 %s"
                        % (slope, mol_c1))

    # max c ~ 10: first-order-ish but still convergent on both meshes
    for mesh in ("distorted", "orthogonal"):
        points = deform_points("split", mesh, DEFORM_DT_C10)
        slope = convergence_slope(points)
        if not slope >= 0.8:
            problems.append("split c~10 %s slope %.3f < 0.8 %s"
                            % (mesh, slope, points))

    assert time.perf_counter() - start < 900.0
    assert not problems, "; ".join(problems)


def test_criterion_7_courant_bookkeeping():
    dist = run_case(RunConfig("deform", "split", 120, 60, 0.1,
                              mesh="distorted"))
    orth = run_case(RunConfig("deform", "split", 120, 60, 0.1))
    assert dist.completed and orth.completed
    ratio = orth.max_courant / dist.max_courant
    ok = (abs(dist.max_courant - 10.3) <= 0.05 * 10.3
          and abs(dist.max_deformational - 0.312) <= 0.10 * 0.312
          and 0.65 <= ratio <= 0.75)
    assert ok, ("max c=%.6g (want 10.3 +-5%%), deformational c=%.6g "
                "(want 0.312 +-10%%), orthogonal/distorted=%.4g "
                "(want 0.65..0.75)"
                % (dist.max_courant, dist.max_deformational, ratio))


def test_criterion_8_cost_accounting():
    assert multiply_count("split") == 40
    assert multiply_count("mol-rk2") == 48
    assert multiply_count("mol-implicit", iters_mean=6.5, n_outer=2) == 204
    assert multiply_count("mol-implicit", iters_mean=6.5, n_outer=4) == 252

    slow = run_case(RunConfig("deform", "mol-implicit", 120, 60, 0.01,
                              mesh="distorted"))
    fast = run_case(RunConfig("deform", "mol-implicit", 120, 60, 0.1,
                              mesh="distorted"))
    assert slow.completed and fast.completed
    assert slow.max_courant < 1.5 < fast.max_courant
    # larger Courant numbers need more solver iterations per step but far
    # fewer steps, so the whole simulation is cheaper
    assert fast.iters_mean > slow.iters_mean, (slow.iters_mean, fast.iters_mean)
    assert fast.iters_total < slow.iters_total, (slow.iters_total,
                                                 fast.iters_total)


def case_mesh(name, nx, ny, flavour):
    spec = make_case(name)
    x_min, y_min, width, height = spec.domain
    grid = ComputationalGrid(nx, ny, width / nx, height / ny, x_min, y_min,
                             spec.periodic_x, spec.periodic_y)
    return spec, build_mesh(grid, spec.mappings[flavour])


def test_criterion_9_property_suite():
    # geometric closure on every mesh flavour of every case
    for name in ("solid_body", "orography", "deform"):
        for flavour in ("orthogonal", "distorted"):
            _, mesh = case_mesh(name, 24, 12, flavour)
            assert face_closure_residual(mesh).max() < 1e-10, (name, flavour)

    # streamfunction fluxes are discretely divergence-free
    for name in ("solid_body", "orography", "deform"):
        spec, mesh = case_mesh(name, 36, 18, "distorted")
        fluxes = face_fluxes(spec.flow, mesh, 0.4)
        scale = max(np.abs(fluxes.flux_x).max(), np.abs(fluxes.flux_y).max())
        assert np.abs(flux_divergence(fluxes)).max() < 1e-12 * scale, name

    # 1D conservation and constancy at a long time step
    rng = np.random.default_rng(3)
    prof = Profile1D(rng.uniform(0.5, 1.5, size=40), 0.25)
    flat = Profile1D(np.full(40, 2.5), 0.25)
    mass0 = prof.values.sum() * prof.dx
    u = np.full(41, 1.0)
    for _ in range(30):
        prof = advect_step_1d(prof, u, dt=2.7 * prof.dx)
        flat = advect_step_1d(flat, u, dt=2.7 * flat.dx)
    assert prof.values.sum() * prof.dx == pytest.approx(mass0, rel=1e-12)
    assert np.abs(flat.values - 2.5).max() < 1e-12

    # 2D conservation and constancy on a distorted mesh
    spec, mesh = case_mesh("deform", 48, 24, "distorted")
    xc = mesh.cell_centres
    blob = np.exp(-((xc[..., 0] + np.pi / 2) ** 2 + xc[..., 1] ** 2) / 0.64)
    state = make_split_state(blob, mesh)
    ones = make_split_state(np.ones_like(blob), mesh)
    m0 = tracer_mass(state)
    for k in range(20):
        fluxes = face_fluxes(spec.flow, mesh, (k + 0.5) * 0.05)
        state = cosmic_step(state, fluxes, 0.05)
        ones = cosmic_step(ones, fluxes, 0.05)
    assert abs(tracer_mass(state) - m0) < 1e-11 * abs(m0)
    assert np.abs(ones.phi - 1.0).max() < 1e-12

    # integer-Courant steps are exact circular shifts
    grid = ComputationalGrid(32, 24, 1.0 / 32, 1.0 / 24,
                             periodic_x=True, periodic_y=True)
    mesh = build_mesh(grid, make_mapping("identity"))
    mc = mesh.cell_centres
    phi = np.sin(2 * np.pi * mc[..., 0]) * np.cos(2 * np.pi * mc[..., 1])
    fluxes = FaceFluxField(np.full((33, 24), 3 * grid.dx * grid.dy),
                           np.full((32, 25), -2 * grid.dy * grid.dx), 0.0)
    stepped = cosmic_step(make_split_state(phi, mesh), fluxes, 1.0)
    assert np.abs(stepped.phi - np.roll(np.roll(phi, 3, 0), -2, 1)).max() < 1e-12

    # corrected stencil weights sum to zero (nullity on constants)
    _, vmesh = case_mesh("solid_body", 12, 12, "distorted")
    scheme = MOLScheme(vmesh)
    for family in (scheme.x_faces, scheme.y_faces):
        for table in family.orient.values():
            assert np.abs(table.w.sum(axis=1)).max() < 1e-9

    # cubic polynomial reproduction at interior faces
    def poly(x, y):
        return 1.0 + 2 * x - y + x * x - 0.5 * x * y + y * y + x ** 3

    grid = ComputationalGrid(16, 16, 1.0 / 16, 1.0 / 16)
    mesh = build_mesh(grid, make_mapping("identity"))
    scheme = MOLScheme(mesh)
    mc = mesh.cell_centres
    fluxes = FaceFluxField(np.full((17, 16), grid.dy),
                           np.full((16, 17), grid.dx), 0.0)
    vx, _ = scheme.face_values(poly(mc[..., 0], mc[..., 1]), fluxes)
    fx = mesh.face_centres_x
    want = poly(fx[3:16, 1:15, 0], fx[3:16, 1:15, 1])
    assert np.abs(vx[3:16, 1:15] - want).max() < 1e-9 * np.abs(want).max()

    # bi-CG with DILU matches a dense LU oracle on a 900-cell system
    spec, mesh = case_mesh("solid_body", 30, 30, "orthogonal")
    system, _ = assemble(mesh, face_fluxes(spec.flow, mesh), dt=5.0)
    rng = np.random.default_rng(4)
    b = 1.0 + 0.1 * rng.normal(size=system.n)
    x, report = bicg_solve(system, DILUPreconditioner(system), b)
    assert report.converged
    assert np.abs(x - np.linalg.solve(system.dense(), b)).max() < 1e-6
