"""Timing comparison of the numba and numpy kernel backends.

Runs each hot kernel on a realistic workload under both backends and
prints the best-of-N wall times with the speedup.  End-to-end rows time
a full conservative split step and a full implicit step on meshes of the
size the experiments use.
"""

import argparse
import time

import numpy as np

from advecta._kernels import (NUMBA_AVAILABLE, dilu_apply, get_backend,
                              ppm_sweep, stencil_gather, use_backend)
from advecta.cosmic import cosmic_step, make_split_state
from advecta.harness import make_case
from advecta.linsolve import DILUPreconditioner, assemble
from advecta.mesh import ComputationalGrid, build_mesh
from advecta.mol import MOLScheme
from advecta.velocity import face_fluxes


def build_case_mesh(name, nx, ny, flavour):
    spec = make_case(name)
    x_min, y_min, width, height = spec.domain
    grid = ComputationalGrid(nx, ny, width / nx, height / ny, x_min, y_min,
                             spec.periodic_x, spec.periodic_y)
    return spec, build_mesh(grid, spec.mappings[flavour])


def make_workloads():
    rng = np.random.default_rng(7)
    work = {}

    q = rng.standard_normal((400, 400))
    u = 6.0 * rng.standard_normal((400, 401))
    work["ppm_sweep 400x400"] = lambda: ppm_sweep(q, u, 1.0, 1.0, True)

    phi = rng.standard_normal(200 * 200)
    idx = rng.integers(0, phi.size, size=(4 * 200 * 201, 12))
    w = rng.standard_normal(idx.shape)
    work["stencil_gather 160k faces"] = lambda: stencil_gather(phi, idx, w)

    spec, mesh = build_case_mesh("orography", 300, 50, "distorted")
    fluxes = face_fluxes(spec.flow, mesh, 0.0)
    system, _ = assemble(mesh, fluxes, 1000.0)
    x = rng.standard_normal(system.n)
    work["csr_matvec 15k cells"] = lambda: system.matvec(x)

    precond = DILUPreconditioner(system)
    work["dilu_apply 15k cells"] = lambda: precond.apply(x)

    sb_spec, sb_mesh = build_case_mesh("solid_body", 200, 200, "orthogonal")
    centres = sb_mesh.cell_centres
    phi0 = np.asarray(sb_spec.initial(centres[..., 0], centres[..., 1]))
    state = make_split_state(phi0, sb_mesh)
    sb_fluxes = face_fluxes(sb_spec.flow, sb_mesh, 0.0)
    work["cosmic_step 200x200"] = lambda: cosmic_step(state, sb_fluxes, 1.0)

    mol = MOLScheme(mesh)
    phi_or = np.asarray(spec.initial(mesh.cell_centres[..., 0],
                                     mesh.cell_centres[..., 1]))
    work["cn_step 300x50"] = lambda: mol.cn_step(phi_or, fluxes, 25.0)

    return work


def best_time(func, repeat):
    func()                       # warm up (and JIT-compile under numba)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        func()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repetitions per kernel (best is kept)")
    args = parser.parse_args()

    backends = ["numpy"] + (["numba"] if NUMBA_AVAILABLE else [])
    if not NUMBA_AVAILABLE:
        print("numba is not importable; timing the numpy backend only")
    print("active default backend: %s" % get_backend())

    work = make_workloads()
    width = max(len(name) for name in work)
    header = "%-*s" % (width, "kernel")
    for name in backends:
        header += "%12s" % name
    if len(backends) == 2:
        header += "%10s" % "speedup"
    print(header)

    for name, func in work.items():
        times = {}
        for backend in backends:
            with use_backend(backend):
                times[backend] = best_time(func, args.repeat)
        line = "%-*s" % (width, name)
        for backend in backends:
            line += "%10.2f ms" % (1e3 * times[backend])
        if len(backends) == 2:
            line += "%9.1fx" % (times["numpy"] / times["numba"])
        print(line)


if __name__ == "__main__":
    main()
