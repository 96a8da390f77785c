"""Test cases, experiment driver, error metrics, cost accounting, CSV output.

Each case bundles a flow, one coordinate mapping per mesh flavour, an
initial tracer, and (where one exists) an analytic reference solution.
The driver steps any of the three schemes to the end time, tracks the
Courant diagnostics and solver effort, and writes field CSVs, a run log,
and a one-line machine-parseable summary.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from .cosmic import SchemeDivergedError, cosmic_step, make_split_state
from .linsolve import SolverError
from .mesh import (ComputationalGrid, DeformChannelMapping, IdentityMapping,
                   TerrainFollowingMapping, VMeshMapping, build_mesh,
                   write_vertices_csv)
from .mol import MOLScheme
from .velocity import (DeformationalChannelFlow, ShearLayerFlow,
                       SolidBodyRotation, courant_numbers, face_fluxes)

SCHEMES = ("split", "mol-implicit", "mol-rk2")


class ConfigError(Exception):
    """Raised for an invalid run configuration."""


class ReferenceUnavailable(Exception):
    """Raised when a case has no analytic solution at the requested time."""


@dataclass(frozen=True)
class CaseSpec:
    """One test case: flow, mappings, tracer, timings, reference solution."""

    name: str
    flow: object
    domain: tuple                 # (x_min, y_min, width, height) computational
    periodic_x: bool
    periodic_y: bool
    mappings: dict                # mesh flavour -> mapping instance
    initial: object               # phi0(x, y) in physical coordinates
    reference: object             # (x, y, t) -> field, may raise ReferenceUnavailable
    t_end: float
    error_time: float
    output_interval: float
    time_dependent: bool = False


def solid_body_case():
    """Gaussian blob carried one anticlockwise revolution in 600 s."""
    rate = 5.0 * np.pi / 3000.0
    centre = (5000.0, 5000.0)
    r_orbit = 2500.0
    r_blob = 500.0

    def reference(x, y, t):
        angle = 0.5 * np.pi + 2.0 * rate * t
        cx = centre[0] + r_orbit * np.cos(angle)
        cy = centre[1] + r_orbit * np.sin(angle)
        d2 = (np.asarray(x, dtype=float) - cx) ** 2 \
            + (np.asarray(y, dtype=float) - cy) ** 2
        return np.exp(-0.5 * d2 / r_blob ** 2)

    return CaseSpec(
        name="solid_body",
        flow=SolidBodyRotation(rate, centre),
        domain=(0.0, 0.0, 1.0e4, 1.0e4),
        periodic_x=False,
        periodic_y=False,
        mappings={"orthogonal": IdentityMapping(),
                  "distorted": VMeshMapping(5000.0, 5000.0)},
        initial=lambda x, y: reference(x, y, 0.0),
        reference=reference,
        t_end=600.0,
        error_time=500.0,
        output_interval=100.0)


def orography_case(h0=3000.0):
    """Shear-layer flow carrying a tracer over a cosine mountain range."""
    height = 25.0e3
    if not 0.0 <= h0 < height:
        raise ConfigError("mountain height h0=%g must lie in [0, %g)"
                          % (h0, height))
    width = 300.0e3
    x_left = -150.0e3
    x0, z0 = -50.0e3, 9.0e3
    ax, az = 25.0e3, 9.0e3
    flow = ShearLayerFlow(10.0, 4000.0, 5000.0)

    def initial(x, z):
        r = np.sqrt(((np.asarray(x, dtype=float) - x0) / ax) ** 2
                    + ((np.asarray(z, dtype=float) - z0) / az) ** 2)
        return np.where(r < 1.0,
                        np.cos(0.5 * np.pi * np.minimum(r, 1.0)) ** 2, 0.0)

    def reference(x, z, t):
        # the flow is horizontal, so each physical level translates by
        # u(z)*t; wrap the departure point into the periodic width
        xs = np.asarray(x, dtype=float) - flow.velocity(z) * t
        xs = np.remainder(xs - x_left, width) + x_left
        return initial(xs, z)

    return CaseSpec(
        name="orography",
        flow=flow,
        domain=(x_left, 0.0, width, height),
        periodic_x=True,
        periodic_y=False,
        mappings={"orthogonal": TerrainFollowingMapping(height, 0.0),
                  "distorted": TerrainFollowingMapping(height, h0)},
        initial=initial,
        reference=reference,
        t_end=1.0e4,
        error_time=1.0e4,
        output_interval=5000.0)


def deformational_case():
    """Reversing deformational flow plus drift; exact mirror at t = period."""
    lx, ly = 2.0 * np.pi, np.pi
    period = 5.0
    width_sq = 0.2
    flow = DeformationalChannelFlow(10.0, period, lx, ly)

    def blob(x, y, cx):
        # periodic minimum-image distance in x
        dx = np.remainder(np.asarray(x, dtype=float) - cx + 0.5 * lx, lx) \
            - 0.5 * lx
        return 0.95 * np.exp(-(dx ** 2 + np.asarray(y, dtype=float) ** 2)
                             / width_sq)

    def initial(x, y):
        return blob(x, y, 5.0 * lx / 12.0) + blob(x, y, 7.0 * lx / 12.0)

    def reference(x, y, t):
        # the deformation reverses half way through, so the flow returns
        # the tracer to its start only at t = 0 and t = period
        if not (abs(t) <= 1e-9 or abs(t - period) <= 1e-9):
            raise ReferenceUnavailable(
                "deformational flow has no analytic solution at t=%g" % t)
        return initial(x, y)

    return CaseSpec(
        name="deform",
        flow=flow,
        domain=(-np.pi, -0.5 * np.pi, lx, ly),
        periodic_x=True,
        periodic_y=False,
        mappings={"orthogonal": IdentityMapping(),
                  "distorted": DeformChannelMapping(lx, ly)},
        initial=initial,
        reference=reference,
        t_end=period,
        error_time=period,
        output_interval=1.0,
        time_dependent=True)


_CASES = {"solid_body": solid_body_case,
          "orography": orography_case,
          "deform": deformational_case}


def make_case(name, h0=None):
    """Build a CaseSpec by name; h0 selects the orography mountain height."""
    try:
        factory = _CASES[name]
    except KeyError:
        raise ConfigError("unknown case %r (have %s)"
                          % (name, ", ".join(sorted(_CASES)))) from None
    if h0 is not None:
        if name != "orography":
            raise ConfigError("h0 only applies to the orography case")
        return factory(h0=float(h0))
    return factory()


_GAUSS3 = ((-math.sqrt(0.6), 5.0 / 9.0),
           (0.0, 8.0 / 9.0),
           (math.sqrt(0.6), 5.0 / 9.0))


def _cell_averages(func, mesh):
    """Quadrature cell averages of a pointwise field over bilinear cells."""
    v00 = mesh.vertices[:-1, :-1]
    v10 = mesh.vertices[1:, :-1]
    v01 = mesh.vertices[:-1, 1:]
    v11 = mesh.vertices[1:, 1:]
    acc = np.zeros(mesh.cell_volumes.shape)
    for a, wa in _GAUSS3:
        for b, wb in _GAUSS3:
            n00 = 0.25 * (1.0 - a) * (1.0 - b)
            n10 = 0.25 * (1.0 + a) * (1.0 - b)
            n01 = 0.25 * (1.0 - a) * (1.0 + b)
            n11 = 0.25 * (1.0 + a) * (1.0 + b)
            p = n00 * v00 + n10 * v10 + n01 * v01 + n11 * v11
            da = 0.25 * ((1.0 - b) * (v10 - v00) + (1.0 + b) * (v11 - v01))
            db = 0.25 * ((1.0 - a) * (v01 - v00) + (1.0 + a) * (v11 - v10))
            jdet = da[..., 0] * db[..., 1] - da[..., 1] * db[..., 0]
            acc += wa * wb * np.asarray(func(p[..., 0], p[..., 1])) * jdet
    return acc / mesh.cell_volumes


def initial_field(spec, mesh, averaged=False):
    """Sample the initial tracer at cell centres (or quadrature-average it)."""
    if averaged:
        return _cell_averages(spec.initial, mesh)
    c = mesh.cell_centres
    return np.asarray(spec.initial(c[..., 0], c[..., 1]), dtype=float)


def analytic_solution(spec, mesh, t):
    """Reference field at time t; ReferenceUnavailable when none exists."""
    c = mesh.cell_centres
    return np.asarray(spec.reference(c[..., 0], c[..., 1], float(t)),
                      dtype=float)


def error_norms(field, reference, mesh):
    """Volume-weighted l2 and max-normalised linf error norms."""
    vol = mesh.cell_volumes
    ref_l2 = float(np.sum(vol * reference ** 2))
    ref_max = float(np.abs(reference).max())
    if ref_l2 <= 0.0 or ref_max <= 0.0:
        raise ValueError("reference field has zero norm")
    diff = field - reference
    l2 = math.sqrt(float(np.sum(vol * diff ** 2)) / ref_l2)
    linf = float(np.abs(diff).max()) / ref_max
    return l2, linf


def convergence_slope(points, skip_coarsest=False):
    """Least-squares slope of log(error) against log(h)."""
    pts = sorted((float(h), float(e)) for h, e in points)
    if skip_coarsest:
        pts = pts[:-1]
    if len(pts) < 2:
        raise ValueError("need at least two (h, error) points")
    logh = np.log([p[0] for p in pts])
    loge = np.log([p[1] for p in pts])
    return float(np.polyfit(logh, loge, 1)[0])


def multiply_count(scheme, iters_mean=0.0, n_outer=2):
    """Multiply operations per cell per step for computing the fluxes."""
    if scheme == "split":
        return 40.0
    if scheme == "mol-rk2":
        return 48.0
    if scheme == "mol-implicit":
        return iters_mean * 24.0 + 48.0 * (n_outer / 2.0)
    raise ConfigError("unknown scheme %r (have %s)"
                      % (scheme, ", ".join(SCHEMES)))


def parse_summary(line):
    """Parse a key=value summary line into a dict of strings."""
    fields = {}
    for token in line.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ValueError("unparseable summary token %r" % token)
        fields[key] = value
    return fields


@dataclass
class RunConfig:
    """Configuration for one experiment run."""

    case: str
    scheme: str
    nx: int
    ny: int
    dt: float
    mesh: str = "orthogonal"
    t_end: float = None
    h0: float = None
    out: str = None
    dump_mesh: bool = False


@dataclass
class RunResult:
    """Outcome of one run: final field, diagnostics, artifacts."""

    status: str
    steps: int
    phi: np.ndarray
    mesh: object
    max_courant: float
    max_deformational: float
    l2: float
    linf: float
    iters_total: int
    iters_mean: float
    n_outer: int
    mults_per_cell_step: float
    summary: str
    csv_paths: list

    @property
    def completed(self):
        return self.status == "completed"


def _write_field_csv(path, mesh, phi, err):
    cx = mesh.cell_centres[..., 0]
    cy = mesh.cell_centres[..., 1]
    with open(path, "w") as fh:
        fh.write("i,j,x,y,phi,error\n")
        for j in range(mesh.ny):
            for i in range(mesh.nx):
                fh.write("%d,%d,%.12g,%.12g,%.12g,%.12g\n"
                         % (i, j, cx[i, j], cy[i, j], phi[i, j], err[i, j]))


class _Outputs:
    """Writes field CSVs at the case's output times plus a run log."""

    def __init__(self, spec, mesh, scheme, t_end, out_dir):
        self.spec = spec
        self.mesh = mesh
        self.scheme = scheme
        self.dir = out_dir
        self.tol = 1e-9 * max(1.0, t_end)
        self.csv_paths = []
        n_whole = int(math.floor(t_end / spec.output_interval + 1e-9))
        self.pending = [k * spec.output_interval for k in range(n_whole + 1)]
        if self.pending[-1] < t_end - self.tol:
            self.pending.append(t_end)
        self.log = None
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            self.log = open(os.path.join(out_dir, "run.log"), "w")

    def log_line(self, text):
        if self.log is not None:
            self.log.write(text + "\n")

    def maybe_write(self, t, phi):
        while self.pending and t >= self.pending[0] - self.tol:
            self.pending.pop(0)
            if self.dir is None:
                continue
            try:
                ref = analytic_solution(self.spec, self.mesh, t)
                err = phi - ref
            except ReferenceUnavailable:
                err = np.zeros_like(phi)
            name = "%s_%s_t%s.csv" % (self.spec.name, self.scheme, "%g" % t)
            path = os.path.join(self.dir, name)
            _write_field_csv(path, self.mesh, phi, err)
            if path not in self.csv_paths:
                self.csv_paths.append(path)

    def finish(self, summary):
        self.log_line(summary)
        if self.log is not None:
            self.log.close()
            self.log = None
        if self.dir is not None:
            with open(os.path.join(self.dir, "summary.txt"), "a") as fh:
                fh.write(summary + "\n")


def run_case(config):
    """Run one experiment to completion or divergence, writing artifacts."""
    if config.scheme not in SCHEMES:
        raise ConfigError("unknown scheme %r (have %s)"
                          % (config.scheme, ", ".join(SCHEMES)))
    spec = make_case(config.case, h0=config.h0)
    try:
        mapping = spec.mappings[config.mesh]
    except KeyError:
        raise ConfigError("unknown mesh flavour %r (have %s)"
                          % (config.mesh,
                             ", ".join(sorted(spec.mappings)))) from None
    nx = int(config.nx)
    ny = int(config.ny) if config.ny else nx
    if nx < 4 or ny < 4:
        raise ConfigError("need nx >= 4 and ny >= 4, got %dx%d" % (nx, ny))
    dt = float(config.dt)
    if dt <= 0.0:
        raise ConfigError("dt must be positive, got %g" % dt)
    t_end = spec.t_end if config.t_end is None else float(config.t_end)
    if t_end <= 0.0:
        raise ConfigError("t_end must be positive, got %g" % t_end)

    x_min, y_min, width, height = spec.domain
    grid = ComputationalGrid(nx, ny, width / nx, height / ny, x_min, y_min,
                             spec.periodic_x, spec.periodic_y)
    mesh = build_mesh(grid, mapping)
    phi = initial_field(spec, mesh)
    amp_bound = 100.0 * float(np.abs(phi).max())

    outputs = _Outputs(spec, mesh, config.scheme, t_end, config.out)
    outputs.log_line("config case=%s scheme=%s mesh=%s nx=%d ny=%d dt=%g "
                     "t_end=%g" % (spec.name, config.scheme, config.mesh,
                                   nx, ny, dt, t_end))
    if config.dump_mesh and config.out is not None:
        write_vertices_csv(mesh, os.path.join(config.out,
                                              "%s_mesh.csv" % spec.name))
    outputs.maybe_write(0.0, phi)

    split_state = None
    mol = None
    if config.scheme == "split":
        split_state = make_split_state(phi, mesh)
    else:
        mol = MOLScheme(mesh, bc_value=0.0)

    steady_fluxes = None
    if not spec.time_dependent:
        steady_fluxes = face_fluxes(spec.flow, mesh, 0.0)

    n_full = int(math.floor(t_end / dt + 1e-9))
    step_times = [min((k + 1) * dt, t_end) for k in range(n_full)]
    if not step_times or step_times[-1] < t_end - outputs.tol:
        step_times.append(t_end)

    status = "completed"
    l2 = linf = float("nan")
    error_time = min(spec.error_time, t_end)
    error_done = False
    max_c = max_cd = 0.0
    n_outer = 0
    iters_total = 0
    steps_done = 0
    warned = False

    t_prev = 0.0
    for k, t_next in enumerate(step_times, start=1):
        sdt = t_next - t_prev
        if spec.time_dependent:
            fluxes = face_fluxes(spec.flow, mesh, 0.5 * (t_prev + t_next))
            cn = courant_numbers(fluxes, mesh, sdt)
        else:
            fluxes = steady_fluxes
            cn = courant_numbers(fluxes, mesh, sdt) if k == 1 else cn
        max_c = max(max_c, cn.max_courant)
        max_cd = max(max_cd, cn.max_deformational)
        if k == 1 and config.scheme == "mol-implicit":
            # two outer iterations suffice near Courant 1; large Courant
            # numbers need four for the deferred correction to converge
            n_outer = 2 if cn.max_courant <= 1.1 else 4
        if config.scheme == "split" and max_cd > 1.0 and not warned:
            outputs.log_line("warning: deformational Courant number %.3g "
                             "exceeds 1; split scheme stability is not "
                             "guaranteed" % max_cd)
            warned = True

        try:
            if split_state is not None:
                split_state = cosmic_step(split_state, fluxes, sdt)
                phi = split_state.phi
            elif config.scheme == "mol-rk2":
                phi = mol.rk2_step(phi, fluxes, sdt)
            else:
                phi, reports = mol.cn_step(phi, fluxes, sdt, n_outer=n_outer)
                for m, rep in enumerate(reports):
                    iters_total += rep.iterations
                    outputs.log_line("step=%d outer=%d iters=%d res=%.3e"
                                     % (k, m, rep.iterations,
                                        rep.final_residual))
        except (SchemeDivergedError, SolverError) as exc:
            status = "diverged_at_step_%d" % k
            outputs.log_line("diverged at step %d: %s" % (k, exc))
            break
        if not np.all(np.isfinite(phi)) or np.abs(phi).max() > amp_bound:
            status = "diverged_at_step_%d" % k
            outputs.log_line("diverged at step %d: field amplitude %.3g "
                             "exceeds 100x the initial amplitude"
                             % (k, float(np.abs(phi).max())))
            break
        steps_done = k
        t_prev = t_next
        if not error_done and t_next >= error_time - outputs.tol:
            try:
                ref = analytic_solution(spec, mesh, t_next)
                l2, linf = error_norms(phi, ref, mesh)
            except ReferenceUnavailable:
                pass
            error_done = True
        outputs.maybe_write(t_next, phi)

    if status != "completed":
        l2 = linf = float("nan")      # diverged runs carry no error norms
    iters_mean = iters_total / steps_done if steps_done else 0.0
    mults = multiply_count(config.scheme, iters_mean, n_outer or 2)
    summary = ("case=%s scheme=%s nx=%d dt=%g maxc=%.6g maxcd=%.6g l2=%.6g "
               "linf=%.6g mults_per_cell_step=%.6g iters_mean=%.6g status=%s"
               % (spec.name, config.scheme, nx, dt, max_c, max_cd, l2, linf,
                  mults, iters_mean, status))
    outputs.finish(summary)

    return RunResult(status=status, steps=steps_done, phi=phi, mesh=mesh,
                     max_courant=max_c, max_deformational=max_cd,
                     l2=l2, linf=linf, iters_total=iters_total,
                     iters_mean=iters_mean, n_outer=n_outer,
                     mults_per_cell_step=mults, summary=summary,
                     csv_paths=outputs.csv_paths)
