"""Oracle tests for the cases, driver, error metrics and cost accounting."""

import math

import numpy as np
import pytest

from advecta.harness import (ConfigError, ReferenceUnavailable, RunConfig,
                             _cell_averages, analytic_solution,
                             convergence_slope, error_norms, initial_field,
                             make_case, multiply_count, parse_summary,
                             run_case)
from advecta.mesh import ComputationalGrid, build_mesh, make_mapping

SUMMARY_KEYS = ("case scheme nx dt maxc maxcd l2 linf mults_per_cell_step "
                "iters_mean status").split()


def case_mesh(name, nx, ny, flavour="orthogonal"):
    spec = make_case(name)
    x_min, y_min, width, height = spec.domain
    grid = ComputationalGrid(nx, ny, width / nx, height / ny, x_min, y_min,
                             spec.periodic_x, spec.periodic_y)
    return spec, build_mesh(grid, spec.mappings[flavour])


def test_unknown_names_rejected():
    with pytest.raises(ConfigError):
        make_case("vortex")
    with pytest.raises(ConfigError):
        run_case(RunConfig(case="solid_body", scheme="leapfrog",
                           nx=8, ny=8, dt=1.0))
    with pytest.raises(ConfigError):
        run_case(RunConfig(case="solid_body", scheme="split",
                           nx=8, ny=8, dt=1.0, mesh="curvy"))
    with pytest.raises(ConfigError):
        multiply_count("leapfrog")


def test_mountain_height_validation():
    with pytest.raises(ConfigError):
        make_case("solid_body", h0=500.0)
    with pytest.raises(ConfigError):
        make_case("orography", h0=25.0e3)   # hill may not reach the lid
    with pytest.raises(ConfigError):
        make_case("orography", h0=-1.0)
    flat = make_case("orography", h0=0.0)
    assert flat.mappings["distorted"].surface(0.0) == 0.0


def test_bad_grid_and_step_rejected():
    with pytest.raises(ConfigError):
        run_case(RunConfig(case="solid_body", scheme="split",
                           nx=3, ny=8, dt=1.0))
    with pytest.raises(ConfigError):
        run_case(RunConfig(case="solid_body", scheme="split",
                           nx=8, ny=8, dt=0.0))
    with pytest.raises(ConfigError):
        run_case(RunConfig(case="solid_body", scheme="split",
                           nx=8, ny=8, dt=1.0, t_end=-5.0))


def test_solid_body_initial_and_reference():
    spec, mesh = case_mesh("solid_body", 100, 100)
    phi = initial_field(spec, mesh)
    assert phi.max() >= 0.98     # blob peak lands within half a cell
    com_x = np.sum(mesh.cell_volumes * phi * mesh.cell_centres[..., 0]) \
        / np.sum(mesh.cell_volumes * phi)
    com_y = np.sum(mesh.cell_volumes * phi * mesh.cell_centres[..., 1]) \
        / np.sum(mesh.cell_volumes * phi)
    assert abs(com_x - 5000.0) < 1.0 and abs(com_y - 7500.0) < 1.0
    # a quarter revolution takes 150 s and lands the blob centre at west
    assert float(spec.reference(2500.0, 5000.0, 150.0)) == pytest.approx(
        1.0, abs=1e-12)
    # one full revolution returns the initial field
    assert np.allclose(analytic_solution(spec, mesh, 600.0), phi, atol=1e-10)


def test_orography_initial_and_reference():
    spec = make_case("orography")
    assert float(spec.initial(-50.0e3, 9.0e3)) == 1.0
    assert float(spec.initial(-25.0e3, 9.0e3)) == 0.0    # r = 1 edge
    assert float(spec.initial(-50.0e3, 0.0)) == 0.0
    # above the shear layer u = 10, so t = 1e4 s carries the peak 100 km
    assert float(spec.reference(50.0e3, 9.0e3, 1.0e4)) == pytest.approx(
        1.0, abs=1e-9)
    # below the shear layer the flow is still
    x = np.linspace(-140.0e3, 140.0e3, 13)
    assert np.allclose(spec.reference(x, 2.0e3, 1.0e4), spec.initial(x, 2.0e3))
    # mid-layer level moves at half speed: 50 km back lands on r = 0.5
    assert float(spec.reference(0.0, 4.5e3, 1.0e4)) == pytest.approx(
        0.5, rel=1e-9)


def test_deform_initial_midpoint_and_reference():
    spec = make_case("deform")
    lx = 2.0 * np.pi
    # the blobs sit 2*(lx/12) apart across the x = pi seam; at the seam
    # midpoint the two tails add
    want = 2.0 * 0.95 * math.exp(-((lx / 12.0) ** 2) / 0.2)
    assert float(spec.initial(np.pi, 0.0)) == pytest.approx(want, rel=1e-12)
    peak = float(spec.initial(5.0 * np.pi / 6.0, 0.0))
    assert 0.95 <= peak <= 0.96  # own blob plus the far tail
    x = np.linspace(-np.pi, np.pi, 7)
    assert np.allclose(spec.reference(x, 0.0, 5.0), spec.initial(x, 0.0))
    with pytest.raises(ReferenceUnavailable):
        spec.reference(0.0, 0.0, 2.5)
    _, mesh = case_mesh("deform", 12, 6)
    with pytest.raises(ReferenceUnavailable):
        analytic_solution(spec, mesh, 2.5)


def test_error_norms_hand_case():
    grid = ComputationalGrid(4, 4, 1.0, 1.0)
    mesh = build_mesh(grid, make_mapping("identity"))
    ref = np.ones((4, 4))
    field = np.ones((4, 4))
    field[0, 0] = 3.0                       # one unit cell off by 2
    l2, linf = error_norms(field, ref, mesh)
    assert l2 == pytest.approx(0.5)         # sqrt(4 / 16)
    assert linf == pytest.approx(2.0)
    with pytest.raises(ValueError):
        error_norms(field, np.zeros((4, 4)), mesh)


def test_convergence_slope():
    pts = [(h, h ** 2) for h in (1.0, 0.5, 0.25, 0.125)]
    assert convergence_slope(pts) == pytest.approx(2.0, abs=1e-12)
    pts = [(h, 3.0 * h ** 3) for h in (1.0, 0.5, 0.25)]
    assert convergence_slope(pts) == pytest.approx(3.0, abs=1e-12)
    # the coarsest point is off the asymptotic line; skipping it recovers
    # the fine-grid slope
    pts = [(1.0, 999.0), (0.5, 0.25), (0.25, 0.0625)]
    assert convergence_slope(pts, skip_coarsest=True) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        convergence_slope([(0.5, 0.1)])


def test_multiply_count_pins():
    assert multiply_count("split") == 40.0
    assert multiply_count("mol-rk2") == 48.0
    assert multiply_count("mol-implicit", iters_mean=6.5, n_outer=2) == 204.0
    assert multiply_count("mol-implicit", iters_mean=6.5, n_outer=4) == 252.0


def test_cell_averages_quadrature_oracle():
    grid = ComputationalGrid(20, 20, 500.0, 500.0)
    mesh = build_mesh(grid, make_mapping("vmesh"))
    avg = _cell_averages(lambda x, y: np.ones_like(x), mesh)
    assert np.allclose(avg, 1.0, atol=1e-12)
    # a linear field's cell average is its value at the area centroid,
    # which is exactly where cell_centres sit
    avg = _cell_averages(lambda x, y: 2.0 * x + 3.0 * y, mesh)
    want = 2.0 * mesh.cell_centres[..., 0] + 3.0 * mesh.cell_centres[..., 1]
    assert np.allclose(avg, want, rtol=1e-9)


def test_initial_field_averaged_mass():
    spec, mesh = case_mesh("solid_body", 50, 50)
    avg = initial_field(spec, mesh, averaged=True)
    point = initial_field(spec, mesh)
    assert avg.max() < point.max()          # averaging flattens the peak
    mass = float(np.sum(mesh.cell_volumes * avg))
    want = 2.0 * np.pi * 500.0 ** 2        # Gaussian integral, tiny tails
    assert mass == pytest.approx(want, rel=1e-4)


def test_run_case_split_writes_csvs(tmp_path):
    out = tmp_path / "run"
    result = run_case(RunConfig(case="solid_body", scheme="split",
                                nx=50, ny=50, dt=2.0, out=str(out)))
    assert result.completed and result.steps == 300
    names = sorted(p.name for p in out.glob("*.csv"))
    want = sorted("solid_body_split_t%d.csv" % t
                  for t in range(0, 700, 100))
    assert names == want
    assert sorted(result.csv_paths) == sorted(str(out / n) for n in want)
    assert (out / "run.log").exists() and (out / "summary.txt").exists()

    lines = (out / "solid_body_split_t0.csv").read_text().splitlines()
    assert lines[0] == "i,j,x,y,phi,error"
    assert len(lines) == 1 + 50 * 50
    assert lines[1].startswith("0,0,") and lines[2].startswith("1,0,")
    assert lines[51].startswith("0,1,")    # rows ordered j-outer, i-inner
    assert all(line.endswith(",0") for line in lines[1:])  # exact at t = 0

    fields = parse_summary(result.summary)
    assert list(fields) == SUMMARY_KEYS
    assert fields["status"] == "completed"
    assert float(fields["l2"]) == pytest.approx(result.l2, rel=1e-5)
    assert (out / "summary.txt").read_text().strip() == result.summary


def test_run_case_deterministic(tmp_path):
    config = dict(case="solid_body", scheme="split", nx=24, ny=24,
                  dt=5.0, t_end=20.0)
    a = run_case(RunConfig(out=str(tmp_path / "a"), **config))
    b = run_case(RunConfig(out=str(tmp_path / "b"), **config))
    assert a.summary == b.summary
    for path_a in a.csv_paths:
        path_b = path_a.replace("/a/", "/b/")
        assert open(path_a, "rb").read() == open(path_b, "rb").read()


def test_run_case_implicit_logs_and_cost(tmp_path):
    out = tmp_path / "run"
    result = run_case(RunConfig(case="solid_body", scheme="mol-implicit",
                                nx=24, ny=24, dt=4.0, t_end=20.0,
                                out=str(out)))
    assert result.completed
    assert result.n_outer == 2             # max Courant 0.96 stays below 1.1
    assert result.iters_total > 0
    assert result.mults_per_cell_step == result.iters_mean * 24.0 + 48.0
    log = (out / "run.log").read_text()
    assert "step=1 outer=0 iters=" in log
    assert "step=1 outer=1 iters=" in log
    assert math.isfinite(result.l2) and result.l2 < 0.2


def test_run_case_outer_iterations_scale_with_courant():
    result = run_case(RunConfig(case="deform", scheme="mol-implicit",
                                nx=24, ny=12, dt=0.2, t_end=0.4))
    assert result.completed
    assert result.max_courant > 1.1 and result.n_outer == 4
    assert result.mults_per_cell_step == result.iters_mean * 24.0 + 96.0


def test_run_case_diverged_orography(tmp_path):
    out = tmp_path / "run"
    result = run_case(RunConfig(case="orography", scheme="split",
                                nx=300, ny=50, dt=1000.0, mesh="distorted",
                                out=str(out)))
    assert not result.completed
    assert result.status.startswith("diverged_at_step_")
    assert math.isnan(result.l2) and math.isnan(result.linf)
    assert result.max_courant > 10.0
    log = (out / "run.log").read_text()
    assert "deformational Courant number" in log    # c_d > 1 warning
    assert "diverged at step" in log
    assert "status=diverged_at_step_" in result.summary


def test_run_case_deform_lacks_midrun_reference():
    result = run_case(RunConfig(case="deform", scheme="split",
                                nx=24, ny=12, dt=0.05, t_end=2.0))
    assert result.completed and result.steps == 40
    assert math.isnan(result.l2)    # no analytic solution before t = 5
    assert result.max_courant > 0.0


def test_parse_summary_tokens():
    fields = parse_summary("a=1 b=two c=3.5")
    assert fields == {"a": "1", "b": "two", "c": "3.5"}
    with pytest.raises(ValueError):
        parse_summary("a=1 naked")
