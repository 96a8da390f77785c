"""Logically rectangular meshes built by mapping a uniform computational grid.

All geometry is derived discretely from the mapped vertex positions:
shoelace cell volumes, edge-normal face area vectors, and Jacobian ratios
|J|^-1 = physical measure / computational measure.  The mappings keep
vertical grid lines vertical and stretch each column piecewise-linearly,
so every column preserves its total height (or follows the terrain lid
exactly for the terrain-following mapping).
"""

import csv
from dataclasses import dataclass, field

import numpy as np


class MeshConstructionError(Exception):
    """Raised when a mapped mesh is geometrically invalid."""


@dataclass(frozen=True)
class ComputationalGrid:
    """Uniform rectangular index space that mappings distort."""

    nx: int
    ny: int
    dx: float
    dy: float
    x_min: float = 0.0
    y_min: float = 0.0
    periodic_x: bool = False
    periodic_y: bool = False

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError("grid needs nx >= 4 and ny >= 4, got %dx%d"
                             % (self.nx, self.ny))
        if self.dx <= 0.0 or self.dy <= 0.0:
            raise ValueError("grid spacings must be positive")

    @property
    def x_max(self):
        return self.x_min + self.nx * self.dx

    @property
    def y_max(self):
        return self.y_min + self.ny * self.dy

    def vertex_coords(self):
        """1D arrays of computational vertex coordinates."""
        xs = self.x_min + self.dx * np.arange(self.nx + 1)
        ys = self.y_min + self.dy * np.arange(self.ny + 1)
        return xs, ys


class IdentityMapping:
    """Mapping that leaves computational coordinates unchanged."""

    kind = "identity"

    def map_xy(self, x, y):
        return np.asarray(x, dtype=float), np.asarray(y, dtype=float)

    def inverse_xy(self, x, y):
        return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


class VMeshMapping:
    """Kinked-channel mapping whose mid-level grid line forms a 120 degree V.

    Columns are stretched piecewise-linearly about a V-shaped pivot line
    f(x) with slope 1/sqrt(3), so mesh lines meet the pivot at 120 degrees
    while every column keeps its full height 2*mid_height.
    """

    kind = "vmesh"

    def __init__(self, mid_height=5000.0, kink_x=5000.0):
        self.mid_height = float(mid_height)
        self.kink_x = float(kink_x)

    def pivot(self, x):
        """Physical height that the computational mid-level maps onto."""
        x = np.asarray(x, dtype=float)
        ym, xm = self.mid_height, self.kink_x
        lo = ym * (1.0 + 1.0 / (2.0 * np.sqrt(3.0))) - x / np.sqrt(3.0)
        hi = ym * (1.0 - 1.0 / (2.0 * np.sqrt(3.0))) + (x - xm) / np.sqrt(3.0)
        return np.where(x <= xm, lo, hi)

    def map_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ym = self.mid_height
        f = self.pivot(x)
        below = f * y / ym
        above = f + (y - ym) * (2.0 * ym - f) / ym
        return x, np.where(y < ym, below, above)

    def inverse_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ym = self.mid_height
        f = self.pivot(x)
        below = ym * y / f
        above = ym + ym * (y - f) / (2.0 * ym - f)
        return x, np.where(y < f, below, above)


class TerrainFollowingMapping:
    """Basic terrain-following mapping between a cosine ridge and a flat lid."""

    kind = "btf"

    def __init__(self, lid_height=25.0e3, peak_height=3.0e3,
                 half_width=25.0e3, wavelength=8.0e3):
        self.lid_height = float(lid_height)
        self.peak_height = float(peak_height)
        self.half_width = float(half_width)
        self.wavelength = float(wavelength)

    def surface(self, x):
        """Terrain height evaluated exactly (no smoothing)."""
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.half_width
        h = self.peak_height * np.cos(np.pi * x / self.wavelength) ** 2 \
            * np.cos(np.pi * x / (2.0 * self.half_width)) ** 2
        return np.where(inside, h, 0.0)

    def map_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        h = self.surface(x)
        return x, h + y * (self.lid_height - h) / self.lid_height

    def inverse_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        h = self.surface(x)
        return x, self.lid_height * (y - h) / (self.lid_height - h)


class DeformChannelMapping:
    """Channel mapping with a cubed-sphere-like zigzag of 120 degree kinks."""

    kind = "deform_channel"

    def __init__(self, length_x=2.0 * np.pi, length_y=np.pi):
        self.length_x = float(length_x)
        self.length_y = float(length_y)

    def pivot(self, x):
        """Physical height of the computational centreline, a zigzag line."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        inner = (np.pi / 4.0 - ax) / np.sqrt(3.0)
        outer = (ax - 3.0 * np.pi / 4.0) / np.sqrt(3.0)
        return np.where(ax <= np.pi / 2.0, inner, outer)

    def map_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ly = self.length_y
        f = self.pivot(x)
        below = f + y * (ly + 2.0 * f) / ly
        above = f + y * (ly - 2.0 * f) / ly
        return x, np.where(y < 0.0, below, above)

    def inverse_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ly = self.length_y
        f = self.pivot(x)
        below = ly * (y - f) / (ly + 2.0 * f)
        above = ly * (y - f) / (ly - 2.0 * f)
        return x, np.where(y < f, below, above)


_MAPPINGS = {
    "identity": IdentityMapping,
    "vmesh": VMeshMapping,
    "btf": TerrainFollowingMapping,
    "deform_channel": DeformChannelMapping,
}


def make_mapping(kind, **params):
    """Construct a mapping by name; unknown names raise ValueError."""
    try:
        cls = _MAPPINGS[kind]
    except KeyError:
        raise ValueError("unknown mesh mapping %r (have %s)"
                         % (kind, ", ".join(sorted(_MAPPINGS)))) from None
    return cls(**params)


def map_point(mapping, p):
    """Map a computational-space point (x, y) to physical space."""
    x, y = mapping.map_xy(p[0], p[1])
    return float(x), float(y)


@dataclass(frozen=True)
class PhysicalMesh:
    """Distorted mesh with geometry derived from its vertex positions.

    Face area vectors point in the positive computational direction; the
    Jacobian ratios are |J|^-1 (physical measure over computational
    measure) at cells and at faces.
    """

    grid: ComputationalGrid
    mapping: object
    vertices: np.ndarray          # (nx+1, ny+1, 2)
    cell_volumes: np.ndarray      # (nx, ny)
    cell_centres: np.ndarray      # (nx, ny, 2)
    face_vec_x: np.ndarray        # (nx+1, ny, 2)
    face_vec_y: np.ndarray        # (nx, ny+1, 2)
    face_centres_x: np.ndarray    # (nx+1, ny, 2)
    face_centres_y: np.ndarray    # (nx, ny+1, 2)
    jac_inv_cell: np.ndarray      # (nx, ny)
    jac_inv_face_x: np.ndarray    # (nx+1, ny)
    jac_inv_face_y: np.ndarray    # (nx, ny+1)
    domain_area: float = field(default=0.0)

    @property
    def nx(self):
        return self.grid.nx

    @property
    def ny(self):
        return self.grid.ny


def build_mesh(grid, mapping):
    """Map the grid's vertices and assemble all discrete geometry."""
    xs, ys = grid.vertex_coords()
    xc, yc = np.meshgrid(xs, ys, indexing="ij")
    px, py = mapping.map_xy(xc, yc)
    vertices = np.stack([np.broadcast_to(px, xc.shape).astype(float),
                         np.broadcast_to(py, yc.shape).astype(float)], axis=-1)

    v00 = vertices[:-1, :-1]
    v10 = vertices[1:, :-1]
    v11 = vertices[1:, 1:]
    v01 = vertices[:-1, 1:]

    def cross(a, b):
        return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]

    # Shoelace area of each quad, positive for counter-clockwise vertices.
    twice_area = (cross(v00, v10) + cross(v10, v11)
                  + cross(v11, v01) + cross(v01, v00))
    cell_volumes = 0.5 * twice_area
    bad = np.argwhere(cell_volumes <= 0.0)
    if bad.size:
        i, j = bad[0]
        raise MeshConstructionError(
            "inverted or degenerate cell at (i=%d, j=%d): volume %g"
            % (i, j, cell_volumes[i, j]))

    # Polygon centroid of each quad.
    def tri_accum():
        cx = np.zeros_like(cell_volumes)
        cy = np.zeros_like(cell_volumes)
        quad = (v00, v10, v11, v01)
        for k in range(4):
            a = quad[k]
            b = quad[(k + 1) % 4]
            w = cross(a, b)
            cx += (a[..., 0] + b[..., 0]) * w
            cy += (a[..., 1] + b[..., 1]) * w
        return cx / (6.0 * cell_volumes), cy / (6.0 * cell_volumes)

    ccx, ccy = tri_accum()
    cell_centres = np.stack([ccx, ccy], axis=-1)

    # x-faces: edges from vertex (i, j) to (i, j+1); normal points to +x.
    ex = vertices[:, 1:] - vertices[:, :-1]
    face_vec_x = np.stack([ex[..., 1], -ex[..., 0]], axis=-1)
    face_centres_x = 0.5 * (vertices[:, 1:] + vertices[:, :-1])
    # y-faces: edges from vertex (i, j) to (i+1, j); normal points to +y.
    ey = vertices[1:, :] - vertices[:-1, :]
    face_vec_y = np.stack([-ey[..., 1], ey[..., 0]], axis=-1)
    face_centres_y = 0.5 * (vertices[1:, :] + vertices[:-1, :])

    comp_area = grid.dx * grid.dy
    jac_inv_cell = cell_volumes / comp_area
    jac_inv_face_x = np.hypot(ex[..., 0], ex[..., 1]) / grid.dy
    # Jacobian at y-faces is the area stretch, not the slanted edge length:
    # trajectories in computational y advance at flux / (dx * area ratio),
    # so the face value is the mean of the two adjacent cell ratios
    # (one-sided at walls).
    jac_inv_face_y = np.empty((grid.nx, grid.ny + 1))
    jac_inv_face_y[:, 1:-1] = 0.5 * (jac_inv_cell[:, :-1] + jac_inv_cell[:, 1:])
    jac_inv_face_y[:, 0] = jac_inv_cell[:, 0]
    jac_inv_face_y[:, -1] = jac_inv_cell[:, -1]
    if grid.periodic_y:
        wrap = 0.5 * (jac_inv_cell[:, -1] + jac_inv_cell[:, 0])
        jac_inv_face_y[:, 0] = wrap
        jac_inv_face_y[:, -1] = wrap

    mesh = PhysicalMesh(
        grid=grid, mapping=mapping, vertices=vertices,
        cell_volumes=cell_volumes, cell_centres=cell_centres,
        face_vec_x=face_vec_x, face_vec_y=face_vec_y,
        face_centres_x=face_centres_x, face_centres_y=face_centres_y,
        jac_inv_cell=jac_inv_cell, jac_inv_face_x=jac_inv_face_x,
        jac_inv_face_y=jac_inv_face_y,
        domain_area=float(np.sum(cell_volumes)))
    for arr in (mesh.vertices, mesh.cell_volumes, mesh.cell_centres,
                mesh.face_vec_x, mesh.face_vec_y, mesh.face_centres_x,
                mesh.face_centres_y, mesh.jac_inv_cell, mesh.jac_inv_face_x,
                mesh.jac_inv_face_y):
        arr.flags.writeable = False
    return mesh


def face_closure_residual(mesh):
    """Per-cell magnitude of the outward face-vector sum (exact zero ideal)."""
    sx = mesh.face_vec_x
    sy = mesh.face_vec_y
    net = (sx[1:, :] - sx[:-1, :]) + (sy[:, 1:] - sy[:, :-1])
    return np.hypot(net[..., 0], net[..., 1])


def write_vertices_csv(mesh, path):
    """Dump vertex positions as i,j,x_vertex,y_vertex rows (j outer)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "x_vertex", "y_vertex"])
        nx, ny = mesh.nx, mesh.ny
        for j in range(ny + 1):
            for i in range(nx + 1):
                x, y = mesh.vertices[i, j]
                writer.writerow([i, j, repr(float(x)), repr(float(y))])
