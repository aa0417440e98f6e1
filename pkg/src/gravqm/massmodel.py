"""Rigid mass distributions and displaced two-placement superposition pairs.

Analytic solids (boxes, spheres) carry a uniform interior density; voxel
grids carry a per-cell density.  Voxelization represents partially covered
cells by their covered fraction: exact 1-D interval intersections for boxes,
4^3 subsampling for sphere boundary cells.  Getting the partial-coverage
layer exactly right matters because displacement pairs are built with
offsets far below the cell size.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class Box:
    side: tuple[float, float, float]  # edge lengths (m); occupies [origin, origin+side]


@dataclass(frozen=True)
class Sphere:
    radius: float  # m; origin is the center


@dataclass(frozen=True)
class VoxelGrid:
    cell_size: float                      # m, cubic cells
    densities: np.ndarray = field(repr=False)  # (nx, ny, nz) kg/m^3

    def __post_init__(self):
        d = np.asarray(self.densities, dtype=float)
        if d.ndim != 3 or min(d.shape) < 1:
            raise ValueError("voxel densities must be a 3-D array with all dims >= 1")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be > 0")
        if np.any(d < 0):
            raise ValueError("densities must be >= 0")
        object.__setattr__(self, "densities", d)


@dataclass(frozen=True)
class MassDistribution:
    """A rigid body: shape plus placement pose (origin) and uniform density.

    ``origin`` is the minimum corner for boxes and voxel grids, the center
    for spheres.  ``density0`` applies to analytic shapes only.
    """

    shape: Box | Sphere | VoxelGrid
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    density0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "origin",
                           tuple(float(v) for v in np.asarray(self.origin).ravel()))
        if isinstance(self.shape, (Box, Sphere)) and self.density0 <= 0:
            raise ValueError("analytic shapes need density0 > 0")
        m = total_mass(self)
        if m <= 0 or not np.isfinite(m):
            raise ValueError("total mass must be finite and > 0")


def total_mass(dist: MassDistribution) -> float:
    s = dist.shape
    if isinstance(s, Box):
        return dist.density0 * s.side[0] * s.side[1] * s.side[2]
    if isinstance(s, Sphere):
        return dist.density0 * 4.0 / 3.0 * np.pi * s.radius**3
    return float(s.densities.sum()) * s.cell_size**3


def translate(dist: MassDistribution, delta) -> MassDistribution:
    """Rigid translation: only the origin moves, densities are untouched."""
    o = tuple(np.asarray(dist.origin, dtype=float) + np.asarray(delta, dtype=float))
    return replace(dist, origin=o)


def bounding_box(dist: MassDistribution) -> tuple[np.ndarray, np.ndarray]:
    o = np.asarray(dist.origin, dtype=float)
    s = dist.shape
    if isinstance(s, Box):
        return o, o + np.asarray(s.side, dtype=float)
    if isinstance(s, Sphere):
        return o - s.radius, o + s.radius
    ext = np.asarray(s.densities.shape, dtype=float) * s.cell_size
    return o, o + ext


@dataclass(frozen=True)
class SuperposedPair:
    """Two placements (a, b) of the same body, the input to the reduction energy."""

    a: MassDistribution
    b: MassDistribution

    def __post_init__(self):
        ma, mb = total_mass(self.a), total_mass(self.b)
        if abs(ma - mb) > 1e-12 * max(ma, mb):
            raise ValueError(f"pair members must have equal total mass "
                             f"(got {ma!r} vs {mb!r})")


def build_displaced_cube(S: float, rho0: float, d: float, axis: str = "z") -> SuperposedPair:
    """Pair of identical cubes of side S, the second translated by d along ``axis``."""
    if S <= 0 or rho0 <= 0:
        raise ValueError("cube side and density must be > 0")
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {sorted(_AXES)}")
    cube = MassDistribution(Box((S, S, S)), origin=(0.0, 0.0, 0.0), density0=rho0)
    shift = np.zeros(3)
    shift[_AXES[axis]] = d
    return SuperposedPair(cube, translate(cube, shift))


def box_overlap_volume(a: MassDistribution, b: MassDistribution) -> float:
    """Intersection volume of two boxes (exact interval arithmetic)."""
    if not (isinstance(a.shape, Box) and isinstance(b.shape, Box)):
        raise ValueError("overlap volume is defined for box shapes")
    (alo, ahi), (blo, bhi) = bounding_box(a), bounding_box(b)
    ov = np.minimum(ahi, bhi) - np.maximum(alo, blo)
    return float(np.prod(np.clip(ov, 0.0, None)))


# ---------------------------------------------------------------------------
# voxelization

@dataclass(frozen=True)
class GridSpec:
    origin: tuple[float, float, float]
    dims: tuple[int, int, int]
    cell_size: float

    def centers(self, axis: int) -> np.ndarray:
        return (self.origin[axis]
                + (np.arange(self.dims[axis]) + 0.5) * self.cell_size)


def grid_for(dist_or_pair, n_cells_per_side: int) -> GridSpec:
    """Grid covering the bounding box (of the pair union, for pairs)."""
    if n_cells_per_side < 1:
        raise ValueError("n_cells_per_side must be >= 1")
    if isinstance(dist_or_pair, SuperposedPair):
        lo_a, hi_a = bounding_box(dist_or_pair.a)
        lo_b, hi_b = bounding_box(dist_or_pair.b)
        lo, hi = np.minimum(lo_a, lo_b), np.maximum(hi_a, hi_b)
    else:
        lo, hi = bounding_box(dist_or_pair)
    ext = hi - lo
    cell = float(ext.max()) / n_cells_per_side
    dims = tuple(int(np.ceil(e / cell - 1e-9)) for e in ext)
    return GridSpec(tuple(lo), dims, cell)


def _box_coverage(dist: MassDistribution, grid: GridSpec) -> np.ndarray:
    lo, hi = bounding_box(dist)
    fr = []
    for ax in range(3):
        edges = grid.origin[ax] + np.arange(grid.dims[ax] + 1) * grid.cell_size
        ov = np.minimum(edges[1:], hi[ax]) - np.maximum(edges[:-1], lo[ax])
        fr.append(np.clip(ov, 0.0, None) / grid.cell_size)
    return fr[0][:, None, None] * fr[1][None, :, None] * fr[2][None, None, :]


def _sphere_coverage(dist: MassDistribution, grid: GridSpec, sub: int = 4) -> np.ndarray:
    center = np.asarray(dist.origin, dtype=float)
    R = dist.shape.radius
    xs = [grid.centers(ax) - center[ax] for ax in range(3)]
    X, Y, Z = np.meshgrid(*xs, indexing="ij")
    r = np.sqrt(X**2 + Y**2 + Z**2)
    half_diag = 0.5 * np.sqrt(3.0) * grid.cell_size
    cov = np.zeros(grid.dims)
    cov[r + half_diag <= R] = 1.0
    boundary = (r - half_diag < R) & (r + half_diag > R)
    if np.any(boundary):
        idx = np.argwhere(boundary)
        # sub^3 subcell centers per boundary cell
        off = (np.arange(sub) + 0.5) / sub * grid.cell_size
        ox, oy, oz = np.meshgrid(off, off, off, indexing="ij")
        offsets = np.stack([ox, oy, oz], axis=-1).reshape(-1, 3)
        corners = (np.asarray(grid.origin) + idx * grid.cell_size)
        pts = corners[:, None, :] + offsets[None, :, :]
        inside = np.linalg.norm(pts - center, axis=2) <= R
        cov[idx[:, 0], idx[:, 1], idx[:, 2]] = inside.mean(axis=1)
    return cov


def voxelize(dist: MassDistribution, n_cells_per_side: int,
             grid: GridSpec | None = None) -> MassDistribution:
    """Voxel-grid representation of an analytic shape on ``grid``.

    Partially covered cells carry the covered-fraction density, so box
    voxelization conserves total mass exactly.
    """
    if isinstance(dist.shape, VoxelGrid):
        raise ValueError("voxelize expects an analytic (box or sphere) shape")
    if grid is None:
        grid = grid_for(dist, n_cells_per_side)
    if isinstance(dist.shape, Box):
        cov = _box_coverage(dist, grid)
    else:
        cov = _sphere_coverage(dist, grid)
    return MassDistribution(VoxelGrid(grid.cell_size, cov * dist.density0),
                            origin=grid.origin)


def voxelize_pair(pair: SuperposedPair, n_cells_per_side: int
                  ) -> tuple[MassDistribution, MassDistribution, GridSpec]:
    """Voxelize both members on one common grid spanning their union."""
    if isinstance(pair.a.shape, VoxelGrid) or isinstance(pair.b.shape, VoxelGrid):
        ga, gb = pair.a.shape, pair.b.shape
        if not (isinstance(ga, VoxelGrid) and isinstance(gb, VoxelGrid)
                and ga.cell_size == gb.cell_size
                and ga.densities.shape == gb.densities.shape
                and np.allclose(pair.a.origin, pair.b.origin)):
            raise ValueError("voxel-grid pairs must already share one grid")
        grid = GridSpec(tuple(pair.a.origin), ga.densities.shape, ga.cell_size)
        return pair.a, pair.b, grid
    grid = grid_for(pair, n_cells_per_side)
    return (voxelize(pair.a, n_cells_per_side, grid),
            voxelize(pair.b, n_cells_per_side, grid), grid)


def save_voxels(dist: MassDistribution, basepath) -> tuple[Path, Path]:
    """Write a voxel grid as raw float64 (C order) plus a plain-text header."""
    if not isinstance(dist.shape, VoxelGrid):
        raise ValueError("save_voxels expects a voxel-grid distribution")
    base = Path(basepath)
    bin_path = base.with_suffix(".bin")
    hdr_path = base.with_suffix(".txt")
    dist.shape.densities.astype(np.float64).tofile(bin_path)
    nx, ny, nz = dist.shape.densities.shape
    hdr_path.write_text(
        f"dims = {nx} {ny} {nz}\n"
        f"cell_size = {dist.shape.cell_size:.9e}\n"
        f"origin = {dist.origin[0]:.9e} {dist.origin[1]:.9e} {dist.origin[2]:.9e}\n"
        f"order = C\ndtype = float64\n")
    return bin_path, hdr_path
