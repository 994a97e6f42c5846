"""Staggered grids and permittivity rasterisation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nvreflector.device import ParaboloidDevice, PlanarSample, SlabStructure, UniformMedium
from nvreflector.fdtd.config import SimulationConfig
from nvreflector.fdtd.pml import cpml_coefficients, stretched_radius_coefficients

SUBSAMPLES = 5
BYTES_PER_CELL_CYL = 8 * (6 + 12 + 3)  # fields, auxiliary PML arrays, permittivities


class GridTooLargeError(MemoryError):
    def __init__(self, cells: int, needed: float, budget: float):
        super().__init__(f"grid of {cells} cells needs about {needed / 1e9:.2f} GB, "
                         f"above the {budget / 1e9:.2f} GB budget")
        self.cells = cells
        self.needed = needed


def structure_extent(structure):
    """Radial and vertical extent (r_max, z_min, z_max) of the features to resolve."""
    if isinstance(structure, ParaboloidDevice):
        return structure.mouth_radius, -structure.height_nm, 0.0
    if isinstance(structure, PlanarSample):
        return 0.0, -structure.emitter_depth, 0.0
    if isinstance(structure, SlabStructure):
        return 0.0, -structure.thickness, 0.0
    if isinstance(structure, UniformMedium):
        return 0.0, 0.0, 0.0
    raise TypeError(f"unsupported structure {type(structure).__name__}")


@dataclass
class CylindricalGrid:
    """Body-of-revolution Yee grid in (r, z).

    Index ``i`` counts radial nodes at ``r = i * dr`` (E_phi, E_z, H_r) or
    ``(i + 1/2) * dr`` (E_r, H_phi, H_z); index ``k`` counts vertical nodes at
    ``z = z0 + k * dr`` (E_r, E_phi, H_z) or half a cell higher (E_z, H_r,
    H_phi).
    """

    nr: int
    nz: int
    dr: float
    z0: float
    pml_cells: int
    eps_r: np.ndarray
    eps_phi: np.ndarray
    eps_z: np.ndarray
    # CPML coefficients: radial at integer and half nodes, vertical likewise
    br_int: np.ndarray
    cr_int: np.ndarray
    br_half: np.ndarray
    cr_half: np.ndarray
    bz_int: np.ndarray
    cz_int: np.ndarray
    bz_half: np.ndarray
    cz_half: np.ndarray
    dt: float
    # recursion coefficients of the stretched 1/r terms at integer and half radii
    sb_int: np.ndarray = None
    sc_int: np.ndarray = None
    sb_half: np.ndarray = None
    sc_half: np.ndarray = None

    def __post_init__(self):
        if self.sb_int is None:
            self.sb_int, self.sc_int = np.ones(self.nr + 1), np.zeros(self.nr + 1)
        if self.sb_half is None:
            self.sb_half, self.sc_half = np.ones(self.nr), np.zeros(self.nr)

    @property
    def cells(self) -> int:
        return (self.nr + 1) * (self.nz + 1)

    def r_int(self):
        return np.arange(self.nr + 1) * self.dr

    def r_half(self):
        return (np.arange(self.nr) + 0.5) * self.dr

    def z_int(self):
        return self.z0 + np.arange(self.nz + 1) * self.dr

    def z_half(self):
        return self.z0 + (np.arange(self.nz) + 0.5) * self.dr

    @property
    def r_interior(self) -> float:
        """Radius where the radial absorber starts."""
        return (self.nr - self.pml_cells) * self.dr

    def z_index(self, z: float) -> int:
        return int(round((z - self.z0) / self.dr))


def averaged_permittivity(index_rz, r, z, dr, sub=SUBSAMPLES):
    """Volume-weighted mean of n^2 over the cell centred at each (r, z) node."""
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    rr = r[:, None, None, None] + dr * offs[None, None, :, None]
    zz = z[None, :, None, None] + dr * offs[None, None, None, :]
    rr = np.broadcast_to(rr, (r.size, z.size, sub, sub))
    zz = np.broadcast_to(zz, rr.shape)
    weight = np.abs(rr)
    eps = index_rz(np.abs(rr), zz) ** 2
    wsum = weight.sum(axis=(2, 3))
    # nodes on the axis integrate over a half cell; weights are r, so this is automatic
    avg = (eps * weight).sum(axis=(2, 3)) / np.where(wsum > 0, wsum, 1.0)
    on_axis = wsum <= 0
    if np.any(on_axis):
        avg[on_axis] = eps.mean(axis=(2, 3))[on_axis]
    return avg


def grid_dimensions(config: SimulationConfig):
    """Radial and vertical cell counts and the bottom edge ``(nr, nz, z0)``."""
    structure = config.device
    dr = config.cell_size
    pml = config.pml_cells
    r_feat, z_lo, z_hi = structure_extent(structure)
    src = config.source.absolute_position(structure)
    r_src = math.hypot(src[0], src[1])
    pad = config.padding
    if config.domain_radius is not None:
        r_max = config.domain_radius
    else:
        r_max = max(r_feat, r_src) + pad
    nr = int(math.ceil(r_max / dr)) + pml
    if config.domain_z is not None:
        z_min, z_max = config.domain_z
    else:
        z_min = min(z_lo, src[2]) - config.monitor_gap - pad
        z_max = max(z_hi, src[2]) + pad
    nz = int(math.ceil((z_max - z_min) / dr)) + 2 * pml
    return nr, nz, z_min - pml * dr


def memory_estimate(config: SimulationConfig) -> float:
    """Bytes held by one azimuthal-order run."""
    nr, nz, _ = grid_dimensions(config)
    return float((nr + 1) * (nz + 1) * BYTES_PER_CELL_CYL)


def build_grid(config: SimulationConfig, dt_courant: float | None = None) -> CylindricalGrid:
    """Rasterise the structure on a cylindrical grid with absorbers on three sides."""
    structure = config.device
    dr = config.cell_size
    pml = config.pml_cells
    nr, nz, z0 = grid_dimensions(config)
    cells = (nr + 1) * (nz + 1)
    needed = cells * BYTES_PER_CELL_CYL
    if needed > config.memory_budget_bytes:
        raise GridTooLargeError(cells, needed, config.memory_budget_bytes)

    r_i = np.arange(nr + 1) * dr
    r_h = (np.arange(nr) + 0.5) * dr
    z_i = z0 + np.arange(nz + 1) * dr
    z_h = z0 + (np.arange(nz) + 0.5) * dr
    index_rz = structure.index_rz
    eps_r = averaged_permittivity(index_rz, r_h, z_i, dr)
    eps_phi = averaged_permittivity(index_rz, r_i, z_i, dr)
    eps_z = averaged_permittivity(index_rz, r_i, z_h, dr)

    courant = dt_courant if dt_courant is not None else 0.5
    dt = courant * dr
    lam = max(config.wavelengths)
    thick = pml * dr
    n_side = 1.0
    # radial absorber at the outer wall
    r_start = (nr - pml) * dr
    br_int, cr_int = cpml_coefficients(r_i - r_start, thick, dt, n_side, lam)
    br_half, cr_half = cpml_coefficients(r_h - r_start, thick, dt, n_side, lam)
    # vertical absorbers: index taken from the medium they terminate
    z_bot, z_top = z0 + pml * dr, z0 + (nz - pml) * dr
    n_bot = float(np.sqrt(eps_phi[0, pml]))
    n_top = float(np.sqrt(eps_phi[0, nz - pml]))

    def zcoef(z):
        depth_top = z - z_top
        depth_bot = z_bot - z
        b1, c1 = cpml_coefficients(depth_top, thick, dt, n_top, lam)
        b2, c2 = cpml_coefficients(depth_bot, thick, dt, n_bot, lam)
        b = np.where(depth_top > 0, b1, b2)
        c = np.where(depth_top > 0, c1, c2)
        return b, c

    bz_int, cz_int = zcoef(z_i)
    bz_half, cz_half = zcoef(z_h)
    sb_int, sc_int = stretched_radius_coefficients(r_i, r_start, thick, dt, n_side, lam)
    sb_half, sc_half = stretched_radius_coefficients(r_h, r_start, thick, dt, n_side, lam)
    return CylindricalGrid(nr, nz, dr, z0, pml, eps_r, eps_phi, eps_z, br_int, cr_int, br_half,
                           cr_half, bz_int, cz_int, bz_half, cz_half, dt,
                           sb_int, sc_int, sb_half, sc_half)
