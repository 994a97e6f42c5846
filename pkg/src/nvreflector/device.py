"""Device geometry and emitter description shared by the ray and wave solvers.

Coordinates are in nanometres with +z pointing away from the substrate.  The
paraboloid apex sits at the origin and the diamond occupies the region below
the surface ``z = -r**2 / (4 f)``.  The device mouth at depth ``h`` joins a
diamond substrate whose bottom facet faces the collection medium.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_DIAMOND = 2.4
N_OIL = 1.518


class InvalidSourceError(ValueError):
    pass


@dataclass(frozen=True)
class ParaboloidDevice:
    focal_length_f: float = 100.0
    height_h: float = 5.0  # um
    n_diamond: float = N_DIAMOND
    n_top: float = 1.0
    n_bottom: float = N_OIL
    substrate_thickness: float = 50.0  # um

    def __post_init__(self):
        if self.focal_length_f <= 0:
            raise ValueError("focal_length_f must be positive")
        if self.height_h * 1e3 <= self.focal_length_f:
            raise ValueError("height_h must exceed the focal length")
        if self.n_diamond <= self.n_top or self.n_diamond <= self.n_bottom:
            raise ValueError("n_diamond must exceed both n_top and n_bottom")
        if self.substrate_thickness <= 0:
            raise ValueError("substrate_thickness must be positive")

    @property
    def height_nm(self) -> float:
        return self.height_h * 1e3

    @property
    def substrate_nm(self) -> float:
        return self.substrate_thickness * 1e3

    @property
    def mouth_radius(self) -> float:
        return float(np.sqrt(4.0 * self.focal_length_f * self.height_nm))

    @property
    def emitter_origin(self) -> np.ndarray:
        """Position of the focus, the reference point for dipole positions."""
        return np.array([0.0, 0.0, -self.focal_length_f])

    def surface_z(self, r):
        return -np.asarray(r, dtype=float) ** 2 / (4.0 * self.focal_length_f)

    def index_rz(self, r, z):
        """Refractive index at cylindrical points; the substrate is semi-infinite."""
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        inside = (z <= -self.height_nm) | ((z <= 0.0) & (z <= self.surface_z(r)))
        return np.where(inside, self.n_diamond, self.n_top)

    def contains(self, point) -> bool:
        x, y, z = point
        if z < -self.height_nm - self.substrate_nm or z > 0.0:
            return False
        if z <= -self.height_nm:
            return True
        return z <= self.surface_z(np.hypot(x, y)) + 1e-9


@dataclass(frozen=True)
class PlanarSample:
    """Unpatterned diamond: a flat top surface with the emitter below it."""

    emitter_depth: float = 100.0
    n_diamond: float = N_DIAMOND
    n_top: float = 1.0
    n_bottom: float = N_OIL
    substrate_thickness: float = 50.0  # um

    def __post_init__(self):
        if self.emitter_depth <= 0:
            raise ValueError("emitter_depth must be positive")
        if self.n_diamond <= self.n_top or self.n_diamond <= self.n_bottom:
            raise ValueError("n_diamond must exceed both n_top and n_bottom")

    @property
    def substrate_nm(self) -> float:
        return self.substrate_thickness * 1e3

    @property
    def emitter_origin(self) -> np.ndarray:
        return np.array([0.0, 0.0, -self.emitter_depth])

    def index_rz(self, r, z):
        z = np.asarray(z, dtype=float) + 0.0 * np.asarray(r, dtype=float)
        return np.where(z <= 0.0, self.n_diamond, self.n_top)

    def contains(self, point) -> bool:
        return -self.substrate_nm <= point[2] <= 0.0


@dataclass(frozen=True)
class SlabStructure:
    """Dielectric slab of finite thickness between two half-spaces."""

    thickness: float
    n_slab: float = N_DIAMOND
    n_top: float = 1.0
    n_bottom: float = 1.0

    @property
    def emitter_origin(self) -> np.ndarray:
        return np.array([0.0, 0.0, -0.5 * self.thickness])

    def index_rz(self, r, z):
        z = np.asarray(z, dtype=float) + 0.0 * np.asarray(r, dtype=float)
        return np.where(z > 0.0, self.n_top,
                        np.where(z < -self.thickness, self.n_bottom, self.n_slab))


@dataclass(frozen=True)
class UniformMedium:
    n: float = N_DIAMOND

    @property
    def emitter_origin(self) -> np.ndarray:
        return np.zeros(3)

    def index_rz(self, r, z):
        return np.full(np.broadcast(np.asarray(r), np.asarray(z)).shape, self.n)


@dataclass(frozen=True)
class DipoleSource:
    """Point dipole; ``position`` is relative to the structure's emitter origin."""

    position: tuple = (0.0, 0.0, 0.0)
    orientation: tuple = (1.0, 0.0, 0.0)
    wavelength: float = 637.0
    _unit: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        o = np.asarray(self.orientation, dtype=float)
        norm = np.linalg.norm(o)
        if o.shape != (3,) or not np.isfinite(norm) or norm == 0.0:
            raise InvalidSourceError(f"dipole orientation must be a nonzero 3-vector, got {self.orientation!r}")
        object.__setattr__(self, "_unit", o / norm)
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))

    @property
    def unit_orientation(self) -> np.ndarray:
        return self._unit.copy()

    def absolute_position(self, structure) -> np.ndarray:
        return structure.emitter_origin + np.asarray(self.position, dtype=float)


PERPENDICULAR = (1.0, 0.0, 0.0)
PERPENDICULAR_OUT_OF_PLANE = (0.0, 1.0, 0.0)
PARALLEL = (0.0, 0.0, 1.0)
