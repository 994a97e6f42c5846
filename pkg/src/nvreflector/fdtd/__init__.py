"""Full-wave simulation of dipole emission in the paraboloid device.

Device runs use a body-of-revolution solver (:mod:`.cylindrical`) that
expands the dipole in azimuthal orders; :mod:`.cartesian` provides a plain
three-dimensional Yee grid for validation and non-symmetric problems.
"""

from nvreflector.fdtd.cartesian import (
    FieldState,
    YeeGrid,
    build_cartesian_grid,
    run_cartesian_dipole,
    step_fields,
)
from nvreflector.fdtd.config import DEFAULT_WAVELENGTHS, SimulationConfig
from nvreflector.fdtd.cylindrical import CylindricalFields, DivergedSimulationError, step_cylindrical
from nvreflector.fdtd.dump import read_field_dump, write_field_dump
from nvreflector.fdtd.farfield import (
    CartesianPlane,
    FarFieldResult,
    InvalidApertureError,
    MonitorPlacementError,
    RadialSpectrum,
    angular_spectrum,
    collection_efficiency_fdtd,
)
from nvreflector.fdtd.grid import CylindricalGrid, GridTooLargeError, build_grid, memory_estimate
from nvreflector.fdtd.simulation import (
    DipoleRun,
    NotDecayedWarning,
    displacement_sweep,
    run_dipole_simulation,
)

__all__ = [
    "CartesianPlane", "CylindricalFields", "CylindricalGrid", "DEFAULT_WAVELENGTHS", "DipoleRun",
    "DivergedSimulationError", "FarFieldResult", "FieldState", "GridTooLargeError",
    "InvalidApertureError", "MonitorPlacementError", "NotDecayedWarning", "RadialSpectrum",
    "SimulationConfig", "YeeGrid", "angular_spectrum", "build_cartesian_grid", "build_grid",
    "collection_efficiency_fdtd", "displacement_sweep", "memory_estimate", "read_field_dump", "run_cartesian_dipole",
    "run_dipole_simulation", "step_cylindrical", "step_fields", "write_field_dump",
]
