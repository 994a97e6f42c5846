"""Run configuration for the full-wave solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from nvreflector.device import DipoleSource, ParaboloidDevice

DEFAULT_WAVELENGTHS = (600.0, 637.0, 680.0, 740.0, 800.0)


@dataclass
class SimulationConfig:
    """Parameters of one dipole run.

    Lengths are in nm and times in units of nm / c.  ``resolution`` counts
    cells per wavelength inside the densest material at the shortest
    wavelength of ``wavelengths``.
    """

    device: object = field(default_factory=ParaboloidDevice)
    source: DipoleSource = field(default_factory=DipoleSource)
    wavelengths: tuple = DEFAULT_WAVELENGTHS
    source_band: tuple = (600.0, 800.0)  # nm, spectral span the pulse must cover
    resolution: float = 15.0
    pml_cells: int = 16
    courant_factor: float | None = None  # None picks a stable value per solver
    decay_threshold: float = 1e-6
    max_steps: int = 200_000
    padding: float = 400.0  # nm of free space between structure and absorber
    monitor_gap: float = 200.0  # nm between device mouth and the collection plane
    source_box_cells: int = 3
    domain_radius: float | None = None  # nm; overrides the radial extent
    domain_z: tuple | None = None  # (z_min, z_max) nm; overrides the vertical extent
    top_monitor: bool = False
    normalization: str = "structure"  # or "bulk"
    mode_tolerance: float = 1e-4
    max_mode: int | None = None
    memory_budget_bytes: float = 2e9
    energy_check_interval: int = 50
    dump_path: str | None = None

    def __post_init__(self):
        self.wavelengths = tuple(float(w) for w in self.wavelengths)
        if not self.wavelengths:
            raise ValueError("wavelengths must not be empty")
        lo, hi = self.source_band
        if not 0 < lo <= hi:
            raise ValueError("source_band must be (min, max) with 0 < min <= max")
        for w in self.wavelengths:
            if not lo - 1e-9 <= w <= hi + 1e-9:
                raise ValueError(f"wavelength {w} nm lies outside the source band {self.source_band}")
        if self.resolution < 10:
            raise ValueError("resolution must be at least 10 cells per material wavelength")
        if self.pml_cells < 4:
            raise ValueError("pml_cells must be at least 4")
        if self.courant_factor is not None and not 0 < self.courant_factor <= 1 / math.sqrt(3):
            raise ValueError("courant_factor must lie in (0, 1/sqrt(3)]")
        if not 0 < self.decay_threshold < 1:
            raise ValueError("decay_threshold must lie in (0, 1)")
        if self.normalization not in ("structure", "bulk"):
            raise ValueError("normalization must be 'structure' or 'bulk'")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    @property
    def max_index(self) -> float:
        dev = self.device
        return max(getattr(dev, name) for name in ("n_diamond", "n_slab", "n", "n_top", "n_bottom")
                   if hasattr(dev, name))

    @property
    def cell_size(self) -> float:
        return min(self.wavelengths + (self.source_band[0],)) / (self.resolution * self.max_index)

    @property
    def centre_wavelength(self) -> float:
        lo, hi = self.source_band
        return 2.0 / (1.0 / lo + 1.0 / hi)

    @property
    def pulse_width(self) -> float:
        """Gaussian envelope width so the band edges sit near a third of the peak amplitude."""
        lo, hi = self.source_band
        half_span = math.pi * (1.0 / lo - 1.0 / hi)  # angular frequency, c = 1
        return 2.15 / max(half_span, 1e-12) if hi > lo else 4.0 * hi
