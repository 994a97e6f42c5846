"""Validated run configurations, one model per subcommand.

Every block rejects unknown keys.  Physical constraints that the engine
objects enforce (e.g. wavelengths inside the source band) are checked here
by constructing those objects, so a bad file fails before any compute.
"""

from __future__ import annotations

from typing import Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    FilePath,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    model_validator,
)

from nvreflector.device import N_DIAMOND, N_OIL, DipoleSource, ParaboloidDevice, PlanarSample
from nvreflector.fabsim import EtchStack
from nvreflector.fdtd.config import SimulationConfig
from nvreflector.photometry.hbt import EmitterModel

Vector3 = tuple[float, float, float]


class Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DeviceBlock(Block):
    kind: Literal["paraboloid", "planar"] = "paraboloid"
    focal_length_nm: PositiveFloat = 100.0
    height_um: PositiveFloat = 5.0
    emitter_depth_nm: PositiveFloat = 100.0  # planar samples only
    n_diamond: PositiveFloat = N_DIAMOND
    n_top: PositiveFloat = 1.0
    n_bottom: PositiveFloat = N_OIL
    substrate_thickness_um: PositiveFloat = 50.0

    def build(self):
        if self.kind == "planar":
            return PlanarSample(self.emitter_depth_nm, self.n_diamond, self.n_top, self.n_bottom,
                                self.substrate_thickness_um)
        return ParaboloidDevice(self.focal_length_nm, self.height_um, self.n_diamond, self.n_top,
                                self.n_bottom, self.substrate_thickness_um)

    @model_validator(mode="after")
    def _check(self):
        self.build()
        return self


class SourceBlock(Block):
    position_nm: Vector3 = (0.0, 0.0, 0.0)
    orientation: Vector3 = (1.0, 0.0, 0.0)
    wavelength_nm: PositiveFloat = 637.0

    def build(self) -> DipoleSource:
        return DipoleSource(self.position_nm, self.orientation, self.wavelength_nm)

    @model_validator(mode="after")
    def _check(self):
        self.build()
        return self


class RunConfig(Block):
    command: str | None = None
    seed: int = Field(ge=0)
    output_dir: str = "out"
    thread_count: PositiveInt | Literal["auto"] = 1

    def result_fields(self) -> dict:
        """Fields that determine the results; used for the config hash."""
        return self.model_dump(mode="json", exclude={"output_dir", "thread_count", "command"})


class GeoRun(RunConfig):
    device: DeviceBlock = DeviceBlock()
    source: SourceBlock = SourceBlock()
    rays: int = Field(1_000_000, ge=1000)
    numerical_apertures: list[PositiveFloat] = Field(default_factory=lambda: [0.5, 1.3],
                                                     min_length=1)
    histogram_bins: int = Field(90, ge=2)
    reference_index: PositiveFloat = 1.0
    max_bounces: PositiveInt = 50
    min_weight: PositiveFloat = 1e-4
    bottom_fresnel: bool = True

    @model_validator(mode="after")
    def _apertures(self):
        n = self.device.n_bottom
        for na in self.numerical_apertures:
            if na > n:
                raise ValueError(f"numerical_apertures: {na} exceeds the collection index {n}")
        return self


class SweepBlock(Block):
    axis: Literal["vertical", "lateral"]
    start: float
    stop: float
    step: PositiveFloat
    wavelength_nm: PositiveFloat = 637.0
    numerical_aperture: PositiveFloat = 1.3

    @property
    def offsets(self) -> list[float]:
        count = int(round((self.stop - self.start) / self.step)) + 1
        if count < 1:
            raise ValueError("sweep stop lies before start")
        return [self.start + i * self.step for i in range(count)]


class FdtdRun(RunConfig):
    device: DeviceBlock = DeviceBlock()
    source: SourceBlock = SourceBlock()
    wavelengths_nm: list[PositiveFloat] = Field(
        default_factory=lambda: [600.0, 637.0, 680.0, 740.0, 800.0], min_length=1)
    source_band_nm: tuple[PositiveFloat, PositiveFloat] = (600.0, 800.0)
    numerical_apertures: list[PositiveFloat] = Field(default_factory=lambda: [0.5, 1.3],
                                                     min_length=1)
    resolution: float = Field(15.0, ge=10.0)
    pml_cells: int = Field(16, ge=4)
    padding_nm: PositiveFloat = 400.0
    monitor_gap_nm: PositiveFloat = 200.0
    decay_threshold: float = Field(1e-6, gt=0, lt=1)
    max_steps: PositiveInt = 200_000
    normalization: Literal["structure", "bulk"] = "structure"
    mode_tolerance: PositiveFloat = 1e-4
    max_mode: int | None = Field(None, ge=0)
    memory_budget_gb: PositiveFloat = 2.0
    dump_fields: bool = False
    sweep: SweepBlock | None = None

    def simulation_config(self, source=None, dump_path=None) -> SimulationConfig:
        return SimulationConfig(
            device=self.device.build(), source=source or self.source.build(),
            wavelengths=tuple(self.wavelengths_nm), source_band=tuple(self.source_band_nm),
            resolution=self.resolution, pml_cells=self.pml_cells, decay_threshold=self.decay_threshold,
            max_steps=self.max_steps, padding=self.padding_nm, monitor_gap=self.monitor_gap_nm,
            normalization=self.normalization, mode_tolerance=self.mode_tolerance,
            max_mode=self.max_mode, memory_budget_bytes=self.memory_budget_gb * 1e9,
            dump_path=dump_path)

    @model_validator(mode="after")
    def _check(self):
        self.simulation_config()
        if self.sweep is not None:
            if not self.sweep.offsets:
                raise ValueError("sweep has no offsets")
            if self.sweep.wavelength_nm not in self.wavelengths_nm:
                raise ValueError(f"sweep.wavelength_nm {self.sweep.wavelength_nm} is not in wavelengths_nm")
        return self


class StackBlock(Block):
    resist_thickness_nm: PositiveFloat = 280.0
    mask_thickness_nm: PositiveFloat = 200.0
    selectivity_mask_over_resist: PositiveFloat = 1.0
    selectivity_diamond_over_mask: PositiveFloat = 28.0

    def build(self) -> EtchStack:
        return EtchStack(self.resist_thickness_nm, self.mask_thickness_nm,
                         self.selectivity_mask_over_resist, self.selectivity_diamond_over_mask)


class FabsimRun(RunConfig):
    stack: StackBlock = StackBlock()
    disk_radius_nm: PositiveFloat = 2500.0
    etch_depth_um: PositiveFloat = 5.0
    spacing_nm: PositiveFloat = 1.0
    fit_window_nm: tuple[NonNegativeFloat, PositiveFloat] | None = None
    profile_csv: FilePath | None = None  # fit an external linescan instead of simulating


class SyntheticSaturation(Block):
    """Generated saturation curve: emitter plus linear and saturable background terms."""

    powers_mw: list[PositiveFloat] = Field(
        default_factory=lambda: [0.02, 0.05, 0.1, 0.16, 0.24, 0.32, 0.48, 0.64, 0.96, 1.28, 1.92, 2.56],
        min_length=4)
    f_sat_cps: PositiveFloat = 4.63e6
    p_sat_mw: PositiveFloat = 0.32
    background_slope_cps_per_mw: NonNegativeFloat = 2e5
    saturable_background_cps: NonNegativeFloat = 0.0
    relative_noise: NonNegativeFloat = 0.0


class SaturationRun(RunConfig):
    data_csv: FilePath | None = None
    synthetic: SyntheticSaturation | None = None
    g2_zero: float | None = Field(None, ge=0, lt=1)
    g2_power_mw: PositiveFloat | None = None
    repetition_rate_hz: PositiveFloat = 78.1e6
    eta_detector: float = Field(0.6868, gt=0, le=1)
    eta_transmission: float = Field(0.3696, gt=0, le=1)

    @model_validator(mode="after")
    def _check(self):
        if (self.data_csv is None) == (self.synthetic is None):
            raise ValueError("give exactly one of data_csv or synthetic")
        if self.g2_power_mw is None:
            if self.synthetic is None:
                raise ValueError("g2_power_mw is required for the g2 background path")
            self.g2_power_mw = 1.5 * self.synthetic.p_sat_mw
        if self.g2_zero is None and self.synthetic is None:
            raise ValueError("g2_zero is required for the g2 background path")
        return self


class EmitterBlock(Block):
    purity: float | None = Field(None, gt=0, le=1)
    emission_probability: float = Field(0.05, ge=0, le=1)
    background_rate_cps: NonNegativeFloat | None = None
    lifetime_s: PositiveFloat = 12.67e-9
    repetition_rate_hz: PositiveFloat = 4.88e6
    split_ratio: float = Field(0.5, ge=0, le=1)

    @model_validator(mode="after")
    def _check(self):
        if (self.purity is None) == (self.background_rate_cps is None):
            raise ValueError("give exactly one of purity or background_rate_cps")
        return self

    def build(self, seed: int) -> EmitterModel:
        if self.purity is not None:
            return EmitterModel.from_purity(self.purity, self.emission_probability, self.lifetime_s,
                                            self.repetition_rate_hz, split_ratio=self.split_ratio,
                                            seed=seed)
        return EmitterModel(self.emission_probability, self.background_rate_cps, self.lifetime_s,
                            self.repetition_rate_hz, self.split_ratio, seed)


class HbtRun(RunConfig):
    emitter: EmitterBlock = EmitterBlock(purity=0.9015)
    duration_s: PositiveFloat = 10.0
    bin_width_s: PositiveFloat = 0.5e-9
    side_peaks: int = Field(3, ge=2)
    tau_bounds_s: tuple[PositiveFloat, PositiveFloat] | None = None


class HistogramRun(RunConfig):
    """Input for ``analyze-g2`` and ``lifetime``: a ``delay_ns, counts`` file."""

    histogram_csv: FilePath
    repetition_rate_hz: PositiveFloat
    tau_bounds_s: tuple[PositiveFloat, PositiveFloat] | None = None


SCHEMAS = {
    "simulate-geo": GeoRun,
    "simulate-fdtd": FdtdRun,
    "fabsim": FabsimRun,
    "fit-saturation": SaturationRun,
    "analyze-g2": HistogramRun,
    "simulate-hbt": HbtRun,
    "lifetime": HistogramRun,
}


def validate(command: str, raw: dict):
    model = SCHEMAS[command].model_validate(raw)
    if model.command is not None and model.command != command:
        raise ValueError(f"command: config is for '{model.command}', not '{command}'")
    return model

