from nvreflector.photometry.emission import (
    BrightnessReport,
    InconsistentInputsError,
    NoSingleEmitterError,
    brightness,
    excitation_probability,
    g2_decompose,
    g2_from_rates,
)
from nvreflector.photometry.hbt import (
    CoincidenceHistogram,
    EmitterModel,
    G2NormalizationError,
    G2Result,
    LowStatisticsWarning,
    PileUpWarning,
    coincidence_histogram,
    expected_histogram,
    g2_from_histogram,
    lifetime_fit,
    simulate_hbt,
)
from nvreflector.photometry.saturation import (
    FitConvergenceError,
    InsufficientDataError,
    SaturationDataset,
    SaturationFit,
    fit_saturation,
    saturation_model,
)

__all__ = [
    "BrightnessReport", "CoincidenceHistogram", "EmitterModel", "FitConvergenceError",
    "G2NormalizationError", "G2Result", "InconsistentInputsError", "InsufficientDataError",
    "LowStatisticsWarning", "NoSingleEmitterError", "PileUpWarning", "SaturationDataset",
    "SaturationFit", "brightness",
    "coincidence_histogram", "excitation_probability", "expected_histogram", "fit_saturation",
    "g2_decompose", "g2_from_histogram", "g2_from_rates", "lifetime_fit", "saturation_model",
    "simulate_hbt",
]
