"""Signal/background decomposition, excitation probability and brightness."""

from __future__ import annotations

import math
from dataclasses import dataclass


class NoSingleEmitterError(ValueError):
    pass


class InconsistentInputsError(ValueError):
    pass


def g2_from_rates(signal: float, background: float) -> float:
    """Zero-delay correlation of a single emitter with Poissonian background."""
    total = signal + background
    if total <= 0:
        raise ValueError("signal + background must be positive")
    return 1.0 - (signal / total) ** 2


def g2_decompose(g2_zero: float, total_rate: float) -> tuple[float, float]:
    """Split a total count rate into single-photon signal and background.

    Returns ``(signal, background)`` with ``signal / total = sqrt(1 - g2_zero)``.
    """
    if not g2_zero >= 0.0:
        raise ValueError(f"g2_zero must be nonnegative, got {g2_zero}")
    if g2_zero >= 1.0:
        raise NoSingleEmitterError(f"g2(0) = {g2_zero} >= 1 is not compatible with a single emitter")
    if total_rate <= 0:
        raise ValueError("total_rate must be positive")
    purity = math.sqrt(1.0 - g2_zero)
    return purity * total_rate, (1.0 - purity) * total_rate


def excitation_probability(power_mw: float, p_sat: float, pulse_length: float, lifetime: float) -> float:
    """Probability that one excitation pulse leaves the emitter excited."""
    for name, v in (("power_mw", power_mw), ("p_sat", p_sat), ("pulse_length", pulse_length),
                    ("lifetime", lifetime)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    x = power_mw / p_sat
    return x / (1.0 + x) * -math.expm1(-pulse_length / lifetime * (1.0 + x))


@dataclass(frozen=True)
class BrightnessReport:
    f_sat: float
    repetition_rate: float
    excitation_probability: float
    detection_probability: float
    eta_detector: float
    eta_transmission: float
    eta_setup: float
    brightness: float

    def as_dict(self) -> dict:
        return {
            "F_sat_cps": self.f_sat, "repetition_rate_Hz": self.repetition_rate,
            "sigma": self.excitation_probability,
            "detection_probability": self.detection_probability,
            "eta_detector": self.eta_detector, "eta_transmission": self.eta_transmission,
            "eta_setup": self.eta_setup, "eta0": self.brightness,
        }


def brightness(f_sat: float, repetition_rate: float, eta_detector: float, eta_transmission: float,
               sigma: float = 1.0) -> BrightnessReport:
    """Extracted photons per excitation, corrected for setup losses."""
    if repetition_rate <= 0:
        raise ValueError("repetition_rate must be positive")
    if f_sat < 0:
        raise ValueError("f_sat must be nonnegative")
    for name, v in (("eta_detector", eta_detector), ("eta_transmission", eta_transmission),
                    ("sigma", sigma)):
        if not 0.0 < v <= 1.0:
            raise ValueError(f"{name} must lie in (0, 1], got {v}")
    detection = f_sat / repetition_rate
    setup = eta_detector * eta_transmission
    eta0 = detection / (setup * sigma)
    if eta0 > 1.0:
        raise InconsistentInputsError(
            f"implied brightness {eta0:.4g} exceeds 1; check F_sat, R and the setup efficiencies")
    return BrightnessReport(f_sat, repetition_rate, sigma, detection, eta_detector, eta_transmission,
                            setup, eta0)
