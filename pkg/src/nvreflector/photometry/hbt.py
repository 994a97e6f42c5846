"""Monte Carlo HBT photon streams and coincidence-histogram estimators."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.optimize import minimize_scalar

from nvreflector.photometry.emission import g2_decompose

PULSES_PER_CHUNK = 1 << 20


class PileUpWarning(UserWarning):
    pass


class LowStatisticsWarning(UserWarning):
    pass


class G2NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class EmitterModel:
    emission_probability: float  # detected single photons per pulse
    background_rate: float  # counts/s, Poissonian
    lifetime: float  # s
    repetition_rate: float  # Hz
    split_ratio: float = 0.5  # fraction routed to detector A
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.emission_probability <= 1.0:
            raise ValueError("emission_probability must lie in [0, 1]")
        if not 0.0 <= self.split_ratio <= 1.0:
            raise ValueError("split_ratio must lie in [0, 1]")
        if self.background_rate < 0:
            raise ValueError("background_rate must be nonnegative")
        if self.lifetime <= 0 or self.repetition_rate <= 0:
            raise ValueError("lifetime and repetition_rate must be positive")

    @property
    def period(self) -> float:
        return 1.0 / self.repetition_rate

    @property
    def purity(self) -> float:
        bg = self.background_rate * self.period
        total = self.emission_probability + bg
        return self.emission_probability / total if total > 0 else 0.0

    @classmethod
    def from_purity(cls, purity: float, emission_probability: float, lifetime: float,
                    repetition_rate: float, **kwargs) -> "EmitterModel":
        """Model whose signal fraction ``S / (S + B)`` equals ``purity``."""
        if not 0.0 < purity <= 1.0:
            raise ValueError("purity must lie in (0, 1]")
        bg_per_pulse = emission_probability * (1.0 - purity) / purity
        return cls(emission_probability, bg_per_pulse * repetition_rate, lifetime, repetition_rate,
                   **kwargs)


@dataclass
class CoincidenceHistogram:
    bin_width: float  # s
    delays: np.ndarray  # s, bin centres
    counts: np.ndarray
    repetition_period: float  # s
    duration: float = 0.0  # s of acquisition
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.delays.shape != self.counts.shape:
            raise ValueError("delays and counts must have equal length")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")
        if not np.allclose(self.delays, -self.delays[::-1], atol=1e-6 * self.bin_width):
            raise ValueError("delays must be symmetric about zero")

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([self.delays - 0.5 * self.bin_width,
                               [self.delays[-1] + 0.5 * self.bin_width]])

    @property
    def side_peaks_per_side(self) -> int:
        half = self.delays[-1] + 0.5 * self.bin_width
        return int(math.floor(half / self.repetition_period - 0.5 + 1e-9))


def _histogram_grid(period: float, bin_width: float, side_peaks: int):
    per_period = max(1, int(round(period / bin_width)))
    width = period / per_period
    nbins = (2 * side_peaks + 1) * per_period
    half = (side_peaks + 0.5) * period
    delays = -half + width * (np.arange(nbins) + 0.5)
    return width, delays, half


@numba.njit(cache=True)
def _coincidences(ta, tb, half, width, nbins):
    counts = np.zeros(nbins, dtype=np.int64)
    j0 = 0
    nb = tb.shape[0]
    for i in range(ta.shape[0]):
        a = ta[i]
        while j0 < nb and tb[j0] < a - half:
            j0 += 1
        j = j0
        while j < nb and tb[j] < a + half:
            k = int((tb[j] - a + half) / width)
            if 0 <= k < nbins:
                counts[k] += 1
            j += 1
    return counts


def coincidence_histogram(times_a, times_b, period: float, bin_width: float = 0.5e-9,
                          side_peaks: int = 3, duration: float = 0.0) -> CoincidenceHistogram:
    """All-pairs histogram of ``t_b - t_a`` within ``side_peaks + 1/2`` periods."""
    width, delays, half = _histogram_grid(period, bin_width, side_peaks)
    counts = _coincidences(np.sort(np.asarray(times_a, dtype=float)),
                           np.sort(np.asarray(times_b, dtype=float)), half, width, delays.size)
    return CoincidenceHistogram(width, delays, counts.astype(float), period, duration)


def _chunk_photons(model: EmitterModel, chunk: int, first_pulse: int, n_pulses: int):
    rng = np.random.Generator(np.random.Philox(key=[model.seed & 0xFFFFFFFFFFFFFFFF, chunk]))
    period = model.period
    emit = rng.random(n_pulses) < model.emission_probability
    pulse_idx = first_pulse + np.flatnonzero(emit)
    t_sig = pulse_idx * period + rng.exponential(model.lifetime, pulse_idx.size)
    t0 = first_pulse * period
    span = n_pulses * period
    n_bg = rng.poisson(model.background_rate * span)
    t_bg = t0 + span * rng.random(n_bg)
    times = np.concatenate([t_sig, t_bg])
    to_a = rng.random(times.size) < model.split_ratio
    return times[to_a], times[~to_a]


def expected_coincidences(model: EmitterModel, duration: float, side_peaks: int = 3) -> float:
    per_pulse = model.emission_probability + model.background_rate * model.period
    pulses = duration * model.repetition_rate
    return pulses * per_pulse**2 * model.split_ratio * (1 - model.split_ratio) * (2 * side_peaks + 1)


def simulate_hbt(model: EmitterModel, duration: float, bin_width: float = 0.5e-9,
                 side_peaks: int = 3):
    """Generate click streams for two detectors and their coincidence histogram.

    Pulses are processed in fixed chunks, each with its own counter-based
    generator, so the streams depend only on the seed.  Returns
    ``((times_a, times_b), histogram)``.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    expected = expected_coincidences(model, duration, side_peaks)
    if expected < 1e4:
        warnings.warn(f"only about {expected:.0f} coincidences expected; estimates will be noisy",
                      LowStatisticsWarning, stacklevel=2)
    n_pulses = int(round(duration * model.repetition_rate))
    parts_a, parts_b = [], []
    for chunk, first in enumerate(range(0, n_pulses, PULSES_PER_CHUNK)):
        a, b = _chunk_photons(model, chunk, first, min(PULSES_PER_CHUNK, n_pulses - first))
        parts_a.append(a)
        parts_b.append(b)
    ta = np.sort(np.concatenate(parts_a))
    tb = np.sort(np.concatenate(parts_b))
    hist = coincidence_histogram(ta, tb, model.period, bin_width, side_peaks, duration)
    hist.metadata.update({"seed": model.seed, "purity": model.purity, "clicks_a": int(ta.size),
                          "clicks_b": int(tb.size)})
    return (ta, tb), hist


def _laplace_bin_integral(edges, centre, tau):
    """Integral of exp(-|t - centre| / tau) over each bin."""
    x = edges - centre
    prim = np.sign(x) * tau * -np.expm1(-np.abs(x) / tau)
    return np.diff(prim)


def expected_histogram(model: EmitterModel, duration: float, bin_width: float = 0.5e-9,
                       side_peaks: int = 3) -> CoincidenceHistogram:
    """Noiseless mean coincidence histogram of ``simulate_hbt`` for the same model."""
    period = model.period
    width, delays, half = _histogram_grid(period, bin_width, side_peaks)
    edges = np.concatenate([delays - 0.5 * width, [half]])
    pulses = duration * model.repetition_rate
    s_a = model.emission_probability * model.split_ratio
    s_b = model.emission_probability * (1 - model.split_ratio)
    b_a = model.background_rate * model.split_ratio
    b_b = model.background_rate * (1 - model.split_ratio)
    flat = pulses * (s_a * b_b + s_b * b_a) + b_a * b_b * duration
    counts = np.full(delays.size, flat * width)
    tau = model.lifetime
    for k in range(-side_peaks - 4, side_peaks + 5):
        if k != 0:
            counts += pulses * s_a * s_b * _laplace_bin_integral(edges, k * period, tau) / (2 * tau)
    return CoincidenceHistogram(width, delays, counts, period, duration, {"noiseless": True})


@dataclass
class G2Result:
    g2_zero: float
    g2_error: float
    zero_peak_area: float
    side_peak_areas: np.ndarray
    purity: float

    def as_dict(self) -> dict:
        return {"g2_zero": self.g2_zero, "g2_error": self.g2_error,
                "zero_peak_area": self.zero_peak_area,
                "side_peak_areas": [float(a) for a in self.side_peak_areas], "purity": self.purity}


def _peak_areas(hist: CoincidenceHistogram):
    k_max = hist.side_peaks_per_side
    index = np.rint(hist.delays / hist.repetition_period).astype(int)
    areas = {k: float(hist.counts[index == k].sum()) for k in range(-k_max, k_max + 1)}
    return areas, k_max


def g2_from_histogram(hist: CoincidenceHistogram) -> G2Result:
    """Zero-delay peak area over the mean side-peak area, each summed over one period."""
    areas, k_max = _peak_areas(hist)
    side = np.array([areas[k] for k in range(-k_max, k_max + 1) if k != 0])
    if side.size < 3:
        raise G2NormalizationError(f"need at least 3 side peaks, histogram holds {side.size}")
    mean_side = side.mean()
    if mean_side <= 0:
        raise G2NormalizationError("side peaks are empty; cannot normalise")
    a0 = areas[0]
    g2 = a0 / mean_side
    # Poisson errors on the zero peak and on the pooled side peaks
    err = math.sqrt(max(a0, 1.0) / mean_side**2 + g2**2 / side.sum())
    purity = math.sqrt(1.0 - g2) if g2 < 1.0 else 0.0
    if g2 < 1.0:
        purity = g2_decompose(g2, 1.0)[0]
    return G2Result(g2, err, a0, side, purity)


def _side_peak_design(hist, tau, k_max, mask):
    edges = hist.edges
    period = hist.repetition_period
    cols = []
    ks = [k for k in range(-k_max, k_max + 1) if k != 0]
    for k in ks:
        col = _laplace_bin_integral(edges, k * period, tau)
        if abs(k) == k_max:
            # peaks just outside the window leak tails in; tie them to the outer peaks
            sign = 1 if k > 0 else -1
            for extra in range(1, 4):
                col = col + _laplace_bin_integral(edges, sign * (k_max + extra) * period, tau)
        cols.append(col)
    cols.append(np.full(edges.size - 1, hist.bin_width))
    return np.column_stack(cols)[mask]


def lifetime_fit(hist: CoincidenceHistogram, tau_bounds: tuple[float, float] | None = None):
    """Shared exponential decay time of the side peaks.

    Each side peak is modelled as ``A_k exp(-|t - k T| / tau)`` on a flat
    floor, integrated over the bins; the zero-delay period is excluded.  The
    amplitudes are solved linearly for every trial ``tau``.  Returns
    ``(tau, uncertainty)`` in seconds.
    """
    k_max = hist.side_peaks_per_side
    if 2 * k_max < 3:
        raise G2NormalizationError("lifetime fit needs at least 3 side peaks")
    period = hist.repetition_period
    mask = np.abs(hist.delays) > 0.5 * period
    y = hist.counts[mask]
    # Poisson weights; empty bins take the smallest nonzero count so that
    # rescaling the histogram rescales every weight alike
    positive = y[y > 0]
    floor = positive.min() if positive.size else 1.0
    w = 1.0 / np.sqrt(np.maximum(y, floor))

    def chi2(tau):
        a = _side_peak_design(hist, tau, k_max, mask) * w[:, None]
        coef, *_ = np.linalg.lstsq(a, y * w, rcond=None)
        r = a @ coef - y * w
        return float(r @ r)

    lo, hi = tau_bounds if tau_bounds else (period * 1e-3, period)
    grid = np.geomspace(lo, hi, 60)
    vals = [chi2(t) for t in grid]
    i = int(np.argmin(vals))
    a_lo, a_hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    sol = minimize_scalar(chi2, bounds=(a_lo, a_hi), method="bounded",
                          options={"xatol": 1e-10 * grid[i]})
    tau = float(sol.x)
    step = 1e-3 * tau
    curv = (chi2(tau + step) - 2 * chi2(tau) + chi2(tau - step)) / step**2
    err = math.sqrt(2.0 / curv) if curv > 0 else math.inf
    if period < 4.0 * tau:
        warnings.warn(f"repetition period {period:.3g} s is below 4 lifetimes ({tau:.3g} s); "
                      "overlapping peaks may bias the fit", PileUpWarning, stacklevel=2)
    return tau, err
