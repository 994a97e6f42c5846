import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvreflector.photometry import (
    CoincidenceHistogram,
    EmitterModel,
    G2NormalizationError,
    InconsistentInputsError,
    InsufficientDataError,
    LowStatisticsWarning,
    NoSingleEmitterError,
    PileUpWarning,
    SaturationDataset,
    brightness,
    excitation_probability,
    expected_histogram,
    fit_saturation,
    g2_decompose,
    g2_from_histogram,
    g2_from_rates,
    lifetime_fit,
    saturation_model,
    simulate_hbt,
)

TAU = 12.67e-9
REP = 4.88e6
POWERS = np.geomspace(0.02, 5.0, 12)


# ---------------------------------------------------------------- saturation

def test_noiseless_saturation_round_trip():
    counts = saturation_model(POWERS, 4.63e6, 0.32, 2e5)
    fit = fit_saturation(SaturationDataset(POWERS, counts))
    assert fit.f_sat == pytest.approx(4.63e6, rel=1e-6)
    assert fit.p_sat == pytest.approx(0.32, rel=1e-6)
    assert fit.background_slope == pytest.approx(2e5, rel=1e-6)
    assert fit.residual_norm < 1e-3


def test_half_saturation_point():
    assert float(saturation_model(0.32, 4.63e6, 0.32)) == pytest.approx(4.63e6 / 2, rel=1e-15)


@pytest.mark.parametrize("slope", [5e4, 3e5])
def test_added_slope_only_moves_slope(slope):
    base = saturation_model(POWERS, 4.63e6, 0.32, 2e5)
    a = fit_saturation(SaturationDataset(POWERS, base))
    b = fit_saturation(SaturationDataset(POWERS, base + slope * POWERS))
    assert b.f_sat == pytest.approx(a.f_sat, rel=1e-6)
    assert b.p_sat == pytest.approx(a.p_sat, rel=1e-6)
    assert b.background_slope - a.background_slope == pytest.approx(slope, rel=1e-6)


def test_pure_saturation_without_slope_parameter():
    counts = saturation_model(POWERS, 1.2e6, 0.8)
    fit = fit_saturation(SaturationDataset(POWERS, counts), fit_slope=False)
    assert fit.f_sat == pytest.approx(1.2e6, rel=1e-6)
    assert fit.p_sat == pytest.approx(0.8, rel=1e-6)
    assert fit.background_slope == 0.0


def test_noisy_fit_errors_cover_truth():
    rng = np.random.default_rng(3)
    p = np.geomspace(0.02, 5.0, 40)
    sigma = np.full(p.size, 2e4)
    counts = saturation_model(p, 4.63e6, 0.32, 2e5) + rng.normal(0, sigma)
    fit = fit_saturation(SaturationDataset(p, counts, sigma))
    assert abs(fit.f_sat - 4.63e6) < 4 * fit.f_sat_err
    assert abs(fit.p_sat - 0.32) < 4 * fit.p_sat_err
    assert fit.background_slope >= 0


def test_slope_bound_is_respected():
    # a negative trend would pull an unconstrained slope below zero
    counts = saturation_model(POWERS, 1e6, 0.3) - 2e4 * POWERS
    fit = fit_saturation(SaturationDataset(POWERS, np.maximum(counts, 0.0)))
    assert fit.background_slope >= 0.0
    assert fit.f_sat > 0 and fit.p_sat > 0


def test_too_few_powers():
    p = np.array([0.1, 0.2, 0.4])
    with pytest.raises(InsufficientDataError):
        fit_saturation(SaturationDataset(p, saturation_model(p, 1e6, 0.3, 1e4)))


@pytest.mark.parametrize("p, f", [([0.0, 1.0], [1.0, 2.0]), ([1.0, 2.0], [-1.0, 2.0]),
                                  ([1.0, 2.0], [1.0])])
def test_dataset_validation(p, f):
    with pytest.raises(ValueError):
        SaturationDataset(np.array(p), np.array(f))


@given(st.floats(1e3, 1e8), st.floats(1e-3, 10.0), st.floats(0.0, 1e6))
def test_model_increasing_in_power(f_sat, p_sat, slope):
    p = np.geomspace(1e-3, 100.0, 50)
    assert np.all(np.diff(saturation_model(p, f_sat, p_sat, slope)) > 0)


# ---------------------------------------------------------------- g2 decomposition

def test_measured_g2_purity():
    s, b = g2_decompose(0.1873, 1.0e6)
    assert s / (s + b) == pytest.approx(math.sqrt(0.8127), rel=1e-12)
    assert s / (s + b) == pytest.approx(0.9015, abs=5e-5)


def test_equal_signal_and_background():
    assert g2_from_rates(1.0, 1.0) == 0.75


def test_pure_emitter_has_no_background():
    s, b = g2_decompose(0.0, 3.3e5)
    assert b == 0.0 and s == 3.3e5


@given(st.floats(0.0, 1.0, exclude_max=True), st.floats(1.0, 1e9))
def test_decompose_round_trip(g2, total):
    s, b = g2_decompose(g2, total)
    assert s + b == pytest.approx(total, rel=1e-12)
    assert g2_from_rates(s, b) == pytest.approx(g2, abs=1e-12)


@pytest.mark.parametrize("g2", [1.0, 1.4])
def test_g2_above_one_is_not_single(g2):
    with pytest.raises(NoSingleEmitterError):
        g2_decompose(g2, 1e5)


# ---------------------------------------------------------------- excitation and brightness

def test_excitation_saturates():
    for ratio in (10.0, 100.0):
        assert excitation_probability(0.32e6, 0.32, ratio * TAU, TAU) > 0.999


def test_excitation_at_saturation_power():
    assert excitation_probability(0.32, 0.32, TAU, TAU) == pytest.approx(0.5 * (1 - math.exp(-2)),
                                                                          rel=1e-14)


@given(st.floats(1e-3, 10.0), st.floats(1e-12, 1e-7))
def test_excitation_monotone_and_bounded(p_sat, pulse):
    sig = [excitation_probability(p, p_sat, pulse, TAU) for p in np.geomspace(1e-4, 1e3, 40) * p_sat]
    assert all(0 < s < 1 for s in sig)
    assert all(b > a for a, b in zip(sig, sig[1:]))


def test_excitation_rejects_nonpositive():
    with pytest.raises(ValueError):
        excitation_probability(0.0, 0.3, 1e-11, TAU)


def test_detection_probability_and_brightness():
    rep = brightness(0.60e6, REP, 0.6868, 0.3696)
    assert rep.detection_probability == pytest.approx(0.60e6 / REP, rel=1e-15)
    assert rep.detection_probability == pytest.approx(0.123, abs=5e-4)
    assert rep.eta_setup == pytest.approx(0.2538, abs=1e-4)
    assert rep.brightness == pytest.approx(0.485, abs=0.002)
    assert rep.brightness == pytest.approx(0.48, abs=0.05)


def test_lossless_brightness_is_detection_probability():
    rep = brightness(1e6, REP, 1.0, 1.0, 1.0)
    assert rep.brightness == rep.detection_probability


def test_brightness_above_one_is_inconsistent():
    with pytest.raises(InconsistentInputsError):
        brightness(4e6, REP, 0.6868, 0.3696)


@given(st.floats(1e3, 1e6), st.floats(1e-3, 1e3))
def test_brightness_unit_coherence(f_sat, scale):
    a = brightness(f_sat, REP, 0.6868, 0.3696, 0.9)
    b = brightness(f_sat * scale, REP * scale, 0.6868, 0.3696, 0.9)
    assert b.brightness == pytest.approx(a.brightness, rel=1e-12)


@pytest.mark.parametrize("kw", [{"eta_detector": 0.0}, {"eta_transmission": 1.2}, {"sigma": -0.1}])
def test_brightness_factor_range(kw):
    args = {"eta_detector": 0.5, "eta_transmission": 0.5, "sigma": 1.0} | kw
    with pytest.raises(ValueError):
        brightness(1e5, REP, **args)


# ---------------------------------------------------------------- HBT simulation and g2 estimator

def test_background_only_is_poissonian():
    model = EmitterModel(0.0, 2e6, TAU, REP, seed=1)
    _, hist = simulate_hbt(model, 0.3)
    res = g2_from_histogram(hist)
    assert abs(res.g2_zero - 1.0) < 3 * res.g2_error


def test_single_photons_antibunch():
    model = EmitterModel(0.3, 0.0, TAU, REP, seed=2)
    _, hist = simulate_hbt(model, 0.2)
    assert hist.counts.sum() > 1e5
    res = g2_from_histogram(hist)
    assert res.g2_zero < 0.05
    # only the exponential tails of the neighbouring peaks reach the zero-delay window
    assert res.zero_peak_area < 2 * math.exp(-0.5 / (REP * TAU)) * res.side_peak_areas.mean()
    assert res.purity == pytest.approx(1.0, abs=1e-3)


def test_measured_purity_reproduces_g2():
    model = EmitterModel.from_purity(math.sqrt(0.8127), 0.2, TAU, REP, seed=5)
    _, hist = simulate_hbt(model, 0.5)
    res = g2_from_histogram(hist)
    assert abs(res.g2_zero - 0.1873) < 3 * res.g2_error
    assert abs(res.purity - model.purity) < 3 * res.g2_error / (2 * res.purity)


def test_simulation_is_deterministic():
    model = EmitterModel(0.2, 1e5, TAU, REP, seed=11)
    (a1, b1), h1 = simulate_hbt(model, 0.05)
    (a2, b2), h2 = simulate_hbt(model, 0.05)
    np.testing.assert_array_equal(a1, a2)
    np.testing.assert_array_equal(b1, b2)
    np.testing.assert_array_equal(h1.counts, h2.counts)
    (a3, _), _ = simulate_hbt(EmitterModel(0.2, 1e5, TAU, REP, seed=12), 0.05)
    assert not np.array_equal(a1, a3)


def test_low_statistics_warns():
    with pytest.warns(LowStatisticsWarning):
        simulate_hbt(EmitterModel(0.01, 0.0, TAU, REP), 1e-3)


def test_simulation_matches_expected_histogram():
    model = EmitterModel(0.3, 3e5, TAU, REP, seed=4)
    duration = 0.2
    _, hist = simulate_hbt(model, duration, bin_width=2e-9)
    mean = expected_histogram(model, duration, bin_width=2e-9)
    np.testing.assert_array_equal(hist.delays, mean.delays)
    keep = mean.counts > 50
    chi2 = np.sum((hist.counts[keep] - mean.counts[keep]) ** 2 / mean.counts[keep])
    dof = keep.sum()
    assert chi2 < dof + 5 * math.sqrt(2 * dof)


def _flat_histogram(zero_area, side_area, side_peaks=3, per_period=10):
    period = 1 / REP
    width = period / per_period
    n = (2 * side_peaks + 1) * per_period
    delays = -(side_peaks + 0.5) * period + width * (np.arange(n) + 0.5)
    counts = np.full(n, side_area / per_period)
    zero = np.rint(delays / period) == 0
    counts[zero] = zero_area / per_period
    return CoincidenceHistogram(width, delays, counts, period)


def test_equal_areas_give_unity():
    assert g2_from_histogram(_flat_histogram(40.0, 40.0)).g2_zero == pytest.approx(1.0, rel=1e-12)


def test_empty_zero_peak_gives_zero():
    res = g2_from_histogram(_flat_histogram(0.0, 40.0))
    assert res.g2_zero == 0.0
    assert res.purity == 1.0


def test_empty_side_peaks_cannot_normalise():
    with pytest.raises(G2NormalizationError):
        g2_from_histogram(_flat_histogram(10.0, 0.0))


def test_too_few_side_peaks():
    with pytest.raises(G2NormalizationError):
        g2_from_histogram(_flat_histogram(10.0, 10.0, side_peaks=1))


def test_histogram_validation():
    with pytest.raises(ValueError):
        CoincidenceHistogram(1.0, np.array([-1.0, 0.0, 2.0]), np.ones(3), 10.0)
    with pytest.raises(ValueError):
        CoincidenceHistogram(1.0, np.array([-1.0, 0.0, 1.0]), np.array([1.0, -1.0, 1.0]), 10.0)


def test_purity_estimate_converges():
    model = EmitterModel.from_purity(0.8, 0.2, TAU, REP, seed=21)
    errors = []
    for duration in (0.02, 0.2):
        _, hist = simulate_hbt(model, duration)
        res = g2_from_histogram(hist)
        purity_err = res.g2_error / (2 * res.purity)
        assert abs(res.purity - model.purity) < 3 * purity_err
        errors.append(purity_err)
    assert errors[1] < errors[0]


# ---------------------------------------------------------------- lifetime

def test_lifetime_from_simulation():
    model = EmitterModel(0.5, 2e4, TAU, REP, seed=8)
    _, hist = simulate_hbt(model, 0.6)
    assert hist.counts.sum() > 1e6
    tau, err = lifetime_fit(hist)
    assert tau == pytest.approx(TAU, rel=0.03)
    assert abs(tau - TAU) < 4 * err


def test_lifetime_noiseless_exact():
    model = EmitterModel(0.3, 5e4, TAU, 1e6)
    tau, _ = lifetime_fit(expected_histogram(model, 1.0))
    assert tau == pytest.approx(TAU, rel=1e-6)


def test_lifetime_scale_invariant():
    model = EmitterModel(0.5, 2e4, TAU, REP, seed=9)
    _, hist = simulate_hbt(model, 0.05)
    doubled = CoincidenceHistogram(hist.bin_width, hist.delays, 2 * hist.counts, hist.repetition_period)
    t1, _ = lifetime_fit(hist)
    t2, _ = lifetime_fit(doubled)
    assert t2 == pytest.approx(t1, rel=1e-5)


def test_lifetime_warns_on_pile_up():
    model = EmitterModel(0.3, 0.0, TAU, 40e6)
    with pytest.warns(PileUpWarning):
        lifetime_fit(expected_histogram(model, 0.1, bin_width=0.1e-9))


def test_lifetime_without_pile_up_is_quiet():
    model = EmitterModel(0.3, 0.0, TAU, REP)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lifetime_fit(expected_histogram(model, 0.1))
