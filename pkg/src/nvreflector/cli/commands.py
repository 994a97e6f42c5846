"""Subcommand bodies.

Each function takes a validated config and returns ``(files, summary, moved)``:
output name -> bytes, a short JSON-able summary, and output name -> path of
files the engine wrote to a scratch directory.  Nothing is written to the
output directory here.
"""

from __future__ import annotations

import csv
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from nvreflector.cli.output import csv_text, json_text
from nvreflector.cli.schema import FabsimRun, FdtdRun, GeoRun, HbtRun, HistogramRun, SaturationRun
from nvreflector.fabsim import fit_parabola, process_pipeline, read_profile_csv
from nvreflector.fdtd.grid import memory_estimate
from nvreflector.fdtd.simulation import displacement_sweep, run_dipole_simulation
from nvreflector.geo.collection import efficiency_table, histogram_from_exits, trace_ensemble
from nvreflector.photometry.emission import InconsistentInputsError, brightness, g2_decompose, g2_from_rates
from nvreflector.photometry.hbt import CoincidenceHistogram, g2_from_histogram, lifetime_fit, simulate_hbt
from nvreflector.photometry.saturation import SaturationDataset, fit_saturation, saturation_model


def _threads(config) -> int:
    if config.thread_count == "auto":
        return os.cpu_count() or 1
    return config.thread_count


def read_numeric_csv(path, min_columns: int) -> np.ndarray:
    """Numeric rows of a CSV file; a leading header row is skipped."""
    rows = []
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                values = [float(v) for v in row]
            except ValueError:
                if rows:
                    raise ValueError(f"{path}:{line_no}: non-numeric value") from None
                continue
            if len(values) < min_columns:
                raise ValueError(f"{path}:{line_no}: expected at least {min_columns} columns")
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = min(len(r) for r in rows)
    return np.array([r[:width] for r in rows])


def simulate_geo(config: GeoRun, log=print):
    device = config.device.build()
    source = config.source.build()
    exits = trace_ensemble(device, source, config.rays, config.seed, config.max_bounces,
                           config.min_weight, config.bottom_fresnel, threads=_threads(config))
    table = efficiency_table(exits, config.numerical_apertures)
    hist = histogram_from_exits(exits, config.histogram_bins, config.reference_index)
    edges = hist.bin_edges_theta
    angular = zip(edges[1:], hist.power_per_bin, hist.cumulative)
    files = {
        "efficiency.csv": csv_text(["na", "eta", "stderr"], table),
        "angular.csv": csv_text(["theta_deg", "power", "cumulative_power"], angular),
    }
    summary = {"rays": config.rays, "efficiency": {f"{na:g}": eta for na, eta, _ in table},
               "lost_weight": exits.lost_weight, "residual_weight": exits.residual_weight,
               "overflow_power": hist.overflow_power}
    files["summary.json"] = json_text(summary)
    return files, summary, {}


def simulate_fdtd(config: FdtdRun, log=print):
    sim = config.simulation_config()
    need = memory_estimate(sim)
    log(f"memory estimate: {need / 1e6:.1f} MB per azimuthal order "
        f"(budget {config.memory_budget_gb:g} GB)")
    if need > sim.memory_budget_bytes:
        raise MemoryError(f"estimated {need / 1e9:.2f} GB exceeds memory_budget_gb")

    def progress(run):
        log(f"  order m={run.m}: {run.steps} steps")

    if config.sweep is not None:
        sw = config.sweep
        rows = displacement_sweep(sim, sw.axis, sw.offsets, sw.numerical_aperture, sw.wavelength_nm,
                                  progress)
        files = {"sweep.csv": csv_text(["offset_nm", "eta"], rows)}
        summary = {"axis": sw.axis, "wavelength_nm": sw.wavelength_nm,
                   "numerical_aperture": sw.numerical_aperture,
                   "eta": {f"{off:g}": eta for off, eta in rows}}
        return files, summary, {}

    scratch = tempfile.mkdtemp(prefix=".dump-", dir=_scratch_parent(config)) if config.dump_fields else None
    if scratch:
        sim = config.simulation_config(dump_path=os.path.join(scratch, "fields"))
    try:
        run = run_dipole_simulation(sim, progress)
    except BaseException:
        if scratch:
            shutil.rmtree(scratch, ignore_errors=True)
        raise
    result = run.efficiency(config.numerical_apertures)
    files = {"efficiency.csv": csv_text(["wavelength_nm", "na", "eta"], result.rows())}
    summary = {"grid": run.grid_info, "decayed": run.decayed,
               "eta": [[lam, na, eta] for lam, na, eta in result.rows()]}
    moved = {}
    if scratch:
        for name in sorted(os.listdir(scratch)):
            moved[name] = os.path.join(scratch, name)
    return files, summary, moved


def _scratch_parent(config) -> str:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return str(out)


def fabsim(config: FabsimRun, log=print):
    if config.profile_csv is not None:
        profile = read_profile_csv(config.profile_csv)
        window = config.fit_window_nm
        fit = fit_parabola(profile, tuple(window) if window else None)
        report = {"source": str(config.profile_csv), "fit": fit.as_dict()}
        return {"fit.json": json_text(report)}, report, {}

    final, fit, report = process_pipeline(
        config.stack.build(), config.disk_radius_nm, config.etch_depth_um, config.spacing_nm,
        tuple(config.fit_window_nm) if config.fit_window_nm else None)
    files = {}
    step_files = {}
    for name, profile in report.steps.items():
        fname = f"profile_{name}.csv"
        files[fname] = csv_text(["r_nm", "z_nm"], zip(profile.radii, profile.heights))
        step_files[name] = fname
    out = dict(report.as_dict(), step_files=step_files)
    files["fit.json"] = json_text(out)
    return files, out, {}


def _saturation_data(config: SaturationRun):
    if config.data_csv is not None:
        data = read_numeric_csv(config.data_csv, 2)
        sigma = data[:, 2] if data.shape[1] > 2 else None
        return SaturationDataset(data[:, 0], data[:, 1], sigma, config.repetition_rate_hz), None
    syn = config.synthetic
    p = np.asarray(syn.powers_mw, dtype=float)
    emitter = saturation_model(p, syn.f_sat_cps, syn.p_sat_mw)
    background = saturation_model(p, syn.saturable_background_cps, syn.p_sat_mw,
                                  syn.background_slope_cps_per_mw)
    counts = emitter + background
    sigma = None
    if syn.relative_noise > 0:
        rng = np.random.default_rng(config.seed)
        sigma = syn.relative_noise * counts
        counts = np.maximum(counts + sigma * rng.standard_normal(p.size), 0.0)
    return SaturationDataset(p, counts, sigma, config.repetition_rate_hz), syn


def _brightness(f_sat, config: SaturationRun):
    try:
        return brightness(f_sat, config.repetition_rate_hz, config.eta_detector,
                          config.eta_transmission).as_dict()
    except InconsistentInputsError as exc:
        return {"error": str(exc)}


def fit_saturation_cmd(config: SaturationRun, log=print):
    data, syn = _saturation_data(config)
    p_g2 = config.g2_power_mw

    # background as the linear term of the saturation model
    path1 = fit_saturation(data, fit_slope=True)

    # background from g2(0) at one power, assumed linear in power
    if config.g2_zero is not None:
        g2 = config.g2_zero
    else:
        signal = float(saturation_model(p_g2, syn.f_sat_cps, syn.p_sat_mw))
        bg = float(saturation_model(p_g2, syn.saturable_background_cps, syn.p_sat_mw,
                                    syn.background_slope_cps_per_mw))
        g2 = g2_from_rates(signal, bg)
    total_at_g2 = float(saturation_model(p_g2, path1.f_sat, path1.p_sat, path1.background_slope))
    _, bg_at_g2 = g2_decompose(g2, total_at_g2)
    slope = bg_at_g2 / p_g2
    corrected = np.maximum(data.counts_cps - slope * data.power_mw, 0.0)
    path2 = fit_saturation(SaturationDataset(data.power_mw, corrected, data.sigma_cps,
                                             data.repetition_rate), fit_slope=False)

    report = {
        "linear_background": dict(path1.as_dict(), brightness=_brightness(path1.f_sat, config)),
        "g2_background": dict(path2.as_dict(), g2_zero=g2, g2_power_mW=p_g2,
                              total_rate_at_g2_cps=total_at_g2, background_at_g2_cps=bg_at_g2,
                              assumed_background_slope_cps_per_mW=slope,
                              brightness=_brightness(path2.f_sat, config)),
        "linear_background_exceeds_g2_background": bool(path1.f_sat >= path2.f_sat),
        "repetition_rate_Hz": config.repetition_rate_hz,
    }
    grid = np.linspace(0.0, float(data.power_mw.max()), 201)
    curve = zip(grid, saturation_model(grid, path1.f_sat, path1.p_sat, path1.background_slope),
                saturation_model(grid, path1.f_sat, path1.p_sat),
                saturation_model(grid, path2.f_sat, path2.p_sat))
    files = {
        "fit.json": json_text(report),
        "model_curve.csv": csv_text(["power_mW", "linear_background_total_cps",
                                     "linear_background_emitter_cps", "g2_background_emitter_cps"],
                                    curve),
        "data.csv": csv_text(["power_mW", "counts_cps", "g2_corrected_cps"],
                             zip(data.power_mw, data.counts_cps, corrected)),
    }
    summary = {"F_sat_linear_background_cps": path1.f_sat, "F_sat_g2_background_cps": path2.f_sat,
               "linear_background_exceeds_g2_background": report["linear_background_exceeds_g2_background"]}
    return files, summary, {}


def _histogram_csv(hist: CoincidenceHistogram) -> bytes:
    return csv_text(["delay_ns", "counts"], zip(hist.delays * 1e9, hist.counts))


def simulate_hbt_cmd(config: HbtRun, log=print):
    model = config.emitter.build(config.seed)
    _, hist = simulate_hbt(model, config.duration_s, config.bin_width_s, config.side_peaks)
    g2 = g2_from_histogram(hist)
    tau, tau_err = lifetime_fit(hist, config.tau_bounds_s)
    report = {
        "model": {"purity": model.purity, "g2_expected": 1.0 - model.purity**2,
                  "emission_probability": model.emission_probability,
                  "background_rate_cps": model.background_rate, "lifetime_s": model.lifetime,
                  "repetition_rate_Hz": model.repetition_rate},
        "coincidences": float(hist.counts.sum()),
        "clicks_a": hist.metadata["clicks_a"], "clicks_b": hist.metadata["clicks_b"],
        "g2": g2.as_dict(), "lifetime_s": tau, "lifetime_err_s": tau_err,
    }
    files = {"histogram.csv": _histogram_csv(hist), "report.json": json_text(report)}
    return files, {"g2_zero": g2.g2_zero, "g2_error": g2.g2_error, "lifetime_s": tau}, {}


def read_histogram(config: HistogramRun) -> CoincidenceHistogram:
    data = read_numeric_csv(config.histogram_csv, 2)
    delays = data[:, 0] * 1e-9
    steps = np.diff(delays)
    if steps.size == 0 or np.any(steps <= 0):
        raise ValueError(f"{config.histogram_csv}: delays must be strictly ascending")
    return CoincidenceHistogram(float(np.median(steps)), delays, data[:, 1],
                                1.0 / config.repetition_rate_hz)


def analyze_g2_cmd(config: HistogramRun, log=print):
    g2 = g2_from_histogram(read_histogram(config))
    report = g2.as_dict()
    return {"g2.json": json_text(report)}, {"g2_zero": g2.g2_zero, "g2_error": g2.g2_error}, {}


def lifetime_cmd(config: HistogramRun, log=print):
    tau, err = lifetime_fit(read_histogram(config), config.tau_bounds_s)
    report = {"lifetime_s": tau, "lifetime_err_s": err}
    return {"lifetime.json": json_text(report)}, report, {}


COMMANDS = {
    "simulate-geo": simulate_geo,
    "simulate-fdtd": simulate_fdtd,
    "fabsim": fabsim,
    "fit-saturation": fit_saturation_cmd,
    "analyze-g2": analyze_g2_cmd,
    "simulate-hbt": simulate_hbt_cmd,
    "lifetime": lifetime_cmd,
}
