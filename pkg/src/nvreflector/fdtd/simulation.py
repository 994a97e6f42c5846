"""Dipole runs on the cylindrical solver with an azimuthal-order expansion.

A point dipole at radius ``r0`` is expanded as ``delta(phi) = (1 + 2 sum
cos(m phi)) / (2 pi)``; each order is an independent 2-D run and their
powers add because different orders are orthogonal over the azimuth.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from nvreflector.device import DipoleSource, ParaboloidDevice, UniformMedium
from nvreflector.fdtd import cylindrical as cyl
from nvreflector.fdtd.config import SimulationConfig
from nvreflector.fdtd.farfield import (
    MonitorPlacementError,
    RadialSpectrum,
    collection_efficiency_fdtd,
    plane_flux,
    radial_spectrum,
)
from nvreflector.fdtd.grid import CylindricalGrid, build_grid, structure_extent
from nvreflector.fdtd.monitors import (
    BoxSpec,
    DftMonitors,
    accumulate,
    add_box_probes,
    add_plane_probes,
    box_flux,
    plane_fields,
)

log = logging.getLogger(__name__)


class NotDecayedWarning(RuntimeWarning):
    pass


@dataclass
class SourceElement:
    component: str  # "er", "ep" or "ez"
    r: float
    z: float
    weight: float  # integral of the current coefficient over r dr dz


@dataclass
class ModeRun:
    m: int  # signed order passed to the kernel; negative for the sine parity
    steps: int
    decayed: bool
    box_power: np.ndarray
    plane_power: np.ndarray
    spectra: list
    top_spectra: list | None = None
    final_energy_ratio: float = 0.0


@dataclass
class DipoleRun:
    """Monitor results of one dipole position, summed over azimuthal orders."""

    wavelengths: np.ndarray
    normalization: np.ndarray  # total radiated power per wavelength
    box_power: np.ndarray
    plane_power: np.ndarray
    spectra: list  # RadialSpectrum per wavelength, collection plane
    top_spectra: list | None
    modes: list
    collection_index: float
    grid_info: dict
    warnings: list = field(default_factory=list)

    @property
    def decayed(self) -> bool:
        return all(m.decayed for m in self.modes)

    def efficiency(self, numerical_aperture):
        return collection_efficiency_fdtd(self, numerical_aperture)


def _node_positions(grid: CylindricalGrid, component: str):
    if component == "er":
        return grid.r_half(), grid.z_int()
    if component == "ep":
        return grid.r_int(), grid.z_int()
    if component == "ez":
        return grid.r_int(), grid.z_half()
    raise ValueError(component)


def _linear_weights(nodes, x):
    """Two-point linear interpolation weights, clamped to the first node."""
    if x <= nodes[0]:
        return [(0, 1.0)]
    j = int(np.searchsorted(nodes, x) - 1)
    j = min(max(j, 0), nodes.size - 2)
    t = (x - nodes[j]) / (nodes[j + 1] - nodes[j])
    return [(j, 1.0 - t), (j + 1, t)]


def splat_sources(grid: CylindricalGrid, elements):
    """Distribute source elements onto nodes; returns per-component (ii, kk, amplitude)."""
    out = {}
    dr = grid.dr
    for el in elements:
        rs, zs = _node_positions(grid, el.component)
        radial = _linear_weights(rs, el.r)
        if el.component == "ep" and el.r < 0.5 * dr:
            # E_phi on the axis is slaved to E_r for |m| = 1, so the azimuthal
            # current is carried by the first ring
            radial = [(1, 1.0)]
        for i, wr in radial:
            for k, wz in _linear_weights(zs, el.z):
                area = rs[i] * dr * dr if rs[i] > 0 else dr**3 / 8.0
                amp = el.weight * wr * wz / area
                if amp != 0.0:
                    out.setdefault(el.component, []).append((i, k, amp))
    packed = {}
    for comp, items in out.items():
        arr = np.array(items)
        packed[comp] = (arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2].copy())
    return packed


def mode_sources(source: DipoleSource, structure):
    """Source elements per signed azimuthal order for a dipole at its absolute position."""
    pos = source.absolute_position(structure)
    p = source.unit_orientation
    r0 = math.hypot(pos[0], pos[1])
    z0 = pos[2]
    if r0 < 1e-9:
        out = {}
        c = 1.0 / (2.0 * math.pi)
        if abs(p[2]) > 0:
            out[0] = [SourceElement("ez", 0.0, z0, p[2] * c)]
        if abs(p[0]) > 0:
            out[1] = [SourceElement("er", 0.0, z0, p[0] * c), SourceElement("ep", 0.0, z0, -p[0] * c)]
        if abs(p[1]) > 0:
            out[-1] = [SourceElement("er", 0.0, z0, p[1] * c), SourceElement("ep", 0.0, z0, p[1] * c)]
        return out, 0.0
    phi0 = math.atan2(pos[1], pos[0])
    p_rad = p[0] * math.cos(phi0) + p[1] * math.sin(phi0)
    p_az = -p[0] * math.sin(phi0) + p[1] * math.cos(phi0)
    # drop round-off so mirrored positions excite the same parities
    p_rad = 0.0 if abs(p_rad) < 1e-12 else p_rad
    p_az = 0.0 if abs(p_az) < 1e-12 else p_az
    return {"r0": r0, "z0": z0, "p_rad": p_rad, "p_az": p_az, "p_z": p[2]}, r0


def _off_axis_elements(params, m):
    c = 1.0 / (2.0 * math.pi) if m == 0 else 1.0 / math.pi
    r0, z0 = params["r0"], params["z0"]
    if m == 0:
        els = [SourceElement("er", r0, z0, params["p_rad"] * c),
               SourceElement("ez", r0, z0, params["p_z"] * c),
               SourceElement("ep", r0, z0, params["p_az"] * c)]
        return {0: [e for e in els if e.weight != 0.0]}
    out = {}
    cos_part = [SourceElement("er", r0, z0, params["p_rad"] * c),
                SourceElement("ez", r0, z0, params["p_z"] * c)]
    cos_part = [e for e in cos_part if e.weight != 0.0]
    if cos_part:
        out[m] = cos_part
    if params["p_az"] != 0.0:
        out[-m] = [SourceElement("ep", r0, z0, params["p_az"] * c)]
    return out


def _pulse(t, omega_c, t0, tau):
    x = (t - t0) / tau
    return math.sin(omega_c * (t - t0)) * math.exp(-x * x)


def _collection_plane(config: SimulationConfig, grid: CylindricalGrid):
    structure = config.device
    _, z_lo, _ = structure_extent(structure)
    src = config.source.absolute_position(structure)
    z_plane = min(z_lo, src[2]) - config.monitor_gap
    k = grid.z_index(z_plane)
    z_actual = grid.z0 + k * grid.dr
    if isinstance(structure, ParaboloidDevice) and z_actual >= -structure.height_nm:
        raise MonitorPlacementError("collection plane must lie below the device in the substrate")
    if k - 1 <= grid.pml_cells:
        raise MonitorPlacementError("collection plane falls inside the absorber")
    return k, z_actual


def _top_plane(config, grid):
    structure = config.device
    _, _, z_hi = structure_extent(structure)
    src = config.source.absolute_position(structure)
    z_plane = max(z_hi, src[2]) + config.monitor_gap
    k = grid.z_index(z_plane)
    if k >= grid.nz - grid.pml_cells:
        raise MonitorPlacementError("top plane falls inside the absorber")
    return k, grid.z0 + k * grid.dr


def _source_box(grid: CylindricalGrid, r0: float, z0: float, cells: int) -> BoxSpec:
    kc = grid.z_index(z0)
    ic = int(round(r0 / grid.dr))
    i_in = 0 if ic - cells <= 0 else ic - cells
    return BoxSpec(i_in, ic + cells + 1, kc - cells, kc + cells + 1)


def run_mode(config: SimulationConfig, m: int, elements, grid: CylindricalGrid | None = None,
             r0: float = 0.0, z0: float = 0.0) -> ModeRun:
    """Time-step one azimuthal order to decay and collect its DFT monitors."""
    courant = config.courant_factor or cyl.stable_courant(m)
    grid = grid if grid is not None else build_grid(config, courant)
    if abs(grid.dt - courant * grid.dr) > 1e-12 * grid.dt:
        grid = build_grid(config, courant)
    lams = np.asarray(config.wavelengths)
    omegas = 2.0 * np.pi / lams
    mon = DftMonitors(lams)
    i_plane_max = grid.nr - grid.pml_cells
    k_plane, z_plane = _collection_plane(config, grid)
    add_plane_probes(mon, k_plane, i_plane_max, "plane")
    if config.top_monitor:
        k_top, z_top = _top_plane(config, grid)
        add_plane_probes(mon, k_top, i_plane_max, "top")
    box = _source_box(grid, r0, z0, config.source_box_cells)
    add_box_probes(mon, box, "box")
    groups = mon.by_component()
    sources = splat_sources(grid, elements)

    state = cyl.CylindricalFields.zeros(grid, m)
    f = state
    eps = {"er": grid.eps_r, "ep": grid.eps_phi, "ez": grid.eps_z}
    arrays = {"er": f.er, "ep": f.ep, "ez": f.ez, "hr": f.hr, "hp": f.hp, "hz": f.hz}
    tau = config.pulse_width
    t0 = 4.5 * tau
    omega_c = 2.0 * np.pi / config.centre_wavelength
    dt = grid.dt
    coeffs = cyl._coeffs(grid)
    w_max = 0.0
    decayed = False
    ratio = 1.0
    n = 0
    for n in range(config.max_steps):
        cyl.update_h(m, f.er, f.ep, f.ez, f.hr, f.hp, f.hz, f.psi, grid.dr, dt, *coeffs)
        cyl.update_e(m, f.er, f.ep, f.ez, f.hr, f.hp, f.hz, f.psi, grid.eps_r, grid.eps_phi,
                     grid.eps_z, grid.dr, dt, *coeffs)
        value = _pulse((n + 0.5) * dt, omega_c, t0, tau)
        for comp, (ii, kk, amp) in sources.items():
            cyl.add_current(arrays[comp], eps[comp], ii, kk, amp, value, dt)
        ph_h = np.exp(-1j * omegas * (n + 0.5) * dt) * dt
        ph_e = np.exp(-1j * omegas * (n + 1.0) * dt) * dt
        for comp, probes in groups.items():
            ph = ph_e if comp[0] == "e" else ph_h
            for probe in probes:
                accumulate(arrays[comp], probe.ii, probe.kk, probe.dft, ph)
        if (n + 1) % config.energy_check_interval == 0:
            w = cyl.energy(f, grid)
            if not math.isfinite(w):
                raise cyl.DivergedSimulationError(n + 1)
            w_max = max(w_max, w)
            if (n + 1) * dt > t0 + 4.5 * tau and w_max > 0:
                ratio = w / w_max
                if ratio < config.decay_threshold:
                    decayed = True
                    break
    steps = n + 1
    if not decayed:
        warnings.warn(f"order {m}: field energy only fell to {ratio:.2e} of its peak after "
                      f"{steps} steps", NotDecayedWarning, stacklevel=2)

    phi_factor = 2.0 * np.pi if m == 0 else np.pi
    box_p = phi_factor * box_flux(mon, box, grid.dr, "box")
    n_plane = float(np.sqrt(grid.eps_phi[0, k_plane]))
    pf = plane_fields(mon, "plane", k_plane, i_plane_max, grid.dr, z_plane, m, n_plane, -1, grid.dt)
    spectra = [radial_spectrum(pf, w) for w in range(lams.size)]
    top_spectra = None
    if config.top_monitor:
        n_top = float(np.sqrt(grid.eps_phi[0, k_top]))
        tf = plane_fields(mon, "top", k_top, i_plane_max, grid.dr, z_top, m, n_top, +1, grid.dt)
        top_spectra = [radial_spectrum(tf, w) for w in range(lams.size)]
    if config.dump_path:
        from nvreflector.fdtd.dump import write_field_dump
        write_field_dump(f"{config.dump_path}.m{m}.bin", state, grid)
    return ModeRun(m, steps, decayed, box_p, plane_flux(pf), spectra, top_spectra, ratio)


def _sum_spectra(lists):
    out = list(lists[0])
    for lst in lists[1:]:
        out = [a + b for a, b in zip(out, lst)]
    return out


def run_dipole_simulation(config: SimulationConfig, progress=None) -> DipoleRun:
    """Run every azimuthal order the dipole excites and sum the monitor powers.

    For an on-axis dipole at most three orders are needed.  Off axis, orders
    are added until one contributes less than ``config.mode_tolerance`` of
    the running total (or ``config.max_mode`` is reached).
    """
    structure = config.device
    src = config.source
    pos = src.absolute_position(structure)
    if hasattr(structure, "contains") and not structure.contains(pos):
        raise ValueError(f"source at {tuple(pos)} lies outside the diamond")
    info, r0 = mode_sources(src, structure)
    z0 = float(pos[2])
    runs = []
    if r0 == 0.0:
        for m, els in sorted(info.items(), key=lambda kv: (abs(kv[0]), kv[0])):
            runs.append(run_mode(config, m, els, r0=0.0, z0=z0))
            if progress:
                progress(runs[-1])
    else:
        lam_min = min(config.wavelengths)
        n_max = config.max_index
        m_cap = config.max_mode if config.max_mode is not None else \
            int(math.ceil(n_max * 2 * math.pi / lam_min * r0)) + 6
        m_floor = int(math.ceil(n_max * 2 * math.pi / max(config.wavelengths) * r0))
        total = np.zeros(len(config.wavelengths))
        for m in range(0, m_cap + 1):
            contribution = np.zeros_like(total)
            for mm, els in _off_axis_elements(info, m).items():
                run = run_mode(config, mm, els, r0=r0, z0=z0)
                runs.append(run)
                contribution += run.box_power
                if progress:
                    progress(run)
            total += contribution
            if m > m_floor and np.all(np.abs(contribution) <= config.mode_tolerance * np.abs(total)):
                break
    box = sum(r.box_power for r in runs)
    plane = sum(r.plane_power for r in runs)
    spectra = _sum_spectra([r.spectra for r in runs])
    top = _sum_spectra([r.top_spectra for r in runs]) if config.top_monitor else None
    normalization = box
    if config.normalization == "bulk":
        normalization = bulk_reference_power(config)
    grid = build_grid(config, 0.5)
    info = {"cell_size_nm": grid.dr, "nr": grid.nr, "nz": grid.nz, "pml_cells": grid.pml_cells,
            "orders": [r.m for r in runs], "steps": [r.steps for r in runs]}
    warn = [f"order {r.m} did not decay (energy ratio {r.final_energy_ratio:.2e})"
            for r in runs if not r.decayed]
    n_coll = spectra[0].index
    return DipoleRun(np.asarray(config.wavelengths), normalization, box, plane, spectra, top, runs,
                     n_coll, info, warn)


def bulk_reference_power(config: SimulationConfig) -> np.ndarray:
    """Box power of the same dipole in homogeneous diamond on a matching grid."""
    n = getattr(config.device, "n_diamond", config.max_index)
    ref = SimulationConfig(**{**config.__dict__, "device": UniformMedium(n),
                              "normalization": "structure", "top_monitor": False,
                              "domain_radius": None, "domain_z": None, "dump_path": None})
    grid_like = build_grid(config, 0.5)
    ref.domain_radius = (grid_like.nr - grid_like.pml_cells) * grid_like.dr
    z_lo = grid_like.z0 + grid_like.pml_cells * grid_like.dr
    z_hi = grid_like.z0 + (grid_like.nz - grid_like.pml_cells) * grid_like.dr
    ref.domain_z = (z_lo, z_hi)
    ref.source = DipoleSource(tuple(config.source.absolute_position(config.device)),
                              config.source.orientation, config.source.wavelength)
    return run_dipole_simulation(ref).box_power


def displacement_sweep(config: SimulationConfig, axis: str, offsets, numerical_aperture: float = 1.3,
                       wavelength: float = 637.0, progress=None):
    """Efficiency at one wavelength for a list of emitter offsets.

    ``vertical`` offsets move the emitter deeper (away from the apex);
    ``lateral`` offsets move it along +x (negative values along -x).
    Returns a list of ``(offset_nm, eta)`` rows.
    """
    if axis not in ("vertical", "lateral"):
        raise ValueError("axis must be 'vertical' or 'lateral'")
    if wavelength not in config.wavelengths:
        raise ValueError(f"{wavelength} nm is not among the accumulated wavelengths")
    rows = []
    base = np.asarray(config.source.position, dtype=float)
    for off in offsets:
        shift = np.array([0.0, 0.0, -off]) if axis == "vertical" else np.array([off, 0.0, 0.0])
        src = DipoleSource(tuple(base + shift), config.source.orientation, config.source.wavelength)
        cfg = SimulationConfig(**{**config.__dict__, "source": src})
        run = run_dipole_simulation(cfg, progress)
        rows.append((float(off), run.efficiency(numerical_aperture).eta(wavelength, numerical_aperture)))
    return rows
