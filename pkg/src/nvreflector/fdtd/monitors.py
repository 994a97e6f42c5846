"""Running discrete Fourier transforms of field samples and flux integrals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

COMPONENTS = ("er", "ep", "ez", "hr", "hp", "hz")


@numba.njit(cache=True)
def accumulate(values2d, ii, kk, dft, phase):
    for n in range(ii.shape[0]):
        v = values2d[ii[n], kk[n]]
        for w in range(phase.shape[0]):
            dft[w, n] += v * phase[w]


@dataclass
class Probe:
    """Set of nodes of one component whose DFT is accumulated every step."""

    component: str
    ii: np.ndarray
    kk: np.ndarray
    dft: np.ndarray = None

    def allocate(self, n_wavelengths: int):
        self.dft = np.zeros((n_wavelengths, self.ii.size), dtype=np.complex128)


def row(component, i_lo, i_hi, k):
    ii = np.arange(i_lo, i_hi + 1)
    return Probe(component, ii, np.full_like(ii, k))


def column(component, i, k_lo, k_hi):
    kk = np.arange(k_lo, k_hi + 1)
    return Probe(component, np.full_like(kk, i), kk)


@dataclass
class DftMonitors:
    """Probes grouped by name; fields keyed by ``(name, component, tag)``."""

    wavelengths: np.ndarray
    probes: dict = field(default_factory=dict)

    def add(self, key, probe: Probe):
        probe.allocate(self.wavelengths.size)
        self.probes[key] = probe

    def __getitem__(self, key) -> np.ndarray:
        return self.probes[key].dft

    def by_component(self):
        groups = {c: [] for c in COMPONENTS}
        for p in self.probes.values():
            groups[p.component].append(p)
        return groups


@dataclass
class BoxSpec:
    """Closed surface of revolution ``i_in <= i <= i_out``, ``k_lo <= k <= k_hi`` in node units."""

    i_in: int
    i_out: int
    k_lo: int
    k_hi: int


def add_box_probes(mon: DftMonitors, box: BoxSpec, name="box"):
    for k in (box.k_lo, box.k_hi):
        mon.add((name, "er", k), row("er", box.i_in, box.i_out - 1, k))
        mon.add((name, "ep", k), row("ep", box.i_in, box.i_out, k))
        for kk in (k - 1, k):
            mon.add((name, "hr", kk), row("hr", box.i_in, box.i_out, kk))
            mon.add((name, "hp", kk), row("hp", box.i_in, box.i_out - 1, kk))
    sides = [box.i_out] + ([box.i_in] if box.i_in > 0 else [])
    for i in sides:
        mon.add((name, "ep_col", i), column("ep", i, box.k_lo, box.k_hi))
        mon.add((name, "ez_col", i), column("ez", i, box.k_lo, box.k_hi - 1))
        for ii in (i - 1, i):
            mon.add((name, "hz_col", ii), column("hz", ii, box.k_lo, box.k_hi))
            mon.add((name, "hp_col", ii), column("hp", ii, box.k_lo, box.k_hi - 1))


def _trapezoid_r_weights(i_lo, i_hi, dr):
    r = np.arange(i_lo, i_hi + 1) * dr
    w = r * dr
    w[0] *= 0.5
    w[-1] *= 0.5
    if i_lo == 0:
        w[0] = dr * dr / 8.0
    return w


def disk_flux(mon: DftMonitors, name: str, k: int, i_lo: int, i_hi: int, dr: float) -> np.ndarray:
    """Upward flux through the annulus at node ``k`` (per radian of azimuth, per wavelength)."""
    er = mon[(name, "er", k)]
    ep = mon[(name, "ep", k)]
    hr = 0.5 * (mon[(name, "hr", k - 1)] + mon[(name, "hr", k)])
    hp = 0.5 * (mon[(name, "hp", k - 1)] + mon[(name, "hp", k)])
    r_half = (np.arange(i_lo, i_hi) + 0.5) * dr
    w_half = r_half * dr
    w_int = _trapezoid_r_weights(i_lo, i_hi, dr)
    s = (er * np.conj(hp)) @ w_half - (ep * np.conj(hr)) @ w_int
    return 0.5 * s.real


def side_flux(mon: DftMonitors, name: str, i: int, k_lo: int, k_hi: int, dr: float) -> np.ndarray:
    """Outward radial flux through the cylinder at node ``i`` (per radian)."""
    ep = mon[(name, "ep_col", i)]
    ez = mon[(name, "ez_col", i)]
    hz = 0.5 * (mon[(name, "hz_col", i - 1)] + mon[(name, "hz_col", i)])
    hp = 0.5 * (mon[(name, "hp_col", i - 1)] + mon[(name, "hp_col", i)])
    w_int = np.full(k_hi - k_lo + 1, dr)
    w_int[0] *= 0.5
    w_int[-1] *= 0.5
    w_half = np.full(k_hi - k_lo, dr)
    r = i * dr
    s = (ep * np.conj(hz)) @ w_int - (ez * np.conj(hp)) @ w_half
    return 0.5 * r * s.real


def box_flux(mon: DftMonitors, box: BoxSpec, dr: float, name="box") -> np.ndarray:
    """Net outward flux through a closed box, per radian of azimuth."""
    total = disk_flux(mon, name, box.k_hi, box.i_in, box.i_out, dr)
    total = total - disk_flux(mon, name, box.k_lo, box.i_in, box.i_out, dr)
    total = total + side_flux(mon, name, box.i_out, box.k_lo, box.k_hi, dr)
    if box.i_in > 0:
        total = total - side_flux(mon, name, box.i_in, box.k_lo, box.k_hi, dr)
    return total


def add_plane_probes(mon: DftMonitors, k: int, i_max: int, name="plane"):
    mon.add((name, "er", k), row("er", 0, i_max - 1, k))
    mon.add((name, "ep", k), row("ep", 0, i_max, k))
    for kk in (k - 1, k):
        mon.add((name, "hr", kk), row("hr", 0, i_max, kk))
        mon.add((name, "hp", kk), row("hp", 0, i_max - 1, kk))


@dataclass
class PlaneFields:
    """Tangential DFT fields of one azimuthal order on a plane ``z = const``.

    ``e_r`` and ``h_phi`` sit at radii ``r_half``; ``e_phi`` and ``h_r`` at
    ``r_int``.  Arrays are shaped (wavelength, radius).
    """

    m: int
    z: float
    wavelengths: np.ndarray
    r_int: np.ndarray
    r_half: np.ndarray
    e_r: np.ndarray
    e_phi: np.ndarray
    h_r: np.ndarray
    h_phi: np.ndarray
    index: float
    direction: int = -1  # -1 collects power travelling toward -z
    # grid wavenumber over n k0 per wavelength; maps numerical k_t back to physical angles
    dispersion: np.ndarray | None = None


def numerical_wavenumber_ratio(wavelengths, index: float, dr: float, dt: float) -> np.ndarray:
    """Yee-grid wavenumber along an axis divided by ``n k0`` (c = 1)."""
    omega = 2.0 * np.pi / np.asarray(wavelengths, dtype=float)
    k_grid = 2.0 / dr * np.arcsin(np.clip(index * dr / dt * np.sin(0.5 * omega * dt), -1.0, 1.0))
    return k_grid / (index * omega)


def plane_fields(mon: DftMonitors, name: str, k: int, i_max: int, dr: float, z: float, m: int,
                 index: float, direction: int = -1, dt: float | None = None) -> PlaneFields:
    dispersion = None if dt is None else numerical_wavenumber_ratio(mon.wavelengths, index, dr, dt)
    return PlaneFields(
        m, z, mon.wavelengths, np.arange(i_max + 1) * dr, (np.arange(i_max) + 0.5) * dr,
        mon[(name, "er", k)], mon[(name, "ep", k)],
        0.5 * (mon[(name, "hr", k - 1)] + mon[(name, "hr", k)]),
        0.5 * (mon[(name, "hp", k - 1)] + mon[(name, "hp", k)]), index, direction, dispersion)
