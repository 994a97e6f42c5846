"""Yee updates for one azimuthal order of a body of revolution.

Fields of order ``m`` vary as ``E_r, E_z, H_phi ~ cos(m phi)`` and
``E_phi, H_r, H_z ~ sin(m phi)``.  The complementary parity is the same
system with ``m -> -m``.  Units: c = eps0 = mu0 = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from nvreflector.fdtd.grid import CylindricalGrid


class DivergedSimulationError(FloatingPointError):
    def __init__(self, step: int):
        super().__init__(f"non-finite field values at step {step}")
        self.step = step


def stable_courant(m: int) -> float:
    return min(0.5, 1.0 / (abs(m) + 1.0))


@dataclass
class CylindricalFields:
    m: int
    er: np.ndarray
    ep: np.ndarray
    ez: np.ndarray
    hr: np.ndarray
    hp: np.ndarray
    hz: np.ndarray
    psi: np.ndarray  # 12 auxiliary PML arrays of shape (nr + 1, nz + 1)
    step: int = 0

    @classmethod
    def zeros(cls, grid: CylindricalGrid, m: int) -> "CylindricalFields":
        nr, nz = grid.nr, grid.nz
        return cls(m,
                   np.zeros((nr, nz + 1)), np.zeros((nr + 1, nz + 1)), np.zeros((nr + 1, nz)),
                   np.zeros((nr + 1, nz)), np.zeros((nr, nz)), np.zeros((nr, nz + 1)),
                   np.zeros((12, nr + 1, nz + 1)))


@numba.njit(cache=True)
def update_h(m, er, ep, ez, hr, hp, hz, psi, dr, dt, br_i, cr_i, br_h, cr_h, bz_i, cz_i, bz_h, cz_h,
             sb_i, sc_i, sb_h, sc_h):
    nr = hp.shape[0]
    nz = hp.shape[1]
    inv = 1.0 / dr
    am = abs(m)
    # H_r at (i dr, (k + 1/2) dr)
    for i in range(nr + 1):
        for k in range(nz):
            d = (ep[i, k + 1] - ep[i, k]) * inv
            psi[0, i, k] = bz_h[k] * psi[0, i, k] + cz_h[k] * d
            d += psi[0, i, k]
            if i > 0:
                t = m * ez[i, k] / (i * dr)
                psi[8, i, k] = sb_i[i] * psi[8, i, k] + sc_i[i] * t
                hr[i, k] += dt * (t + psi[8, i, k] + d)
            else:
                hr[0, k] = 0.0
    # H_phi at ((i + 1/2) dr, (k + 1/2) dr)
    for i in range(nr):
        for k in range(nz):
            dz = (er[i, k + 1] - er[i, k]) * inv
            psi[1, i, k] = bz_h[k] * psi[1, i, k] + cz_h[k] * dz
            dz += psi[1, i, k]
            drr = (ez[i + 1, k] - ez[i, k]) * inv
            psi[2, i, k] = br_h[i] * psi[2, i, k] + cr_h[i] * drr
            drr += psi[2, i, k]
            hp[i, k] += dt * (drr - dz)
    if am == 1:
        # a transverse field on the axis: H_r(0) and H_phi(0) are one vector component
        for k in range(nz):
            hr[0, k] = m * hp[0, k]
    # H_z at ((i + 1/2) dr, k dr)
    for i in range(nr):
        rh = (i + 0.5) * dr
        for k in range(nz + 1):
            drr = (ep[i + 1, k] - ep[i, k]) * inv
            psi[3, i, k] = br_h[i] * psi[3, i, k] + cr_h[i] * drr
            drr += psi[3, i, k]
            t = (0.5 * (ep[i + 1, k] + ep[i, k]) + m * er[i, k]) / rh
            psi[9, i, k] = sb_h[i] * psi[9, i, k] + sc_h[i] * t
            hz[i, k] -= dt * (drr + t + psi[9, i, k])


@numba.njit(cache=True)
def update_e(m, er, ep, ez, hr, hp, hz, psi, eps_r, eps_p, eps_z, dr, dt,
             br_i, cr_i, br_h, cr_h, bz_i, cz_i, bz_h, cz_h, sb_i, sc_i, sb_h, sc_h):
    nr = hp.shape[0]
    nz = hp.shape[1]
    inv = 1.0 / dr
    am = abs(m)
    # E_r at ((i + 1/2) dr, k dr); k = 0 and k = nz are conducting walls
    for i in range(nr):
        rh = (i + 0.5) * dr
        for k in range(1, nz):
            dz = (hp[i, k] - hp[i, k - 1]) * inv
            psi[4, i, k] = bz_i[k] * psi[4, i, k] + cz_i[k] * dz
            dz += psi[4, i, k]
            t = m * hz[i, k] / rh
            psi[10, i, k] = sb_h[i] * psi[10, i, k] + sc_h[i] * t
            er[i, k] += dt / eps_r[i, k] * (t + psi[10, i, k] - dz)
    # E_phi at (i dr, k dr); i = nr is a conducting wall
    for i in range(nr):
        for k in range(1, nz):
            dz = (hr[i, k] - hr[i, k - 1]) * inv
            psi[5, i, k] = bz_i[k] * psi[5, i, k] + cz_i[k] * dz
            dz += psi[5, i, k]
            if i > 0:
                drr = (hz[i, k] - hz[i - 1, k]) * inv
                psi[6, i, k] = br_i[i] * psi[6, i, k] + cr_i[i] * drr
                drr += psi[6, i, k]
                ep[i, k] += dt / eps_p[i, k] * (dz - drr)
            elif am == 1:
                ep[0, k] = -m * er[0, k]
            else:
                ep[0, k] = 0.0
    # E_z at (i dr, (k + 1/2) dr)
    for i in range(nr):
        for k in range(nz):
            if i > 0:
                ri = i * dr
                drr = (hp[i, k] - hp[i - 1, k]) * inv
                psi[7, i, k] = br_i[i] * psi[7, i, k] + cr_i[i] * drr
                drr += psi[7, i, k]
                t = (0.5 * (hp[i, k] + hp[i - 1, k]) - m * hr[i, k]) / ri
                psi[11, i, k] = sb_i[i] * psi[11, i, k] + sc_i[i] * t
                curl = drr + t + psi[11, i, k]
            elif am == 0:
                curl = 4.0 * hp[0, k] * inv
            else:
                ez[0, k] = 0.0
                continue
            ez[i, k] += dt / eps_z[i, k] * curl


@numba.njit(cache=True)
def add_current(field, eps, ii, kk, amp, value, dt):
    for n in range(ii.shape[0]):
        field[ii[n], kk[n]] -= dt / eps[ii[n], kk[n]] * amp[n] * value


@numba.njit(cache=True)
def field_energy(er, ep, ez, hr, hp, hz, eps_r, eps_p, eps_z, dr):
    """Sum of eps E^2 + H^2 with radial weights (per radian of azimuth)."""
    nr = hp.shape[0]
    nz = hp.shape[1]
    total = 0.0
    for i in range(nr + 1):
        w = i * dr if i > 0 else 0.125 * dr
        for k in range(nz + 1):
            total += w * eps_p[i, k] * ep[i, k] ** 2
            if k < nz:
                total += w * (eps_z[i, k] * ez[i, k] ** 2 + hr[i, k] ** 2)
    for i in range(nr):
        w = (i + 0.5) * dr
        for k in range(nz + 1):
            total += w * (eps_r[i, k] * er[i, k] ** 2 + hz[i, k] ** 2)
            if k < nz:
                total += w * hp[i, k] ** 2
    return total * dr * dr


def _coeffs(grid: CylindricalGrid):
    return (grid.br_int, grid.cr_int, grid.br_half, grid.cr_half,
            grid.bz_int, grid.cz_int, grid.bz_half, grid.cz_half, grid.sb_int, grid.sc_int, grid.sb_half, grid.sc_half)


def step_cylindrical(state: CylindricalFields, grid: CylindricalGrid, check_finite: bool = True):
    """Advance one full step: H by a step, then E by a step."""
    f = state
    update_h(f.m, f.er, f.ep, f.ez, f.hr, f.hp, f.hz, f.psi, grid.dr, grid.dt, *_coeffs(grid))
    update_e(f.m, f.er, f.ep, f.ez, f.hr, f.hp, f.hz, f.psi, grid.eps_r, grid.eps_phi, grid.eps_z,
             grid.dr, grid.dt, *_coeffs(grid))
    f.step += 1
    if check_finite and not np.isfinite(f.ez.sum() + f.er.sum() + f.ep.sum()):
        raise DivergedSimulationError(f.step)
    return f


def energy(state: CylindricalFields, grid: CylindricalGrid) -> float:
    f = state
    return field_energy(f.er, f.ep, f.ez, f.hr, f.hp, f.hz, grid.eps_r, grid.eps_phi, grid.eps_z,
                        grid.dr)
