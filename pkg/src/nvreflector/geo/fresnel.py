"""Fresnel coefficients at a planar dielectric interface."""

from __future__ import annotations

import math

import numpy as np

# sin^2 of the transmitted angle above which the interface is treated as
# totally reflecting; absorbs the rounding in n1*sin(asin(n2/n1))/n2.
_TIR_SLACK = 1e-12


def critical_angle(n1: float, n2: float) -> float:
    """Critical angle in radians for light going from ``n1`` into ``n2 < n1``."""
    if n2 >= n1:
        raise ValueError("no critical angle unless n1 > n2")
    return math.asin(n2 / n1)


def brewster_angle(n1: float, n2: float) -> float:
    return math.atan2(n2, n1)


def fresnel_amplitudes(n1, n2, cos_i):
    """Complex reflection amplitudes ``(r_s, r_p)`` and transmitted cosine.

    ``r_p`` follows the convention in which the p unit vector is
    ``s_hat x k_hat``, so at normal incidence ``r_p = -r_s``.  Under total
    internal reflection the transmitted cosine is imaginary and both
    amplitudes have unit modulus.
    """
    cos_i = np.asarray(cos_i, dtype=float)
    # 1 - sin^2(t), arranged to stay exact for matched indices near grazing
    cos2_t = cos_i**2 + (1.0 - (n1 / n2) ** 2) * (1.0 - cos_i**2)
    tir = (n1 > n2) & (cos2_t <= _TIR_SLACK)
    cos_t = np.where(tir, 1j * np.sqrt(np.maximum(-cos2_t, 0.0)),
                     np.sqrt(np.maximum(cos2_t, 0.0)) + 0j)
    r_s = (n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t)
    r_p = (n2 * cos_i - n1 * cos_t) / (n2 * cos_i + n1 * cos_t)
    r_s = np.where(tir, r_s / np.abs(r_s), r_s)
    r_p = np.where(tir, r_p / np.abs(r_p), r_p)
    return r_s, r_p, cos_t, tir


def fresnel_power(n1: float, n2: float, incidence_angle: float, polarization: str):
    """Power reflectance and transmittance ``(R, T)``.

    Parameters
    ----------
    n1, n2 : float
        Indices of the incident and transmitting media.
    incidence_angle : float
        Angle from the surface normal in radians, in ``[0, pi/2]``.
    polarization : {"s", "p"}
    """
    if n1 <= 0 or n2 <= 0:
        raise ValueError("refractive indices must be positive")
    if not 0.0 <= incidence_angle <= math.pi / 2 + 1e-15:
        raise ValueError(f"incidence angle {incidence_angle} outside [0, pi/2]")
    if polarization not in ("s", "p"):
        raise ValueError(f"polarization must be 's' or 'p', got {polarization!r}")

    cos_i = math.cos(incidence_angle)
    sin_i = math.sin(incidence_angle)
    cos2_t = cos_i * cos_i + (1.0 - (n1 / n2) ** 2) * sin_i * sin_i
    if n1 > n2 and cos2_t <= _TIR_SLACK:
        return 1.0, 0.0
    cos_t = math.sqrt(cos2_t)
    if polarization == "s":
        denom = n1 * cos_i + n2 * cos_t
        r = (n1 * cos_i - n2 * cos_t) / denom
        t = 2.0 * n1 * cos_i / denom
    else:
        denom = n2 * cos_i + n1 * cos_t
        r = (n2 * cos_i - n1 * cos_t) / denom
        t = 2.0 * n1 * cos_i / denom
    if cos_i == 0.0:
        return 1.0, 0.0
    R = r * r
    T = (n2 * cos_t) / (n1 * cos_i) * t * t
    return R, T
