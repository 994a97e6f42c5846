"""Convolutional PML coefficients (graded conductivity, complex frequency shift)."""

from __future__ import annotations

import math

import numpy as np

GRADING_ORDER = 3
TARGET_REFLECTION = 1e-8
FREQUENCY_SHIFT = 0.2  # alpha_max in units of the longest free-space wavenumber


def sigma_max(thickness: float, index: float, order: int = GRADING_ORDER,
              reflection: float = TARGET_REFLECTION) -> float:
    """Peak conductivity giving round-trip ``reflection`` at normal incidence (c = 1)."""
    return -(order + 1) * math.log(reflection) / (2.0 * thickness * index)


def cpml_coefficients(depth, thickness, dt, index, wavelength, order=GRADING_ORDER):
    """Recursive-convolution coefficients ``(b, c)`` at fractional depths into the layer.

    ``depth`` is 0 at the inner face and ``thickness`` at the terminating
    wall; negative depths are outside the layer and give ``b = 1, c = 0``.
    """
    depth = np.asarray(depth, dtype=float)
    x = np.clip(depth / thickness, 0.0, 1.0)
    inside = depth > 0
    sig = np.where(inside, sigma_max(thickness, index, order) * x**order, 0.0)
    alpha_max = 2.0 * math.pi / wavelength * FREQUENCY_SHIFT
    alpha = np.where(inside, alpha_max * (1.0 - x), 0.0)
    b = np.exp(-(sig + alpha) * dt)
    total = sig + alpha
    c = np.where(total > 0, sig / np.where(total > 0, total, 1.0) * (b - 1.0), 0.0)
    return b, c


def stretched_radius_coefficients(r, r_start, thickness, dt, index, wavelength, order=GRADING_ORDER):
    """Recursive-convolution ``(b, c)`` for the ``1/r`` terms inside a radial absorber.

    In the absorber the radius itself is complex-stretched,
    ``r -> r + S(r) / (alpha + i w)`` with ``S`` the integrated conductivity,
    so every ``F / r`` term picks up a convolution with rate ``S / r + alpha``.
    """
    r = np.asarray(r, dtype=float)
    x = np.clip((r - r_start) / thickness, 0.0, 1.0)
    inside = r > r_start
    integrated = sigma_max(thickness, index, order) * thickness * x ** (order + 1) / (order + 1)
    rate = np.where(inside & (r > 0), integrated / np.where(r > 0, r, 1.0), 0.0)
    alpha = np.where(inside, 2.0 * math.pi / wavelength * FREQUENCY_SHIFT * (1.0 - x), 0.0)
    b = np.exp(-(rate + alpha) * dt)
    total = rate + alpha
    c = np.where(total > 0, rate / np.where(total > 0, total, 1.0) * (b - 1.0), 0.0)
    return b, c
