"""Ray records and dipole emission sampling."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from nvreflector.device import DipoleSource, InvalidSourceError

BATCH_SIZE = 1 << 15


class ExitSurface(str, Enum):
    TOP_FACET = "top_facet"
    PARABOLOID_WALL = "paraboloid_wall"
    BOTTOM_FACET = "bottom_facet"
    LOST_MAX_BOUNCE = "lost_max_bounce"


# integer tags used by the compiled tracer
TAG_WALL, TAG_TOP, TAG_BOTTOM, TAG_LOST = 0, 1, 2, 3
TAG_TO_SURFACE = {
    TAG_WALL: ExitSurface.PARABOLOID_WALL,
    TAG_TOP: ExitSurface.TOP_FACET,
    TAG_BOTTOM: ExitSurface.BOTTOM_FACET,
    TAG_LOST: ExitSurface.LOST_MAX_BOUNCE,
}


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    power_weight: float
    polarization: np.ndarray  # complex E-field unit vector, orthogonal to direction
    medium_index: float
    bounce_count: int = 0

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        self.direction = d / np.linalg.norm(d)
        e = np.asarray(self.polarization, dtype=complex)
        self.polarization = e / np.linalg.norm(e)
        if abs(np.vdot(self.polarization, self.direction)) > 1e-9:
            raise ValueError("polarization must be orthogonal to the ray direction")
        if not 0.0 <= self.power_weight <= 1.0:
            raise ValueError("power_weight must lie in [0, 1]")


@dataclass(frozen=True)
class ExitRecord:
    exit_surface: ExitSurface
    direction_in_exit_medium: np.ndarray
    power_weight: float


def rng_for_batch(seed: int, batch: int) -> np.random.Generator:
    """Counter-based generator for one ray batch; independent of scheduling."""
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, batch]))


def _orthonormal_frame(axis: np.ndarray):
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    return u, v


def dipole_cos_psi(xi):
    """Inverse CDF of the sin^2 law in ``u = cos(psi)``: CDF = (3u - u^3 + 2)/4."""
    c = 4.0 * np.asarray(xi) - 2.0
    return 2.0 * np.cos(np.arccos(np.clip(-0.5 * c, -1.0, 1.0)) / 3.0 - 2.0 * np.pi / 3.0)


def sample_directions(orientation: np.ndarray, xi1, xi2):
    """Directions and far-field polarizations for uniform variates ``xi1, xi2``."""
    p = orientation / np.linalg.norm(orientation)
    u_axis, v_axis = _orthonormal_frame(p)
    cos_psi = dipole_cos_psi(xi1)
    sin_psi = np.sqrt(np.maximum(0.0, 1.0 - cos_psi**2))
    phi = 2.0 * np.pi * np.asarray(xi2)
    d = (cos_psi[:, None] * p
         + (sin_psi * np.cos(phi))[:, None] * u_axis
         + (sin_psi * np.sin(phi))[:, None] * v_axis)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    # far-field E is along the projection of p transverse to d (theta-hat)
    e = p[None, :] - (d @ p)[:, None] * d
    norm = np.linalg.norm(e, axis=1, keepdims=True)
    degenerate = norm[:, 0] < 1e-12
    if np.any(degenerate):
        fallback = np.cross(d[degenerate], u_axis)
        e[degenerate] = fallback
        norm[degenerate] = np.linalg.norm(fallback, axis=1, keepdims=True)
    return d, e / norm


def sample_batch(source: DipoleSource, count: int, seed: int, batch: int):
    rng = rng_for_batch(seed, batch)
    xi = rng.random((count, 2))
    return sample_directions(source.unit_orientation, xi[:, 0], xi[:, 1])


def sample_dipole_rays(source: DipoleSource, count: int, seed: int,
                       origin=None, medium_index: float = 2.4) -> list[Ray]:
    """Draw ``count`` rays from the normalized dipole power density.

    Rays are importance-sampled from ``(3 / 8 pi) sin^2 psi`` and carry equal
    weights summing to one.  ``origin`` defaults to the source position.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if np.linalg.norm(np.asarray(source.orientation, dtype=float)) == 0:
        raise InvalidSourceError("zero dipole orientation")
    origin = np.asarray(source.position if origin is None else origin, dtype=float)
    rays = []
    for b, start in enumerate(range(0, count, BATCH_SIZE)):
        n = min(BATCH_SIZE, count - start)
        d, e = sample_batch(source, n, seed, b)
        for k in range(n):
            rays.append(Ray(origin.copy(), d[k], 1.0 / count, e[k], medium_index))
    return rays
