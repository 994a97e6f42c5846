"""Independent reference computations used by the tests."""

import numpy as np
from scipy import integrate


def dipole_fields(points, p, wavelength, n):
    """Phasor E and H of a point dipole at the origin in a uniform medium (c = eps0 = mu0 = 1)."""
    pts = np.asarray(points, dtype=float)
    p = np.asarray(p, dtype=complex)
    omega = 2 * np.pi / wavelength
    k = n * omega
    eps = n * n
    r = np.linalg.norm(pts, axis=-1)[..., None]
    u = pts / r
    phase = np.exp(1j * k * r)
    u_dot_p = (u * p).sum(-1)[..., None]
    u_x_p = np.cross(u, p)
    far = np.cross(u_x_p, u)
    e = (k**2 * far / r + (3 * u * u_dot_p - p) * (1 / r**3 - 1j * k / r**2)) * phase / (4 * np.pi * eps)
    h = omega * k * u_x_p / r * (1 - 1 / (1j * k * r)) * phase / (4 * np.pi)
    return e, h


def dipole_total_power(p_abs, wavelength, n):
    omega = 2 * np.pi / wavelength
    k = n * omega
    eps = n * n
    # far field |E| = k^2 |p| sin / (4 pi eps r), |H| = n |E|; integrate 0.5 |E||H| over the sphere
    return 0.5 * n * (k**2 * p_abs / (4 * np.pi * eps)) ** 2 * 8 * np.pi / 3


def face_fractions_z_dipole(half):
    """Share of a z-dipole's power crossing each face of a cube centred on it."""
    def density(x, y, z):
        r2 = x * x + y * y + z * z
        sin2 = (x * x + y * y) / r2
        return 3 / (8 * np.pi) * sin2 / r2

    top, _ = integrate.dblquad(lambda y, x: density(x, y, half) * half / np.sqrt(x * x + y * y + half**2),
                               -half, half, -half, half, epsabs=1e-12)
    side, _ = integrate.dblquad(lambda z, y: density(half, y, z) * half / np.sqrt(half**2 + y * y + z * z),
                                -half, half, -half, half, epsabs=1e-12)
    return top, side


def sphere_parabola_rmse(curvature_radius, window):
    """Leading-order RMS misfit of a quadratic fitted to a spherical cap over ``[0, window]``.

    The sphere's first non-quadratic term is ``r^4 / (8 R^3)``.  On ``[0, 1]``
    the residual of ``x^4`` after least-squares projection onto ``1, x, x^2``
    has squared norm ``1/9 - b^T H^{-1} b`` with the 3x3 Hilbert matrix ``H``
    and ``b = (1/5, 1/6, 1/7)``, which evaluates to ``16 / 11025``.
    """
    return 4.0 / 105.0 * window**4 / (8 * curvature_radius**3)
