"""Plane-wave decomposition of monitor fields and collection efficiency."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv

from nvreflector.fdtd.monitors import PlaneFields

K_SAMPLES = 1200


class MonitorPlacementError(ValueError):
    pass


class InvalidApertureError(ValueError):
    pass


@dataclass
class RadialSpectrum:
    """Azimuthally integrated power per unit transverse wavenumber."""

    k: np.ndarray
    density: np.ndarray
    k0: float
    index: float

    def cumulative(self) -> np.ndarray:
        steps = 0.5 * (self.density[1:] + self.density[:-1]) * np.diff(self.k)
        return np.concatenate([[0.0], np.cumsum(steps)])

    def power_within(self, k_cut: float) -> float:
        return float(np.interp(k_cut, self.k, self.cumulative()))

    @property
    def total(self) -> float:
        return float(self.cumulative()[-1])

    def __add__(self, other: "RadialSpectrum") -> "RadialSpectrum":
        if not np.array_equal(self.k, other.k):
            raise ValueError("spectra sampled on different k grids")
        return RadialSpectrum(self.k, self.density + other.density, self.k0, self.index)


@dataclass
class CartesianSpectrum:
    """Power carried by each discrete plane wave of a sampled plane."""

    kx: np.ndarray
    ky: np.ndarray
    power: np.ndarray  # (ny, nx)
    k0: float
    index: float

    @property
    def k_transverse(self) -> np.ndarray:
        return np.hypot(self.kx[None, :], self.ky[:, None])

    def power_within(self, k_cut: float) -> float:
        return float(self.power[self.k_transverse <= k_cut * (1 + 1e-12)].sum())

    @property
    def total(self) -> float:
        return self.power_within(self.index * self.k0)


def _hankel(values, radii, order, k):
    """Quadrature of ``int g(r) J_order(k r) r dr`` on uniformly spaced nodes."""
    dr = radii[1] - radii[0] if radii.size > 1 else 1.0
    kernel = jv(order, np.outer(k, radii)) * (radii * dr)[None, :]
    return kernel @ values


def _circular_spectra(f_r, r_of_fr, f_phi, r_of_fphi, m, k, phik, parity="cos"):
    """Fourier transforms of F_x and F_y on a polar (k, phi_k) grid.

    With ``parity="cos"`` the field is ``F_r cos(m phi) r_hat + F_phi sin(m phi) phi_hat``;
    with ``"sin"`` the trigonometric factors are swapped.  For ``m = 0`` the
    field is ``F_r r_hat + F_phi phi_hat`` either way.
    """
    two_pi = 2.0 * np.pi

    def h(order, c_r, c_phi):
        return c_r * _hankel(f_r, r_of_fr, order, k) + c_phi * _hankel(f_phi, r_of_fphi, order, k)

    def term(order, amp):
        return two_pi * (-1j) ** order * amp[:, None] * np.exp(1j * order * phik)[None, :]

    if m == 0:
        plus = term(1, h(1, 1.0, 1j))
        minus = term(-1, h(-1, 1.0, -1j))
    elif parity == "cos":
        # F_x + i F_y carries orders m + 1 and 1 - m, F_x - i F_y orders m - 1 and -m - 1
        plus = term(m + 1, h(m + 1, 0.5, 0.5)) + term(1 - m, h(1 - m, 0.5, -0.5))
        minus = term(m - 1, h(m - 1, 0.5, -0.5)) + term(-m - 1, h(-m - 1, 0.5, 0.5))
    else:
        plus = term(m + 1, h(m + 1, -0.5j, 0.5j)) + term(1 - m, h(1 - m, 0.5j, 0.5j))
        minus = term(m - 1, h(m - 1, -0.5j, -0.5j)) + term(-m - 1, h(-m - 1, 0.5j, -0.5j))
    fx = 0.5 * (plus + minus)
    fy = (plus - minus) / 2j
    return fx, fy


def radial_spectrum(plane: PlaneFields, wavelength_index: int, k_max: float | None = None,
                    samples: int = K_SAMPLES) -> RadialSpectrum:
    """Power per unit ``k_t`` crossing the plane in its collection direction.

    Only propagating waves (``k_t <= n k0``) are kept unless ``k_max`` says
    otherwise.  When the plane records the grid dispersion, the transform is
    evaluated at the grid's own wavenumbers and mapped back, so ``k`` is the
    physical transverse wavenumber and cones in ``k`` match physical angles.
    """
    w = wavelength_index
    k0 = 2.0 * np.pi / plane.wavelengths[w]
    stretch = 1.0 if plane.dispersion is None else float(plane.dispersion[w])
    k = np.linspace(0.0, plane.index * k0 if k_max is None else k_max, samples)
    k_grid = stretch * k
    n_phi = 4 * abs(plane.m) + 8
    phik = 2.0 * np.pi * np.arange(n_phi) / n_phi
    ex, ey = _circular_spectra(plane.e_r[w], plane.r_half, plane.e_phi[w], plane.r_int, plane.m, k_grid, phik)
    hx, hy = _circular_spectra(plane.h_r[w], plane.r_int, plane.h_phi[w], plane.r_half, plane.m, k_grid,
                               phik, parity="sin")
    sz = 0.5 * np.real(ex * np.conj(hy) - ey * np.conj(hx))
    # power per unit grid wavenumber, times d k_grid / d k
    density = plane.direction * sz.mean(axis=1) * 2.0 * np.pi * k_grid / (2.0 * np.pi) ** 2 * stretch
    return RadialSpectrum(k, density, k0, plane.index)


def plane_flux(plane: PlaneFields) -> np.ndarray:
    """Direct Poynting flux through the sampled disk, per wavelength, in the collection direction."""
    dr = plane.r_int[1] - plane.r_int[0]
    w_half = plane.r_half * dr
    w_int = plane.r_int * dr
    w_int[0] = dr * dr / 8.0
    w_int[-1] *= 0.5
    phi_factor = 2.0 * np.pi if plane.m == 0 else np.pi
    s = (plane.e_r * np.conj(plane.h_phi)) @ w_half - (plane.e_phi * np.conj(plane.h_r)) @ w_int
    return plane.direction * phi_factor * 0.5 * s.real


@dataclass
class CartesianPlane:
    """Tangential fields on a uniformly sampled plane (all four at the same nodes)."""

    wavelength: float
    dx: float
    ex: np.ndarray
    ey: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    index: float
    direction: int = -1
    z: float = 0.0

    def flux(self) -> float:
        s = 0.5 * np.real(self.ex * np.conj(self.hy) - self.ey * np.conj(self.hx))
        return float(self.direction * s.sum() * self.dx**2)


def cartesian_spectrum(plane: CartesianPlane, pad: int = 2) -> CartesianSpectrum:
    ny, nx = plane.ex.shape
    shape = (pad * ny, pad * nx)

    def ft(a):
        return np.fft.fft2(a, s=shape) * plane.dx**2

    ex, ey, hx, hy = (ft(a) for a in (plane.ex, plane.ey, plane.hx, plane.hy))
    area = shape[0] * shape[1] * plane.dx**2
    power = plane.direction * 0.5 * np.real(ex * np.conj(hy) - ey * np.conj(hx)) / area
    kx = 2.0 * np.pi * np.fft.fftfreq(shape[1], plane.dx)
    ky = 2.0 * np.pi * np.fft.fftfreq(shape[0], plane.dx)
    k0 = 2.0 * np.pi / plane.wavelength
    kt = np.hypot(kx[None, :], ky[:, None])
    power = np.where(kt <= plane.index * k0, power, 0.0)
    return CartesianSpectrum(kx, ky, power, k0, plane.index)


def angular_spectrum(plane_fields, substrate_index: float | None = None, wavelength_index: int = 0):
    """Plane-wave power spectrum of tangential monitor fields.

    Accepts a :class:`PlaneFields` record from the cylindrical solver (giving
    a :class:`RadialSpectrum`) or a :class:`CartesianPlane` (giving a
    :class:`CartesianSpectrum` over ``(kx, ky)``).  Evanescent components
    are discarded.
    """
    if substrate_index is not None:
        plane_fields.index = substrate_index
    if isinstance(plane_fields, PlaneFields):
        return radial_spectrum(plane_fields, wavelength_index)
    if isinstance(plane_fields, CartesianPlane):
        return cartesian_spectrum(plane_fields)
    raise TypeError(f"unsupported monitor type {type(plane_fields).__name__}")


@dataclass
class FarFieldResult:
    wavelengths: np.ndarray
    numerical_apertures: np.ndarray
    efficiency: np.ndarray  # (wavelength, NA)
    total_power: np.ndarray
    grid: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def eta(self, wavelength: float, na: float) -> float:
        i = int(np.argmin(np.abs(self.wavelengths - wavelength)))
        j = int(np.argmin(np.abs(self.numerical_apertures - na)))
        return float(self.efficiency[i, j])

    def rows(self):
        for i, lam in enumerate(self.wavelengths):
            for j, na in enumerate(self.numerical_apertures):
                yield float(lam), float(na), float(self.efficiency[i, j])


def collection_efficiency_fdtd(result, numerical_aperture) -> FarFieldResult:
    """Fraction of source power reaching the collection plane inside the aperture cone.

    ``result`` is a :class:`~nvreflector.fdtd.simulation.DipoleRun`.  The
    cone is ``k_t <= NA k0``, i.e. the internal half-angle ``asin(NA / n)``
    in the substrate; ``numerical_aperture`` may be a scalar or a sequence.
    """
    nas = np.atleast_1d(np.asarray(numerical_aperture, dtype=float))
    n_sub = result.collection_index
    if np.any(nas < 0) or np.any(nas > n_sub + 1e-12):
        raise InvalidApertureError(f"NA must lie in [0, {n_sub}] for this collection medium")
    eff = np.zeros((result.wavelengths.size, nas.size))
    for i, spec in enumerate(result.spectra):
        for j, na in enumerate(nas):
            eff[i, j] = spec.power_within(na * spec.k0) / result.normalization[i]
    return FarFieldResult(result.wavelengths.copy(), nas, eff, result.normalization.copy(),
                          dict(result.grid_info), list(result.warnings))
