"""Axisymmetric gray-scale etch model: resist reflow, hard-mask transfer, diamond transfer.

Profiles are sampled on a shared radial grid.  Etching is purely vertical, so
every radius evolves independently.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq


class UnboundedFocalLengthError(ValueError):
    pass


@dataclass(frozen=True)
class EtchStack:
    resist_thickness: float = 280.0  # nm
    mask_thickness: float = 200.0  # nm of SiN
    selectivity_mask_over_resist: float = 1.0
    selectivity_diamond_over_mask: float = 28.0

    def __post_init__(self):
        if self.resist_thickness < 0 or self.mask_thickness <= 0:
            raise ValueError("layer thicknesses must be positive")
        if self.selectivity_mask_over_resist <= 0 or self.selectivity_diamond_over_mask <= 0:
            raise ValueError("selectivities must be positive")


@dataclass
class RadialProfile:
    radii: np.ndarray  # nm, ascending from 0
    heights: np.ndarray  # nm

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.heights = np.asarray(self.heights, dtype=float)
        if self.radii.ndim != 1 or self.radii.shape != self.heights.shape:
            raise ValueError("radii and heights must be 1-D arrays of equal length")
        if self.radii.size and self.radii[0] < 0:
            raise ValueError("radii must start at or above 0")
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be strictly ascending")
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heights must be finite")

    def at(self, r):
        return np.interp(r, self.radii, self.heights)

    def with_heights(self, heights) -> "RadialProfile":
        return RadialProfile(self.radii.copy(), heights)

    def volume(self) -> float:
        """Volume of revolution above z = 0, trapezoidal in r."""
        return float(2.0 * math.pi * np.trapezoid(self.heights * self.radii, self.radii))


def radial_grid(extent: float, spacing: float = 1.0) -> np.ndarray:
    n = int(math.ceil(extent / spacing))
    return np.arange(n + 1) * spacing


def reflow_cap_height(disk_radius: float, resist_thickness: float) -> float:
    """Height of the spherical cap holding the volume of a resist disk of the same base."""
    a, t = disk_radius, resist_thickness
    if t == 0:
        return 0.0
    # h^3 + 3 a^2 h - 6 a^2 t = 0 has a single positive root
    return brentq(lambda h: h**3 + 3 * a * a * h - 6 * a * a * t, 0.0, 2.0 * t + a, xtol=1e-12, rtol=1e-15)


def cap_curvature_radius(disk_radius: float, cap_height: float) -> float:
    return (disk_radius**2 + cap_height**2) / (2.0 * cap_height)


def reflow_profile(disk_radius: float, resist_thickness: float, spacing: float = 1.0,
                   extent: float | None = None) -> RadialProfile:
    """Volume-conserving spherical cap pinned at the disk edge."""
    if disk_radius <= 0 or resist_thickness < 0:
        raise ValueError("disk_radius must be positive and resist_thickness nonnegative")
    r = radial_grid(extent if extent is not None else 1.5 * disk_radius, spacing)
    hc = reflow_cap_height(disk_radius, resist_thickness)
    if hc == 0.0:
        return RadialProfile(r, np.zeros_like(r))
    rc = cap_curvature_radius(disk_radius, hc)
    inside = r <= disk_radius
    z = np.zeros_like(r)
    z[inside] = np.sqrt(np.maximum(rc * rc - r[inside] ** 2, 0.0)) - (rc - hc)
    return RadialProfile(r, np.maximum(z, 0.0))


def etch_step(substrate: RadialProfile, mask: RadialProfile, selectivity: float, amount: float):
    """Etch through a mask of local thickness ``mask`` into ``substrate``.

    ``amount`` is measured in mask thickness.  Returns ``(substrate, mask)``
    after the etch; the mask is consumed first and the rest of the budget
    removes ``selectivity`` times as much substrate.
    """
    if amount < 0:
        raise ValueError("etch amount must be nonnegative")
    if not np.array_equal(substrate.radii, mask.radii):
        raise ValueError("substrate and mask must share a radial grid")
    thickness = np.maximum(mask.heights, 0.0)
    remaining = np.maximum(amount - thickness, 0.0)
    new_mask = np.maximum(thickness - amount, 0.0)
    return (substrate.with_heights(substrate.heights - selectivity * remaining),
            mask.with_heights(new_mask))


def transfer_etch(surface: RadialProfile, mask: RadialProfile, selectivity: float,
                  etch_amount: float) -> RadialProfile:
    """Composite surface (substrate plus leftover mask) after a masked etch."""
    sub, m = etch_step(surface, mask, selectivity, etch_amount)
    return sub.with_heights(sub.heights + m.heights)


@dataclass
class ParabolaFit:
    focal_length: float  # nm
    apex_offset: tuple  # (r0, z0) nm
    rmse: float  # nm
    fit_window: tuple  # (r_min, r_max) nm
    opening: str  # "up" or "down"
    residuals: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> dict:
        return {"focal_length_nm": self.focal_length, "apex_r_nm": self.apex_offset[0],
                "apex_z_nm": self.apex_offset[1], "rmse_nm": self.rmse,
                "window_r_min_nm": self.fit_window[0], "window_r_max_nm": self.fit_window[1],
                "opening": self.opening}


def fit_parabola(profile: RadialProfile, window: tuple | None = None) -> ParabolaFit:
    """Least-squares fit of ``z = +-(r - r0)^2 / (4 f) + z0`` over a radial window."""
    lo, hi = window if window is not None else (profile.radii[0], profile.radii[-1])
    sel = (profile.radii >= lo) & (profile.radii <= hi)
    if sel.sum() < 5:
        raise ValueError(f"need at least 5 samples in the fit window, got {int(sel.sum())}")
    r = profile.radii[sel]
    z = profile.heights[sel]
    # centre and scale the abscissa for conditioning
    rm, rs = r.mean(), max(np.ptp(r), 1e-30) / 2
    x = (r - rm) / rs
    c2, c1, c0 = np.polyfit(x, z, 2)
    spread = max(np.ptp(z), 1e-300)
    if abs(c2) <= 1e-9 * spread or abs(c2) < 1e-12:
        raise UnboundedFocalLengthError("profile has no curvature in the fit window")
    a = c2 / rs**2
    b = c1 / rs - 2.0 * c2 * rm / rs**2
    c = c0 - c1 * rm / rs + c2 * rm**2 / rs**2
    resid = z - np.polyval([c2, c1, c0], x)
    r0 = -b / (2 * a)
    z0 = c - b * b / (4 * a)
    return ParabolaFit(float(1.0 / (4.0 * abs(a))), (float(r0), float(z0)),
                       float(np.sqrt(np.mean(resid**2))), (float(lo), float(hi)),
                       "up" if a > 0 else "down", resid)


def default_fit_window(profile: RadialProfile, flat_radius: float, depth_fraction: float = 0.8):
    """From the end of the flat top to where the depth below the top reaches ``depth_fraction``."""
    top = profile.heights.max()
    depth = top - profile.heights.min()
    below = np.flatnonzero(top - profile.heights >= depth_fraction * depth)
    r_hi = profile.radii[below[0]] if below.size else profile.radii[-1]
    return float(flat_radius), float(r_hi)


@dataclass
class PipelineReport:
    steps: dict  # name -> RadialProfile
    cap_height: float
    curvature_radius: float
    mask_etch_amount: float
    diamond_etch_amount: float
    final_depth: float
    flat_radius: float
    premature_termination: bool
    fit: ParabolaFit

    def as_dict(self) -> dict:
        return {"cap_height_nm": self.cap_height, "curvature_radius_nm": self.curvature_radius,
                "mask_etch_amount_nm": self.mask_etch_amount,
                "diamond_etch_amount_nm": self.diamond_etch_amount,
                "final_depth_nm": self.final_depth, "flat_radius_nm": self.flat_radius,
                "premature_termination": self.premature_termination, "fit": self.fit.as_dict()}


def process_pipeline(stack: EtchStack, disk_radius: float, diamond_etch_depth_target: float,
                     spacing: float = 1.0, window: tuple | None = None):
    """Resist disk, reflow, transfer into the hard mask, transfer into diamond, fit.

    ``diamond_etch_depth_target`` is in micrometres.  The hard-mask step runs
    until the reflowed resist is gone everywhere; the diamond step runs until
    the unmasked field is ``diamond_etch_depth_target`` deep.  If the mask
    survives at the centre, the top stays flat and is reported rather than
    treated as an error.  Returns ``(final, fit, report)``.
    """
    target = diamond_etch_depth_target * 1e3
    if target <= 0:
        raise ValueError("diamond_etch_depth_target must be positive")
    r = radial_grid(max(1.5 * disk_radius, disk_radius + 500.0), spacing)
    disk = RadialProfile(r, np.where(r <= disk_radius, stack.resist_thickness, 0.0))
    cap = reflow_profile(disk_radius, stack.resist_thickness, spacing, extent=r[-1])
    hc = reflow_cap_height(disk_radius, stack.resist_thickness)
    rc = cap_curvature_radius(disk_radius, hc) if hc > 0 else math.inf

    # hard-mask step: resist cap is the mask over a uniform SiN film
    sin_film = RadialProfile(r, np.full_like(r, stack.mask_thickness))
    sin_after, _ = etch_step(sin_film, cap, stack.selectivity_mask_over_resist, hc)
    hard_mask = sin_after.with_heights(np.maximum(sin_after.heights, 0.0))

    # diamond step: SiN mask over the diamond top at z = 0
    amount = target / stack.selectivity_diamond_over_mask
    diamond = RadialProfile(r, np.zeros_like(r))
    final, leftover = etch_step(diamond, hard_mask, stack.selectivity_diamond_over_mask, amount)
    composite = final.with_heights(final.heights + leftover.heights)

    if np.ptp(final.heights) == 0.0:
        raise UnboundedFocalLengthError("etched diamond surface is flat; nothing to fit")
    flat = np.flatnonzero(leftover.heights > 0)
    flat_radius = float(r[flat[-1]]) if flat.size else 0.0
    win = window if window is not None else default_fit_window(final, flat_radius)
    fit = fit_parabola(final, win)
    report = PipelineReport(
        steps={"i_resist_disk": disk, "ii_reflow": cap, "iii_hard_mask": hard_mask,
               "iv_composite": composite, "iv_diamond": final},
        cap_height=hc, curvature_radius=rc, mask_etch_amount=hc, diamond_etch_amount=amount,
        final_depth=float(final.heights.max() - final.heights.min()), flat_radius=flat_radius,
        premature_termination=bool(flat.size), fit=fit)
    return final, fit, report


def read_profile_csv(path) -> RadialProfile:
    """Two-column ``r_nm, z_nm`` file; a header row is optional."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if rows:
                    raise
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows)
    return RadialProfile(data[:, 0], data[:, 1])
