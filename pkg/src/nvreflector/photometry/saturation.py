"""Saturation-curve model and bound-constrained fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, nnls


class InsufficientDataError(ValueError):
    pass


class FitConvergenceError(RuntimeError):
    def __init__(self, message, last_iterate):
        super().__init__(message)
        self.last_iterate = last_iterate


def saturation_model(power_mw, f_sat, p_sat, background_slope=0.0):
    """Count rate of a saturable emitter plus a background linear in power."""
    p = np.asarray(power_mw, dtype=float)
    return f_sat * p / (p + p_sat) + background_slope * p


@dataclass
class SaturationDataset:
    power_mw: np.ndarray
    counts_cps: np.ndarray
    sigma_cps: np.ndarray | None = None
    repetition_rate: float | None = None  # Hz
    pulse_length: float | None = None  # s

    def __post_init__(self):
        self.power_mw = np.asarray(self.power_mw, dtype=float)
        self.counts_cps = np.asarray(self.counts_cps, dtype=float)
        if self.power_mw.shape != self.counts_cps.shape or self.power_mw.ndim != 1:
            raise ValueError("power and counts must be 1-D arrays of equal length")
        if np.any(self.power_mw <= 0):
            raise ValueError("powers must be positive")
        if np.any(self.counts_cps < 0):
            raise ValueError("count rates must be nonnegative")
        if self.sigma_cps is not None:
            self.sigma_cps = np.asarray(self.sigma_cps, dtype=float)
            if self.sigma_cps.shape != self.counts_cps.shape or np.any(self.sigma_cps <= 0):
                raise ValueError("sigma must be positive and match the counts")


@dataclass
class SaturationFit:
    f_sat: float
    p_sat: float
    background_slope: float
    f_sat_err: float
    p_sat_err: float
    background_slope_err: float
    residual_norm: float
    residuals: np.ndarray
    iterations: int

    def as_dict(self) -> dict:
        return {
            "F_sat_cps": self.f_sat, "P_sat_mW": self.p_sat,
            "background_slope_cps_per_mW": self.background_slope,
            "F_sat_err_cps": self.f_sat_err, "P_sat_err_mW": self.p_sat_err,
            "background_slope_err_cps_per_mW": self.background_slope_err,
            "residual_norm": self.residual_norm, "iterations": self.iterations,
            "residuals_cps": [float(r) for r in self.residuals],
        }


def _linear_given_psat(p, f, w, p_sat, with_slope):
    # for fixed P_sat the model is linear in (F_sat, slope): nonnegative LS
    cols = [p / (p + p_sat)] + ([p] if with_slope else [])
    a = np.column_stack(cols) * w[:, None]
    coef, rnorm = nnls(a, f * w)
    return coef, rnorm


def fit_saturation(data: SaturationDataset, fit_slope: bool = True, max_iterations: int = 500,
                   xtol: float = 1e-8) -> SaturationFit:
    """Least-squares fit of the saturation model with nonnegative parameters.

    Starts from the best point of a logarithmic scan over ``P_sat`` (where the
    problem is linear) and refines with a trust-region solver.  With
    ``fit_slope=False`` the background slope is held at zero.
    """
    p, f = data.power_mw, data.counts_cps
    n_par = 3 if fit_slope else 2
    if np.unique(p).size < n_par + 1:
        raise InsufficientDataError(
            f"need at least {n_par + 1} distinct powers for a {n_par}-parameter fit, got {np.unique(p).size}")
    w = 1.0 / data.sigma_cps if data.sigma_cps is not None else np.ones_like(f)

    scan = np.geomspace(p.min() * 1e-3, p.max() * 1e3, 121)
    best = min(scan, key=lambda ps: _linear_given_psat(p, f, w, ps, fit_slope)[1])
    coef, _ = _linear_given_psat(p, f, w, best, fit_slope)
    x0 = np.array([max(coef[0], 1e-12 * max(f.max(), 1.0)), best]
                  + ([coef[1]] if fit_slope else []))
    scale = np.abs(x0) + 1e-300

    def resid(u):
        x = u * scale
        slope = x[2] if fit_slope else 0.0
        return (saturation_model(p, x[0], x[1], slope) - f) * w

    lower = np.array([0.0, 1e-12] + ([0.0] if fit_slope else []))
    x0u = np.maximum(x0 / scale, lower / scale * (1 + 1e-12))
    sol = least_squares(resid, x0u, bounds=(lower / scale, np.inf), method="trf",
                        xtol=xtol, ftol=1e-15, gtol=1e-15, max_nfev=max_iterations)
    x = sol.x * scale
    if sol.status <= 0:
        raise FitConvergenceError(f"saturation fit did not converge: {sol.message}", x)

    jac = sol.jac / scale[None, :]  # d resid / d x
    dof = max(p.size - n_par, 1)
    s2 = 2.0 * sol.cost / dof
    try:
        cov = s2 * np.linalg.inv(jac.T @ jac)
        errs = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        errs = np.full(n_par, np.inf)
    slope = float(x[2]) if fit_slope else 0.0
    slope_err = float(errs[2]) if fit_slope else 0.0
    raw = f - saturation_model(p, x[0], x[1], slope)
    return SaturationFit(float(x[0]), float(x[1]), slope, float(errs[0]), float(errs[1]), slope_err,
                         float(np.sqrt(2.0 * sol.cost)), raw, int(sol.nfev))
