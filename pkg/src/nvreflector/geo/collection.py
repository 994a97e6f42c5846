"""Monte Carlo collection efficiency and angular distributions."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from nvreflector.device import DipoleSource
from nvreflector.geo.rays import BATCH_SIZE, TAG_BOTTOM, TAG_LOST, sample_batch
from nvreflector.geo.tracer import trace_arrays


class InvalidApertureError(ValueError):
    pass


@dataclass
class BottomExits:
    """Collected-side exits of a traced ray ensemble."""

    ray_count: int
    ray: np.ndarray
    na: np.ndarray
    weight: np.ndarray
    n_bottom: float
    lost_weight: float
    residual_weight: float
    total_exit_weight: float

    def per_ray(self, numerical_aperture: float) -> np.ndarray:
        """Collected fraction of each emitted ray's weight inside the aperture."""
        mask = self.na <= numerical_aperture * (1.0 + 1e-12)
        w = np.bincount(self.ray[mask], weights=self.weight[mask], minlength=self.ray_count)
        return w * self.ray_count

    def efficiency(self, numerical_aperture: float):
        c = self.per_ray(numerical_aperture)
        eta = float(c.mean())
        stderr = float(c.std(ddof=1) / math.sqrt(self.ray_count)) if self.ray_count > 1 else 0.0
        return eta, stderr


def _trace_batch(device, source, origin, seed, b, count, max_bounces, min_weight, bottom_fresnel):
    d, e = sample_batch(source, count, seed, b)
    origins = np.broadcast_to(origin, d.shape)
    weights = np.full(count, 1.0 / count)
    return trace_arrays(origins, d, e, weights, device, max_bounces, min_weight, bottom_fresnel)


def trace_ensemble(device, source: DipoleSource, ray_count: int, seed: int, max_bounces: int = 50,
                   min_weight: float = 1e-4, bottom_fresnel: bool = True,
                   threads: int = 1) -> BottomExits:
    """Trace ``ray_count`` dipole rays in fixed-size batches.

    Batch ``b`` always uses the generator keyed by ``(seed, b)`` and batches
    are merged in index order, so the result does not depend on ``threads``.
    """
    origin = source.absolute_position(device)
    if not device.contains(origin):
        raise ValueError(f"source at {tuple(origin)} is outside the diamond")
    starts = list(range(0, ray_count, BATCH_SIZE))
    sizes = [min(BATCH_SIZE, ray_count - s) for s in starts]

    def work(b):
        return _trace_batch(device, source, origin, seed, b, sizes[b], max_bounces, min_weight,
                            bottom_fresnel)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(work, range(len(starts))))
    else:
        batches = [work(b) for b in range(len(starts))]

    rays, nas, ws = [], [], []
    lost = residual = total = 0.0
    for b, batch in enumerate(batches):
        # rescale batch-normalised weights to ensemble weights
        scale = sizes[b] / ray_count
        sel = batch.tag == TAG_BOTTOM
        rays.append(batch.ray[sel] + starts[b])
        nas.append(batch.na[sel])
        ws.append(batch.weight[sel] * scale)
        lost += float(batch.weight[batch.tag == TAG_LOST].sum()) * scale
        residual += float(batch.residual.sum()) * scale
        total += float(batch.weight.sum()) * scale
    return BottomExits(ray_count, np.concatenate(rays), np.concatenate(nas), np.concatenate(ws),
                       device.n_bottom, lost, residual, total)


def _check_aperture(device, numerical_aperture):
    if not 0.0 < numerical_aperture <= device.n_bottom:
        raise InvalidApertureError(
            f"NA {numerical_aperture} must lie in (0, n_bottom={device.n_bottom}]")


def collection_efficiency_geo(device, source: DipoleSource, numerical_aperture: float,
                              ray_count: int = 100_000, seed: int = 0, **kwargs):
    """Fraction of emitted power leaving the bottom facet inside the NA cone.

    Returns ``(eta, standard_error)``.
    """
    _check_aperture(device, numerical_aperture)
    if ray_count < 1000:
        raise ValueError("ray_count must be >= 1000")
    exits = trace_ensemble(device, source, ray_count, seed, **kwargs)
    return exits.efficiency(numerical_aperture)


def efficiency_table(exits: BottomExits, apertures) -> list[tuple[float, float, float]]:
    rows = []
    for na in apertures:
        eta, se = exits.efficiency(na)
        rows.append((float(na), eta, se))
    return rows


@dataclass
class AngularHistogram:
    bin_edges_theta: np.ndarray  # degrees
    power_per_bin: np.ndarray
    reference_medium: float
    overflow_power: float = 0.0  # exits whose NA exceeds the reference index

    def __post_init__(self):
        if np.any(self.power_per_bin < 0):
            raise ValueError("histogram power must be nonnegative")

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.power_per_bin)

    def cumulative_at(self, theta_deg: float) -> float:
        """Collected power within ``theta_deg``, interpolated inside a bin."""
        edges = self.bin_edges_theta
        cum = np.concatenate([[0.0], self.cumulative])
        return float(np.interp(theta_deg, edges, cum))


def histogram_from_exits(exits: BottomExits, bins: int, reference_medium: float = 1.0) -> AngularHistogram:
    if bins < 2:
        raise ValueError("bins must be >= 2")
    edges = np.linspace(0.0, 90.0, bins + 1)
    ratio = exits.na / reference_medium
    inside = ratio <= 1.0
    theta = np.degrees(np.arcsin(np.clip(ratio[inside], 0.0, 1.0)))
    power, _ = np.histogram(theta, bins=edges, weights=exits.weight[inside])
    return AngularHistogram(edges, power, reference_medium, float(exits.weight[~inside].sum()))


def angular_distribution_geo(device, source: DipoleSource, bins: int = 90, ray_count: int = 100_000,
                             seed: int = 0, reference_medium: float = 1.0, **kwargs) -> AngularHistogram:
    """Collected power binned by collection half-angle.

    The half-angle is measured in a medium of index ``reference_medium``;
    ``1.0`` gives the angle whose sine is the objective NA.
    """
    exits = trace_ensemble(device, source, ray_count, seed, **kwargs)
    return histogram_from_exits(exits, bins, reference_medium)
