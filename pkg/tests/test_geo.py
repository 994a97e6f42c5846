import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from nvreflector.device import (
    PERPENDICULAR,
    DipoleSource,
    InvalidSourceError,
    ParaboloidDevice,
    PlanarSample,
)
from nvreflector.geo import (
    DeviceDomainError,
    ExitSurface,
    InvalidApertureError,
    Ray,
    angular_distribution_geo,
    brewster_angle,
    collection_efficiency_geo,
    critical_angle,
    fresnel_power,
    paraboloid_intersect,
    sample_dipole_rays,
    trace_ensemble,
    trace_ray,
)
from nvreflector.geo.collection import BottomExits, histogram_from_exits
from nvreflector.geo.rays import TAG_BOTTOM, rng_for_batch, sample_directions
from nvreflector.geo.tracer import trace_arrays

DEVICE = ParaboloidDevice()
FOCUS = DEVICE.emitter_origin


def snell_fresnel(n1, n2, theta_i):
    """Reflectances from the angle-difference forms of the Fresnel equations."""
    s = n1 / n2 * math.sin(theta_i)
    if s >= 1.0:
        return 1.0, 1.0
    theta_t = math.asin(s)
    if theta_i < 1e-6:
        r = ((n1 - n2) / (n1 + n2)) ** 2
        return r, r
    rs = (math.sin(theta_i - theta_t) / math.sin(theta_i + theta_t)) ** 2
    rp = (math.tan(theta_i - theta_t) / math.tan(theta_i + theta_t)) ** 2
    return rs, rp


# ---------------------------------------------------------------- sampling

def test_dipole_directions_follow_sin2_law():
    rng = rng_for_batch(11, 0)
    xi = rng.random((1_000_000, 2))
    d, _ = sample_directions(np.array([0.0, 0.0, 1.0]), xi[:, 0], xi[:, 1])
    edges = np.linspace(-1.0, 1.0, 21)  # bins in cos(psi): equal solid angle
    counts, _ = np.histogram(d[:, 2], bins=edges)

    def band(lo, hi):
        # integral of (3 / 8 pi) sin^2 psi dOmega over lo <= cos psi <= hi
        return integrate.quad(lambda u: 3 / (8 * np.pi) * (1 - u * u) * 2 * np.pi, lo, hi)[0]

    expected = np.array([band(a, b) for a, b in zip(edges[:-1], edges[1:])]) * d.shape[0]
    assert expected.sum() == pytest.approx(d.shape[0], rel=1e-9)
    assert stats.chisquare(counts, expected).pvalue > 1e-3
    assert np.all(np.abs(counts - expected) < 4 * np.sqrt(expected))

    phi = np.arctan2(d[:, 1], d[:, 0])
    phi_counts, _ = np.histogram(phi, bins=16, range=(-np.pi, np.pi))
    assert stats.chisquare(phi_counts).pvalue > 1e-3


def test_dipole_axis_node_is_empty():
    rng = rng_for_batch(3, 0)
    xi = rng.random((1_000_000, 2))
    d, _ = sample_directions(np.array([0.0, 0.0, 1.0]), xi[:, 0], xi[:, 1])
    cone = np.abs(d[:, 2]) > math.cos(math.radians(1.0))
    # expected count ~ 1e6 * (3/4) * (1 deg)^4 / 2 ~ 0.03
    assert cone.sum() <= 2


def test_single_ray_carries_full_weight():
    rays = sample_dipole_rays(DipoleSource(), 1, seed=5)
    assert len(rays) == 1
    assert rays[0].power_weight == 1.0


def test_sampling_is_deterministic_and_normalized():
    a = sample_dipole_rays(DipoleSource(orientation=(1, 2, 3)), 500, seed=9)
    b = sample_dipole_rays(DipoleSource(orientation=(1, 2, 3)), 500, seed=9)
    assert all(np.array_equal(x.direction, y.direction) for x, y in zip(a, b))
    assert sum(r.power_weight for r in a) == pytest.approx(1.0, abs=1e-12)


def test_zero_orientation_rejected():
    with pytest.raises(InvalidSourceError):
        DipoleSource(orientation=(0, 0, 0))


@given(st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3),
       st.integers(0, 2**32))
def test_polarization_is_transverse(orientation, seed):
    src = DipoleSource(orientation=orientation)
    assert np.linalg.norm(src.unit_orientation) == pytest.approx(1.0, abs=1e-12)
    rng = np.random.default_rng(seed)
    xi = rng.random((64, 2))
    d, e = sample_directions(src.unit_orientation, xi[:, 0], xi[:, 1])
    assert np.max(np.abs(np.sum(d * e, axis=1))) < 1e-9


# ---------------------------------------------------------------- Fresnel

def test_total_internal_reflection_from_critical_angle():
    theta_c = math.asin(1 / 2.4)
    assert critical_angle(2.4, 1.0) == pytest.approx(theta_c, abs=1e-15)
    for pol in "sp":
        for theta in (theta_c, theta_c + 1e-9, math.radians(30), math.radians(60), math.pi / 2):
            assert fresnel_power(2.4, 1.0, theta, pol) == (1.0, 0.0)


def test_normal_incidence_reflectance():
    for pol in "sp":
        r, t = fresnel_power(2.4, 1.0, 0.0, pol)
        assert r == pytest.approx((1.4 / 3.4) ** 2, rel=1e-12)
        assert r == pytest.approx(0.1696, abs=5e-5)


def test_index_matched_interface_is_transparent():
    for theta in np.linspace(0, math.pi / 2 - 1e-6, 7):
        for pol in "sp":
            r, t = fresnel_power(1.7, 1.7, theta, pol)
            assert r == pytest.approx(0.0, abs=1e-15)
            assert t == pytest.approx(1.0, abs=1e-15)


@given(st.floats(1.0, 3.0), st.floats(1.0, 3.0), st.floats(0.0, math.pi / 2 - 1e-6),
       st.sampled_from("sp"))
def test_fresnel_energy_balance_and_reference(n1, n2, theta, pol):
    r, t = fresnel_power(n1, n2, theta, pol)
    assert r + t == pytest.approx(1.0, abs=1e-12)
    rs, rp = snell_fresnel(n1, n2, theta)
    assert r == pytest.approx(rs if pol == "s" else rp, abs=1e-9)


@given(st.floats(1.0, 3.0), st.floats(1.0, 3.0), st.floats(1e-6, 1.0 - 1e-6))
def test_s_reflects_more_than_p_below_brewster(n1, n2, frac):
    if abs(n1 - n2) < 1e-6:
        return
    theta = frac * brewster_angle(n1, n2)
    assert fresnel_power(n1, n2, theta, "s")[0] >= fresnel_power(n1, n2, theta, "p")[0] - 1e-15


# ---------------------------------------------------------------- geometry

def _ray(direction, origin=FOCUS, weight=1.0):
    d = np.asarray(direction, dtype=float)
    helper = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 * np.linalg.norm(d) else np.array([0.0, 1.0, 0.0])
    return Ray(origin, d, weight, np.cross(d, helper), 2.4)


def test_axis_ray_hits_apex():
    hit, normal, surface = paraboloid_intersect(_ray([0, 0, 1]), DEVICE)
    assert surface == ExitSurface.PARABOLOID_WALL
    np.testing.assert_allclose(hit, [0, 0, 0], atol=1e-9)
    np.testing.assert_allclose(normal, [0, 0, 1], atol=1e-12)


def test_sideways_ray_meets_latus_rectum():
    f = DEVICE.focal_length_f
    hit, normal, surface = paraboloid_intersect(_ray([1, 0, 0]), DEVICE)
    assert surface == ExitSurface.PARABOLOID_WALL
    np.testing.assert_allclose(hit, [2 * f, 0, -f], atol=1e-9)
    assert math.degrees(math.acos(normal[2])) == pytest.approx(45.0, abs=1e-9)


def test_downward_ray_hits_bottom_facet():
    hit, normal, surface = paraboloid_intersect(_ray([0, 0, -1]), DEVICE)
    assert surface == ExitSurface.BOTTOM_FACET
    assert hit[2] == pytest.approx(-DEVICE.height_nm - DEVICE.substrate_nm)
    np.testing.assert_allclose(normal, [0, 0, -1])


def test_origin_outside_rejected():
    with pytest.raises(DeviceDomainError):
        paraboloid_intersect(_ray([0, 0, 1], origin=np.array([0.0, 0.0, 10.0])), DEVICE)


@given(st.floats(1e-3, math.pi - 1e-3), st.floats(0, 2 * math.pi))
def test_focal_reflection_is_collimated(theta, phi):
    d = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
    res = paraboloid_intersect(_ray(d), DEVICE)
    if res is None or res[2] != ExitSurface.PARABOLOID_WALL:
        return
    _, n, _ = res
    out = d - 2 * np.dot(d, n) * n
    angle = math.atan2(np.linalg.norm(np.cross(out, [0, 0, -1])), np.dot(out, [0, 0, -1]))
    assert angle < 1e-9


# ---------------------------------------------------------------- tracing

def test_sideways_ray_reflects_totally_then_exits_bottom():
    dev = ParaboloidDevice(n_bottom=1.0)
    res = trace_ray(_ray([1, 0, 0]), dev)
    bottom = [r for r in res if r.exit_surface == ExitSurface.BOTTOM_FACET]
    # incidence on the wall is 45 deg, beyond the critical angle: no wall exit before the bottom
    assert res.records[0].exit_surface == ExitSurface.BOTTOM_FACET
    t_normal = 1 - snell_fresnel(2.4, 1.0, 0.0)[0]
    assert bottom[0].power_weight == pytest.approx(t_normal, rel=1e-9)
    assert t_normal == pytest.approx(0.83, abs=0.005)
    np.testing.assert_allclose(bottom[0].direction_in_exit_medium, [0, 0, -1], atol=1e-9)


def test_axis_ray_partially_transmits_at_apex():
    res = trace_ray(_ray([0, 0, 1]), DEVICE)
    first = res.records[0]
    assert first.exit_surface == ExitSurface.PARABOLOID_WALL
    assert first.power_weight == pytest.approx(1 - (1.4 / 3.4) ** 2, rel=1e-9)


def test_high_min_weight_keeps_one_branch():
    res = trace_ray(_ray([0, 0, 1]), DEVICE, min_weight=0.5)
    assert len(res) <= 1
    assert res.accounted_weight == pytest.approx(1.0, abs=1e-9)


@given(st.floats(1e-3, math.pi - 1e-3), st.floats(0, 2 * math.pi), st.floats(0, math.pi),
       st.sampled_from([1.0, 1.518]))
def test_ray_weight_is_conserved(theta, phi, pol_angle, n_bottom):
    dev = ParaboloidDevice(n_bottom=n_bottom)
    d = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
    u = np.cross(d, [0.3, 0.5, 0.7])
    u /= np.linalg.norm(u)
    v = np.cross(d, u)
    ray = Ray(FOCUS, d, 1.0, math.cos(pol_angle) * u + math.sin(pol_angle) * v, 2.4)
    res = trace_ray(ray, dev)
    assert res.accounted_weight == pytest.approx(1.0, abs=1e-9)


def test_ensemble_weight_is_conserved():
    ex = trace_ensemble(DEVICE, DipoleSource(), 20_000, seed=2)
    assert ex.total_exit_weight + ex.residual_weight == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------- collection

def test_aperture_beyond_collection_index_rejected():
    with pytest.raises(InvalidApertureError):
        collection_efficiency_geo(DEVICE, DipoleSource(), 1.6, ray_count=1000)


def test_efficiency_grows_with_aperture():
    src = DipoleSource(orientation=PERPENDICULAR)
    lo, _ = collection_efficiency_geo(DEVICE, src, 0.5, ray_count=20_000, seed=4)
    hi, _ = collection_efficiency_geo(DEVICE, src, 1.3, ray_count=20_000, seed=4)
    assert lo <= hi


def test_efficiency_is_bit_deterministic_and_thread_independent():
    src = DipoleSource(orientation=PERPENDICULAR)
    a = collection_efficiency_geo(DEVICE, src, 1.3, ray_count=70_000, seed=8)
    b = collection_efficiency_geo(DEVICE, src, 1.3, ray_count=70_000, seed=8)
    c = collection_efficiency_geo(DEVICE, src, 1.3, ray_count=70_000, seed=8, threads=3)
    assert a == b == c


def test_full_cone_without_facet_loss_collects_all_bottom_exits():
    src = DipoleSource(orientation=PERPENDICULAR)
    ex = trace_ensemble(DEVICE, src, 20_000, seed=6, bottom_fresnel=False)
    eta, _ = ex.efficiency(DEVICE.n_bottom)
    assert eta == pytest.approx(ex.weight.sum(), rel=1e-9)


def test_histogram_total_matches_efficiency():
    src = DipoleSource(orientation=PERPENDICULAR)
    n = DEVICE.n_bottom
    hist = angular_distribution_geo(DEVICE, src, bins=45, ray_count=20_000, seed=12,
                                    reference_medium=n)
    eta, _ = collection_efficiency_geo(DEVICE, src, n, ray_count=20_000, seed=12)
    assert hist.power_per_bin.sum() + hist.overflow_power == pytest.approx(eta, rel=1e-9)
    assert np.all(np.diff(hist.cumulative) >= 0)
    assert hist.cumulative_at(90.0) == pytest.approx(hist.cumulative[-1])


def test_collimated_rays_fill_first_bin():
    count = 200
    origins = np.tile(FOCUS, (count, 1))
    dirs = np.tile([0.0, 0.0, -1.0], (count, 1))
    pols = np.tile([1.0 + 0j, 0.0, 0.0], (count, 1))
    batch = trace_arrays(origins, dirs, pols, np.full(count, 1.0 / count), DEVICE)
    sel = batch.tag == TAG_BOTTOM
    ex = BottomExits(count, batch.ray[sel], batch.na[sel], batch.weight[sel], DEVICE.n_bottom,
                     0.0, float(batch.residual.sum()), float(batch.weight.sum()))
    hist = histogram_from_exits(ex, bins=30)
    assert hist.power_per_bin[0] > 0
    assert np.all(hist.power_per_bin[1:] == 0)


def test_rotated_in_plane_dipoles_collect_equally():
    # the device is a body of revolution: x and y dipoles are related by a rotation
    ex, se_x = collection_efficiency_geo(DEVICE, DipoleSource(orientation=(1, 0, 0)), 1.3,
                                         ray_count=50_000, seed=31)
    ey, se_y = collection_efficiency_geo(DEVICE, DipoleSource(orientation=(0, 1, 0)), 1.3,
                                         ray_count=50_000, seed=32)
    assert abs(ex - ey) < 4 * math.hypot(se_x, se_y)


def test_planar_sample_is_supported():
    eta, se = collection_efficiency_geo(PlanarSample(), DipoleSource(orientation=PERPENDICULAR), 1.3,
                                        ray_count=20_000, seed=1)
    assert 0.0 < eta < 1.0 and se > 0
