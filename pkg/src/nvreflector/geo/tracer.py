"""Polarization-resolved ray transport inside the diamond.

Every interface hit splits a ray deterministically: the transmitted branch
leaves the diamond and is recorded, the reflected branch keeps propagating.
Because transmitted branches never re-enter, the number of live branches per
emitted ray stays one and the whole tree is a single loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from nvreflector.device import ParaboloidDevice, PlanarSample
from nvreflector.geo.rays import (
    TAG_BOTTOM,
    TAG_LOST,
    TAG_TO_SURFACE,
    TAG_TOP,
    TAG_WALL,
    ExitRecord,
    Ray,
)

KIND_PARABOLOID = 0
KIND_PLANAR = 1
_T_MIN = 1e-7  # nm; excludes the root at the current surface point
_TIR_SLACK = 1e-12
# fast-math without the no-NaN/no-Inf assumptions: the kernels use both as sentinels
_FAST = {"contract", "arcp", "nsz", "afn", "reassoc"}


class DeviceDomainError(ValueError):
    pass


def geometry_vector(device) -> np.ndarray:
    """Flatten a device into the parameter vector read by the kernels."""
    if isinstance(device, ParaboloidDevice):
        h = device.height_nm
        return np.array([KIND_PARABOLOID, device.focal_length_f, h, -h - device.substrate_nm,
                         device.n_diamond, device.n_top, device.n_bottom, device.mouth_radius])
    if isinstance(device, PlanarSample):
        return np.array([KIND_PLANAR, 1.0, 0.0, -device.substrate_nm,
                         device.n_diamond, device.n_top, device.n_bottom, 0.0])
    raise TypeError(f"unsupported device type {type(device).__name__}")


@numba.njit(cache=True, fastmath=_FAST)
def _nearest_hit(o, d, geom):
    """Return (t, nx, ny, nz, tag); tag -1 when nothing is hit."""
    kind = int(geom[0])
    f = geom[1]
    h = geom[2]
    z_bot = geom[3]
    r_mouth = geom[7]
    best_t = np.inf
    tag = -1
    nx = 0.0
    ny = 0.0
    nz = 0.0

    if d[2] < 0.0:
        t = (z_bot - o[2]) / d[2]
        if _T_MIN < t < best_t:
            best_t = t
            tag = TAG_BOTTOM
            nx, ny, nz = 0.0, 0.0, -1.0

    if kind == KIND_PLANAR:
        if d[2] > 0.0:
            t = -o[2] / d[2]
            if _T_MIN < t < best_t:
                best_t = t
                tag = TAG_TOP
                nx, ny, nz = 0.0, 0.0, 1.0
        return best_t, nx, ny, nz, tag

    # substrate top facet: plane z = -h outside the mouth
    if d[2] > 0.0 and o[2] < -h:
        t = (-h - o[2]) / d[2]
        if _T_MIN < t < best_t:
            x = o[0] + t * d[0]
            y = o[1] + t * d[1]
            if x * x + y * y >= r_mouth * r_mouth:
                best_t = t
                tag = TAG_TOP
                nx, ny, nz = 0.0, 0.0, 1.0

    # paraboloid wall F = z + (x^2 + y^2) / 4f = 0, valid for -h <= z <= 0
    a = (d[0] * d[0] + d[1] * d[1]) / (4.0 * f)
    b = d[2] + (o[0] * d[0] + o[1] * d[1]) / (2.0 * f)
    c = o[2] + (o[0] * o[0] + o[1] * o[1]) / (4.0 * f)
    root0 = np.inf
    root1 = np.inf
    if a < 1e-300 or abs(a) < 1e-14 * abs(b):
        if b != 0.0:
            root0 = -c / b
    else:
        disc = b * b - 4.0 * a * c
        if disc >= 0.0:
            sq = np.sqrt(disc)
            q = -0.5 * (b + sq) if b >= 0.0 else -0.5 * (b - sq)
            root0 = q / a
            if q != 0.0:
                root1 = c / q
    for k in range(2):
        t = root0 if k == 0 else root1
        if _T_MIN < t < best_t:
            z = o[2] + t * d[2]
            if -h - 1e-9 <= z <= 1e-9:
                x = o[0] + t * d[0]
                y = o[1] + t * d[1]
                gx = x / (2.0 * f)
                gy = y / (2.0 * f)
                g = np.sqrt(gx * gx + gy * gy + 1.0)
                best_t = t
                tag = TAG_WALL
                nx, ny, nz = gx / g, gy / g, 1.0 / g
    return best_t, nx, ny, nz, tag


@numba.njit(cache=True, fastmath=_FAST)
def _cross(ax, ay, az, bx, by, bz):
    return ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx


@numba.njit(cache=True, fastmath=_FAST)
def _trace_kernel(origins, dirs, pols, weights, geom, max_bounces, min_weight,
                  bottom_fresnel, start, out_ray, out_tag, out_dir, out_w, out_na,
                  residual, bounces):
    """Trace rays from ``start`` until the record buffer might overflow.

    Returns ``(next_ray, n_records)``.  The bounce loop works on scalars only;
    small temporary arrays would dominate the run time.
    """
    n_d = geom[4]
    n_top = geom[5]
    n_bot = geom[6]
    planar = int(geom[0]) == KIND_PLANAR
    n_out = max(n_top, n_bot)
    cap = out_w.shape[0]
    nrec = 0
    o = np.empty(3)
    d = np.empty(3)
    i = start
    while i < origins.shape[0]:
        if nrec + max_bounces + 2 > cap:
            return i, nrec
        for q in range(3):
            o[q] = origins[i, q]
            d[q] = dirs[i, q]
        ex = pols[i, 0]
        ey = pols[i, 1]
        ez = pols[i, 2]
        w = weights[i]
        w0 = w
        residual[i] = 0.0
        nb = 0
        while True:
            t, nx, ny, nz, tag = _nearest_hit(o, d, geom)
            if tag < 0:
                out_ray[nrec] = i
                out_tag[nrec] = TAG_LOST
                out_dir[nrec, 0] = d[0]
                out_dir[nrec, 1] = d[1]
                out_dir[nrec, 2] = d[2]
                out_w[nrec] = w
                out_na[nrec] = np.nan
                nrec += 1
                break
            for q in range(3):
                o[q] = o[q] + t * d[q]
            dx, dy, dz = d[0], d[1], d[2]
            n2 = n_bot if tag == TAG_BOTTOM else n_top
            cos_i = dx * nx + dy * ny + dz * nz
            if cos_i > 1.0:
                cos_i = 1.0
            sin2_i = 1.0 - cos_i * cos_i
            if sin2_i < 0.0:
                sin2_i = 0.0
            # s is normal to the plane of incidence, p_i and p_r complete the frames
            sx, sy, sz = _cross(dx, dy, dz, nx, ny, nz)
            sn = np.sqrt(sx * sx + sy * sy + sz * sz)
            if sn < 1e-12:
                if abs(dx) < 0.9:
                    sx, sy, sz = _cross(dx, dy, dz, 1.0, 0.0, 0.0)
                else:
                    sx, sy, sz = _cross(dx, dy, dz, 0.0, 1.0, 0.0)
                sn = np.sqrt(sx * sx + sy * sy + sz * sz)
            sx /= sn
            sy /= sn
            sz /= sn
            pix, piy, piz = _cross(sx, sy, sz, dx, dy, dz)
            rx = dx - 2.0 * cos_i * nx
            ry = dy - 2.0 * cos_i * ny
            rz = dz - 2.0 * cos_i * nz
            prx, pry, prz = _cross(sx, sy, sz, rx, ry, rz)
            Es = ex * sx + ey * sy + ez * sz
            Ep = ex * pix + ey * piy + ez * piz

            cos2_t = cos_i * cos_i + (1.0 - (n_d / n2) ** 2) * sin2_i
            tir = n_d > n2 and cos2_t <= _TIR_SLACK
            if planar and tir and n_d * n_d * sin2_i > n_out * n_out:
                # parallel faces keep the incidence angle: reflected totally at both, for ever
                out_ray[nrec] = i
                out_tag[nrec] = TAG_LOST
                out_dir[nrec, 0] = dx
                out_dir[nrec, 1] = dy
                out_dir[nrec, 2] = dz
                out_w[nrec] = w
                out_na[nrec] = np.nan
                nrec += 1
                break
            if tir:
                cos_t = 1j * np.sqrt(max(-cos2_t, 0.0))
            else:
                cos_t = np.sqrt(max(cos2_t, 0.0)) + 0j
            rs = (n_d * cos_i - n2 * cos_t) / (n_d * cos_i + n2 * cos_t)
            rp = (n2 * cos_i - n_d * cos_t) / (n2 * cos_i + n_d * cos_t)
            if tir:
                rs = rs / abs(rs)
                rp = rp / abs(rp)
            es2 = Es.real * Es.real + Es.imag * Es.imag
            ep2 = Ep.real * Ep.real + Ep.imag * Ep.imag
            Rs = rs.real * rs.real + rs.imag * rs.imag
            Rp = rp.real * rp.real + rp.imag * rp.imag
            if tir:
                R = 1.0
            elif tag == TAG_BOTTOM and not bottom_fresnel:
                R = 0.0
            else:
                R = (Rs * es2 + Rp * ep2) / (es2 + ep2)
            T = 1.0 - R
            if T > 0.0:
                eta = n_d / n2
                ct = cos_t.real
                out_ray[nrec] = i
                out_tag[nrec] = tag
                out_dir[nrec, 0] = eta * dx + (ct - eta * cos_i) * nx
                out_dir[nrec, 1] = eta * dy + (ct - eta * cos_i) * ny
                out_dir[nrec, 2] = eta * dz + (ct - eta * cos_i) * nz
                out_w[nrec] = w * T
                out_na[nrec] = n_d * np.sqrt(sin2_i)
                nrec += 1
            w_r = w * R
            if w_r <= 0.0:
                break
            if w_r < min_weight * w0:
                residual[i] += w_r
                break
            as_ = rs * Es
            ap = rp * Ep
            ex = as_ * sx + ap * prx
            ey = as_ * sy + ap * pry
            ez = as_ * sz + ap * prz
            en = np.sqrt(ex.real * ex.real + ex.imag * ex.imag + ey.real * ey.real
                         + ey.imag * ey.imag + ez.real * ez.real + ez.imag * ez.imag)
            ex /= en
            ey /= en
            ez /= en
            dn = np.sqrt(rx * rx + ry * ry + rz * rz)
            d[0] = rx / dn
            d[1] = ry / dn
            d[2] = rz / dn
            w = w_r
            nb += 1
            if nb >= max_bounces:
                out_ray[nrec] = i
                out_tag[nrec] = TAG_LOST
                for q in range(3):
                    out_dir[nrec, q] = d[q]
                out_w[nrec] = w
                out_na[nrec] = np.nan
                nrec += 1
                break
        bounces[i] = nb
        i += 1
    return i, nrec


@dataclass
class TraceBatch:
    """Flat exit records for a batch of rays (ray index, tag, direction, weight)."""

    ray: np.ndarray
    tag: np.ndarray
    direction: np.ndarray
    weight: np.ndarray
    na: np.ndarray  # n_diamond * sin(incidence) = index * sin(angle) in exit medium
    residual: np.ndarray
    bounces: np.ndarray


def trace_arrays(origins, dirs, pols, weights, device, max_bounces=50, min_weight=1e-4,
                 bottom_fresnel=True) -> TraceBatch:
    """Trace many rays; records are ordered by ray index."""
    if max_bounces < 1:
        raise ValueError("max_bounces must be >= 1")
    if not 0.0 < min_weight < 1.0:
        raise ValueError("min_weight must lie in (0, 1)")
    n = origins.shape[0]
    geom = geometry_vector(device)
    origins = np.ascontiguousarray(origins, dtype=float)
    dirs = np.ascontiguousarray(dirs, dtype=float)
    pols = np.ascontiguousarray(pols, dtype=complex)
    weights = np.ascontiguousarray(weights, dtype=float)
    residual = np.zeros(n)
    bounces = np.zeros(n, dtype=np.int64)
    cap = max(4 * n, 2 * (max_bounces + 2))
    chunks = []
    start = 0
    while start < n:
        out_ray = np.empty(cap, dtype=np.int64)
        out_tag = np.empty(cap, dtype=np.int64)
        out_dir = np.empty((cap, 3))
        out_w = np.empty(cap)
        out_na = np.empty(cap)
        start, nrec = _trace_kernel(origins, dirs, pols, weights, geom, max_bounces, min_weight,
                                    bottom_fresnel, start, out_ray, out_tag, out_dir, out_w,
                                    out_na, residual, bounces)
        chunks.append((out_ray[:nrec], out_tag[:nrec], out_dir[:nrec], out_w[:nrec], out_na[:nrec]))
    return TraceBatch(
        ray=np.concatenate([c[0] for c in chunks]),
        tag=np.concatenate([c[1] for c in chunks]),
        direction=np.concatenate([c[2] for c in chunks]),
        weight=np.concatenate([c[3] for c in chunks]),
        na=np.concatenate([c[4] for c in chunks]),
        residual=residual,
        bounces=bounces,
    )


def _check_inside(device, point):
    if not device.contains(point):
        raise DeviceDomainError(f"ray origin {tuple(point)} lies outside the diamond")


def paraboloid_intersect(ray: Ray, device):
    """Nearest interface hit for a ray travelling inside the diamond.

    Returns ``(hit_point, outward_normal, surface)`` or ``None`` when the ray
    grazes a surface tangentially and no hit can be resolved.
    """
    _check_inside(device, ray.origin)
    t, nx, ny, nz, tag = _nearest_hit(ray.origin, ray.direction, geometry_vector(device))
    if tag < 0:
        return None
    return ray.origin + t * ray.direction, np.array([nx, ny, nz]), TAG_TO_SURFACE[tag]


@dataclass
class TraceResult:
    records: list[ExitRecord]
    residual: float
    bounces: int

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    @property
    def accounted_weight(self) -> float:
        return sum(r.power_weight for r in self.records) + self.residual


def trace_ray(ray: Ray, device, max_bounces: int = 50, min_weight: float = 1e-4,
              bottom_fresnel: bool = True) -> TraceResult:
    """Follow one ray and all of its reflected descendants to termination."""
    _check_inside(device, ray.origin)
    batch = trace_arrays(ray.origin[None, :], ray.direction[None, :], ray.polarization[None, :],
                         np.array([ray.power_weight]), device, max_bounces, min_weight,
                         bottom_fresnel)
    records = [ExitRecord(TAG_TO_SURFACE[int(tag)], d.copy(), float(w))
               for tag, d, w in zip(batch.tag, batch.direction, batch.weight)]
    return TraceResult(records, float(batch.residual[0]), int(batch.bounces[0]))
