"""Three-dimensional Yee solver on a uniform Cartesian grid.

Component positions (in cells) follow the usual staggering::

    Ex (i+1/2, j, k)     Hx (i, j+1/2, k+1/2)
    Ey (i, j+1/2, k)     Hy (i+1/2, j, k+1/2)
    Ez (i, j, k+1/2)     Hz (i+1/2, j+1/2, k)

The outer faces are perfect conductors unless the x or y direction is
periodic.  Absorbers are convolutional PMLs on the derivative terms.
Units: c = eps0 = mu0 = 1, lengths in nm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from nvreflector.fdtd.cylindrical import DivergedSimulationError
from nvreflector.fdtd.grid import GridTooLargeError
from nvreflector.fdtd.pml import cpml_coefficients

BYTES_PER_CELL_3D = 8 * (6 + 12 + 3)
MAX_COURANT_3D = 1.0 / math.sqrt(3.0)


@dataclass
class YeeGrid:
    nx: int
    ny: int
    nz: int
    dx: float
    dt: float
    eps_x: np.ndarray  # (nx, ny + 1, nz + 1)
    eps_y: np.ndarray  # (nx + 1, ny, nz + 1)
    eps_z: np.ndarray  # (nx + 1, ny + 1, nz)
    pml_cells: tuple = (0, 0, 0)
    periodic_x: bool = False
    periodic_y: bool = False
    # CPML (b, c) at integer and half positions along each axis
    coeffs: dict = field(default_factory=dict)
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        for name, n_int in (("x", self.nx), ("y", self.ny), ("z", self.nz)):
            for tag, size in (("i", n_int + 1), ("h", n_int)):
                self.coeffs.setdefault(f"b{name}_{tag}", np.ones(size))
                self.coeffs.setdefault(f"c{name}_{tag}", np.zeros(size))
        if min(self.eps_x.min(), self.eps_y.min(), self.eps_z.min()) < 1.0 - 1e-12:
            raise ValueError("permittivity must be >= 1")

    @property
    def cells(self) -> int:
        return self.nx * self.ny * self.nz

    def coefficient_tuple(self):
        c = self.coeffs
        return tuple(c[f"{p}{a}_{t}"] for a in "xyz" for t in "ih" for p in "bc")

    def node(self, axis: int, index: float) -> float:
        return self.origin[axis] + index * self.dx


@dataclass
class FieldState:
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    hz: np.ndarray
    psi: tuple
    step: int = 0

    @classmethod
    def zeros(cls, grid: YeeGrid) -> "FieldState":
        nx, ny, nz = grid.nx, grid.ny, grid.nz
        shapes = {
            "ex": (nx, ny + 1, nz + 1), "ey": (nx + 1, ny, nz + 1), "ez": (nx + 1, ny + 1, nz),
            "hx": (nx + 1, ny, nz), "hy": (nx, ny + 1, nz), "hz": (nx, ny, nz + 1),
        }
        arrays = {k: np.zeros(s) for k, s in shapes.items()}
        # two auxiliary arrays per component, one per transverse derivative
        psi = tuple(np.zeros(shapes[k]) for k in ("hx", "hx", "hy", "hy", "hz", "hz",
                                                  "ex", "ex", "ey", "ey", "ez", "ez"))
        return cls(psi=psi, **arrays)

    def copy(self) -> "FieldState":
        return FieldState(self.ex.copy(), self.ey.copy(), self.ez.copy(), self.hx.copy(),
                          self.hy.copy(), self.hz.copy(), tuple(p.copy() for p in self.psi),
                          self.step)


@numba.njit(cache=True)
def _update_h(ex, ey, ez, hx, hy, hz, p0, p1, p2, p3, p4, p5, dx, dt,
              bx_i, cx_i, bx_h, cx_h, by_i, cy_i, by_h, cy_h, bz_i, cz_i, bz_h, cz_h):
    inv = 1.0 / dx
    nx, ny, nz = hz.shape[0], hz.shape[1], hx.shape[2]
    for i in range(nx + 1):
        for j in range(ny):
            for k in range(nz):
                dy = (ez[i, j + 1, k] - ez[i, j, k]) * inv
                dz = (ey[i, j, k + 1] - ey[i, j, k]) * inv
                p0[i, j, k] = by_h[j] * p0[i, j, k] + cy_h[j] * dy
                p1[i, j, k] = bz_h[k] * p1[i, j, k] + cz_h[k] * dz
                hx[i, j, k] -= dt * (dy + p0[i, j, k] - dz - p1[i, j, k])
    for i in range(nx):
        for j in range(ny + 1):
            for k in range(nz):
                dz = (ex[i, j, k + 1] - ex[i, j, k]) * inv
                dxx = (ez[i + 1, j, k] - ez[i, j, k]) * inv
                p2[i, j, k] = bz_h[k] * p2[i, j, k] + cz_h[k] * dz
                p3[i, j, k] = bx_h[i] * p3[i, j, k] + cx_h[i] * dxx
                hy[i, j, k] -= dt * (dz + p2[i, j, k] - dxx - p3[i, j, k])
    for i in range(nx):
        for j in range(ny):
            for k in range(nz + 1):
                dxx = (ey[i + 1, j, k] - ey[i, j, k]) * inv
                dy = (ex[i, j + 1, k] - ex[i, j, k]) * inv
                p4[i, j, k] = bx_h[i] * p4[i, j, k] + cx_h[i] * dxx
                p5[i, j, k] = by_h[j] * p5[i, j, k] + cy_h[j] * dy
                hz[i, j, k] -= dt * (dxx + p4[i, j, k] - dy - p5[i, j, k])


@numba.njit(cache=True)
def _update_e(ex, ey, ez, hx, hy, hz, p6, p7, p8, p9, p10, p11, epx, epy, epz, dx, dt,
              periodic_x, periodic_y,
              bx_i, cx_i, bx_h, cx_h, by_i, cy_i, by_h, cy_h, bz_i, cz_i, bz_h, cz_h):
    inv = 1.0 / dx
    nx, ny, nz = hz.shape[0], hz.shape[1], hx.shape[2]
    # Ex: tangential on the y and z faces
    for i in range(nx):
        for j in range(ny + 1):
            if j == 0 or j == ny:
                if not periodic_y or j == ny:
                    continue
            jm = j - 1 if j > 0 else ny - 1
            for k in range(1, nz):
                dy = (hz[i, j, k] - hz[i, jm, k]) * inv
                dz = (hy[i, j, k] - hy[i, j, k - 1]) * inv
                p6[i, j, k] = by_i[j] * p6[i, j, k] + cy_i[j] * dy
                p7[i, j, k] = bz_i[k] * p7[i, j, k] + cz_i[k] * dz
                ex[i, j, k] += dt / epx[i, j, k] * (dy + p6[i, j, k] - dz - p7[i, j, k])
    # Ey: tangential on the x and z faces
    for i in range(nx + 1):
        if i == 0 or i == nx:
            if not periodic_x or i == nx:
                continue
        im = i - 1 if i > 0 else nx - 1
        for j in range(ny):
            for k in range(1, nz):
                dz = (hx[i, j, k] - hx[i, j, k - 1]) * inv
                dxx = (hz[i, j, k] - hz[im, j, k]) * inv
                p8[i, j, k] = bz_i[k] * p8[i, j, k] + cz_i[k] * dz
                p9[i, j, k] = bx_i[i] * p9[i, j, k] + cx_i[i] * dxx
                ey[i, j, k] += dt / epy[i, j, k] * (dz + p8[i, j, k] - dxx - p9[i, j, k])
    # Ez: tangential on the x and y faces
    for i in range(nx + 1):
        if i == 0 or i == nx:
            if not periodic_x or i == nx:
                continue
        im = i - 1 if i > 0 else nx - 1
        for j in range(ny + 1):
            if j == 0 or j == ny:
                if not periodic_y or j == ny:
                    continue
            jm = j - 1 if j > 0 else ny - 1
            for k in range(nz):
                dxx = (hy[i, j, k] - hy[im, j, k]) * inv
                dy = (hx[i, j, k] - hx[i, jm, k]) * inv
                p10[i, j, k] = bx_i[i] * p10[i, j, k] + cx_i[i] * dxx
                p11[i, j, k] = by_i[j] * p11[i, j, k] + cy_i[j] * dy
                ez[i, j, k] += dt / epz[i, j, k] * (dxx + p10[i, j, k] - dy - p11[i, j, k])
    if periodic_x:
        ey[nx, :, :] = ey[0, :, :]
        ez[nx, :, :] = ez[0, :, :]
    if periodic_y:
        ex[:, ny, :] = ex[:, 0, :]
        ez[:, ny, :] = ez[:, 0, :]


def step_fields(state: FieldState, grid: YeeGrid, check_every: int = 50) -> FieldState:
    """One leapfrog step: H over a full step, then E.

    Every ``check_every`` steps the fields are scanned for non-finite values.
    """
    c = grid.coefficient_tuple()
    p = state.psi
    _update_h(state.ex, state.ey, state.ez, state.hx, state.hy, state.hz, *p[:6], grid.dx, grid.dt, *c)
    _update_e(state.ex, state.ey, state.ez, state.hx, state.hy, state.hz, *p[6:],
              grid.eps_x, grid.eps_y, grid.eps_z, grid.dx, grid.dt, grid.periodic_x, grid.periodic_y, *c)
    state.step += 1
    if check_every and state.step % check_every == 0:
        if not (np.isfinite(state.ex).all() and np.isfinite(state.ey).all() and np.isfinite(state.ez).all()):
            raise DivergedSimulationError(state.step)
    return state


def field_energy(state: FieldState, grid: YeeGrid, previous: FieldState | None = None) -> float:
    """Electromagnetic energy in the grid.

    With ``previous`` (the state one step earlier) the electric part uses the
    product of the two E levels around the current H level; that quantity is
    exactly invariant under the Yee update in a closed lossless cavity.
    """
    p = state if previous is None else previous
    elec = ((grid.eps_x * state.ex * p.ex).sum() + (grid.eps_y * state.ey * p.ey).sum()
            + (grid.eps_z * state.ez * p.ez).sum())
    mag = (state.hx**2).sum() + (state.hy**2).sum() + (state.hz**2).sum()
    return 0.5 * grid.dx**3 * float(elec + mag)


def _axis_coefficients(n, dx, dt, pml, index, wavelength, lower=True, upper=True):
    thick = pml * dx
    out = {}
    for tag, pos in (("i", np.arange(n + 1) * dx), ("h", (np.arange(n) + 0.5) * dx)):
        b = np.ones(pos.size)
        c = np.zeros(pos.size)
        if pml > 0:
            if lower:
                bl, cl = cpml_coefficients(thick - pos, thick, dt, index, wavelength)
                sel = pos < thick
                b[sel], c[sel] = bl[sel], cl[sel]
            if upper:
                bu, cu = cpml_coefficients(pos - (n * dx - thick), thick, dt, index, wavelength)
                sel = pos > n * dx - thick
                b[sel], c[sel] = bu[sel], cu[sel]
        out[tag] = (b, c)
    return out


def _rasterize(eps_fn, xs, ys, zs, dx, sub):
    """Cell-averaged permittivity, supersampling only cells whose corners disagree."""
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    centre = eps_fn(X, Y, Z)
    h = 0.5 * dx
    corners = [eps_fn(X + sx * h, Y + sy * h, Z + sz * h)
               for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    mixed = np.zeros(centre.shape, dtype=bool)
    for cval in corners:
        mixed |= cval != centre
    out = centre.astype(float)
    idx = np.nonzero(mixed)
    if idx[0].size:
        offs = (np.arange(sub) + 0.5) / sub - 0.5
        ox, oy, oz = np.meshgrid(offs, offs, offs, indexing="ij")
        px = X[idx][:, None] + dx * ox.ravel()[None, :]
        py = Y[idx][:, None] + dx * oy.ravel()[None, :]
        pz = Z[idx][:, None] + dx * oz.ravel()[None, :]
        out[idx] = eps_fn(px, py, pz).mean(axis=1)
    return out


def build_cartesian_grid(structure, dx: float, half_widths, z_range, pml_cells: int = 12,
                         courant: float = 0.5, wavelength: float = 800.0,
                         periodic_xy: bool = False, memory_budget_bytes: float = 2e9,
                         subsamples: int = 4) -> YeeGrid:
    """Rasterise ``structure`` on a box ``|x| <= wx, |y| <= wy, z0 <= z <= z1`` plus absorbers.

    ``half_widths`` is ``(wx, wy)`` in nm; absorbers are added outside the
    requested box on the non-periodic sides.
    """
    if courant > MAX_COURANT_3D:
        raise ValueError(f"Courant factor {courant} exceeds 1/sqrt(3)")
    wx, wy = half_widths
    z0, z1 = z_range
    pxy = 0 if periodic_xy else pml_cells
    nx = int(math.ceil(2 * wx / dx)) + 2 * pxy
    ny = int(math.ceil(2 * wy / dx)) + 2 * pxy
    nz = int(math.ceil((z1 - z0) / dx)) + 2 * pml_cells
    cells = (nx + 1) * (ny + 1) * (nz + 1)
    needed = cells * BYTES_PER_CELL_3D
    if needed > memory_budget_bytes:
        raise GridTooLargeError(cells, needed, memory_budget_bytes)
    origin = (-wx - pxy * dx, -wy - pxy * dx, z0 - pml_cells * dx)
    xi = origin[0] + np.arange(nx + 1) * dx
    xh = origin[0] + (np.arange(nx) + 0.5) * dx
    yi = origin[1] + np.arange(ny + 1) * dx
    yh = origin[1] + (np.arange(ny) + 0.5) * dx
    zi = origin[2] + np.arange(nz + 1) * dx
    zh = origin[2] + (np.arange(nz) + 0.5) * dx

    def eps_fn(x, y, z):
        return structure.index_rz(np.hypot(x, y), z) ** 2

    eps_x = _rasterize(eps_fn, xh, yi, zi, dx, subsamples)
    eps_y = _rasterize(eps_fn, xi, yh, zi, dx, subsamples)
    eps_z = _rasterize(eps_fn, xi, yi, zh, dx, subsamples)
    dt = courant * dx
    n_lo = float(structure.index_rz(0.0, zi[pml_cells]))
    n_hi = float(structure.index_rz(0.0, zi[nz - pml_cells]))
    coeffs = {}
    for axis, n, p, index in (("x", nx, pxy, 1.0), ("y", ny, pxy, 1.0)):
        ab = _axis_coefficients(n, dx, dt, p, index, wavelength)
        for tag, (b, c) in ab.items():
            coeffs[f"b{axis}_{tag}"], coeffs[f"c{axis}_{tag}"] = b, c
    lower = _axis_coefficients(nz, dx, dt, pml_cells, n_lo, wavelength, upper=False)
    upper = _axis_coefficients(nz, dx, dt, pml_cells, n_hi, wavelength, lower=False)
    for tag in ("i", "h"):
        b = lower[tag][0] * upper[tag][0]
        c = lower[tag][1] + upper[tag][1]
        coeffs[f"bz_{tag}"], coeffs[f"cz_{tag}"] = b, c
    if periodic_xy and (nx < 1 or ny < 1):
        raise ValueError("periodic grid needs at least one cell per direction")
    return YeeGrid(nx, ny, nz, dx, dt, eps_x, eps_y, eps_z, (pxy, pxy, pml_cells),
                   periodic_xy, periodic_xy, coeffs, origin)


COMPONENT_OFFSETS = {
    "ex": (0.5, 0.0, 0.0), "ey": (0.0, 0.5, 0.0), "ez": (0.0, 0.0, 0.5),
    "hx": (0.0, 0.5, 0.5), "hy": (0.5, 0.0, 0.5), "hz": (0.5, 0.5, 0.0),
}


def dipole_weights(grid: YeeGrid, position, moment):
    """Trilinear current-density weights for a point dipole, per E component.

    Returns ``{component: (flat_indices, weights)}``; each weight is the
    dipole-moment component divided by the cell volume, shared linearly
    between the eight surrounding nodes.
    """
    out = {}
    for axis, comp in enumerate(("ex", "ey", "ez")):
        if moment[axis] == 0.0:
            continue
        off = COMPONENT_OFFSETS[comp]
        frac = [(position[a] - grid.origin[a]) / grid.dx - off[a] for a in range(3)]
        base = [int(math.floor(f)) for f in frac]
        t = [f - b for f, b in zip(frac, base)]
        idx, w = [], []
        for di in (0, 1):
            for dj in (0, 1):
                for dk in (0, 1):
                    weight = ((t[0] if di else 1 - t[0]) * (t[1] if dj else 1 - t[1])
                              * (t[2] if dk else 1 - t[2]))
                    if weight > 0:
                        idx.append((base[0] + di, base[1] + dj, base[2] + dk))
                        w.append(weight * moment[axis] / grid.dx**3)
        out[comp] = (np.array(idx, dtype=np.int64), np.array(w))
    return out


def inject_current(state: FieldState, grid: YeeGrid, weights, value: float):
    """Apply ``dE = -dt J / eps`` for a current density ``weights * value``."""
    eps = {"ex": grid.eps_x, "ey": grid.eps_y, "ez": grid.eps_z}
    for comp, (idx, w) in weights.items():
        arr = getattr(state, comp)
        e = eps[comp][idx[:, 0], idx[:, 1], idx[:, 2]]
        arr[idx[:, 0], idx[:, 1], idx[:, 2]] -= grid.dt * w * value / e


AXES = "xyz"


def _face_parts(a: int, index: int, lo, hi):
    """Slices for the two tangential products of the flux through a face normal to axis ``a``.

    ``lo`` and ``hi`` are node index bounds (inclusive) along the two
    tangential axes ``b = a + 1`` and ``c = a + 2`` (cyclic).  Returns pairs of
    ``(E component, E slice, H component, H slices to average, sign, weights axes)``.
    """
    b, c = (a + 1) % 3, (a + 2) % 3
    parts = []
    # E_b H_c: E_b at (a int, b half, c int); H_c at (a half, b half, c int)
    for e_ax, h_ax, sign in ((b, c, 1.0), (c, b, -1.0)):
        half_ax = e_ax  # the tangential axis where both live at half positions
        int_ax = h_ax
        e_sl = [None, None, None]
        h_lo = [None, None, None]
        h_hi = [None, None, None]
        e_sl[a] = index
        h_lo[a] = index - 1
        h_hi[a] = index
        rng_half = slice(lo[half_ax == c], hi[half_ax == c])
        rng_int = slice(lo[int_ax == c], hi[int_ax == c] + 1)
        for arr in (e_sl, h_lo, h_hi):
            arr[half_ax] = rng_half
            arr[int_ax] = rng_int
        parts.append((f"e{AXES[e_ax]}", tuple(e_sl), f"h{AXES[h_ax]}", (tuple(h_lo), tuple(h_hi)),
                      sign, half_ax, int_ax))
    return parts


@dataclass
class FaceMonitor:
    """Running DFT of the tangential fields on one rectangular face."""

    axis: int
    index: int
    lo: tuple  # node bounds on the (b, c) tangential axes
    hi: tuple
    omegas: np.ndarray
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        self.parts = _face_parts(self.axis, self.index, self.lo, self.hi)

    def accumulate(self, state: FieldState, phase_e, phase_h):
        for n, (ec, esl, hc, (hl, hh), _, _, _) in enumerate(self.parts):
            e = getattr(state, ec)[esl]
            h = 0.5 * (getattr(state, hc)[hl] + getattr(state, hc)[hh])
            if n not in self.data:
                self.data[n] = (np.zeros((self.omegas.size,) + e.shape, complex),
                                np.zeros((self.omegas.size,) + h.shape, complex))
            de, dh = self.data[n]
            de += phase_e[:, None, None] * e[None]
            dh += phase_h[:, None, None] * h[None]

    def flux(self, dx: float) -> np.ndarray:
        """Power through the face along +axis, per wavelength."""
        total = np.zeros(self.omegas.size)
        for n, (_, _, _, _, sign, half_ax, int_ax) in enumerate(self.parts):
            de, dh = self.data[n]
            s = 0.5 * np.real(de * np.conj(dh))
            # trapezoid weights along the integer-position axis (array axis order follows x, y, z)
            order = sorted((half_ax, int_ax))
            int_pos = order.index(int_ax)
            w = np.ones(s.shape[1 + int_pos])
            w[0] = w[-1] = 0.5
            shape = [1, 1, 1]
            shape[1 + int_pos] = w.size
            total += sign * (s * w.reshape(shape)).sum(axis=(1, 2))
        return total * dx * dx


@dataclass
class CartesianDipoleRun:
    wavelengths: np.ndarray
    face_power: dict  # "+x", "-x", ... -> outward power per wavelength
    steps: int
    decayed: bool
    plane: list | None = None  # CartesianPlane per wavelength

    @property
    def total_power(self) -> np.ndarray:
        return sum(self.face_power.values())


def run_cartesian_dipole(grid: YeeGrid, position, moment, wavelengths, box_half_cells: int = 4,
                         plane_index: int | None = None, source_band=(600.0, 800.0),
                         max_steps: int = 20000, decay_threshold: float = 1e-6,
                         check_interval: int = 50) -> CartesianDipoleRun:
    """Pulsed point dipole with a closed six-face DFT box around it.

    ``plane_index`` optionally records the tangential fields on the z-node
    plane of that index over the interior (absorbers excluded).
    """
    from nvreflector.fdtd.farfield import CartesianPlane

    lams = np.asarray(wavelengths, dtype=float)
    omegas = 2.0 * np.pi / lams
    lo, hi = source_band
    centre = 2.0 / (1.0 / lo + 1.0 / hi)
    tau = 2.15 / (math.pi * (1.0 / lo - 1.0 / hi))
    t0 = 4.5 * tau
    wc = 2.0 * math.pi / centre
    weights = dipole_weights(grid, position, moment)
    centre_idx = [int(round((position[a] - grid.origin[a]) / grid.dx)) for a in range(3)]
    h = box_half_cells
    faces = {}
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        lo_bc = (centre_idx[b] - h, centre_idx[c] - h)
        hi_bc = (centre_idx[b] + h, centre_idx[c] + h)
        for sign, off in (("+", h), ("-", -h)):
            faces[sign + AXES[a]] = FaceMonitor(a, centre_idx[a] + off, lo_bc, hi_bc, omegas)
    plane_mon = None
    if plane_index is not None:
        px, py, _ = grid.pml_cells
        plane_mon = FaceMonitor(2, plane_index, (px, py), (grid.nx - px, grid.ny - py), omegas)

    state = FieldState.zeros(grid)
    dt = grid.dt
    w_max = 0.0
    decayed = False
    n = 0
    for n in range(max_steps):
        step_fields(state, grid, check_every=0)
        inject_current(state, grid, weights, math.sin(wc * ((n + 0.5) * dt - t0))
                       * math.exp(-(((n + 0.5) * dt - t0) / tau) ** 2))
        ph_h = np.exp(-1j * omegas * (n + 0.5) * dt) * dt
        ph_e = np.exp(-1j * omegas * (n + 1.0) * dt) * dt
        for f in faces.values():
            f.accumulate(state, ph_e, ph_h)
        if plane_mon is not None:
            plane_mon.accumulate(state, ph_e, ph_h)
        if (n + 1) % check_interval == 0:
            w = field_energy(state, grid)
            if not math.isfinite(w):
                raise DivergedSimulationError(n + 1)
            w_max = max(w_max, w)
            if (n + 1) * dt > t0 + 4.5 * tau and w < decay_threshold * w_max:
                decayed = True
                break
    power = {}
    for name, f in faces.items():
        p = f.flux(grid.dx)
        power[name] = p if name[0] == "+" else -p
    plane = None
    if plane_mon is not None:
        plane = []
        (de0, dh0), (de1, dh1) = plane_mon.data[0], plane_mon.data[1]
        # part 0: Ex (x half, y int) with Hy; part 1: Ey (x int, y half) with Hx.
        for w, lam in enumerate(lams):
            ex = _to_cell_centres(de0[w], half_axis=0)
            hy = _to_cell_centres(dh0[w], half_axis=0)
            ey = _to_cell_centres(de1[w], half_axis=1)
            hx = _to_cell_centres(dh1[w], half_axis=1)
            k = plane_index
            n_plane = math.sqrt(grid.eps_x[grid.nx // 2, grid.ny // 2, k])
            plane.append(CartesianPlane(float(lam), grid.dx, ex, ey, hx, hy, n_plane, -1,
                                        grid.node(2, k)))
    return CartesianDipoleRun(lams, power, n + 1, decayed, plane)


def _to_cell_centres(a: np.ndarray, half_axis: int) -> np.ndarray:
    """Average a face array onto cell centres along its integer-position axis."""
    if half_axis == 0:
        return 0.5 * (a[:, 1:] + a[:, :-1])
    return 0.5 * (a[1:, :] + a[:-1, :])
