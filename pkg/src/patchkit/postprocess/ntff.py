"""Near-to-far-field transform over a closed box, directivity, gain, efficiency."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..constants import C0, ETA0
from ..errors import EnergyAccountingError, PatchkitError

FACES = ("x-", "x+", "y-", "y+", "z-", "z+")
EFFICIENCY_TOLERANCE = 0.02  # numerical leakage allowed before radiated > accepted is an error
# Port power is only resolved to a few percent of the incident wave: on a
# near-total standing wave, V/I and surface-flux estimates of the net power
# differ by that much.  Excess radiated power below this share of the
# incident power is a resolution limit, not an accounting error.
PORT_POWER_RESOLUTION = 0.05


class SurfaceError(PatchkitError, ValueError):
    pass


def _face_fields(state, axis: int, p: int, box):
    """Collocated (E, H) 3-vectors at the face centers of plane ``p`` normal to ``axis``."""
    i0, i1, j0, j1, k0, k1 = box
    s = state
    if axis == 0:
        shp = (j1 - j0, k1 - k0)
        ey = 0.5 * (s.Ey[p, j0:j1, k0:k1] + s.Ey[p, j0:j1, k0 + 1 : k1 + 1])
        ez = 0.5 * (s.Ez[p, j0:j1, k0:k1] + s.Ez[p, j0 + 1 : j1 + 1, k0:k1])
        hy = 0.25 * (s.Hy[p - 1, j0:j1, k0:k1] + s.Hy[p, j0:j1, k0:k1]
                     + s.Hy[p - 1, j0 + 1 : j1 + 1, k0:k1] + s.Hy[p, j0 + 1 : j1 + 1, k0:k1])
        hz = 0.25 * (s.Hz[p - 1, j0:j1, k0:k1] + s.Hz[p, j0:j1, k0:k1]
                     + s.Hz[p - 1, j0:j1, k0 + 1 : k1 + 1] + s.Hz[p, j0:j1, k0 + 1 : k1 + 1])
        zero = np.zeros(shp)
        return (zero, ey, ez), (zero, hy, hz)
    if axis == 1:
        shp = (i1 - i0, k1 - k0)
        ex = 0.5 * (s.Ex[i0:i1, p, k0:k1] + s.Ex[i0:i1, p, k0 + 1 : k1 + 1])
        ez = 0.5 * (s.Ez[i0:i1, p, k0:k1] + s.Ez[i0 + 1 : i1 + 1, p, k0:k1])
        hx = 0.25 * (s.Hx[i0:i1, p - 1, k0:k1] + s.Hx[i0:i1, p, k0:k1]
                     + s.Hx[i0 + 1 : i1 + 1, p - 1, k0:k1] + s.Hx[i0 + 1 : i1 + 1, p, k0:k1])
        hz = 0.25 * (s.Hz[i0:i1, p - 1, k0:k1] + s.Hz[i0:i1, p, k0:k1]
                     + s.Hz[i0:i1, p - 1, k0 + 1 : k1 + 1] + s.Hz[i0:i1, p, k0 + 1 : k1 + 1])
        zero = np.zeros(shp)
        return (ex, zero, ez), (hx, zero, hz)
    shp = (i1 - i0, j1 - j0)
    ex = 0.5 * (s.Ex[i0:i1, j0:j1, p] + s.Ex[i0:i1, j0 + 1 : j1 + 1, p])
    ey = 0.5 * (s.Ey[i0:i1, j0:j1, p] + s.Ey[i0 + 1 : i1 + 1, j0:j1, p])
    hx = 0.25 * (s.Hx[i0:i1, j0:j1, p - 1] + s.Hx[i0:i1, j0:j1, p]
                 + s.Hx[i0 + 1 : i1 + 1, j0:j1, p - 1] + s.Hx[i0 + 1 : i1 + 1, j0:j1, p])
    hy = 0.25 * (s.Hy[i0:i1, j0:j1, p - 1] + s.Hy[i0:i1, j0:j1, p]
                 + s.Hy[i0:i1, j0 + 1 : j1 + 1, p - 1] + s.Hy[i0:i1, j0 + 1 : j1 + 1, p])
    zero = np.zeros(shp)
    return (ex, ey, zero), (hx, hy, zero)


class SurfaceDFT:
    """Running DFT of tangential fields on the six faces of a node-aligned box.

    ``box = (i0, i1, j0, j1, k0, k1)`` in node indices, ``i0 < i1`` etc.
    """

    def __init__(self, box, frequencies, cell: float, origin=(0.0, 0.0, 0.0), dt: float = 0.0,
                 faces=FACES):
        box = tuple(int(b) for b in box)
        i0, i1, j0, j1, k0, k1 = box
        if not (i0 < i1 and j0 < j1 and k0 < k1) or min(i0, j0, k0) < 1:
            raise SurfaceError(f"degenerate or out-of-grid box {box}")
        if tuple(sorted(faces)) != tuple(sorted(FACES)):
            raise SurfaceError(f"surface is open: faces {faces} do not close the box")
        self.box = box
        self.freqs = np.asarray(frequencies, dtype=float)
        self.cell = cell
        self.origin = tuple(origin)
        self.dt = dt
        nf = self.freqs.size
        self.apertures: dict[str, np.ndarray] = {}
        self.E = {}
        self.H = {}
        for face in FACES:
            shp = self._face_shape(face)
            self.E[face] = np.zeros((3, nf) + shp, dtype=complex)
            self.H[face] = np.zeros((3, nf) + shp, dtype=complex)

    def _face_shape(self, face):
        i0, i1, j0, j1, k0, k1 = self.box
        axis = "xyz".index(face[0])
        return ((j1 - j0, k1 - k0), (i1 - i0, k1 - k0), (i1 - i0, j1 - j0))[axis]

    def exclude(self, face: str, a: tuple[int, int], b: tuple[int, int]) -> None:
        """Leave face cells ``a[0]:a[1], b[0]:b[1]`` (grid indices) out of the transform.

        Meant for the cross-section of a feed line that leaves the box: its
        guided fields are transmission, not radiation.  The flux still counts
        them.
        """
        if face not in FACES:
            raise SurfaceError(f"unknown face {face!r}")
        i0, i1, j0, j1, k0, k1 = self.box
        axis = "xyz".index(face[0])
        (lo_a, hi_a), (lo_b, hi_b) = [((j0, j1), (k0, k1)), ((i0, i1), (k0, k1)), ((i0, i1), (j0, j1))][axis]
        mask = self.apertures.get(face)
        if mask is None:
            mask = np.zeros(self._face_shape(face), dtype=bool)
            self.apertures[face] = mask
        a0, a1 = max(a[0], lo_a) - lo_a, min(a[1], hi_a) - lo_a
        b0, b1 = max(b[0], lo_b) - lo_b, min(b[1], hi_b) - lo_b
        if a0 < a1 and b0 < b1:
            mask[a0:a1, b0:b1] = True

    def _plane(self, face):
        i0, i1, j0, j1, k0, k1 = self.box
        axis = "xyz".index(face[0])
        lo, hi = ((i0, i1), (j0, j1), (k0, k1))[axis]
        return axis, (lo if face[1] == "-" else hi)

    def _accumulate(self, store, which, state, t, weight):
        phase = np.exp(-2j * math.pi * self.freqs * t) * weight
        for face in FACES:
            axis, p = self._plane(face)
            vec = _face_fields(state, axis, p, self.box)[which]
            acc = store[face]
            for c in range(3):
                if axis == c:
                    continue
                acc[c] += phase[:, None, None] * vec[c][None, :, :]

    def accumulate_e(self, state, t, weight):
        self._accumulate(self.E, 0, state, t, weight)

    def accumulate_h(self, state, t, weight):
        self._accumulate(self.H, 1, state, t, weight)

    def face_coordinates(self, face):
        """Face-center coordinates (a, b) along the two tangential axes plus the plane value."""
        i0, i1, j0, j1, k0, k1 = self.box
        dx = self.cell
        ox, oy, oz = self.origin
        axis, p = self._plane(face)
        xs = ox + (np.arange(i0, i1) + 0.5) * dx
        ys = oy + (np.arange(j0, j1) + 0.5) * dx
        zs = oz + (np.arange(k0, k1) + 0.5) * dx
        plane = (ox, oy, oz)[axis] + p * dx
        return axis, plane, ((ys, zs), (xs, zs), (xs, ys))[axis]

    def frequency_index(self, frequency: float) -> int:
        idx = int(np.argmin(np.abs(self.freqs - frequency)))
        if not math.isclose(self.freqs[idx], frequency, rel_tol=1e-9):
            raise SurfaceError(f"frequency {frequency} was not recorded on the surface")
        return idx

    def flux(self, frequency: float) -> float:
        """Net outward power ``1/2 Re(E x H*) . n`` through the box."""
        fi = self.frequency_index(frequency)
        total = 0.0
        da = self.cell**2
        for face in FACES:
            axis = "xyz".index(face[0])
            sign = 1.0 if face[1] == "+" else -1.0
            e = self.E[face][:, fi]
            h = self.H[face][:, fi]
            a, b = (axis + 1) % 3, (axis + 2) % 3
            sn = e[a] * np.conj(h[b]) - e[b] * np.conj(h[a])
            total += sign * 0.5 * float(np.real(sn.sum())) * da
        return total


@dataclass(frozen=True)
class FarFieldPattern:
    frequency: float
    theta_deg: np.ndarray
    phi_deg: np.ndarray
    intensity: np.ndarray  # W/sr (spectral units), shape (n_theta, n_phi)
    radiated_power: float
    accepted_power: float
    incident_power: float | None = None
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def efficiency(self) -> float:
        return radiation_efficiency(self)[0]

    @property
    def directivity(self) -> np.ndarray:
        return 4.0 * math.pi * self.intensity / self.radiated_power

    @property
    def directivity_dbi(self) -> np.ndarray:
        return 10.0 * np.log10(np.maximum(self.directivity, 1e-30))

    @property
    def gain(self) -> np.ndarray:
        """IEEE gain: directivity times radiation efficiency."""
        return self.directivity * self.efficiency

    @property
    def gain_dbi(self) -> np.ndarray:
        return 10.0 * np.log10(np.maximum(self.gain, 1e-30))

    @property
    def realized_gain_dbi(self) -> np.ndarray:
        """Gain including port mismatch (intensity over incident power)."""
        if self.incident_power is None:
            return self.gain_dbi
        g = 4.0 * math.pi * self.intensity / self.incident_power
        return 10.0 * np.log10(np.maximum(g, 1e-30))

    def normalization(self) -> float:
        """Quadrature of ``D / 4 pi`` over the sphere (1 for a consistent pattern)."""
        return sphere_integral(self.directivity, self.theta_deg, self.phi_deg) / (4.0 * math.pi)

    def peak(self) -> tuple[float, float, float]:
        """``(theta_deg, phi_deg, directivity_dbi)`` of the main lobe."""
        d = self.directivity_dbi
        it, ip = np.unravel_index(int(np.argmax(d)), d.shape)
        return float(self.theta_deg[it]), float(self.phi_deg[ip]), float(d[it, ip])

    def cut(self, phi_deg: float):
        """Principal-plane cut over theta in [-180, 180] through azimuth ``phi_deg``."""
        ip = int(np.argmin(np.abs(((self.phi_deg - phi_deg) + 180) % 360 - 180)))
        ib = int(np.argmin(np.abs(((self.phi_deg - phi_deg - 180) + 180) % 360 - 180)))
        th = self.theta_deg
        ang = np.concatenate([-th[::-1], th[1:]])
        d = np.concatenate([self.directivity_dbi[::-1, ib], self.directivity_dbi[1:, ip]])
        g = np.concatenate([self.gain_dbi[::-1, ib], self.gain_dbi[1:, ip]])
        return ang, d, g

    def to_csv(self) -> str:
        lines = ["theta_deg,phi_deg,directivity_dbi,gain_dbi,realized_gain_dbi"]
        d, g, rg = self.directivity_dbi, self.gain_dbi, self.realized_gain_dbi
        for it, th in enumerate(self.theta_deg):
            for ip, ph in enumerate(self.phi_deg):
                lines.append(
                    f"{th:.1f},{ph:.1f},{d[it, ip]:.6f},{g[it, ip]:.6f},{rg[it, ip]:.6f}"
                )
        return "\n".join(lines) + "\n"


def sphere_integral(values, theta_deg, phi_deg) -> float:
    """Integral over the unit sphere: trapezoid in theta (with sin), rectangle in phi."""
    th = np.radians(theta_deg)
    ph = np.radians(phi_deg)
    dphi = 2.0 * math.pi / ph.size
    ring = np.sum(values, axis=1) * dphi
    return float(np.trapezoid(ring * np.sin(th), th))


def angular_grid(step_deg: float = 2.0):
    n_t = int(round(180.0 / step_deg)) + 1
    n_p = int(round(360.0 / step_deg))
    return np.linspace(0.0, 180.0, n_t), np.arange(n_p) * step_deg


def radiation_vectors(surface: SurfaceDFT, frequency: float, theta_deg, phi_deg):
    """Electric and magnetic radiation vectors ``N``, ``L`` (Cartesian), shape (3, nt, np)."""
    fi = surface.frequency_index(frequency)
    k = 2.0 * math.pi * frequency / C0
    th = np.radians(theta_deg)[:, None]
    ph = np.radians(phi_deg)[None, :]
    ux = (np.sin(th) * np.cos(ph)).ravel()
    uy = (np.sin(th) * np.sin(ph)).ravel()
    uz = (np.cos(th) * np.ones_like(ph)).ravel()
    u = (ux, uy, uz)
    nd = ux.size
    N = np.zeros((3, nd), dtype=complex)
    L = np.zeros((3, nd), dtype=complex)
    da = surface.cell**2
    for face in FACES:
        axis, plane, (ca, cb) = surface.face_coordinates(face)
        sign = 1.0 if face[1] == "+" else -1.0
        n = np.zeros(3)
        n[axis] = sign
        e = surface.E[face][:, fi]
        h = surface.H[face][:, fi]
        # J = n x H, M = -n x E
        J = np.stack([n[1] * h[2] - n[2] * h[1], n[2] * h[0] - n[0] * h[2], n[0] * h[1] - n[1] * h[0]])
        M = -np.stack([n[1] * e[2] - n[2] * e[1], n[2] * e[0] - n[0] * e[2], n[0] * e[1] - n[1] * e[0]])
        hole = surface.apertures.get(face)
        if hole is not None:
            J[:, hole] = 0.0
            M[:, hole] = 0.0
        a_ax, b_ax = [(1, 2), (0, 2), (0, 1)][axis]
        pa = np.exp(1j * k * np.outer(u[a_ax], ca))  # (nd, na)
        pb = np.exp(1j * k * np.outer(u[b_ax], cb))  # (nd, nb)
        pn = np.exp(1j * k * u[axis] * plane)  # (nd,)
        for c in range(3):
            if c == axis:
                continue  # tangential currents only
            N[c] += pn * np.sum((pa @ J[c]) * pb, axis=1) * da
            L[c] += pn * np.sum((pa @ M[c]) * pb, axis=1) * da
    shape = (len(theta_deg), len(phi_deg))
    return N.reshape((3,) + shape), L.reshape((3,) + shape)


def ntff(surface: SurfaceDFT, frequency: float, accepted_power: float | None = None,
         incident_power: float | None = None, step_deg: float = 2.0) -> FarFieldPattern:
    """Far-field pattern at ``frequency`` from the recorded box fields.

    Without ``accepted_power`` the efficiency is taken as 1.
    """
    if not isinstance(surface, SurfaceDFT):
        raise SurfaceError("no closed recording surface available")
    theta, phi = angular_grid(step_deg)
    N, L = radiation_vectors(surface, frequency, theta, phi)
    th = np.radians(theta)[:, None]
    ph = np.radians(phi)[None, :]
    ct, st, cp, sp = np.cos(th), np.sin(th), np.cos(ph), np.sin(ph)
    n_th = N[0] * ct * cp + N[1] * ct * sp - N[2] * st
    n_ph = -N[0] * sp + N[1] * cp
    l_th = L[0] * ct * cp + L[1] * ct * sp - L[2] * st
    l_ph = -L[0] * sp + L[1] * cp
    k = 2.0 * math.pi * frequency / C0
    u = k**2 / (32.0 * math.pi**2 * ETA0) * (
        np.abs(l_ph + ETA0 * n_th) ** 2 + np.abs(l_th - ETA0 * n_ph) ** 2
    )
    p_rad = sphere_integral(u, theta, phi)
    if p_rad <= 0:
        raise SurfaceError("no radiated power on the recording surface")
    warnings = []
    p_acc = p_rad if accepted_power is None else float(accepted_power)
    floor = 0.0 if incident_power is None else PORT_POWER_RESOLUTION * float(incident_power)
    if p_rad > p_acc and p_rad - p_acc <= floor:
        share = p_acc / float(incident_power)
        warnings.append(f"port accepts {100 * share:.2f}% of the incident power; radiation efficiency is "
                        f"not resolved at this frequency and is reported as 1")
        p_acc = p_rad
    if p_acc <= 0:
        raise EnergyAccountingError(f"accepted power {p_acc} is not positive")
    if p_rad > p_acc:
        if p_rad > p_acc * (1.0 + EFFICIENCY_TOLERANCE):
            raise EnergyAccountingError(
                f"radiated power {p_rad:.4e} exceeds accepted {p_acc:.4e} at {frequency:.4e} Hz"
            )
        warnings.append("radiated power marginally above accepted power; efficiency clipped to 1")
    return FarFieldPattern(frequency, theta, phi, u, p_rad, p_acc, incident_power, tuple(warnings))


def efficiency_to_db(eff: float) -> float:
    return 10.0 * math.log10(eff)


def db_to_efficiency(db: float) -> float:
    return 10.0 ** (db / 10.0)


def radiation_efficiency(pattern: FarFieldPattern) -> tuple[float, float]:
    """``(radiated / accepted, same in dB)``."""
    if pattern.radiated_power <= 0 or pattern.accepted_power <= 0:
        raise EnergyAccountingError("radiated and accepted power must be positive")
    eff = pattern.radiated_power / pattern.accepted_power
    if eff > 1.0 + EFFICIENCY_TOLERANCE:
        raise EnergyAccountingError(f"efficiency {eff:.4f} exceeds 1")
    eff = min(eff, 1.0)
    return eff, efficiency_to_db(eff)
