"""3-D Yee-grid FDTD solver with CPML boundaries and a lumped microstrip port."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..constants import C0, EPS0, MU0
from ..errors import SolverError
from . import kernels
from .grid import MaterialGrid, e_shapes, h_shapes
from .records import TimeSeriesRecord

log = logging.getLogger(__name__)

AXES = "xyz"


@dataclass(frozen=True)
class GaussianPulse:
    """Gaussian-modulated sinusoid; spectrum falls 20 dB at ``center +- bandwidth/2``."""

    center: float
    bandwidth: float

    @property
    def tau(self) -> float:
        return 2.0 * math.sqrt(math.log(10.0)) / (math.pi * self.bandwidth)

    @property
    def delay(self) -> float:
        return 4.5 * self.tau

    @property
    def duration(self) -> float:
        return 2.0 * self.delay

    @property
    def f_min(self) -> float:
        return self.center - 0.5 * self.bandwidth

    @property
    def f_max(self) -> float:
        return self.center + 0.5 * self.bandwidth

    def __call__(self, t):
        s = (np.asarray(t, dtype=float) - self.delay) / self.tau
        return np.exp(-s * s) * np.sin(2.0 * math.pi * self.center * s * self.tau)


@dataclass(frozen=True)
class SimulationConfig:
    cell: float
    courant_factor: float = 0.99
    timesteps: int = 20000
    pml_thickness: int = 10
    source: GaussianPulse = GaussianPulse(4.5e9, 7.0e9)
    boundaries: tuple[str, str, str] = ("pml", "pml", "pml")
    decay_db: float = 60.0
    workers: int | None = None
    ntff_frequencies: tuple[float, ...] = ()
    ntff_stride: int = 2
    pml_order: int = 3
    pml_kappa_max: float = 4.0
    pml_alpha_max: float = 0.01  # S/m
    pml_sigma_factor: float = 1.0

    def __post_init__(self):
        if not self.cell > 0:
            raise SolverError(f"cell must be > 0, got {self.cell}")
        if not 0.0 < self.courant_factor <= 1.0:
            raise SolverError(f"courant_factor must lie in (0, 1], got {self.courant_factor}")
        if self.timesteps < 1:
            raise SolverError("timesteps must be >= 1")
        for b in self.boundaries:
            if b not in ("pml", "pec", "periodic"):
                raise SolverError(f"unknown boundary {b!r}")
        if self.boundaries[2] == "periodic":
            raise SolverError("periodic boundary is supported on x and y only")
        if "pml" in self.boundaries and self.pml_thickness < 8:
            raise SolverError(f"pml_thickness must be >= 8, got {self.pml_thickness}")

    @property
    def dt(self) -> float:
        return self.courant_factor * self.cell / (C0 * math.sqrt(3.0))

    def pml_cells(self, axis: int) -> int:
        return self.pml_thickness if self.boundaries[axis] == "pml" else 0


@dataclass(frozen=True)
class PortSpec:
    """Lumped port across the substrate under a feed trace.

    ``i0..i1`` are the trace's node columns (inclusive), ``k_ground`` and
    ``k_trace`` the copper planes.  Excitation is a soft Ez sheet at
    ``j_source``; voltage and current are sampled at ``j_probe`` (+1/2 for
    the current loop).
    """

    i0: int
    i1: int
    k_ground: int
    k_trace: int
    j_source: int
    j_probe: int
    polarity: int = 1
    z_ref: float = 50.0

    def __post_init__(self):
        if not (self.i1 >= self.i0 and self.k_trace > self.k_ground):
            raise SolverError("port must span at least one trace column and one substrate cell")
        if self.polarity not in (1, -1):
            raise SolverError("polarity must be +1 or -1")

    @property
    def i_center(self) -> int:
        return (self.i0 + self.i1) // 2


@dataclass
class FieldState:
    Ex: np.ndarray
    Ey: np.ndarray
    Ez: np.ndarray
    Hx: np.ndarray
    Hy: np.ndarray
    Hz: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, shape):
        ex, ey, ez = e_shapes(*shape)
        hx, hy, hz = h_shapes(*shape)
        z = np.zeros
        return cls(z(ex), z(ey), z(ez), z(hx), z(hy), z(hz))

    def all_finite(self) -> bool:
        return all(
            np.isfinite(a).all() for a in (self.Ex, self.Ey, self.Ez, self.Hx, self.Hy, self.Hz)
        )


def cpml_profile(n: int, lo: int, hi: int, dx: float, dt: float, cfg: SimulationConfig):
    """CPML coefficient vectors at integer nodes (E) and half nodes (H).

    Returns two tuples ``(flag, b, c, kappa_inv)``; ``c`` is scaled for
    derivatives taken as plain differences (the ``1/dx`` lives in the
    update coefficients).
    """
    m = cfg.pml_order
    sigma_max = cfg.pml_sigma_factor * 0.8 * (m + 1) / (math.sqrt(MU0 / EPS0) * dx)

    def build(pos):
        rho = np.zeros_like(pos)
        if lo > 0:
            sel = pos < lo
            rho[sel] = (lo - pos[sel]) / lo
        if hi > 0:
            sel = pos > n - hi
            rho[sel] = (pos[sel] - (n - hi)) / hi
        flag = rho > 0
        sigma = sigma_max * rho**m
        kappa = 1.0 + (cfg.pml_kappa_max - 1.0) * rho**m
        alpha = np.where(flag, cfg.pml_alpha_max * (1.0 - rho), 0.0)
        b = np.exp(-(sigma / kappa + alpha) * dt / EPS0)
        denom = sigma * kappa + kappa**2 * alpha
        c = np.where(denom > 0, sigma * (b - 1.0) / np.where(denom > 0, denom, 1.0), 0.0)
        return flag, np.where(flag, b, 0.0), c, 1.0 / kappa

    return build(np.arange(n + 1, dtype=float)), build(np.arange(n, dtype=float) + 0.5)


class Simulation:
    """Owns the field state for one run; not shared between threads."""

    def __init__(self, grid: MaterialGrid, config: SimulationConfig):
        self.grid = grid
        self.config = config
        self.dt = config.dt
        dx = grid.cell
        if abs(dx - config.cell) > 1e-12 * dx:
            raise SolverError(f"grid cell {dx} differs from configured cell {config.cell}")
        self.shape = grid.shape
        nx, ny, nz = self.shape
        self.state = FieldState.zeros(self.shape)
        self._build_coefficients()
        self._build_pml()
        self.periodic = tuple(b == "periodic" for b in config.boundaries)
        self.im1 = np.arange(-1, nx + 1, dtype=np.int64)[: nx + 1]
        self.jm1 = np.arange(-1, ny + 1, dtype=np.int64)[: ny + 1]
        if self.periodic[0]:
            self.im1[0] = nx - 1
        if self.periodic[1]:
            self.jm1[0] = ny - 1
        self.i_lo = 0 if self.periodic[0] else 1
        self.j_lo = 0 if self.periodic[1] else 1
        self._soft = []  # (component, index, weight array, waveform)
        self._currents = []
        self._probes = {}
        self._port = None
        self._ntff = None

    # -- setup ------------------------------------------------------------
    def _build_coefficients(self):
        g, dt, dx = self.grid, self.dt, self.grid.cell
        eps_edges = g.edge_average(g.eps_r)
        sig_edges = g.edge_average(g.sigma)
        pecs = (g.pec_x, g.pec_y, g.pec_z)
        ca_list, cb_list, self._eps_edges = [], [], []
        for eps_r, sig, pec in zip(eps_edges, sig_edges, pecs):
            eps = EPS0 * eps_r
            loss = sig * dt / (2.0 * eps)
            ca = np.where(pec, 0.0, (1.0 - loss) / (1.0 + loss))
            cb = np.where(pec, 0.0, dt / (eps * dx) / (1.0 + loss))
            ca_list.append(ca)
            cb_list.append(cb)
            self._eps_edges.append(eps)
        pairs = np.concatenate(
            [np.stack([a.ravel(), b.ravel()], axis=1) for a, b in zip(ca_list, cb_list)]
        )
        table, inverse = np.unique(pairs, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        dtype = np.uint16 if len(table) < 65536 else np.int32
        self.ca = np.ascontiguousarray(table[:, 0])
        self.cb = np.ascontiguousarray(table[:, 1])
        idx, off = [], 0
        for a in ca_list:
            idx.append(inverse[off : off + a.size].reshape(a.shape).astype(dtype))
            off += a.size
        self.mx, self.my, self.mz = idx
        self.ch = dt / (MU0 * dx)

    def _build_pml(self):
        cfg, dx, dt = self.config, self.grid.cell, self.dt
        self.pml_e, self.pml_h = [], []
        for axis, n in enumerate(self.shape):
            p = cfg.pml_cells(axis)
            e, h = cpml_profile(n, p, p, dx, dt, cfg)
            self.pml_e.append(e)
            self.pml_h.append(h)
        has = [cfg.pml_cells(a) > 0 for a in range(3)]
        nx, ny, nz = self.shape
        ex, ey, ez = e_shapes(nx, ny, nz)
        hx, hy, hz = h_shapes(nx, ny, nz)
        dummy = np.zeros((1, 1, 1))

        def psi(shape, axis):
            return np.zeros(shape) if has[axis] else dummy

        self.psi_e = (
            psi(ex, 1), psi(ex, 2), psi(ey, 2), psi(ey, 0), psi(ez, 0), psi(ez, 1),
        )
        self.psi_h = (
            psi(hx, 1), psi(hx, 2), psi(hy, 2), psi(hy, 0), psi(hz, 0), psi(hz, 1),
        )

    def add_soft_source(self, component: str, index, waveform, weight=1.0):
        """Additive E-field source evaluated at integer times ``(n+1) dt``."""
        self._soft.append((component, index, weight, waveform))

    def add_current_source(self, component: str, index, waveform, moment_length=None):
        """Impressed current ``I(t)`` [A] along one E edge, evaluated at ``(n+1/2) dt``.

        The edge's E update receives ``-cb * I / dx``.
        """
        self._currents.append((component, index, waveform))

    def add_probe(self, name: str, component: str, index):
        self._probes[name] = (component, index, [])

    def add_port(self, port: PortSpec, waveform):
        nx, ny, nz = self.shape
        if not (0 < port.j_source < ny and 0 < port.j_probe < ny - 1):
            raise SolverError("port planes outside the grid")
        ks = np.arange(port.k_ground, port.k_trace)
        ii, kk = np.meshgrid(np.arange(port.i0, port.i1 + 1), ks, indexing="ij")
        index = (ii.ravel(), np.full(ii.size, port.j_source), kk.ravel())
        # V = -sum(Ez dz); drive so that a positive waveform raises the trace
        self.add_soft_source("Ez", index, waveform, weight=-float(port.polarity))
        self._port = port

    def add_ntff_box(self, box, frequencies):
        from ..postprocess.ntff import SurfaceDFT

        self._ntff = SurfaceDFT(box, np.asarray(frequencies, dtype=float), self.grid.cell,
                                self.grid.origin, self.dt)

    # -- stepping ---------------------------------------------------------
    def _field(self, name):
        return getattr(self.state, name)

    def port_voltage(self) -> float:
        p = self._port
        ez = self.state.Ez
        dx = self.grid.cell
        v0 = ez[p.i_center, p.j_probe, p.k_ground : p.k_trace].sum()
        v1 = ez[p.i_center, p.j_probe + 1, p.k_ground : p.k_trace].sum()
        return -0.5 * (v0 + v1) * dx * p.polarity

    def port_current(self) -> float:
        p = self._port
        s = self.state
        j, kt = p.j_probe, p.k_trace
        dx = self.grid.cell
        loop = (
            s.Hz[p.i0 - 1, j, kt]
            + s.Hx[p.i0 : p.i1 + 1, j, kt].sum()
            - s.Hz[p.i1, j, kt]
            - s.Hx[p.i0 : p.i1 + 1, j, kt - 1].sum()
        )
        return loop * dx * p.polarity

    def energy(self, exclude_pml: bool = True) -> float:
        """Discrete field energy ``1/2 (eps E^n.E^n + mu H^(n-1/2).H^(n+1/2))``.

        This is the quadratic form the leapfrog scheme conserves in a
        closed lossless cavity; the plain ``E^2 + H^2`` sum oscillates
        because E and H are half a step apart.  ``H^(n+1/2)`` is formed
        from the current E without touching the state.
        """
        nx, ny, nz = self.shape
        lo = [self.config.pml_cells(a) if exclude_pml else 0 for a in range(3)]
        hi = [n - (self.config.pml_cells(a) if exclude_pml else 0) for a, n in enumerate((nx, ny, nz))]
        ex, ey, ez = self._eps_edges
        s = self.state
        hx, hy, hz = self._h_ahead()
        e = kernels.field_energy(
            s.Ex, s.Ey, s.Ez, s.Hx, s.Hy, s.Hz, hx, hy, hz, ex, ey, ez, MU0, tuple(lo), tuple(hi)
        )
        return e * self.grid.cell**3

    def _h_ahead(self):
        """H half a step ahead, ignoring PML (only used away from the absorber)."""
        s, ch = self.state, self.ch
        hx = s.Hx - ch * (np.diff(s.Ez, axis=1) - np.diff(s.Ey, axis=2))
        hy = s.Hy - ch * (np.diff(s.Ex, axis=2) - np.diff(s.Ez, axis=0))
        hz = s.Hz - ch * (np.diff(s.Ey, axis=0) - np.diff(s.Ex, axis=1))
        return hx, hy, hz

    def _step_h(self):
        s = self.state
        (fx, bx, cx, kx), (fy, by, cy, ky), (fz, bz, cz, kz) = self.pml_h
        kernels.update_h(
            s.Hx, s.Hy, s.Hz, s.Ex, s.Ey, s.Ez, self.ch,
            fx, bx, cx, kx, fy, by, cy, ky, fz, bz, cz, kz, *self.psi_h,
        )

    def _step_e(self):
        s = self.state
        (fx, bx, cx, kx), (fy, by, cy, ky), (fz, bz, cz, kz) = self.pml_e
        kernels.update_e(
            s.Ex, s.Ey, s.Ez, s.Hx, s.Hy, s.Hz,
            self.mx, self.my, self.mz, self.ca, self.cb,
            fx, bx, cx, kx, fy, by, cy, ky, fz, bz, cz, kz, *self.psi_e,
            self.im1, self.jm1, self.i_lo, self.j_lo,
        )

    def _wrap_periodic(self):
        s = self.state
        if self.periodic[0]:
            s.Ey[-1] = s.Ey[0]
            s.Ez[-1] = s.Ez[0]
        if self.periodic[1]:
            s.Ex[:, -1] = s.Ex[:, 0]
            s.Ez[:, -1] = s.Ez[:, 0]

    def _apply_sources(self, n: int):
        dt = self.dt
        t_half = (n + 0.5) * dt
        for comp, index, waveform in self._currents:
            arr = self._field(comp)
            cb = self.cb[getattr(self, "m" + comp[1].lower())[index]]
            arr[index] -= cb * float(waveform(t_half)) / self.grid.cell
        t1 = (n + 1) * dt
        for comp, index, weight, waveform in self._soft:
            self._field(comp)[index] += weight * float(waveform(t1))

    def step(self):
        """Advance one full step, n -> n+1 (H to n+1/2, then E to n+1)."""
        n = self.state.step
        self._step_h()
        self._step_e()
        self._apply_sources(n)
        self._wrap_periodic()
        self.state.step = n + 1

    def run(self, steps: int | None = None, decay_db: float | None = None,
            budget_cellsteps: float | None = None) -> TimeSeriesRecord:
        """Run up to ``steps``; stop early once the port signal has decayed ``decay_db``."""
        cfg = self.config
        kernels.set_workers(cfg.workers)
        nmax = cfg.timesteps if steps is None else int(steps)
        terminated = "steps"
        if budget_cellsteps is not None:
            cap = int(budget_cellsteps // self.grid.n_cells)
            if cap < nmax:
                nmax = cap
                terminated = "budget"
        decay_db = cfg.decay_db if decay_db is None else decay_db
        dt = self.dt
        v = np.zeros(nmax)
        cur = np.zeros(nmax)
        pulse_steps = int(math.ceil(cfg.source.duration / dt))
        window = max(64, pulse_steps)
        threshold = 10.0 ** (-decay_db / 10.0)
        peak_window = 0.0
        ntff = self._ntff
        stride = max(1, cfg.ntff_stride)
        decayed = False
        n_done = nmax
        probe_vals = {k: [] for k in self._probes}
        for n in range(nmax):
            if self._port is not None:
                v[n] = self.port_voltage()
            for name, (comp, index, _) in self._probes.items():
                probe_vals[name].append(self._field(comp)[index].copy())
            if ntff is not None and n % stride == 0:
                ntff.accumulate_e(self.state, n * dt, stride * dt)
            self._step_h()
            if self._port is not None:
                cur[n] = self.port_current()
            if ntff is not None and n % stride == 0:
                ntff.accumulate_h(self.state, (n + 0.5) * dt, stride * dt)
            self._step_e()
            self._apply_sources(n)
            self._wrap_periodic()
            self.state.step = n + 1
            if not math.isfinite(v[n]) or not math.isfinite(cur[n]):
                raise SolverError("non-finite port sample; solver unstable", step=n)
            if (n + 1) % 500 == 0 and not self.state.all_finite():
                raise SolverError("non-finite field; solver unstable", step=n)
            if self._port is not None and (n + 1) % window == 0:
                w = float(np.dot(v[n + 1 - window : n + 1], v[n + 1 - window : n + 1]))
                peak_window = max(peak_window, w)
                if n + 1 > 2 * pulse_steps and peak_window > 0 and w <= threshold * peak_window:
                    decayed = True
                    terminated = "decay"
                    n_done = n + 1
                    break
        if not self.state.all_finite():
            raise SolverError("non-finite field; solver unstable", step=self.state.step)
        self.probes = {k: np.array(vals) for k, vals in probe_vals.items()}
        log.info("fdtd run finished after %d steps (%s)", n_done, terminated)
        return TimeSeriesRecord(
            dt,
            v[:n_done],
            cur[:n_done],
            decayed=decayed,
            terminated_by=terminated,
            surface=ntff,
        )


def run(grid: MaterialGrid, config: SimulationConfig, port: PortSpec,
        ntff_box=None, budget_cellsteps: float | None = None) -> TimeSeriesRecord:
    """Excite ``port`` with the configured pulse and record its voltage and current."""
    sim = Simulation(grid, config)
    sim.add_port(port, config.source)
    if ntff_box is not None and config.ntff_frequencies:
        sim.add_ntff_box(ntff_box, config.ntff_frequencies)
    return sim.run(budget_cellsteps=budget_cellsteps)


def reference_run(grid: MaterialGrid, config: SimulationConfig, port: PortSpec,
                  budget_cellsteps: float | None = None) -> TimeSeriesRecord:
    """Incident-wave calibration on a feed line running into the absorber at both ends."""
    sim = Simulation(grid, config)
    sim.add_port(port, config.source)
    return sim.run(budget_cellsteps=budget_cellsteps)
