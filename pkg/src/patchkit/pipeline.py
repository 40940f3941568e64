"""Stage orchestration for the cli: design, tune, geometry, simulate, masks.

Each stage runs inside ``stage(name)`` so failures carry a stage label.
Artifacts go to one output directory; ``manifest.json`` is written last
and lists the sha256 of every other file it vouches for.
"""
from __future__ import annotations

import contextlib
import csv
import hashlib
import io
import json
import logging
import math
import os
import platform
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .constants import GHZ, MM
from .coupling import (
    CouplingParams,
    displacement_sweep,
    surrogate_s11,
    tune_displacement,
)
from .design import DesignRequest, PatchDesign, design_patch
from .errors import PatchkitError, SolverError
from .fdtd import GaussianPulse, SimulationConfig, TimeSeriesRecord
from .fdtd.solver import Simulation
from .geometry import (
    AntennaGeometry,
    SlotSpec,
    build_mono,
    build_slotted,
    build_stacked,
    export_masks,
    resolution_warnings,
)
from .postprocess import bandwidth, ntff, s11_spectrum
from .postprocess.ntff import EFFICIENCY_TOLERANCE
from .postprocess.spectra import PASSIVITY_TOLERANCE, port_spectra
from .runfile import RunConfig
from .scene import Layout, antenna_scene, reference_scene

log = logging.getLogger(__name__)

DETERMINISM_NOTE = (
    "No random numbers are used. Identical run settings reproduce every numerical "
    "artifact byte for byte, for any FDTD worker count."
)
TOLERANCES = {
    "s11_passivity": PASSIVITY_TOLERANCE,
    "efficiency_leakage": EFFICIENCY_TOLERANCE,
    "ntff_normalization": 0.01,
    "band_threshold_db": -10.0,
    "coordinate_quantum_m": 1e-9,
}


@contextlib.contextmanager
def stage(name: str):
    """Attach a stage label to package and I/O errors raised inside."""
    try:
        yield
    except (PatchkitError, OSError) as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


# -- design and coupling ---------------------------------------------------------

def designs_for(cfg: RunConfig) -> dict[str, PatchDesign]:
    if cfg.kind == "stacked":
        return {
            "upper": design_patch(DesignRequest(cfg.upper_f, cfg.substrate, cfg.z_feed, cfg.upper_gap)),
            "lower": design_patch(DesignRequest(cfg.lower_f, cfg.substrate, cfg.z_feed, cfg.lower_gap)),
        }
    return {"patch": design_patch(DesignRequest(cfg.design_f, cfg.substrate, cfg.z_feed, cfg.gap))}


def coupling_params(cfg: RunConfig, d: float = 0.0) -> CouplingParams:
    return CouplingParams(
        f1=cfg.upper_f, f2=cfg.lower_f, alpha=cfg.alpha, d=d, q1=cfg.q, q2=cfg.q,
        mode=cfg.coupling_mode,
    )


@dataclass(frozen=True)
class TuneResult:
    d: float
    points: tuple
    degenerate: bool
    targets: tuple[float, float]

    def to_csv(self) -> str:
        rows = ["d_mm,K,f_low_ghz,f_high_ghz,objective,clamped"]
        for p in self.points:
            rows.append(
                f"{p.d / MM:.4f},{p.k:.10f},{p.f_low / GHZ:.10f},{p.f_high / GHZ:.10f},"
                f"{p.objective:.6e},{int(p.clamped)}"
            )
        return "\n".join(rows) + "\n"

    def summary(self) -> str:
        lines = [f"targets_ghz = {self.targets[0] / GHZ:g}, {self.targets[1] / GHZ:g}",
                 f"chosen_d_mm = {self.d / MM:.4f}"]
        chosen = min(self.points, key=lambda p: abs(p.d - self.d))
        lines.append(f"K = {chosen.k:.6f}")
        lines.append(f"split_ghz = {chosen.f_low / GHZ:.6f}, {chosen.f_high / GHZ:.6f}")
        n_clamped = sum(p.clamped for p in self.points)
        if n_clamped:
            lines.append(f"note = {n_clamped} over-coupled sweep points clamped and excluded")
        if self.degenerate:
            lines.append("note = degenerate sweep: alpha = 0, coupling is displacement-independent; "
                         "the smallest d is reported")
        return "\n".join(lines) + "\n"


def tune(cfg: RunConfig) -> TuneResult:
    if len(cfg.targets) != 2:
        from .errors import ValidationError

        raise ValidationError("targets.f_ghz", "tuning needs two target frequencies")
    params = coupling_params(cfg)
    targets = (cfg.targets[0], cfg.targets[1])
    points = displacement_sweep(targets, params, cfg.d_range, cfg.d_steps)
    d = tune_displacement(targets, params, cfg.d_range, cfg.d_steps)
    return TuneResult(d, tuple(points), cfg.alpha == 0.0, targets)


def displacement(cfg: RunConfig) -> float:
    return tune(cfg).d if cfg.dy is None else cfg.dy


# -- geometry --------------------------------------------------------------------

def build_geometry(cfg: RunConfig, designs: dict[str, PatchDesign]) -> AntennaGeometry:
    if cfg.kind == "mono":
        return build_mono(designs["patch"])
    if cfg.kind == "slotted":
        s = cfg.slot
        spec = SlotSpec(s.length, s.width, s.bends, s.offset_x, s.offset_y)
        return build_slotted(designs["patch"], spec)
    return build_stacked(designs["lower"], designs["upper"], displacement(cfg))


# -- simulation ---------------------------------------------------------------------

@dataclass
class SimulationResult:
    geometry: AntennaGeometry
    antenna: TimeSeriesRecord
    reference: TimeSeriesRecord
    spectrum: object
    bands: object
    patterns: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    cell_steps: int = 0
    dy: float | None = None


def solver_config(cfg: RunConfig) -> SimulationConfig:
    s = cfg.sim
    freqs = tuple(float(f) for f in cfg.targets) if s.patterns else ()
    return SimulationConfig(
        cell=s.cell,
        courant_factor=s.courant,
        timesteps=s.max_steps,
        pml_thickness=s.pml_cells,
        source=GaussianPulse(s.source_center, s.source_bandwidth),
        decay_db=s.decay_db,
        workers=s.workers,
        ntff_frequencies=freqs,
    )


def _run(scene, config: SimulationConfig, budget: float, label: str, ntff_box=None):
    with stage(label):
        if budget < scene.grid.n_cells:
            raise SolverError(f"cell-step budget exhausted before the {label} started")
        sim = Simulation(scene.grid, config)
        sim.add_port(scene.port, config.source)
        if ntff_box is not None and config.ntff_frequencies:
            sim.add_ntff_box(ntff_box, config.ntff_frequencies)
        record = sim.run(budget_cellsteps=budget)
        if record.terminated_by == "budget":
            raise SolverError(
                f"cell-step budget exhausted after {record.steps} steps "
                f"({scene.grid.n_cells} cells) before the port signal decayed"
            )
        return record


def simulate(cfg: RunConfig, geometry: AntennaGeometry | None = None) -> SimulationResult:
    with stage("design"):
        designs = designs_for(cfg)
    dy = None
    with stage("geometry"):
        if cfg.kind == "stacked":
            dy = displacement(cfg)
        if geometry is None:
            geometry = build_geometry(cfg, designs)
        geometry.validate()
    s = cfg.sim
    layout = Layout(pml=s.pml_cells)
    with stage("raster"):
        warnings = list(resolution_warnings(geometry, s.cell))
        scene = antenna_scene(geometry, s.cell, layout)
        ref_scene = reference_scene(geometry, s.cell, layout)
        warnings += [w for w in scene.grid.warnings if w not in warnings]
    config = solver_config(cfg)
    budget = s.budget
    reference = _run(ref_scene, replace(config, ntff_frequencies=()), budget, "reference run")
    used = reference.steps * ref_scene.grid.n_cells
    antenna = _run(scene, config, budget - used, "antenna run", scene.ntff_box)
    used += antenna.steps * scene.grid.n_cells
    with stage("postprocess"):
        freqs = np.linspace(s.f_lo, s.f_hi, s.points)
        spec = s11_spectrum(antenna, reference, freqs, cfg.z_feed)
        warnings += list(spec.warnings)
        bands = bandwidth(spec)
        patterns = {}
        if config.ntff_frequencies:
            for face, a, b in scene.ntff_apertures:
                antenna.surface.exclude(face, a, b)
            fp = np.asarray(config.ntff_frequencies)
            v, i = port_spectra(antenna, fp)
            v_inc, i_inc = port_spectra(reference, fp)
            for f, vv, ii, vi, ij in zip(fp, v, i, v_inc, i_inc):
                accepted = 0.5 * float(np.real(vv * np.conj(ii)))
                incident = 0.5 * float(np.real(vi * np.conj(ij)))
                patterns[float(f)] = ntff(antenna.surface, float(f), accepted_power=accepted,
                                          incident_power=incident, step_deg=s.pattern_step_deg)
    return SimulationResult(geometry, antenna, reference, spec, bands, patterns, warnings, used, dy)


# -- bundle ------------------------------------------------------------------------------

def _freq_tag(f: float) -> str:
    return f"{f / GHZ:.3f}GHz".replace(".", "p")


class ResultBundle:
    """Files of one run in ``root``; ``finalize`` writes the manifest last."""

    def __init__(self, root, cfg: RunConfig | None, command: str):
        self.root = Path(root)
        self.cfg = cfg
        self.command = command
        self.files: list[Path] = []
        self.root.mkdir(parents=True, exist_ok=True)
        manifest = self.root / "manifest.json"
        if manifest.exists():
            manifest.unlink()  # an incomplete rerun must not look complete

    def write(self, name: str, text: str) -> Path:
        p = _write(self.root / name, text)
        self.add(p)
        return p

    def write_bytes(self, name: str, data: bytes) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(data)
        self.add(p)
        return p

    def add(self, path: Path) -> None:
        path = Path(path)
        if path not in self.files:
            self.files.append(path)

    def manifest(self) -> dict:
        return {
            "tool": "patchkit",
            "version": __version__,
            "command": self.command,
            "config_sha256": self.cfg.config_hash if self.cfg is not None else None,
            "modules": {
                "python": platform.python_version(),
                "numpy": np.__version__,
                "numba": _version("numba"),
                "matplotlib": _version("matplotlib"),
            },
            "tolerances": TOLERANCES,
            "determinism": DETERMINISM_NOTE,
            "files": {
                p.relative_to(self.root).as_posix(): _sha256(p)
                for p in sorted(self.files, key=lambda q: q.relative_to(self.root).as_posix())
            },
        }

    def finalize(self) -> Path:
        text = json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n"
        tmp = self.root / "manifest.json.tmp"
        tmp.write_text(text, encoding="utf-8", newline="\n")
        os.replace(tmp, self.root / "manifest.json")
        return self.root / "manifest.json"


def _version(mod: str) -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version(mod)
    except PackageNotFoundError:
        return "unknown"


def verify_manifest(root) -> list[str]:
    """Names of files whose hash no longer matches the manifest."""
    root = Path(root)
    data = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    return [name for name, h in data["files"].items()
            if not (root / name).exists() or _sha256(root / name) != h]


def write_designs(bundle: ResultBundle, cfg: RunConfig, designs: dict[str, PatchDesign]) -> None:
    for name, d in designs.items():
        bundle.write(f"design_{name}.csv", d.to_csv())
        bundle.write(f"design_{name}.txt", d.to_text())


def write_tune(bundle: ResultBundle, result: TuneResult) -> None:
    bundle.write("tune.csv", result.to_csv())
    bundle.write("tune.txt", result.summary())
    for p in render_plots(bundle.root, only=("tune",)):
        bundle.add(p)


def write_masks(bundle: ResultBundle, geometry: AntennaGeometry) -> list[Path]:
    paths = export_masks(geometry, bundle.root / "masks")
    for p in paths:
        bundle.add(p)
    return paths


def write_simulation(bundle: ResultBundle, cfg: RunConfig, result: SimulationResult) -> None:
    spec = result.spectrum
    bundle.write("geometry.txt", result.geometry.to_text())
    bundle.write_bytes("port_antenna.bin", result.antenna.to_bytes())
    bundle.write_bytes("port_reference.bin", result.reference.to_bytes())
    bundle.write("s11.csv", spec.to_csv())
    bundle.write("bands.csv", result.bands.to_csv())
    if cfg.kind == "stacked":
        params = coupling_params(cfg, result.dy or 0.0)
        sur = surrogate_s11(params, spec.freqs).db
        rows = ["f_hz,mag_db"] + [f"{f:.6f},{d:.6f}" for f, d in zip(spec.freqs, sur)]
        bundle.write("s11_surrogate.csv", "\n".join(rows) + "\n")
    for f, pat in sorted(result.patterns.items()):
        bundle.write(f"pattern_{_freq_tag(f)}.csv", pat.to_csv())
    bundle.write("report.txt", simulation_report(cfg, result))
    for p in render_plots(bundle.root, only=("s11", "pattern")):
        bundle.add(p)


def _csv_rows(path: Path) -> list[dict]:
    return list(csv.DictReader(io.StringIO(path.read_text(encoding="utf-8"))))


def _keyed(path: Path) -> dict:
    out = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        key, sep, value = line.partition(" = ")
        if sep and key not in out:
            out[key] = value
    return out


def _pattern_cuts(rows: list[dict]) -> dict:
    th = np.array(sorted({float(r["theta_deg"]) for r in rows}))
    ph = np.array(sorted({float(r["phi_deg"]) for r in rows}))
    d = np.full((th.size, ph.size), np.nan)
    ti = {v: i for i, v in enumerate(th)}
    pi = {v: i for i, v in enumerate(ph)}
    for r in rows:
        d[ti[float(r["theta_deg"])], pi[float(r["phi_deg"])]] = float(r["directivity_dbi"])
    cuts = {}
    for phi in (0.0, 90.0):
        ip = int(np.argmin(np.abs(((ph - phi) + 180) % 360 - 180)))
        ib = int(np.argmin(np.abs(((ph - phi - 180) + 180) % 360 - 180)))
        ang = np.concatenate([-th[::-1], th[1:]])
        cuts[f"phi = {phi:g} deg"] = (ang, np.concatenate([d[::-1, ib], d[1:, ip]]))
    return cuts


def render_plots(root: Path, only=("s11", "pattern", "tune")) -> list[Path]:
    """Draw every SVG of an output directory from its CSV/text files.

    Both the writers and ``patchkit plot`` go through here, so a re-render is
    byte-identical to the original.
    """
    from .plots import pattern_svg, s11_svg, sweep_svg

    root = Path(root)
    written = []
    s11 = root / "s11.csv"
    if "s11" in only and s11.exists():
        rows = _csv_rows(s11)
        f = np.array([float(r["f_hz"]) for r in rows])
        db = np.array([float(r["mag_db"]) for r in rows])
        sur_path = root / "s11_surrogate.csv"
        sur = None
        if sur_path.exists():
            sur = np.array([float(r["mag_db"]) for r in _csv_rows(sur_path)])
        report = root / "report.txt"
        kind = _keyed(report).get("kind", "") if report.exists() else ""
        written.append(s11_svg(f, db, root / "s11.svg", title=f"{kind} S11".strip(), surrogate_db=sur))
    if "pattern" in only:
        for p in sorted(root.glob("pattern_*.csv")):
            tag = p.stem[len("pattern_"):]
            fg = float(tag.replace("GHz", "").replace("p", "."))
            written.append(pattern_svg(_pattern_cuts(_csv_rows(p)), p.with_suffix(".svg"),
                                       title=f"directivity at {fg:g} GHz"))
    tune_csv = root / "tune.csv"
    if "tune" in only and tune_csv.exists():
        rows = _csv_rows(tune_csv)
        info = _keyed(root / "tune.txt") if (root / "tune.txt").exists() else {}
        targets = [float(t) for t in info.get("targets_ghz", "").split(",") if t.strip()]
        chosen = float(info["chosen_d_mm"]) if "chosen_d_mm" in info else None
        written.append(sweep_svg(
            [float(r["d_mm"]) for r in rows], [float(r["f_low_ghz"]) for r in rows],
            [float(r["f_high_ghz"]) for r in rows], root / "tune.svg",
            targets_ghz=targets, chosen_mm=chosen, clamped=[r["clamped"] == "1" for r in rows],
        ))
    return written


def simulation_report(cfg: RunConfig, result: SimulationResult) -> str:
    spec = result.spectrum
    lines = [f"kind = {cfg.kind}",
             f"cell_mm = {cfg.sim.cell / MM:g}",
             f"cell_steps = {result.cell_steps}",
             f"antenna_steps = {result.antenna.steps} ({result.antenna.terminated_by})",
             f"reference_steps = {result.reference.steps} ({result.reference.terminated_by})"]
    m = int(np.argmin(spec.db))
    lines.append(f"s11_min = {spec.db[m]:.3f} dB at {spec.freqs[m] / GHZ:.4f} GHz")
    lines.append(f"s11_max_magnitude = {float(spec.magnitude.max()):.6f}")
    for dip_f, dip_db in local_minima(spec):
        lines.append(f"dip = {dip_db:.3f} dB at {dip_f / GHZ:.4f} GHz")
    if len(result.bands) == 0:
        lines.append("bands = none below -10 dB")
    for b in result.bands:
        lines.append(f"band = {b.f_low / GHZ:.4f} - {b.f_high / GHZ:.4f} GHz, "
                     f"min {b.s11_min_db:.3f} dB at {b.f_min / GHZ:.4f} GHz")
    for f, pat in sorted(result.patterns.items()):
        th, ph, dmax = pat.peak()
        eff, eff_db = pat.efficiency, 10 * math.log10(pat.efficiency)
        g = float(pat.gain_dbi.max())
        lines.append(f"pattern {f / GHZ:g} GHz: peak directivity {dmax:.2f} dBi at theta {th:g}, "
                     f"phi {ph:g}; efficiency {eff:.4f} ({eff_db:.2f} dB); gain {g:.2f} dBi; "
                     f"realized gain {float(pat.realized_gain_dbi.max()):.2f} dBi")
        for w in pat.warnings:
            lines.append(f"warning = pattern {f / GHZ:g} GHz: {w}")
    for w in result.warnings:
        lines.append(f"warning = {w}")
    return "\n".join(lines) + "\n"


def local_minima(spec, depth_db: float = 3.0) -> list[tuple[float, float]]:
    """Interior minima of |S11| dB whose prominence is at least ``depth_db``.

    Prominence of a minimum: the lower of the two highest points met when
    walking away from it until a deeper sample (or the grid end) is reached.
    """
    d = spec.db
    n = d.size
    out = []
    for k in range(1, n - 1):
        if not (d[k] < d[k - 1] and d[k] <= d[k + 1]):
            continue
        lo = k - 1
        left = d[lo]
        while lo > 0 and d[lo - 1] >= d[k]:
            lo -= 1
            left = max(left, d[lo])
        hi = k + 1
        right = d[hi]
        while hi < n - 1 and d[hi + 1] >= d[k]:
            hi += 1
            right = max(right, d[hi])
        if min(left, right) - d[k] >= depth_db:
            out.append((float(spec.freqs[k]), float(d[k])))
    return out
