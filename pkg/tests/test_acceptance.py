"""Acceptance suite: one verdict line per criterion in the terminal summary.

Criteria that the implementation cannot meet at the stated tolerance are
computed faithfully, reported as FAIL and marked strict xfail, so a silent
change in either direction breaks the run.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import DIPOLE_F, hertzian_dipole, plane_wave_run, record_criterion
from patchkit.cli import EXIT_OK, main
from patchkit.constants import C0, GHZ, MM
from patchkit.coupling import (
    base_coupling,
    coupling_at_displacement,
    displacement_sweep,
    split_frequencies,
    surrogate_s11,
    with_displacement,
)
from patchkit.design import DesignRequest, SubstrateSpec, design_patch
from patchkit.fdtd import GaussianPulse, MaterialGrid, Simulation, SimulationConfig
from patchkit.pipeline import coupling_params, local_minima, simulate, tune
from patchkit.postprocess import bandwidth, db_to_efficiency, dft, efficiency_to_db, ntff
from patchkit.runfile import read_run

RUNS = Path(__file__).resolve().parents[1] / "runs"


class Checks:
    """Named comparisons collected for a single verdict line."""

    def __init__(self):
        self.items: list[tuple[str, bool]] = []

    def near(self, name, got, want, tol):
        ok = abs(got - want) <= tol
        self.items.append((f"{name} {got:.4g} vs {want:g}±{tol:g}", ok))
        return ok

    def that(self, name, ok):
        self.items.append((name, bool(ok)))
        return ok

    @property
    def passed(self):
        return all(ok for _, ok in self.items)

    def failures(self):
        return [n for n, ok in self.items if not ok]

    def detail(self, summary=""):
        bad = self.failures()
        return summary if not bad else f"{summary}; missed: " + ", ".join(bad)


# -- 1: design tables --------------------------------------------------------------------

TABLES = {
    5.8: dict(PW=17.1, PL=13.1, lam=51.7, Zp=182.0, X0=4.3, Wt=3.0, gap=0.38),
    2.4: dict(PW=41.4, PL=32.7, lam=125.0, Zp=181.0, X0=10.6, Wt=2.9, gap=0.86),
}


def _table_checks():
    sub = SubstrateSpec(3.55, 1.5 * MM)
    c = Checks()
    t0 = time.perf_counter()
    for f, row in TABLES.items():
        d = design_patch(DesignRequest(f * GHZ, sub, 50.0, gap=row["gap"] * MM))
        c.near(f"{f} PW", d.width / MM, row["PW"], 0.05)
        c.near(f"{f} PL", d.length / MM, row["PL"], 0.05)
        c.near(f"{f} lambda", d.lambda0 / MM, row["lam"], 0.05)
        c.near(f"{f} Zp", d.z_edge, row["Zp"], 1.0)
        c.near(f"{f} X0", d.inset_distance / MM, row["X0"], 0.05)
        c.near(f"{f} Wt", d.feed_width / MM, row["Wt"], 0.5)
    elapsed = time.perf_counter() - t0
    c.that(f"runtime {elapsed * 1e3:.1f} ms", elapsed < 0.1)
    return c


# Known misses of the closed-form chain against the printed tables:
#   Zp = 60 lambda0 / W reduces to 120 sqrt((er + 1) / 2) = 180.997 ohm at any f,
#     0.003 ohm outside 182 +- 1 (the 2.4 GHz table prints 181)
#   X0(5.8 GHz) = 4.248 mm, 0.002 mm under the window
#   lambda(2.4 GHz) = c / f = 124.91 mm; the table rounds to whole millimetres
KNOWN_TABLE_MISSES = {"5.8 Zp", "5.8 X0", "2.4 lambda"}


def test_criterion_1_table_values_that_are_met():
    c = _table_checks()
    missed = {" ".join(n.split()[:2]) for n in c.failures()}
    assert missed == KNOWN_TABLE_MISSES


@pytest.mark.xfail(strict=True, reason="Zp 181.0 vs 182, X0 4.248 vs 4.3, lambda 124.91 vs 125 at the stated tolerances")
def test_criterion_1_tables():
    c = _table_checks()
    record_criterion(1, c.passed, c.detail("design tables 5.8 / 2.4 GHz"))
    assert c.passed, c.failures()


# -- 2: coupling formula --------------------------------------------------------------------

def _lc_split(f1, f2, k):
    """Brute-force eigenfrequencies of two LC tanks with mutual inductance."""
    l1, l2 = 1e-9, 2.7e-9
    c1 = 1 / ((2 * math.pi * f1) ** 2 * l1)
    c2 = 1 / ((2 * math.pi * f2) ** 2 * l2)
    m = k * math.sqrt(l1 * l2)
    w2 = np.linalg.eigvals(np.linalg.solve([[l1, m], [m, l2]], np.diag([1 / c1, 1 / c2]))).real
    return tuple(np.sort(np.sqrt(w2)) / (2 * math.pi))


def test_criterion_2_coupling():
    c = Checks()
    c.near("K0(5.7, 2.3)", base_coupling(5.7 * GHZ, 2.3 * GHZ), 0.85, 1e-12)
    c.that("K(0) = 0", coupling_at_displacement(0.85, 40.0, 0.0).k == 0.0)
    ds = np.linspace(0, 8 * MM, 9)
    ks = np.array([coupling_at_displacement(0.85, 40.0, d).k for d in ds])
    c.that("K linear in d", np.allclose(ks, 0.85 * 40.0 * ds, rtol=1e-12, atol=0))
    lo, hi = split_frequencies(1 * GHZ, 1 * GHZ, 0.1)
    olo, ohi = _lc_split(1 * GHZ, 1 * GHZ, 0.1)
    c.that(f"split low {lo / GHZ:.5f} vs oracle", abs(lo / olo - 1) < 1e-4)
    c.that(f"split high {hi / GHZ:.5f} vs oracle", abs(hi / ohi - 1) < 1e-4)
    c.that("split low vs 0.9535", abs(lo / (0.9535 * GHZ) - 1) < 1e-4)
    c.that("split high vs 1.0541", abs(hi / (1.0541 * GHZ) - 1) < 1e-4)
    record_criterion(2, c.passed, c.detail(f"K0 0.85, split ({lo / GHZ:.4f}, {hi / GHZ:.4f}) GHz"))
    assert c.passed, c.failures()


# -- 3: solver oracles ------------------------------------------------------------------------

def _cavity_peak():
    a, b, d = 30 * MM, 15 * MM, 15 * MM
    cell = 0.5 * MM
    grid = MaterialGrid.empty((round(a / cell), round(b / cell), round(d / cell)), cell)
    cfg = SimulationConfig(cell, boundaries=("pec",) * 3, source=GaussianPulse(10e9, 12e9))
    sim = Simulation(grid, cfg)
    sim.add_soft_source("Ey", (17, 11, 9), cfg.source)
    sim.add_probe("p", "Ey", (40, 13, 19))
    sim.run(steps=8000)
    f = np.linspace(5e9, 16e9, 2201)
    spec = np.abs(dft(sim.probes["p"], sim.dt, f))
    return f[np.argmax(spec)], C0 / 2 * math.sqrt((1 / a) ** 2 + (1 / d) ** 2)


def test_criterion_3_solver_oracles():
    c = Checks()
    t0 = time.perf_counter()
    peak, analytic = _cavity_peak()
    cavity_s = time.perf_counter() - t0
    err = abs(peak / analytic - 1)
    c.that(f"TE101 error {100 * err:.2f}%", err < 0.02)
    c.that(f"cavity runtime {cavity_s:.0f} s", cavity_s < 120)

    short, src = plane_wave_run(80, {"p": 50})
    long_, _ = plane_wave_run(1600, {"p": 50})
    f = np.linspace(src.f_min, src.f_max, 200)
    inc = dft(long_.probes["p"], short.dt, f)
    ref = dft(short.probes["p"] - long_.probes["p"], short.dt, f)
    refl_db = float(20 * np.log10(np.abs(ref) / np.abs(inc)).max())
    c.that(f"PML reflection {refl_db:.1f} dB", refl_db < -40)

    cell = 1 * MM
    sim, _ = plane_wave_run(400, {"p": 50, "q": 60}, cell=cell)
    f15 = C0 / (15 * cell)
    p = dft(sim.probes["p"], sim.dt, [f15])[0]
    q = dft(sim.probes["q"], sim.dt, [f15])[0]
    lag = np.mod(-np.angle(q / p), 2 * math.pi)
    v_err = abs(2 * math.pi * f15 / (lag / (10 * cell)) / C0 - 1)
    c.that(f"phase velocity error {100 * v_err:.2f}%", v_err < 0.01)

    surface, acc = hertzian_dipole()
    for fd in DIPOLE_F:
        _, _, peak_dbi = ntff(surface, fd, accepted_power=acc[fd]).peak()
        c.near(f"dipole D {fd / GHZ:g} GHz dBi", peak_dbi, 10 * math.log10(1.5), 0.3)
    record_criterion(3, c.passed, c.detail(
        f"TE101 {100 * err:.2f}%, PML {refl_db:.1f} dB, v {100 * v_err:.2f}%"))
    assert c.passed, c.failures()


# -- 4-6: full-wave runs ------------------------------------------------------------------------

def _window(spec, f0, frac=0.06):
    m = (spec.freqs >= f0 * (1 - frac)) & (spec.freqs <= f0 * (1 + frac))
    return spec.db[m]


@pytest.fixture(scope="module")
def mono_run():
    cfg = read_run(RUNS / "mono58.ini")
    t0 = time.perf_counter()
    result = simulate(cfg)
    return cfg, result, time.perf_counter() - t0


# The closed-form inset (cos^2 law on Zp = 60 lambda0 / W) under-couples in the
# solver: the dip sits on frequency but |S11| stays near -7.4 dB (R_in about
# 124 ohm). Refinement does not close the gap: 1.0 mm -9.5 dB, 0.5 mm -7.4 dB,
# 0.375 mm -8.2 dB.
@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="inset design under-couples: dip about -7.4 dB at 0.5 mm, not below -10 dB")
def test_criterion_4_mono(mono_run):
    cfg, result, seconds = mono_run
    spec = result.spectrum
    c = Checks()
    c.that(f"cell {cfg.sim.cell / MM:g} mm", abs(cfg.sim.cell - 0.5 * MM) < 1e-12)
    m = int(np.argmin(spec.db))
    f_dip, dip = spec.freqs[m], float(spec.db[m])
    c.that(f"dip {dip:.2f} dB below -10", dip < -10)
    c.that(f"dip at {f_dip / GHZ:.3f} GHz within 6%", abs(f_dip / (5.8 * GHZ) - 1) <= 0.06)
    in_band = [b for b in result.bands if b.f_low <= f_dip <= b.f_high]
    c.that("dip inside a -10 dB band", len(in_band) == 1)
    c.that(f"runtime {seconds / 60:.1f} min", seconds <= 600)
    record_criterion(4, c.passed, c.detail(
        f"dip {dip:.2f} dB at {f_dip / GHZ:.3f} GHz, {seconds / 60:.1f} min"))
    assert c.passed, c.failures()


@pytest.fixture(scope="module")
def slotted_run():
    cfg = read_run(RUNS / "slotted.ini")
    return cfg, simulate(cfg)


# The lower band fails as described (about -0.01 dB, 0.3% of the incident
# power accepted). With the declared default slot fold the upper resonance
# survives and even matches better (about -18 dB at 5.78 GHz), so the "no
# -10 dB crossing in either band" clause is not reproduced.
@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="default slot fold leaves a -18 dB upper-band dip; the lower band fails as expected")
def test_criterion_5_slotted_failure(slotted_run):
    cfg, result = slotted_run
    spec = result.spectrum
    lo, hi = sorted(cfg.targets)
    lower_min = float(_window(spec, lo).min())
    upper_min = float(_window(spec, hi).min())
    c = Checks()
    c.that(f"lower-band minimum {lower_min:.2f} dB above -3", lower_min > -3)
    c.that(f"no -10 dB in lower band ({lower_min:.2f})", lower_min > -10)
    c.that(f"no -10 dB in upper band ({upper_min:.2f})", upper_min > -10)
    record_criterion(5, c.passed, c.detail(
        f"lower-band min {lower_min:.2f} dB, upper-band min {upper_min:.2f} dB"))
    assert c.passed, c.failures()


@pytest.fixture(scope="module")
def stacked_run():
    cfg = read_run(RUNS / "stacked.ini")
    return cfg, tune(cfg), simulate(cfg)


@pytest.mark.slow
def test_criterion_6_stacked(stacked_run):
    cfg, tuned, result = stacked_run
    c = Checks()
    base = coupling_params(cfg)
    freqs = np.linspace(1.0 * GHZ, 8.0 * GHZ, 3001)
    points = displacement_sweep(cfg.targets, base, (0.0, 8 * MM), 81)
    centers = []
    for pt in points:
        bands = bandwidth(surrogate_s11(with_displacement(base, pt.d), freqs)).bands
        if len(bands) != 2 or bands[0].f_high >= bands[1].f_low:
            centers.append(None)
            continue
        centers.append(((bands[0].f_low + bands[0].f_high) / 2, (bands[1].f_low + bands[1].f_high) / 2))
    c.that("two disjoint surrogate bands over the whole sweep", all(x is not None for x in centers))
    ks = [pt.k for pt in points]
    if all(x is not None for x in centers):
        sep = np.array([h - low for low, h in centers])
        c.that("surrogate band centers move apart as K grows",
               np.all(np.diff(ks) > 0) and np.all(np.diff(sep) > 0))
    at = bandwidth(surrogate_s11(with_displacement(base, tuned.d), freqs)).bands
    c.that(f"two surrogate bands at tuned d = {tuned.d / MM:g} mm", len(at) == 2)
    dips = [(f, d) for f, d in local_minima(result.spectrum) if d < -10]
    c.that(f"full-wave dips below -10 dB: {len(dips)}", len(dips) >= 2)
    text = ", ".join(f"{d:.1f} dB at {f / GHZ:.2f} GHz" for f, d in local_minima(result.spectrum))
    record_criterion(6, c.passed, c.detail(f"tuned d {tuned.d / MM:g} mm; full-wave dips: {text or 'none'}"))
    assert c.passed, c.failures()


# -- 7: efficiency conversions -----------------------------------------------------------------

def test_criterion_7_efficiency():
    c = Checks()
    for db, pct in ((-1.5, 70.8), (-1.3, 74.1)):
        c.near(f"{db} dB -> %", 100 * db_to_efficiency(db), pct, 0.1)
        c.near(f"{pct}% -> dB", efficiency_to_db(pct / 100), db, 0.01)
    record_criterion(7, c.passed, c.detail("-1.5 dB = 70.8%, -1.3 dB = 74.1%"))
    assert c.passed, c.failures()


# -- 8: determinism ------------------------------------------------------------------------------

def _tree(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.slow
def test_criterion_8_determinism(tmp_path):
    c = Checks()
    coarse = ["--set", "simulation.cell_mm=1.0", "--set", "simulation.points=121",
              "--set", "simulation.pattern_step_deg=5"]
    for cmd, run, extra in (("design", "mono58.ini", []), ("tune", "stacked.ini", []),
                            ("masks", "stacked.ini", [])):
        trees = []
        for rep in range(2):
            out = tmp_path / f"{cmd}{rep}"
            assert main([cmd, "--run", str(RUNS / run), "--out", str(out), *extra]) == EXIT_OK
            trees.append(_tree(out))
        c.that(f"{cmd} repeat identical", trees[0] == trees[1])
    trees = []
    for workers in (1, 4):
        out = tmp_path / f"sim{workers}"
        assert main(["simulate", "--run", str(RUNS / "mono58.ini"), "--out", str(out), *coarse,
                     "--set", f"simulation.workers={workers}"]) == EXIT_OK
        trees.append(_tree(out))
    c.that("simulate identical for 1 and 4 workers", trees[0] == trees[1])
    record_criterion(8, c.passed, c.detail(f"design/tune/masks/simulate byte-identical ({len(trees[0])} files)"))
    assert c.passed, c.failures()
