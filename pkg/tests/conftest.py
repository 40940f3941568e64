import os
import warnings

# Worker-count determinism needs more than one numba thread even on a 1-CPU box.
os.environ.setdefault("NUMBA_NUM_THREADS", "4")

warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from patchkit.constants import GHZ, MM  # noqa: E402
from patchkit.design import DesignRequest, SubstrateSpec, design_patch  # noqa: E402
from patchkit.fdtd import GaussianPulse, MaterialGrid, Simulation, SimulationConfig  # noqa: E402
from patchkit.postprocess.spectra import dft  # noqa: E402


@pytest.fixture(scope="session")
def substrate():
    return SubstrateSpec(3.55, 1.5 * MM)


@pytest.fixture(scope="session")
def design58(substrate):
    return design_patch(DesignRequest(5.8 * GHZ, substrate, gap=0.38 * MM))


@pytest.fixture(scope="session")
def design24(substrate):
    return design_patch(DesignRequest(2.4 * GHZ, substrate, gap=0.86 * MM))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- small microstrip line shared by solver and postprocess tests ----------
LINE_CELL = 0.5 * MM
LINE_PML = 8


def microstrip_line(ny: int, short_at: int | None = None):
    """3 mm trace on 1.5 mm of er 3.55, running along y through the PML.

    ``short_at`` drops a PEC wall from trace to ground across that y cell.
    """
    from patchkit.fdtd import PortSpec

    nx, nz, kg, kt = 30, 22, 10, 13
    g = MaterialGrid.empty((nx, ny, nz), LINE_CELL)
    g.eps_r[:, :, kg:kt] = 3.55
    g.add_sheet(kg, np.ones((nx, ny), bool))
    trace = np.zeros((nx, ny), bool)
    trace[12:18, :] = True
    g.add_sheet(kt, trace)
    if short_at is not None:
        g.add_pec_block((12, short_at, kg), (18, short_at + 1, kt))
    port = PortSpec(12, 18, kg, kt, LINE_PML + 3, LINE_PML + 9)
    cfg = SimulationConfig(LINE_CELL, source=GaussianPulse(5e9, 6e9), pml_thickness=LINE_PML)
    return g, cfg, port


@pytest.fixture(scope="session")
def line_records():
    from patchkit.fdtd import reference_run

    out = {}
    for name, ny, short in (("short_line", 60, None), ("long_line", 120, None), ("shorted", 60, 40)):
        g, cfg, port = microstrip_line(ny, short)
        out[name] = reference_run(g, cfg, port)
    out["source"] = cfg.source
    return out


# -- shared solver rigs ------------------------------------------------------------

def plane_wave_run(nz, probes, steps=1500, cell=1 * MM):
    src = GaussianPulse(10e9, 12e9)  # 4-16 GHz, at least 18 cells per wavelength
    cfg = SimulationConfig(cell, source=src, boundaries=("periodic", "periodic", "pml"),
                           pml_thickness=10)
    sim = Simulation(MaterialGrid.empty((2, 2, nz), cell), cfg)
    ii, jj = np.meshgrid(np.arange(2), np.arange(3), indexing="ij")
    sim.add_soft_source("Ex", (ii.ravel(), jj.ravel(), np.full(ii.size, 20)), src)
    for name, k in probes.items():
        sim.add_probe(name, "Ex", (0, 1, k))
    sim.run(steps=steps)
    return sim, src


DIPOLE_F = (8e9, 10e9)


def hertzian_dipole(plate: bool = False):
    n, cell, pml = 40, 1 * MM, 8
    src = GaussianPulse(10e9, 8e9)
    g = MaterialGrid.empty((n, n, n), cell)
    if plate:
        g.add_sheet(14, np.pad(np.ones((6, 6), bool), 17))  # small PEC plate under the dipole
    sim = Simulation(g, SimulationConfig(cell, source=src, pml_thickness=pml, ntff_stride=1))
    c = n // 2
    sim.add_current_source("Ez", (c, c, c), src)
    sim.add_probe("e", "Ez", (c, c, c))
    gap = pml + 4
    sim.add_ntff_box((gap, n - gap, gap, n - gap, gap, n - gap), DIPOLE_F)
    steps = 1500
    sim.run(steps=steps)
    current = np.array([src((k + 0.5) * sim.dt) for k in range(steps)])
    accepted = {}
    for f in DIPOLE_F:
        e = dft(sim.probes["e"].ravel(), sim.dt, [f])[0]
        i = dft(current, sim.dt, [f], t0=0.5 * sim.dt)[0]
        accepted[f] = -0.5 * float(np.real(e * np.conj(i))) * cell
    return sim._ntff, accepted


# -- acceptance summary ----------------------------------------------------------------

ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> bool:
    """Keep one verdict line per acceptance criterion for the terminal summary."""
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
