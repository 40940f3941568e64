import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DIPOLE_F, hertzian_dipole
from patchkit.constants import GHZ, MM
from patchkit.coupling import CouplingParams, surrogate_s11
from patchkit.errors import EnergyAccountingError
from patchkit.fdtd import TimeSeriesRecord
from patchkit.postprocess import (
    SParamSpectrum,
    bandwidth,
    db_to_efficiency,
    dft,
    efficiency_to_db,
    ntff,
    parseval_check,
    radiation_efficiency,
    s11_spectrum,
)
from patchkit.postprocess.ntff import SurfaceError, sphere_integral
from patchkit.postprocess.spectra import SpectrumError


# -- spectra ------------------------------------------------------------------------

def test_dft_of_gaussian_matches_closed_form():
    dt, sigma, t0 = 1e-12, 50e-12, 400e-12
    t = np.arange(1000) * dt
    x = np.exp(-(((t - t0) / sigma) ** 2) / 2)
    f = np.array([0.0, 2e9, 5e9])
    exact = sigma * math.sqrt(2 * math.pi) * np.exp(-((2 * math.pi * f * sigma) ** 2) / 2)
    exact = exact * np.exp(-2j * math.pi * f * t0)
    assert np.allclose(dft(x, dt, f), exact, rtol=1e-9, atol=1e-20)


def test_parseval_on_port_record(line_records):
    r = line_records["short_line"]
    for series in (r.voltage, r.current):
        e_t, e_f = parseval_check(series, r.dt)
        assert e_f == pytest.approx(e_t, rel=1e-3)


@given(st.integers(16, 257))
@settings(max_examples=25, deadline=None)
def test_parseval_random(n):
    x = np.random.default_rng(n).standard_normal(n)
    e_t, e_f = parseval_check(x, 1e-12)
    assert e_f == pytest.approx(e_t, rel=1e-9)


def test_reference_against_itself_is_zero(line_records):
    r = line_records["short_line"]
    s = s11_spectrum(r, r, np.linspace(2e9, 8e9, 31))
    assert np.all(s.s11 == 0)


def test_shorted_line_total_reflection(line_records):
    src = line_records["source"]
    f = np.linspace(src.f_min, src.f_max, 101)
    s = s11_spectrum(line_records["shorted"], line_records["short_line"], f)
    assert np.all(np.abs(s.magnitude - 1) < 0.05)


def test_passivity_violation_is_warned_not_clipped(line_records):
    ref = line_records["short_line"]
    f = np.linspace(4e9, 6e9, 11)
    assert not s11_spectrum(ref, ref, f).warnings
    boosted = TimeSeriesRecord(ref.dt, 2.5 * ref.voltage, ref.current)
    s = s11_spectrum(boosted, ref, f)
    assert s.magnitude == pytest.approx(np.full(11, 1.5), rel=1e-9)
    assert any("above 1 + 1e-06" in w for w in s.warnings)


def test_incident_power_positive(line_records):
    src = line_records["source"]
    s = s11_spectrum(line_records["shorted"], line_records["short_line"],
                     np.linspace(src.f_min, src.f_max, 21))
    assert np.all(s.incident_power > 0)
    # a short takes no power (within the 5% reflection tolerance)
    assert np.all(np.abs(s.accepted_power()) < 0.1 * s.incident_power)


def test_s11_rejects_mismatched_dt():
    a = TimeSeriesRecord(1e-12, np.ones(4), np.ones(4))
    b = TimeSeriesRecord(2e-12, np.ones(4), np.ones(4))
    with pytest.raises(SpectrumError):
        s11_spectrum(a, b, [1e9, 2e9])


def test_undecayed_record_warns():
    a = TimeSeriesRecord(1e-12, np.ones(4), np.ones(4), decayed=False, terminated_by="budget")
    b = TimeSeriesRecord(1e-12, np.ones(4), np.ones(4))
    s = s11_spectrum(a, b, [1e9, 2e9])
    assert any("not decayed" in w for w in s.warnings)


def test_spectrum_csv_round_trip():
    f = np.linspace(1e9, 2e9, 5)
    s = SParamSpectrum(f, np.array([0.1, 0.2j, -0.3, 0.4 - 0.1j, 0.0]))
    back = SParamSpectrum.from_csv(s.to_csv())
    assert np.allclose(back.s11, s.s11, rtol=0, atol=1e-12)
    assert np.array_equal(back.freqs, s.freqs)
    with pytest.raises(SpectrumError):
        SParamSpectrum(f[::-1], s.s11)


# -- bands ---------------------------------------------------------------------------

def _from_db(f, db):
    return SParamSpectrum(f, 10 ** (np.asarray(db) / 20))


def test_flat_spectrum_has_no_band():
    f = np.linspace(1e9, 3e9, 101)
    assert len(bandwidth(_from_db(f, np.full(f.size, -5.0)))) == 0


def test_parabola_band_edges():
    f = np.linspace(2.0e9, 2.6e9, 601)
    db = -20 + 10 * ((f - 2.3e9) / 0.05e9) ** 2
    rep = bandwidth(_from_db(f, db))
    assert len(rep) == 1
    b = rep.bands[0]
    assert b.f_low == pytest.approx(2.25e9, abs=0.5e6)
    assert b.f_high == pytest.approx(2.35e9, abs=0.5e6)
    assert b.f_min == pytest.approx(2.3e9)
    assert b.s11_min_db == pytest.approx(-20, abs=1e-6)


def test_surrogate_gives_two_bands():
    p = CouplingParams(f1=5.8 * GHZ, f2=2.4 * GHZ, d=5 * MM)
    rep = bandwidth(surrogate_s11(p, np.linspace(1.5e9, 7.5e9, 3001)))
    assert len(rep) == 2
    assert rep.bands[0].f_high < rep.bands[1].f_low


def test_band_report_csv():
    f = np.linspace(2.0e9, 2.6e9, 61)
    rep = bandwidth(_from_db(f, -20 + 10 * ((f - 2.3e9) / 0.05e9) ** 2))
    rows = rep.to_csv().splitlines()
    assert rows[0] == "f_low_hz,f_high_hz,f_min_hz,s11_min_db" and len(rows) == 2
    assert rep.containing(2.3e9) is rep.bands[0]
    assert rep.containing(2.5e9) is None


@given(
    st.lists(st.floats(-30, 0), min_size=3, max_size=40),
    st.floats(-25, -1),
    st.floats(0.1, 10),
)
@settings(max_examples=80, deadline=None)
def test_band_properties(db, t, dt):
    f = np.linspace(1e9, 2e9, len(db))
    s = _from_db(f, db)
    rep = bandwidth(s, t)
    lows = bandwidth(s, t - dt)
    edges = [(b.f_low, b.f_high) for b in rep]
    for (lo, hi), nxt in zip(edges, edges[1:]):
        assert lo <= hi < nxt[0]
    for b in rep:
        assert b.s11_min_db < t
    # lowering the threshold never widens a band
    for b in lows:
        host = [r for r in rep if r.f_low <= b.f_low and b.f_high <= r.f_high]
        assert len(host) == 1


# -- far field -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def dipole():
    return hertzian_dipole()


@pytest.mark.parametrize("f", DIPOLE_F)
def test_hertzian_dipole_directivity(dipole, f):
    surface, acc = dipole
    p = ntff(surface, f, accepted_power=acc[f])
    theta, _, peak = p.peak()
    assert peak == pytest.approx(10 * math.log10(1.5), abs=0.3)
    assert theta == pytest.approx(90.0, abs=10.0)
    assert p.normalization() == pytest.approx(1.0, abs=0.01)
    # torus: nulls along the dipole (z) axis
    assert p.directivity[0].max() < 1e-3 and p.directivity[-1].max() < 1e-3
    d_theta = p.directivity[:, 0]
    expected = 1.5 * np.sin(np.radians(p.theta_deg)) ** 2
    assert np.abs(d_theta - expected).max() < 0.1


@pytest.mark.parametrize("plate", [False, True])
def test_lossless_efficiency_is_one(plate, dipole):
    surface, acc = dipole if not plate else hertzian_dipole(plate=True)
    for f in DIPOLE_F:
        p = ntff(surface, f, accepted_power=acc[f])
        eff, eff_db = radiation_efficiency(p)
        ratio = p.radiated_power / p.accepted_power
        assert ratio == pytest.approx(1.0, abs=0.02)
        assert eff <= 1.0 and eff_db <= 0.0
        # box flux agrees with the far-field integral
        assert surface.flux(f) == pytest.approx(p.radiated_power, rel=0.02)


def test_gain_not_above_directivity(dipole):
    surface, acc = dipole
    f = DIPOLE_F[1]
    p = ntff(surface, f, accepted_power=1.25 * acc[f])  # 80% efficient
    assert p.efficiency == pytest.approx(0.8, rel=0.02)
    assert np.all(p.gain <= p.directivity)
    assert np.all(p.gain_dbi <= p.directivity_dbi + 1e-12)


def test_radiated_above_accepted_is_an_error(dipole):
    surface, acc = dipole
    f = DIPOLE_F[1]
    with pytest.raises(EnergyAccountingError):
        ntff(surface, f, accepted_power=0.5 * acc[f])
    with pytest.raises(EnergyAccountingError):
        ntff(surface, f, accepted_power=-1.0)


def test_unresolved_port_power_warns_instead_of_raising(dipole):
    surface, acc = dipole
    f = DIPOLE_F[1]
    p_rad = ntff(surface, f).radiated_power
    # 0.5 of radiated is accepted but the incident wave is 20x larger: the
    # 0.5 p_rad gap sits inside the port's power resolution
    p = ntff(surface, f, accepted_power=0.5 * p_rad, incident_power=20 * p_rad)
    assert p.efficiency == 1.0 and any("not resolved" in w for w in p.warnings)
    with pytest.raises(EnergyAccountingError):
        ntff(surface, f, accepted_power=0.5 * p_rad, incident_power=2 * p_rad)


def test_aperture_cells_leave_the_transform(dipole):
    surface, _ = dipole
    f = DIPOLE_F[0]
    full = ntff(surface, f).radiated_power
    flux = surface.flux(f)
    i0, i1, j0, j1, k0, k1 = surface.box
    try:
        surface.exclude("y-", (i0, i1), (k0, k1))  # drop a whole face
        cut = ntff(surface, f).radiated_power
        assert surface.flux(f) == flux  # the box flux still counts every cell
        # a face of the cube carries roughly a sixth of the dipole power
        assert 0.5 * full < cut < 0.95 * full
        with pytest.raises(SurfaceError):
            surface.exclude("w+", (0, 1), (0, 1))
    finally:
        surface.apertures.clear()
    assert ntff(surface, f).radiated_power == full


def test_pattern_cuts_and_csv(dipole):
    surface, acc = dipole
    p = ntff(surface, DIPOLE_F[0], accepted_power=acc[DIPOLE_F[0]], step_deg=5.0)
    ang, d, g = p.cut(0.0)
    assert ang[0] == -180 and ang[-1] == 180 and ang.size == d.size == g.size
    rows = p.to_csv().splitlines()
    assert rows[0].startswith("theta_deg,phi_deg,directivity_dbi")
    assert len(rows) == 1 + p.theta_deg.size * p.phi_deg.size


def test_ntff_needs_a_surface():
    with pytest.raises(SurfaceError):
        ntff(None, 1e9)


def test_unknown_frequency_rejected(dipole):
    surface, _ = dipole
    with pytest.raises(SurfaceError):
        ntff(surface, 3.3e9)


def test_sphere_integral_of_constant():
    th = np.linspace(0, 180, 91)
    ph = np.arange(180) * 2.0
    assert sphere_integral(np.ones((91, 180)), th, ph) == pytest.approx(4 * math.pi, rel=1e-3)


# -- efficiency conversions --------------------------------------------------------------

@pytest.mark.parametrize("db, pct", [(-1.5, 70.8), (-1.3, 74.1)])
def test_efficiency_conversion(db, pct):
    assert 100 * db_to_efficiency(db) == pytest.approx(pct, abs=0.1)
    assert efficiency_to_db(pct / 100) == pytest.approx(db, abs=0.01)


@given(st.floats(1e-3, 1.0))
def test_efficiency_round_trip(eff):
    assert db_to_efficiency(efficiency_to_db(eff)) == pytest.approx(eff, rel=1e-12)
