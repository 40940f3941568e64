"""Port spectra: direct DFT, S11 by reference subtraction, Parseval check."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import PatchkitError

PASSIVITY_TOLERANCE = 1e-6  # |S11| above 1 + this on a passive structure draws a warning


class SpectrumError(PatchkitError, ValueError):
    pass


def dft(samples, dt: float, freqs, t0: float = 0.0) -> np.ndarray:
    """``sum_n x[n] exp(-j 2 pi f (t0 + n dt)) dt`` evaluated directly at ``freqs``."""
    x = np.asarray(samples, dtype=float)
    f = np.asarray(freqs, dtype=float)
    out = np.zeros(f.shape, dtype=complex)
    chunk = max(16, 2_000_000 // max(f.size, 1))
    w = -2j * math.pi * f
    for start in range(0, x.size, chunk):
        seg = x[start : start + chunk]
        t = t0 + (start + np.arange(seg.size)) * dt
        out += np.exp(np.outer(w, t)) @ seg
    return out * dt


@dataclass(frozen=True)
class SParamSpectrum:
    freqs: np.ndarray
    s11: np.ndarray
    z_ref: float = 50.0
    warnings: tuple[str, ...] = field(default=(), compare=False)
    incident_power: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        s = np.asarray(self.s11, dtype=complex)
        if f.ndim != 1 or f.shape != s.shape:
            raise SpectrumError("freqs and s11 must be 1-D and equally long")
        if f.size >= 2 and np.any(np.diff(f) <= 0):
            raise SpectrumError("frequency grid must be strictly increasing")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "s11", s)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.s11)

    @property
    def db(self) -> np.ndarray:
        return 20.0 * np.log10(np.maximum(np.abs(self.s11), 1e-15))

    def accepted_power(self) -> np.ndarray:
        if self.incident_power is None:
            raise SpectrumError("spectrum carries no incident power")
        return self.incident_power * (1.0 - np.abs(self.s11) ** 2)

    def at(self, f: float) -> complex:
        re = np.interp(f, self.freqs, self.s11.real)
        im = np.interp(f, self.freqs, self.s11.imag)
        return complex(re, im)

    def to_csv(self) -> str:
        lines = ["f_hz,re_s11,im_s11,mag_db"]
        for f, s, d in zip(self.freqs, self.s11, self.db):
            lines.append(f"{f:.6f},{s.real:.12e},{s.imag:.12e},{d:.6f}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, z_ref: float = 50.0) -> SParamSpectrum:
        rows = [ln.split(",") for ln in text.strip().splitlines()[1:] if ln.strip()]
        f = np.array([float(r[0]) for r in rows])
        s = np.array([complex(float(r[1]), float(r[2])) for r in rows])
        return cls(f, s, z_ref)


def frequency_grid(f_lo: float, f_hi: float, n: int) -> np.ndarray:
    return np.linspace(f_lo, f_hi, n)


def port_spectra(record, freqs):
    """Voltage and current phasors; current samples sit half a step late."""
    v = dft(record.voltage, record.dt, freqs)
    i = dft(record.current, record.dt, freqs, t0=0.5 * record.dt)
    return v, i


def s11_spectrum(antenna, reference, freqs, z_ref: float = 50.0) -> SParamSpectrum:
    """Reflection at the port from the antenna run minus the matched-line run."""
    if not math.isclose(antenna.dt, reference.dt, rel_tol=1e-12):
        raise SpectrumError(f"time steps differ: {antenna.dt} vs {reference.dt}")
    f = np.asarray(freqs, dtype=float)
    warnings = []
    for name, rec in (("antenna", antenna), ("reference", reference)):
        if not rec.decayed:
            warnings.append(f"{name} record not decayed ({rec.terminated_by}); spectrum truncated")
    v_inc, i_inc = port_spectra(reference, f)
    v_tot = dft(antenna.voltage, antenna.dt, f)
    with np.errstate(divide="ignore", invalid="ignore"):
        s11 = np.where(np.abs(v_inc) > 0, (v_tot - v_inc) / v_inc, 0.0)
    p_inc = 0.5 * np.real(v_inc * np.conj(i_inc))
    peak = float(np.abs(s11).max()) if s11.size else 0.0
    if peak > 1.0 + PASSIVITY_TOLERANCE:
        at = f[int(np.argmax(np.abs(s11)))]
        warnings.append(f"|S11| reaches {peak:.6f} at {at / 1e9:.4f} GHz, above 1 + "
                        f"{PASSIVITY_TOLERANCE:g} (reference-subtraction error); not clipped")
    return SParamSpectrum(f, s11, z_ref, tuple(warnings), p_inc)


def parseval_check(samples, dt: float) -> tuple[float, float]:
    """Signal energy in time and from the one-sided DFT spectrum.

    The spectrum is evaluated at the ``N`` natural bin frequencies
    ``k / (N dt)`` (no window, no padding).
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    e_time = float(np.sum(x * x) * dt)
    freqs = np.arange(n // 2 + 1) / (n * dt)
    spec = dft(x, dt, freqs)
    df = 1.0 / (n * dt)
    w = np.full(freqs.size, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    e_freq = float(np.sum(w * np.abs(spec) ** 2) * df)
    return e_time, e_freq
