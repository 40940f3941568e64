"""Impedance bandwidth: contiguous stretches of |S11| below a threshold."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Band(NamedTuple):
    f_low: float
    f_high: float
    f_min: float
    s11_min_db: float

    @property
    def center(self) -> float:
        return 0.5 * (self.f_low + self.f_high)

    @property
    def width(self) -> float:
        return self.f_high - self.f_low


@dataclass(frozen=True)
class BandReport:
    bands: tuple[Band, ...]
    threshold_db: float = -10.0

    def __len__(self):
        return len(self.bands)

    def __iter__(self):
        return iter(self.bands)

    def to_csv(self) -> str:
        lines = ["f_low_hz,f_high_hz,f_min_hz,s11_min_db"]
        for b in self.bands:
            lines.append(f"{b.f_low:.6f},{b.f_high:.6f},{b.f_min:.6f},{b.s11_min_db:.6f}")
        return "\n".join(lines) + "\n"

    def containing(self, f: float) -> Band | None:
        for b in self.bands:
            if b.f_low <= f <= b.f_high:
                return b
        return None


def _crossing(f0, f1, d0, d1, level):
    if d1 == d0:
        return f0
    return f0 + (level - d0) * (f1 - f0) / (d1 - d0)


def bandwidth(spectrum, threshold_db: float = -10.0) -> BandReport:
    """Bands where ``|S11|`` dB is below ``threshold_db``; edges interpolated linearly in dB."""
    f = spectrum.freqs
    d = spectrum.db
    below = d < threshold_db
    bands = []
    n = f.size
    i = 0
    while i < n:
        if not below[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and below[j + 1]:
            j += 1
        lo = f[i] if i == 0 else _crossing(f[i - 1], f[i], d[i - 1], d[i], threshold_db)
        hi = f[j] if j == n - 1 else _crossing(f[j], f[j + 1], d[j], d[j + 1], threshold_db)
        m = i + int(np.argmin(d[i : j + 1]))
        band = Band(float(lo), float(hi), float(f[m]), float(d[m]))
        if bands and bands[-1].f_high >= band.f_low:
            # runs split only by a sample sitting exactly on the threshold
            prev = bands.pop()
            best = prev if prev.s11_min_db <= band.s11_min_db else band
            band = Band(prev.f_low, band.f_high, best.f_min, best.s11_min_db)
        bands.append(band)
        i = j + 1
    return BandReport(tuple(bands), threshold_db)
