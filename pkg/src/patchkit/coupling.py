"""Displacement-controlled coupling between stacked patch resonators.

``K(d) = K0 * alpha * d`` with ``K0 = |f1 - f2| / f_mid``.  The split
frequencies of two magnetically coupled resonators are the roots of
``(f^2 - f1^2)(f^2 - f2^2) = k^2 f^4``, which for identical resonators
reduces to ``f0 / sqrt(1 +- k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .constants import GHZ, MM
from .errors import DomainError, OverCoupledError
from .postprocess.spectra import SParamSpectrum

K_CLAMP = 0.99  # upper clamp for the linear law; physical k stays below 1


@dataclass(frozen=True)
class CouplingParams:
    f1: float = 5.8 * GHZ  # upper (small, fed) patch
    f2: float = 2.4 * GHZ  # lower (large, parasitic) patch
    alpha: float = 40.0  # 1/m
    d: float = 5.0 * MM
    q1: float = 25.0
    q2: float = 25.0
    mode: str = "literal"  # or "affine": K0 * (1 + alpha d)

    def __post_init__(self):
        if not (self.f1 > 0 and self.f2 > 0):
            raise DomainError("resonance frequencies must be positive")
        if not (self.q1 > 0 and self.q2 > 0):
            raise DomainError("quality factors must be positive")
        if self.alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if self.d < 0:
            raise DomainError(f"displacement must be >= 0, got {self.d}")
        if self.mode not in ("literal", "affine"):
            raise DomainError(f"unknown coupling mode {self.mode!r}")

    @property
    def delta_f(self) -> float:
        return self.f1 - self.f2

    @property
    def f_mid(self) -> float:
        return 0.5 * (self.f1 + self.f2)

    @property
    def k0(self) -> float:
        return base_coupling(self.f1, self.f2)

    def coupling(self) -> CouplingValue:
        return coupling_at_displacement(self.k0, self.alpha, self.d, self.mode)


class CouplingValue(NamedTuple):
    k: float
    clamped: bool


def base_coupling(f1: float, f2: float) -> float:
    if not (f1 > 0 and f2 > 0):
        raise DomainError("frequencies must be positive")
    return abs(f1 - f2) / (0.5 * (f1 + f2))


def coupling_at_displacement(
    k0: float, alpha: float, d: float, mode: str = "literal"
) -> CouplingValue:
    if d < 0:
        raise DomainError(f"displacement must be >= 0, got {d}")
    if alpha < 0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    if mode == "literal":
        k = k0 * alpha * d
    elif mode == "affine":
        k = k0 * (1.0 + alpha * d)
    else:
        raise DomainError(f"unknown coupling mode {mode!r}")
    if k < 0.0:
        return CouplingValue(0.0, True)
    if k >= K_CLAMP:
        return CouplingValue(K_CLAMP, True)
    return CouplingValue(k, False)


def split_frequencies(f1: float, f2: float, k: float) -> tuple[float, float]:
    """Eigenfrequencies of the coupled pair, ascending."""
    if not (f1 > 0 and f2 > 0):
        raise DomainError("frequencies must be positive")
    if k < 0:
        raise DomainError(f"coupling must be >= 0, got {k}")
    if k >= 1.0:
        raise OverCoupledError(f"coupling {k} >= 1")
    lo, hi = sorted((f1, f2))
    if k == 0.0:
        return lo, hi
    a, b = lo * lo, hi * hi
    # (1 - k^2) x^2 - (a + b) x + a b = 0, x = f^2
    s = a + b
    disc = math.sqrt((a - b) ** 2 + 4.0 * k * k * a * b)
    x_hi = (s + disc) / (2.0 * (1.0 - k * k))
    x_lo = a * b / ((1.0 - k * k) * x_hi)  # product of roots; avoids cancellation
    return math.sqrt(x_lo), math.sqrt(x_hi)


def _single_pole_reflection(f: np.ndarray, fr: float, q: float) -> np.ndarray:
    # parallel RLC with R = Z0: gamma = -j q chi / (2 + j q chi)
    chi = f / fr - fr / f
    jqx = 1j * q * chi
    return -jqx / (2.0 + jqx)


def surrogate_s11(params: CouplingParams, grid) -> SParamSpectrum:
    """Two-pole reflection preview with poles at the split frequencies.

    Each split resonance contributes a matched single-pole reflection of
    fractional width ``1/q``; the preview is their product, so it is
    passive and nulls exactly at the split frequencies.
    """
    f = np.asarray(grid, dtype=float)
    if f.ndim != 1 or f.size < 2 or np.any(np.diff(f) <= 0) or f[0] <= 0:
        raise DomainError("grid must be strictly increasing, positive, >= 2 points")
    k = params.coupling().k
    f_lo, f_hi = split_frequencies(params.f1, params.f2, k)
    q_lo, q_hi = (params.q1, params.q2) if params.f1 <= params.f2 else (params.q2, params.q1)
    s11 = _single_pole_reflection(f, f_lo, q_lo) * _single_pole_reflection(f, f_hi, q_hi)
    return SParamSpectrum(f, s11, 50.0)


class SweepPoint(NamedTuple):
    d: float
    k: float
    f_low: float
    f_high: float
    objective: float
    clamped: bool


def _objective(split: tuple[float, float], targets: tuple[float, float]) -> float:
    return sum(((s - t) / t) ** 2 for s, t in zip(split, targets))


def displacement_sweep(
    targets: tuple[float, float],
    params: CouplingParams,
    d_range: tuple[float, float],
    steps: int,
) -> list[SweepPoint]:
    if steps < 2:
        raise DomainError("steps must be >= 2")
    d0, d1 = d_range
    if not (0 <= d0 < d1):
        raise DomainError(f"bad displacement range {d_range}")
    tgt = tuple(sorted(targets))
    out = []
    for d in np.linspace(d0, d1, steps):
        d = float(d)
        kv = coupling_at_displacement(params.k0, params.alpha, d, params.mode)
        split = split_frequencies(params.f1, params.f2, kv.k)
        out.append(SweepPoint(d, kv.k, split[0], split[1], _objective(split, tgt), kv.clamped))
    return out


def tune_displacement(
    targets: tuple[float, float],
    params: CouplingParams,
    d_range: tuple[float, float] = (0.0, 10.0 * MM),
    steps: int = 101,
) -> float:
    """Grid-search displacement whose split best matches ``targets``.

    Clamped (over-coupled) grid points are excluded; ties go to smaller d.
    """
    points = displacement_sweep(targets, params, d_range, steps)
    usable = [p for p in points if not p.clamped] or points
    best = usable[0]
    for p in usable[1:]:
        if p.objective < best.objective:
            best = p
    return best.d


def with_displacement(params: CouplingParams, d: float) -> CouplingParams:
    return replace(params, d=d)
