"""Closed-form rectangular patch dimensioning with an inset microstrip feed.

Transmission-line model: width from the half-wavelength in the mean
dielectric, effective permittivity of a strip of that width, length
shortened by the fringing extension.  Edge impedance uses the single
radiating-slot conductance ``G1 = W / (120 lambda0)``, the inset depth the
``cos^2`` recessed-feed law, and the feed width Hammerstad-Jensen synthesis.

All lengths are meters internally.  Reports round to 0.1 mm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .constants import C0, ETA0, MM
from .errors import DomainError, UnmatchableError

# Gap widths quoted by the reference design tables; no generating formula
# is known, so these are offered as named presets.
GAP_PRESETS = {
    "table-5.8GHz": 0.38 * MM,
    "table-2.4GHz": 0.86 * MM,
}


@dataclass(frozen=True)
class SubstrateSpec:
    eps_r: float
    height: float  # m
    loss_tangent: float = 0.0

    def __post_init__(self):
        if not self.eps_r > 1.0:
            raise DomainError(f"eps_r must be > 1, got {self.eps_r}")
        if not self.height > 0.0:
            raise DomainError(f"substrate height must be > 0, got {self.height}")
        if not self.loss_tangent >= 0.0:
            raise DomainError(f"loss_tangent must be >= 0, got {self.loss_tangent}")


@dataclass(frozen=True)
class DesignRequest:
    f0: float
    substrate: SubstrateSpec
    z_feed: float = 50.0
    gap: float | None = None  # m; None selects the Wt/3 heuristic

    def __post_init__(self):
        if not self.f0 > 0.0:
            raise DomainError(f"f0 must be > 0, got {self.f0}")
        if not self.z_feed > 0.0:
            raise DomainError(f"z_feed must be > 0, got {self.z_feed}")
        if self.gap is not None and not self.gap > 0.0:
            raise DomainError(f"gap must be > 0, got {self.gap}")


@dataclass(frozen=True)
class PatchDesign:
    f0: float
    lambda0: float
    width: float
    length: float
    eps_eff: float
    z_edge: float
    inset_distance: float
    gap: float
    feed_width: float
    z_feed: float
    substrate: SubstrateSpec
    gap_heuristic: bool = field(default=False, compare=False)

    def rows(self) -> list[tuple[str, str, float, str]]:
        """Table rows ``(symbol, description, value, unit)`` in report units."""
        s = self.substrate
        return [
            ("f", "Mean frequency of the range", self.f0 / 1e9, "GHz"),
            ("Zo", "Antenna input impedance", self.z_feed, "ohm"),
            ("Er", "Dielectric constant of the substrate", s.eps_r, ""),
            ("H", "Substrate height", s.height / MM, "mm"),
            ("lambda", "Wavelength", self.lambda0 / MM, "mm"),
            ("PW", "Patch width", self.width / MM, "mm"),
            ("PL", "Patch length", self.length / MM, "mm"),
            ("Zp", "Patch input impedance", self.z_edge, "ohm"),
            ("X0", "Distance to match input impedance", self.inset_distance / MM, "mm"),
            ("G", "Gap width", self.gap / MM, "mm"),
            ("Wt", "Microstrip feeder width", self.feed_width / MM, "mm"),
        ]

    def to_text(self) -> str:
        """``symbol = value unit`` lines, lengths rounded to 0.1 mm."""
        lines = []
        for sym, _desc, value, unit in self.rows():
            lines.append(f"{sym} = {_report(sym, value)} {unit}".rstrip())
        lines.append(f"eps_eff = {self.eps_eff:.4f}")
        if self.gap_heuristic:
            lines.append("# G from heuristic Wt/3 (no closed form known)")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        out = ["symbol,description,value,unit"]
        for sym, desc, value, unit in self.rows():
            out.append(f"{sym},{desc},{value!r},{unit}")
        out.append(f"eps_eff,Effective permittivity,{self.eps_eff!r},")
        return "\n".join(out) + "\n"


def _report(sym: str, value: float) -> str:
    if sym in ("Zp", "Zo"):
        return f"{value:.0f}"
    if sym == "G":
        return f"{value:.2f}"
    if sym in ("f", "Er"):
        return f"{value:g}"
    return f"{value:.1f}"


def _positive(name: str, value: float) -> None:
    if not value > 0.0:
        raise DomainError(f"{name} must be > 0, got {value}")


def patch_width(f0: float, eps_r: float) -> float:
    _positive("f0", f0)
    if not eps_r > 1.0:
        raise DomainError(f"eps_r must be > 1, got {eps_r}")
    return C0 / (2.0 * f0 * math.sqrt((eps_r + 1.0) / 2.0))


def effective_permittivity(eps_r: float, h: float, w: float) -> float:
    if not eps_r > 1.0:
        raise DomainError(f"eps_r must be > 1, got {eps_r}")
    _positive("h", h)
    _positive("w", w)
    return (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 / math.sqrt(1.0 + 12.0 * h / w)


def fringe_extension(eps_eff: float, h: float, w: float) -> float:
    """Total length correction subtracted from the half guided wavelength."""
    u = w / h
    return 0.824 * h * ((eps_eff + 0.3) / (eps_eff - 0.258)) * ((u + 0.264) / (u + 0.8))


def patch_length(f0: float, substrate: SubstrateSpec) -> float:
    _positive("f0", f0)
    w = patch_width(f0, substrate.eps_r)
    ee = effective_permittivity(substrate.eps_r, substrate.height, w)
    length = C0 / (2.0 * f0 * math.sqrt(ee)) - fringe_extension(ee, substrate.height, w)
    if length <= 0.0:
        raise DomainError(
            f"patch length {length:.3e} m is not positive for f0={f0:.4g} Hz, "
            f"h={substrate.height:.4g} m"
        )
    return length


def edge_impedance(w: float, lambda0: float) -> float:
    _positive("w", w)
    _positive("lambda0", lambda0)
    return 60.0 * lambda0 / w


def inset_distance(z_edge: float, z_target: float, length: float) -> float:
    """Inset depth where ``z_edge * cos^2(pi x0 / L)`` falls to ``z_target``."""
    _positive("z_target", z_target)
    _positive("length", length)
    if z_target > z_edge:
        raise UnmatchableError(
            f"target {z_target} ohm exceeds edge impedance {z_edge} ohm; an inset cannot raise it"
        )
    return length / math.pi * math.acos(math.sqrt(z_target / z_edge))


def microstrip_synthesize(z0: float, substrate: SubstrateSpec) -> float:
    """Trace width for characteristic impedance ``z0`` (quasi-static)."""
    _positive("z0", z0)
    er, h = substrate.eps_r, substrate.height
    a = z0 / 60.0 * math.sqrt((er + 1.0) / 2.0) + (er - 1.0) / (er + 1.0) * (0.23 + 0.11 / er)
    u = 8.0 * math.exp(a) / (math.exp(2.0 * a) - 2.0)
    if u >= 2.0:
        b = ETA0 * math.pi / (2.0 * z0 * math.sqrt(er))
        u = (2.0 / math.pi) * (
            b - 1.0 - math.log(2.0 * b - 1.0)
            + (er - 1.0) / (2.0 * er) * (math.log(b - 1.0) + 0.39 - 0.61 / er)
        )
    return u * h


def microstrip_eps_eff(w: float, substrate: SubstrateSpec) -> float:
    u = w / substrate.height
    er = substrate.eps_r
    a = (
        1.0
        + math.log((u**4 + (u / 52.0) ** 2) / (u**4 + 0.432)) / 49.0
        + math.log(1.0 + (u / 18.1) ** 3) / 18.7
    )
    b = 0.564 * ((er - 0.9) / (er + 3.0)) ** 0.053
    return (er + 1.0) / 2.0 + (er - 1.0) / 2.0 * (1.0 + 10.0 / u) ** (-a * b)


def microstrip_analyze(w: float, substrate: SubstrateSpec) -> float:
    """Characteristic impedance of a zero-thickness strip, Hammerstad-Jensen (1980)."""
    _positive("w", w)
    u = w / substrate.height
    f = 6.0 + (2.0 * math.pi - 6.0) * math.exp(-((30.666 / u) ** 0.7528))
    z_air = ETA0 / (2.0 * math.pi) * math.log(f / u + math.sqrt(1.0 + (2.0 / u) ** 2))
    return z_air / math.sqrt(microstrip_eps_eff(w, substrate))


def design_patch(request: DesignRequest) -> PatchDesign:
    sub = request.substrate
    lambda0 = C0 / request.f0
    w = patch_width(request.f0, sub.eps_r)
    ee = effective_permittivity(sub.eps_r, sub.height, w)
    length = patch_length(request.f0, sub)
    zp = edge_impedance(w, lambda0)
    x0 = inset_distance(zp, request.z_feed, length)
    wt = microstrip_synthesize(request.z_feed, sub)
    heuristic = request.gap is None
    gap = wt / 3.0 if heuristic else request.gap
    if not w > length:
        raise DomainError(f"patch width {w} m not larger than length {length} m")
    return PatchDesign(
        f0=request.f0,
        lambda0=lambda0,
        width=w,
        length=length,
        eps_eff=ee,
        z_edge=zp,
        inset_distance=x0,
        gap=gap,
        feed_width=wt,
        z_feed=request.z_feed,
        substrate=sub,
        gap_heuristic=heuristic,
    )
