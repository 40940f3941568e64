"""Declarative run files: INI sections parsed and validated into a RunConfig.

Every value is checked against the preconditions of the stage that consumes
it; failures raise ``ValidationError`` naming ``section.field``.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .constants import GHZ, MM
from .design import SubstrateSpec
from .errors import ValidationError

KINDS = ("mono", "slotted", "stacked")

# section -> field -> default (None means "not set"); the text form is the contract
SCHEMA: dict[str, dict[str, str | None]] = {
    "substrate": {"eps_r": None, "height_mm": None, "loss_tangent": "0"},
    "targets": {"f_ghz": None, "z_feed": "50"},
    "geometry": {"kind": None},
    "overrides": {
        "design_f_ghz": None,
        "upper_f_ghz": "5.8",
        "lower_f_ghz": "2.4",
        "gap_mm": None,
        "upper_gap_mm": None,
        "lower_gap_mm": None,
        "slot_length_mm": "35",
        "slot_width_mm": "1",
        "slot_bends": "2",
        "slot_offset_x_mm": "0",
        "slot_offset_y_mm": "0",
        "dy_mm": "auto",
        "d_min_mm": "0",
        "d_max_mm": "8",
        "d_steps": "81",
        "alpha": "40",
        "q": "25",
        "coupling_mode": "literal",
    },
    "simulation": {
        "cell_mm": "0.5",
        "courant": "0.99",
        "max_steps": "40000",
        "decay_db": "60",
        "pml_cells": "10",
        "source_center_ghz": None,
        "source_bandwidth_ghz": None,
        "f_lo_ghz": None,
        "f_hi_ghz": None,
        "points": "401",
        "workers": None,
        "patterns": "yes",
        "pattern_step_deg": "2",
        "budget": "2e10",
    },
    "output": {"dir": "out"},
}
REQUIRED_SECTIONS = ("substrate", "targets", "geometry")


@dataclass(frozen=True)
class SlotOptions:
    length: float
    width: float
    bends: int
    offset_x: float
    offset_y: float


@dataclass(frozen=True)
class SimOptions:
    cell: float
    courant: float
    max_steps: int
    decay_db: float
    pml_cells: int
    source_center: float
    source_bandwidth: float
    f_lo: float
    f_hi: float
    points: int
    workers: int | None
    patterns: bool
    pattern_step_deg: float
    budget: float


@dataclass(frozen=True)
class RunConfig:
    substrate: SubstrateSpec
    targets: tuple[float, ...]
    z_feed: float
    kind: str
    design_f: float  # mono and slotted patch frequency
    upper_f: float
    lower_f: float
    gap: float | None
    upper_gap: float | None
    lower_gap: float | None
    slot: SlotOptions
    dy: float | None  # None: tune from the coupling model
    d_range: tuple[float, float]
    d_steps: int
    alpha: float
    q: float
    coupling_mode: str
    sim: SimOptions
    out_dir: Path
    text: str = field(default="", compare=False)  # canonical settings text

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()


# -- parsing helpers ----------------------------------------------------------

def _float(raw: dict, sec: str, key: str, *, positive=False, nonneg=False) -> float:
    text = raw[sec][key]
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise ValidationError(f"{sec}.{key}", f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"{sec}.{key}", f"must be finite, got {text!r}")
    if positive and not v > 0:
        raise ValidationError(f"{sec}.{key}", f"must be > 0, got {text}")
    if nonneg and v < 0:
        raise ValidationError(f"{sec}.{key}", f"must be >= 0, got {text}")
    return v


def _opt_float(raw, sec, key, **kw) -> float | None:
    return None if raw[sec][key] is None else _float(raw, sec, key, **kw)


def _int(raw: dict, sec: str, key: str, lo: int | None = None) -> int:
    text = raw[sec][key]
    try:
        v = int(text)
    except (TypeError, ValueError):
        raise ValidationError(f"{sec}.{key}", f"expected an integer, got {text!r}") from None
    if lo is not None and v < lo:
        raise ValidationError(f"{sec}.{key}", f"must be >= {lo}, got {v}")
    return v


def _bool(raw, sec, key) -> bool:
    text = str(raw[sec][key]).strip().lower()
    if text in ("yes", "true", "on", "1"):
        return True
    if text in ("no", "false", "off", "0"):
        return False
    raise ValidationError(f"{sec}.{key}", f"expected yes/no, got {text!r}")


def _required(raw, sec, key) -> None:
    if raw[sec][key] is None:
        raise ValidationError(f"{sec}.{key}", "missing required field")


def parse_overrides(items) -> list[tuple[str, str, str]]:
    """``section.field=value`` strings to triples."""
    out = []
    for item in items or ():
        if "=" not in item:
            raise ValidationError(item, "override must look like section.field=value")
        key, value = item.split("=", 1)
        if "." not in key:
            raise ValidationError(key, "override key must look like section.field")
        sec, name = key.strip().split(".", 1)
        out.append((sec.strip(), name.strip(), value.strip()))
    return out


def _raw_from_text(text: str, overrides=()) -> dict[str, dict[str, str | None]]:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValidationError("runfile", f"cannot parse: {exc}") from None
    raw: dict[str, dict[str, str | None]] = {s: dict(f) for s, f in SCHEMA.items()}
    present = set(cp.sections())
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ValidationError(sec, "unknown section")
        for key, value in cp[sec].items():
            if key not in SCHEMA[sec]:
                raise ValidationError(f"{sec}.{key}", "unknown field")
            raw[sec][key] = value.strip()
    for sec, key, value in overrides:
        if sec not in SCHEMA:
            raise ValidationError(sec, "unknown section")
        if key not in SCHEMA[sec]:
            raise ValidationError(f"{sec}.{key}", "unknown field")
        raw[sec][key] = value
        present.add(sec)
    for sec in REQUIRED_SECTIONS:
        if sec not in present:
            raise ValidationError(sec, "missing required section")
    return raw


# settings that cannot change any computed number stay out of the hash
UNHASHED = {("simulation", "workers"), ("output", "dir")}


def canonical_text(raw) -> str:
    """Sorted ``section.field = value`` lines for every set field (the hashed form)."""
    lines = []
    for sec in sorted(raw):
        for key in sorted(raw[sec]):
            v = raw[sec][key]
            if v is not None and (sec, key) not in UNHASHED:
                lines.append(f"{sec}.{key} = {v}")
    return "\n".join(lines) + "\n"


def _targets(raw) -> tuple[float, ...]:
    _required(raw, "targets", "f_ghz")
    parts = [p for p in str(raw["targets"]["f_ghz"]).replace(";", ",").split(",") if p.strip()]
    vals = []
    for p in parts:
        try:
            v = float(p)
        except ValueError:
            raise ValidationError("targets.f_ghz", f"expected GHz values, got {p.strip()!r}") from None
        if not (math.isfinite(v) and v > 0):
            raise ValidationError("targets.f_ghz", f"frequencies must be > 0, got {p.strip()}")
        vals.append(v * GHZ)
    if not 1 <= len(vals) <= 2:
        raise ValidationError("targets.f_ghz", "give one or two target frequencies")
    if len(vals) == 2 and vals[0] == vals[1]:
        raise ValidationError("targets.f_ghz", "the two targets must differ")
    return tuple(sorted(vals))


def load_run(text: str, overrides=(), base_dir: Path | None = None) -> RunConfig:
    """Parse run-file text (plus ``(section, field, value)`` overrides)."""
    raw = _raw_from_text(text, overrides)
    for key in ("eps_r", "height_mm"):
        _required(raw, "substrate", key)
    eps_r = _float(raw, "substrate", "eps_r")
    if not eps_r > 1:
        raise ValidationError("substrate.eps_r", f"must be > 1, got {eps_r}")
    sub = SubstrateSpec(
        eps_r,
        _float(raw, "substrate", "height_mm", positive=True) * MM,
        _float(raw, "substrate", "loss_tangent", nonneg=True),
    )
    targets = _targets(raw)
    z_feed = _float(raw, "targets", "z_feed", positive=True)

    _required(raw, "geometry", "kind")
    kind = str(raw["geometry"]["kind"]).strip().lower()
    if kind not in KINDS:
        raise ValidationError("geometry.kind", f"must be one of {', '.join(KINDS)}, got {kind!r}")
    if kind in ("slotted", "stacked") and len(targets) != 2:
        raise ValidationError("targets.f_ghz", f"{kind} geometry needs two target frequencies")

    ov = "overrides"
    design_f = _opt_float(raw, ov, "design_f_ghz", positive=True)
    if design_f is None:
        # mono designs for its target; the slotted base patch is the upper-band patch
        design_f = targets[-1]
    else:
        design_f *= GHZ
    upper_f = _float(raw, ov, "upper_f_ghz", positive=True) * GHZ
    lower_f = _float(raw, ov, "lower_f_ghz", positive=True) * GHZ
    if kind == "stacked" and not upper_f > lower_f:
        raise ValidationError("overrides.upper_f_ghz", "upper patch must resonate above the lower one")

    def gap(key):
        v = _opt_float(raw, ov, key, positive=True)
        return None if v is None else v * MM

    bends = _int(raw, ov, "slot_bends")
    if bends not in (0, 2):
        raise ValidationError("overrides.slot_bends", f"must be 0 or 2, got {bends}")
    slot = SlotOptions(
        _float(raw, ov, "slot_length_mm", nonneg=True) * MM,
        _float(raw, ov, "slot_width_mm", positive=True) * MM,
        bends,
        _float(raw, ov, "slot_offset_x_mm") * MM,
        _float(raw, ov, "slot_offset_y_mm") * MM,
    )
    dy_text = str(raw[ov]["dy_mm"]).strip().lower()
    dy = None if dy_text == "auto" else _float(raw, ov, "dy_mm") * MM
    d_range = (_float(raw, ov, "d_min_mm", nonneg=True) * MM,
               _float(raw, ov, "d_max_mm", nonneg=True) * MM)
    if not d_range[1] > d_range[0]:
        raise ValidationError("overrides.d_max_mm", "must exceed d_min_mm")
    mode = str(raw[ov]["coupling_mode"]).strip().lower()
    if mode not in ("literal", "affine"):
        raise ValidationError("overrides.coupling_mode", f"must be literal or affine, got {mode!r}")

    sm = "simulation"
    courant = _float(raw, sm, "courant", positive=True)
    if courant > 1:
        raise ValidationError("simulation.courant", f"must lie in (0, 1], got {courant}")
    pml = _int(raw, sm, "pml_cells", lo=8)
    f_lo, f_hi = _opt_float(raw, sm, "f_lo_ghz", positive=True), _opt_float(raw, sm, "f_hi_ghz", positive=True)
    if kind == "mono":
        f0 = design_f
        band = (0.7 * f0, 1.3 * f0)
        src = (f0, 1.2 * f0)
    else:
        band = (1.5 * GHZ, 7.5 * GHZ)
        src = (4.5 * GHZ, 7.0 * GHZ)
    f_lo = band[0] if f_lo is None else f_lo * GHZ
    f_hi = band[1] if f_hi is None else f_hi * GHZ
    if not f_hi > f_lo:
        raise ValidationError("simulation.f_hi_ghz", "must exceed f_lo_ghz")
    sc = _opt_float(raw, sm, "source_center_ghz", positive=True)
    sb = _opt_float(raw, sm, "source_bandwidth_ghz", positive=True)
    src_c = src[0] if sc is None else sc * GHZ
    src_b = src[1] if sb is None else sb * GHZ
    if not (src_c - src_b / 2 <= f_lo and f_hi <= src_c + src_b / 2):
        raise ValidationError("simulation.source_bandwidth_ghz",
                              "source band must cover the analysis band")
    if src_c - src_b / 2 <= 0:
        raise ValidationError("simulation.source_bandwidth_ghz", "source band must stay above 0 Hz")
    workers = None if raw[sm]["workers"] is None else _int(raw, sm, "workers", lo=1)
    sim = SimOptions(
        cell=_float(raw, sm, "cell_mm", positive=True) * MM,
        courant=courant,
        max_steps=_int(raw, sm, "max_steps", lo=1),
        decay_db=_float(raw, sm, "decay_db", positive=True),
        pml_cells=pml,
        source_center=src_c,
        source_bandwidth=src_b,
        f_lo=f_lo,
        f_hi=f_hi,
        points=_int(raw, sm, "points", lo=2),
        workers=workers,
        patterns=_bool(raw, sm, "patterns"),
        pattern_step_deg=_float(raw, sm, "pattern_step_deg", positive=True),
        budget=_float(raw, sm, "budget", positive=True),
    )
    out = Path(str(raw["output"]["dir"]))
    if base_dir is not None and not out.is_absolute():
        out = base_dir / out
    return RunConfig(
        substrate=sub,
        targets=targets,
        z_feed=z_feed,
        kind=kind,
        design_f=design_f,
        upper_f=upper_f,
        lower_f=lower_f,
        gap=gap("gap_mm"),
        upper_gap=gap("upper_gap_mm"),
        lower_gap=gap("lower_gap_mm"),
        slot=slot,
        dy=dy,
        d_range=d_range,
        d_steps=_int(raw, ov, "d_steps", lo=2),
        alpha=_float(raw, ov, "alpha", nonneg=True),
        q=_float(raw, ov, "q", positive=True),
        coupling_mode=mode,
        sim=sim,
        out_dir=out,
        text=canonical_text(raw),
    )


def read_run(path, overrides=()) -> RunConfig:
    """Load a run file from disk; I/O errors propagate as ``OSError``."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    return load_run(text, overrides)


def describe(cfg: RunConfig) -> dict:
    """Plain dict view (for reports); paths as strings."""
    d = asdict(cfg)
    d["out_dir"] = str(cfg.out_dir)
    d.pop("text")
    return d
