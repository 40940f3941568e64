"""Port time records and their binary/CSV persistence."""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"PKTSREC\x00"
VERSION = 1
_HEADER = struct.Struct("<8sIdQ")  # magic, version, dt, steps


@dataclass(frozen=True)
class TimeSeriesRecord:
    """Per-step port voltage and current.

    ``voltage[n]`` is sampled at ``n * dt``; ``current[n]`` at
    ``(n + 1/2) * dt`` (magnetic half step).  ``surface`` optionally holds
    frequency-domain tangential fields on a closed box for far-field work.
    """

    dt: float
    voltage: np.ndarray
    current: np.ndarray
    decayed: bool = True
    terminated_by: str = "decay"
    surface: object | None = field(default=None, compare=False)
    source_power: object | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.voltage, dtype="<f8")
        i = np.ascontiguousarray(self.current, dtype="<f8")
        if v.shape != i.shape or v.ndim != 1:
            raise ValueError("voltage and current must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(i))):
            raise ValueError("record contains non-finite samples")
        v.flags.writeable = False
        i.flags.writeable = False
        object.__setattr__(self, "voltage", v)
        object.__setattr__(self, "current", i)

    @property
    def steps(self) -> int:
        return self.voltage.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps) * self.dt

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(_HEADER.pack(MAGIC, VERSION, self.dt, self.steps))
        buf.write(self.voltage.tobytes())
        buf.write(self.current.tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> TimeSeriesRecord:
        magic, version, dt, steps = _HEADER.unpack_from(data, 0)
        if magic != MAGIC:
            raise ValueError("not a time-series record (bad magic)")
        if version != VERSION:
            raise ValueError(f"unsupported record version {version}")
        off = _HEADER.size
        n = 8 * steps
        if len(data) != off + 2 * n:
            raise ValueError("truncated record")
        v = np.frombuffer(data, dtype="<f8", count=steps, offset=off)
        i = np.frombuffer(data, dtype="<f8", count=steps, offset=off + n)
        return cls(dt, v.copy(), i.copy())

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> TimeSeriesRecord:
        return cls.from_bytes(Path(path).read_bytes())

    def to_csv(self) -> str:
        lines = ["t_s,voltage_v,current_a"]
        for n, (v, i) in enumerate(zip(self.voltage.tolist(), self.current.tolist())):
            lines.append(f"{n * self.dt!r},{v!r},{i!r}")
        return "\n".join(lines) + "\n"
