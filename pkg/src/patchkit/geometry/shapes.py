"""Rectilinear regions built from axis-aligned rectangles.

A :class:`Shape` is an ordered list of union/subtract operations.  Area,
point membership and canonical decomposition all go through coordinate
compression, so results are exact up to the 1 nm coordinate quantum.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import GeometryError

QUANTUM = 1e-9  # m


def _q(v: float) -> int:
    return int(round(v / QUANTUM))


def _m(q) -> float:
    return float(int(q) * QUANTUM)


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise GeometryError(f"rectangle must have positive area: {self}")

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> Rect:
        return cls(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)

    def contains_rect(self, other: Rect, tol: float = QUANTUM) -> bool:
        return (
            other.x0 >= self.x0 - tol
            and other.y0 >= self.y0 - tol
            and other.x1 <= self.x1 + tol
            and other.y1 <= self.y1 + tol
        )

    def intersects(self, other: Rect) -> bool:
        return (
            min(self.x1, other.x1) - max(self.x0, other.x0) > QUANTUM
            and min(self.y1, other.y1) - max(self.y0, other.y0) > QUANTUM
        )

    def translated(self, dx: float, dy: float) -> Rect:
        return Rect(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)


@dataclass(frozen=True)
class Shape:
    ops: tuple[tuple[int, Rect], ...] = ()

    @classmethod
    def of(cls, *rects: Rect) -> Shape:
        return cls(tuple((1, r) for r in rects))

    def union(self, other: Rect | Shape) -> Shape:
        if isinstance(other, Rect):
            return Shape(self.ops + ((1, other),))
        return Shape(self.ops + other.ops)

    def subtract(self, other: Rect | Shape) -> Shape:
        if isinstance(other, Rect):
            return Shape(self.ops + ((-1, other),))
        # subtracting a composite: remove each of its canonical pieces
        return Shape(self.ops + tuple((-1, r) for r in other.rectangles()))

    def translated(self, dx: float, dy: float) -> Shape:
        return Shape(tuple((s, r.translated(dx, dy)) for s, r in self.ops))

    # -- compressed representation ------------------------------------------
    @cached_property
    def _grid(self):
        xs = sorted({_q(r.x0) for _, r in self.ops} | {_q(r.x1) for _, r in self.ops})
        ys = sorted({_q(r.y0) for _, r in self.ops} | {_q(r.y1) for _, r in self.ops})
        xs_a, ys_a = np.array(xs, dtype=np.int64), np.array(ys, dtype=np.int64)
        fill = np.zeros((max(len(xs) - 1, 0), max(len(ys) - 1, 0)), dtype=bool)
        for sign, r in self.ops:
            i0, i1 = np.searchsorted(xs_a, [_q(r.x0), _q(r.x1)])
            j0, j1 = np.searchsorted(ys_a, [_q(r.y0), _q(r.y1)])
            fill[i0:i1, j0:j1] = sign > 0
        return _minimize(xs_a, ys_a, fill)

    @property
    def is_empty(self) -> bool:
        return not self._grid[2].any()

    def area(self) -> float:
        xs, ys, fill = self._grid
        if fill.size == 0:
            return 0.0
        dx = np.diff(xs).astype(float) * QUANTUM
        dy = np.diff(ys).astype(float) * QUANTUM
        return float(dx @ fill.astype(float) @ dy)

    def bounds(self) -> Rect | None:
        xs, ys, fill = self._grid
        if not fill.any():
            return None
        ii = np.nonzero(fill.any(axis=1))[0]
        jj = np.nonzero(fill.any(axis=0))[0]
        return Rect(_m(xs[ii[0]]), _m(ys[jj[0]]), _m(xs[ii[-1] + 1]), _m(ys[jj[-1] + 1]))

    def contains(self, x, y) -> np.ndarray:
        """Membership of points (half-open on the upper edges)."""
        xs, ys, fill = self._grid
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if fill.size == 0:
            return np.zeros(np.broadcast(x, y).shape, dtype=bool)
        xq = np.rint(x / QUANTUM).astype(np.int64)
        yq = np.rint(y / QUANTUM).astype(np.int64)
        i = np.searchsorted(xs, xq, side="right") - 1
        j = np.searchsorted(ys, yq, side="right") - 1
        ok = (i >= 0) & (i < fill.shape[0]) & (j >= 0) & (j < fill.shape[1])
        out = np.zeros(np.broadcast(i, j).shape, dtype=bool)
        ii = np.clip(i, 0, max(fill.shape[0] - 1, 0))
        jj = np.clip(j, 0, max(fill.shape[1] - 1, 0))
        out[...] = np.where(ok, fill[ii, jj], False)
        return out

    def rectangles(self) -> list[Rect]:
        """Canonical disjoint decomposition: vertical strips merged along y, then along x."""
        xs, ys, fill = self._grid
        runs = []  # (i0, i1, j0, j1)
        open_runs = {}
        for i in range(fill.shape[0]):
            col = fill[i]
            cur = []
            j = 0
            n = col.size
            while j < n:
                if col[j]:
                    k = j
                    while k + 1 < n and col[k + 1]:
                        k += 1
                    cur.append((j, k + 1))
                    j = k + 1
                else:
                    j += 1
            new_open = {}
            for span in cur:
                if span in open_runs:
                    new_open[span] = open_runs.pop(span)
                else:
                    new_open[span] = i
            for span, start in open_runs.items():
                runs.append((start, i, span[0], span[1]))
            open_runs = new_open
        for span, start in open_runs.items():
            runs.append((start, fill.shape[0], span[0], span[1]))
        runs.sort()
        return [
            Rect(_m(xs[a]), _m(ys[c]), _m(xs[b]), _m(ys[d]))
            for a, b, c, d in runs
        ]

    def canonical(self):
        xs, ys, fill = self._grid
        return tuple(xs.tolist()), tuple(ys.tolist()), fill.tobytes(), fill.shape

    def same_region(self, other: Shape) -> bool:
        return self.canonical() == other.canonical()

    def to_text(self) -> str:
        return ";".join(
            f"{'+' if s > 0 else '-'}{r.x0!r},{r.y0!r},{r.x1!r},{r.y1!r}" for s, r in self.ops
        )

    @classmethod
    def from_text(cls, text: str) -> Shape:
        ops = []
        for tok in filter(None, (t.strip() for t in text.split(";"))):
            sign = 1 if tok[0] == "+" else -1
            x0, y0, x1, y1 = (float(v) for v in tok[1:].split(","))
            ops.append((sign, Rect(x0, y0, x1, y1)))
        return cls(tuple(ops))


def _minimize(xs, ys, fill):
    """Drop compression lines that do not separate different fill states."""
    if fill.size == 0:
        return xs, ys, fill
    keep_x = [0]
    for i in range(1, fill.shape[0]):
        if not np.array_equal(fill[i], fill[keep_x[-1]]):
            keep_x.append(i)
    fill = fill[keep_x]
    xs = np.append(xs[keep_x], xs[-1])
    keep_y = [0]
    for j in range(1, fill.shape[1]):
        if not np.array_equal(fill[:, j], fill[:, keep_y[-1]]):
            keep_y.append(j)
    fill = fill[:, keep_y]
    ys = np.append(ys[keep_y], ys[-1])
    # trim empty border
    rows = np.nonzero(fill.any(axis=1))[0]
    cols = np.nonzero(fill.any(axis=0))[0]
    if rows.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros((0, 0), dtype=bool)
    fill = fill[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    xs = xs[rows[0] : rows[-1] + 2]
    ys = ys[cols[0] : cols[-1] + 2]
    return xs, ys, fill
