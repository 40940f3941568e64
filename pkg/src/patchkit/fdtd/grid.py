"""Material grid on a uniform cubic Yee lattice.

Cell ``(i, j, k)`` spans ``[i, i+1] x [j, j+1] x [k, k+1]`` cells from the
grid origin.  Field component layout (cell units):

    Ex (i+1/2, j, k)   shape (nx, ny+1, nz+1)
    Ey (i, j+1/2, k)   shape (nx+1, ny, nz+1)
    Ez (i, j, k+1/2)   shape (nx+1, ny+1, nz)
    Hx (i, j+1/2, k+1/2)   shape (nx+1, ny, nz)
    Hy (i+1/2, j, k+1/2)   shape (nx, ny+1, nz)
    Hz (i+1/2, j+1/2, k)   shape (nx, ny, nz+1)
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AIR, DIELECTRIC, PEC = 0, 1, 2


def e_shapes(nx: int, ny: int, nz: int):
    return (nx, ny + 1, nz + 1), (nx + 1, ny, nz + 1), (nx + 1, ny + 1, nz)


def h_shapes(nx: int, ny: int, nz: int):
    return (nx + 1, ny, nz), (nx, ny + 1, nz), (nx, ny, nz + 1)


@dataclass
class MaterialGrid:
    """Cell permittivity/conductivity plus PEC edge masks.

    Zero-thickness copper sits on grid planes and is expressed directly
    as PEC tangential edges (``pec_x``, ``pec_y``) on that plane.
    """

    cell: float
    eps_r: np.ndarray  # (nx, ny, nz)
    sigma: np.ndarray  # (nx, ny, nz) S/m
    pec_x: np.ndarray  # bool, Ex shape
    pec_y: np.ndarray  # bool, Ey shape
    pec_z: np.ndarray  # bool, Ez shape
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    sheets: dict = field(default_factory=dict)  # k plane -> 2-D copper cell mask
    warnings: list = field(default_factory=list)
    planes: tuple = ()  # k index of each copper layer, bottom to top

    @classmethod
    def empty(cls, shape: tuple[int, int, int], cell: float, origin=(0.0, 0.0, 0.0)):
        nx, ny, nz = shape
        ex, ey, ez = e_shapes(nx, ny, nz)
        return cls(
            cell=cell,
            eps_r=np.ones(shape),
            sigma=np.zeros(shape),
            pec_x=np.zeros(ex, dtype=bool),
            pec_y=np.zeros(ey, dtype=bool),
            pec_z=np.zeros(ez, dtype=bool),
            origin=tuple(origin),
        )

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.eps_r.shape

    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.shape
        return nx * ny * nz

    def labels(self) -> np.ndarray:
        """Per-cell label: AIR, DIELECTRIC, or PEC (cell touching copper on its lower face)."""
        lab = np.where(self.eps_r > 1.0, DIELECTRIC, AIR).astype(np.int8)
        for k, mask in self.sheets.items():
            if k < self.shape[2]:
                lab[:, :, k][mask] = PEC
        return lab

    def add_sheet(self, k: int, mask: np.ndarray) -> None:
        """Copper sheet on plane ``z = k`` covering cells where ``mask`` is true.

        Every edge bordering a covered cell becomes PEC.
        """
        mask = np.asarray(mask, dtype=bool)
        nx, ny, _ = self.shape
        if mask.shape != (nx, ny):
            raise ValueError(f"sheet mask shape {mask.shape} != {(nx, ny)}")
        # Ex(i, j): cells (i, j-1) and (i, j)
        ex = np.zeros((nx, ny + 1), dtype=bool)
        ex[:, :-1] |= mask
        ex[:, 1:] |= mask
        ey = np.zeros((nx + 1, ny), dtype=bool)
        ey[:-1, :] |= mask
        ey[1:, :] |= mask
        self.pec_x[:, :, k] |= ex
        self.pec_y[:, :, k] |= ey
        prev = self.sheets.get(k)
        self.sheets[k] = mask.copy() if prev is None else (prev | mask)

    def add_pec_block(self, lo: tuple[int, int, int], hi: tuple[int, int, int]) -> None:
        """Solid PEC over cells ``lo <= (i, j, k) < hi``: all edges inside or on its surface."""
        (i0, j0, k0), (i1, j1, k1) = lo, hi
        self.pec_x[i0:i1, j0 : j1 + 1, k0 : k1 + 1] = True
        self.pec_y[i0 : i1 + 1, j0:j1, k0 : k1 + 1] = True
        self.pec_z[i0 : i1 + 1, j0 : j1 + 1, k0:k1] = True

    def edge_average(self, values: np.ndarray):
        """Average a cell quantity onto Ex, Ey, Ez edges (mean of touching cells)."""
        nx, ny, nz = self.shape
        p = np.pad(values, 1, mode="edge")
        # Ex(i, j, k) touches cells (i, j-1|j, k-1|k) -> padded (i+1, j|j+1, k|k+1)
        ax = 0.25 * (
            p[1:-1, :-1, :-1] + p[1:-1, 1:, :-1] + p[1:-1, :-1, 1:] + p[1:-1, 1:, 1:]
        )
        ay = 0.25 * (
            p[:-1, 1:-1, :-1] + p[1:, 1:-1, :-1] + p[:-1, 1:-1, 1:] + p[1:, 1:-1, 1:]
        )
        az = 0.25 * (
            p[:-1, :-1, 1:-1] + p[1:, :-1, 1:-1] + p[:-1, 1:, 1:-1] + p[1:, 1:, 1:-1]
        )
        assert ax.shape == (nx, ny + 1, nz + 1)
        return ax, ay, az

    def node_position(self, i: float, j: float, k: float) -> tuple[float, float, float]:
        ox, oy, oz = self.origin
        return ox + i * self.cell, oy + j * self.cell, oz + k * self.cell
